#pragma once

#include <string>
#include <vector>

#include "smofdm/neural.hpp"
#include "smofdm/types.hpp"

namespace smofdm {

// K networks voting on the same six-bit group. A single network is the
// K = 1 case.
struct EnsembleDetector {
  std::vector<Mlp> members;

  int size() const { return static_cast<int>(members.size()); }
  int bit_group() const;
  void validate() const;
};

struct EnsemblePrediction {
  VecD soft;       // per-bit mean of the member sigmoids
  FrameBits bits;  // soft thresholded at 0.5
};

// Average of the member hypotheses (soft sigmoid outputs), evaluated per
// frame at inference time; members are summed in index order.
EnsemblePrediction ensemble_predict(const EnsembleDetector& ens,
                                    const VecDRef& features);

// Column-per-sample soft outputs for a batch of feature vectors.
MatD ensemble_soft_batch(const EnsembleDetector& ens, const MatD& features);

// One detector per bit group. Groups must form a contiguous run; bits are
// assembled in ascending group order regardless of construction order.
struct DnnFrameDetector {
  std::vector<EnsembleDetector> groups;

  // Sorted, validated group indices.
  std::vector<int> covered_groups() const;
  int first_bit() const;  // 6 * lowest group index
  int covered_bits() const;
  void validate() const;
};

// Builds features once and concatenates every group's six decided bits in
// group order. The result covers bits [first_bit, first_bit + covered_bits).
FrameBits detect_frame_dnn(const DnnFrameDetector& det, const VecC& rx_pilot,
                           const VecC& rx_data);

// Plain-text ensemble manifest: one "<group_index> <weight_path>" line per
// member, '#' comments allowed. Relative paths resolve against the manifest
// directory. The loader verifies that member metadata matches the manifest.
EnsembleDetector load_ensemble_manifest(const std::string& path);
void write_ensemble_manifest(const std::string& path, int group,
                             const std::vector<std::string>& member_paths);

}  // namespace smofdm
