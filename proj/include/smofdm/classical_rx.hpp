#pragma once

#include <memory>
#include <span>
#include <vector>

#include "smofdm/channel.hpp"
#include "smofdm/modem.hpp"
#include "smofdm/sim_config.hpp"
#include "smofdm/types.hpp"

namespace smofdm {

// Estimated frequency response, one row per transmit antenna.
using ChannelEstimate = MatC;

// Per-pilot division followed by complex linear interpolation between the
// two nearest pilots of the same antenna; nearest-pilot extrapolation at
// the band edges.
ChannelEstimate lse_estimate(const VecC& rx_pilot, const PilotPlan& plan,
                             const SmSymbolGrid& pilot_grid,
                             const SimConfig& cfg);

// Wiener interpolator built from the channel's second-order statistics:
// H_hat = R_fp (R_pp + noise_var I)^{-1} H_ls with R[k,k'] =
// sum_l sigma_l^2 e^{-j2pi(k-k')l/N}. The weights depend only on the plan,
// the PDP and the noise variance, so they are factored once and reused
// across frames.
class MmseEstimator {
 public:
  MmseEstimator(const PilotPlan& plan, const PowerDelayProfile& pdp,
                double noise_var, const SimConfig& cfg);

  ChannelEstimate estimate(const VecC& rx_pilot,
                           const SmSymbolGrid& pilot_grid) const;

 private:
  std::vector<std::vector<int>> pilot_indices_;
  std::vector<MatC> weights_;  // per antenna: n_fft x |P_a|
  int n_fft_;
};

ChannelEstimate mmse_estimate(const VecC& rx_pilot, const PilotPlan& plan,
                              const SmSymbolGrid& pilot_grid, double noise_var,
                              const PowerDelayProfile& pdp,
                              const SimConfig& cfg);

// argmin over (antenna, symbol) of |y - h[antenna] * constellation[symbol]|^2,
// ties broken by the smaller antenna index, then symbol index.
SmDecision ml_detect_subcarrier(cxd y_k, const VecCRef& h_col,
                                std::span<const cxd> constellation);

enum class EstimatorKind { Lse, Mmse, Perfect };

// Channel estimation (or the true response for Perfect) followed by
// per-subcarrier maximum-likelihood SM detection and bit demapping.
// Precomputes the pilot plan and MMSE weights for cfg once.
class ClassicalFrameDetector {
 public:
  ClassicalFrameDetector(EstimatorKind kind, const SimConfig& cfg);

  // ch is required by the Perfect estimator, ignored otherwise.
  FrameBits detect(const VecC& rx_pilot, const VecC& rx_data,
                   const ChannelRealization* ch = nullptr) const;

  ChannelEstimate estimate(const VecC& rx_pilot,
                           const ChannelRealization* ch = nullptr) const;

 private:
  EstimatorKind kind_;
  SimConfig cfg_;
  PilotPlan plan_;
  SmSymbolGrid pilot_grid_;
  std::unique_ptr<MmseEstimator> mmse_;
};

FrameBits detect_frame_classical(const VecC& rx_pilot, const VecC& rx_data,
                                 EstimatorKind kind, const SimConfig& cfg,
                                 const ChannelRealization* ch = nullptr);

}  // namespace smofdm
