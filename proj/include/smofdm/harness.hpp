#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smofdm/classical_rx.hpp"
#include "smofdm/ensemble.hpp"
#include "smofdm/sim_config.hpp"

namespace smofdm {

// One point of a BER-vs-SNR curve.
struct BerRecord {
  std::string detector;
  double snr_db = 0.0;
  long long frames = 0;
  long long bit_errors = 0;
  long long bits_counted = 0;
  double ber = 0.0;
  double ci_halfwidth = 0.0;  // 95% Wilson interval half-width
};

double wilson_halfwidth(long long errors, long long n);

// Frames are simulated until target_bit_errors have been seen (checked at
// block granularity) or max_frames is reached. target_bit_errors = 0 runs
// the full frame budget.
struct MonteCarloBudget {
  long long max_frames = 100000;
  long long target_bit_errors = 100;
};

struct DetectorSpec {
  enum class Kind { Lse, Mmse, Perfect, Dnn };

  Kind kind = Kind::Lse;
  std::string label;
  DnnFrameDetector dnn;  // used when kind == Dnn (single nets are K = 1)

  static DetectorSpec classical(Kind kind, std::string label);
  static DetectorSpec neural(std::string label, DnnFrameDetector detector);
};

// Simulates independent frames (fresh bits, channel, noise) and counts bit
// errors over the detector's covered bit range. Deterministic under
// cfg.master_seed: the point seed mixes the master seed, the detector
// label, the SNR and the point index, so adding curves never perturbs
// existing ones. threads <= 0 uses the hardware concurrency.
BerRecord run_ber_point(const SimConfig& cfg, const DetectorSpec& det,
                        const MonteCarloBudget& budget, int point_index = 0,
                        int threads = 0);

// One curve of a sweep: detector plus the configuration it runs under
// (pilot count, CP length and channel profile vary per curve in the
// experiment presets). snr_db is overwritten per point.
struct SweepCurve {
  SimConfig cfg;
  DetectorSpec det;
};

std::vector<BerRecord> run_sweep(const std::vector<SweepCurve>& curves,
                                 const std::vector<double>& snr_db_list,
                                 const MonteCarloBudget& budget,
                                 int threads = 0);

// All detectors over one shared configuration.
std::vector<BerRecord> run_sweep(const SimConfig& cfg_template,
                                 const std::vector<double>& snr_db_list,
                                 const std::vector<DetectorSpec>& detectors,
                                 const MonteCarloBudget& budget,
                                 int threads = 0);

// Canonical weight-file name for a detector network trained under cfg.
std::string weight_file_name(const SimConfig& cfg, int group,
                             double train_snr_db);

// A network the experiment presets expect under the weights directory.
struct WeightRequirement {
  SimConfig cfg;  // configuration to train under (snr_db is not used)
  int group = 0;
  double train_snr_db = 20.0;
  std::string file_name;
};

struct PresetOptions {
  std::string weights_dir;
  std::vector<int> groups = {0, 1, 2, 3};  // bit groups the DNN curves cover
  std::uint64_t master_seed = 1;
};

struct Experiment {
  std::string name;
  std::vector<double> snr_db_list;
  std::vector<SweepCurve> curves;
};

// fig3: L=3, CP 16, {32, 4} pilots x {LSE, MMSE, DNN}.
// fig4: L=8, 32 pilots, {CP 16, CP 0} x {LSE, MMSE, DNN}.
// fig5: L=3, CP 16, {32, 4} pilots x {MMSE, DNN, ensemble K=4}.
// Loads every referenced weight file up front; missing files raise
// missing_artifact_error before any simulation.
Experiment experiment_preset(const std::string& name,
                             const PresetOptions& opt);

std::vector<WeightRequirement> preset_weight_requirements(
    const std::string& name, const PresetOptions& opt);

struct TrainBudget {
  int dataset_size = 60000;
  int epochs = 20;
  std::uint64_t seed = 1;
};

// Trains every requirement whose file is absent, worker-parallel, one
// deterministic seed per file name. Returns the number of networks trained.
int train_missing_weights(const std::vector<WeightRequirement>& reqs,
                          const std::string& dir, const TrainBudget& budget,
                          int threads = 0, bool verbose = true);

// CSV with header detector,snr_db,frames,bit_errors,ber,ci_halfwidth.
// Comment lines (prefixed '# ') go above the header.
std::string format_csv(const std::vector<BerRecord>& records,
                       const std::vector<std::string>& comments = {});
void emit_csv(const std::vector<BerRecord>& records, const std::string& path,
              const std::vector<std::string>& comments = {});

// Log-scale BER vs linear SNR polylines, one per detector label; zero BER
// clamps to the 1e-6 plot floor.
std::string render_svg(const std::vector<BerRecord>& records);
void emit_svg(const std::vector<BerRecord>& records, const std::string& path);

}  // namespace smofdm
