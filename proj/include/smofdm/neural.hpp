#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smofdm/channel.hpp"
#include "smofdm/modem.hpp"
#include "smofdm/sim_config.hpp"
#include "smofdm/types.hpp"

namespace smofdm {

// Fully connected detector network: ReLU hidden layers, sigmoid output.
// The frame detector uses layers 256-1000-500-250-120-6; smaller stacks are
// allowed for tests.
struct Mlp {
  std::vector<MatD> weights;  // weights[i]: fan_out x fan_in
  std::vector<VecD> biases;

  std::uint64_t seed = 0;
  double train_snr_db = 0.0;
  int bit_group = 0;

  int depth() const { return static_cast<int>(weights.size()); }
  int input_size() const;
  int output_size() const;
  std::vector<int> layer_sizes() const;
  void validate() const;
};

// Layer sizes of the frame detector for a given FFT length (256 inputs and
// 6 outputs at n_fft = 64).
std::vector<int> detector_layer_sizes(int n_fft);

// He-uniform fan-in init for the ReLU layers, Xavier-uniform for the
// sigmoid output layer. Deterministic under seed.
Mlp init_mlp(const std::vector<int>& sizes, std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 1e-3;
  double lr_decay = 1.0;  // per-epoch multiplier on the learning rate
  int batch_size = 256;
  int epochs = 20;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double train_snr_db = 20.0;
  int bit_group_index = 0;
  int dataset_size = 60000;
  std::uint64_t seed = 1;

  void validate() const;
};

// Columnar dataset: one sample per column.
struct Dataset {
  MatD features;  // input_size x n
  MatD labels;    // 6 x n, entries in {0, 1}

  Eigen::Index size() const { return features.cols(); }
};

// [Re(rx_pilot), Im(rx_pilot), Re(rx_data), Im(rx_data)], length 4 * n_fft.
VecD build_features(const VecC& rx_pilot, const VecC& rx_data);

VecD forward(const Mlp& net, const VecDRef& features);

// Column-per-sample evaluation; identical results to per-sample forward.
MatD forward_batch(const Mlp& net, const MatD& features);

// Mean binary cross-entropy over the output bits, predictions clamped to
// [1e-12, 1 - 1e-12].
double bce_loss(const VecDRef& pred, const VecDRef& target);

struct Gradients {
  std::vector<MatD> w;
  std::vector<VecD> b;
};

// Analytic gradient of bce_loss(forward(net, x), t); ReLU subgradient at 0
// is taken as 0.
Gradients backward(const Mlp& net, const VecDRef& features,
                   const VecDRef& target);

// Batch gradient of the mean loss over the columns; also reports the loss.
Gradients backward_batch(const Mlp& net, const MatD& features,
                         const MatD& targets, double* loss_out = nullptr);

struct AdamState {
  std::vector<MatD> mw, vw;
  std::vector<VecD> mb, vb;
  long long step = 0;

  static AdamState like(const Mlp& net);
};

// Standard Adam update with bias correction; state.step counts the updates.
void adam_step(Mlp& net, const Gradients& g, AdamState& state,
               const TrainConfig& cfg);

// One labeled sample per simulated frame: fresh bits, channel and noise at
// tcfg.train_snr_db; the label is the six-bit slice of group
// tcfg.bit_group_index. Deterministic under tcfg.seed.
Dataset generate_dataset(const SimConfig& cfg, const TrainConfig& tcfg, int n);

struct TrainResult {
  std::vector<double> epoch_loss;  // mean BCE per epoch
};

// Mini-batch Adam over shuffled epochs. Throws numeric_error when the loss
// stops being finite.
TrainResult train(Mlp& net, const Dataset& data, const TrainConfig& tcfg);

// Dataset generation + init + training in one step; fills in the network
// metadata from cfg/tcfg.
Mlp train_detector(const SimConfig& cfg, const TrainConfig& tcfg);

// forward thresholded at 0.5 (0.5 itself rounds to 1).
FrameBits predict_bits(const Mlp& net, const VecDRef& features);

// Versioned binary weight file; load(save(net)) reproduces outputs
// bit-identically. Truncated or inconsistent files fail without producing a
// partial network.
void save_weights(const Mlp& net, const std::string& path);
Mlp load_weights(const std::string& path);

// Dataset on disk: versioned binary header plus the feature and label
// blocks in column order.
struct DatasetFile {
  Dataset data;
  double train_snr_db = 0.0;
  int bit_group = 0;
  std::uint64_t seed = 0;
};

void save_dataset(const DatasetFile& file, const std::string& path);
DatasetFile load_dataset(const std::string& path);

}  // namespace smofdm
