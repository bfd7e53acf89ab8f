#include "smofdm/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "smofdm/errors.hpp"

namespace smofdm {

int Mlp::input_size() const {
  return weights.empty() ? 0 : static_cast<int>(weights.front().cols());
}

int Mlp::output_size() const {
  return weights.empty() ? 0 : static_cast<int>(weights.back().rows());
}

std::vector<int> Mlp::layer_sizes() const {
  std::vector<int> sizes;
  if (weights.empty()) return sizes;
  sizes.push_back(input_size());
  for (const auto& w : weights) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

void Mlp::validate() const {
  if (weights.empty() || weights.size() != biases.size()) {
    throw config_error("mlp: empty or mismatched parameter lists");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (biases[i].size() != weights[i].rows()) {
      throw config_error("mlp: bias length mismatch at layer " +
                         std::to_string(i));
    }
    if (i > 0 && weights[i].cols() != weights[i - 1].rows()) {
      throw config_error("mlp: layer dimensions do not chain at layer " +
                         std::to_string(i));
    }
    if (!weights[i].allFinite() || !biases[i].allFinite()) {
      throw numeric_error("mlp: non-finite parameter at layer " +
                          std::to_string(i));
    }
  }
}

std::vector<int> detector_layer_sizes(int n_fft) {
  return {4 * n_fft, 1000, 500, 250, 120, 6};
}

Mlp init_mlp(const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw config_error("init_mlp: need at least two layers");
  for (int s : sizes) {
    if (s < 1) throw config_error("init_mlp: layer sizes must be positive");
  }
  Mlp net;
  net.seed = seed;
  Rng rng(derive_seed(seed, "mlp-init"));
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int fan_in = sizes[i];
    const int fan_out = sizes[i + 1];
    const bool output_layer = (i + 2 == sizes.size());
    const double limit = output_layer
                             ? std::sqrt(6.0 / (fan_in + fan_out))
                             : std::sqrt(6.0 / fan_in);
    MatD w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        w(r, c) = limit * (2.0 * rng.uniform01() - 1.0);
      }
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(VecD::Zero(fan_out));
  }
  return net;
}

void TrainConfig::validate() const {
  // learning_rate 0 is allowed: it must leave the parameters untouched.
  if (!(learning_rate >= 0.0)) throw config_error("learning_rate must be non-negative");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) {
    throw config_error("lr_decay must lie in (0, 1]");
  }
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw config_error("adam betas must lie in [0, 1)");
  }
  if (batch_size < 1) throw config_error("batch_size must be positive");
  if (epochs < 0) throw config_error("epochs must be non-negative");
  if (dataset_size < 1) throw config_error("dataset_size must be positive");
  if (bit_group_index < 0) throw config_error("bit_group_index must be non-negative");
}

VecD build_features(const VecC& rx_pilot, const VecC& rx_data) {
  if (rx_pilot.size() != rx_data.size()) {
    throw framing_error("build_features: symbol lengths differ");
  }
  const Eigen::Index n = rx_pilot.size();
  VecD f(4 * n);
  f.segment(0, n) = rx_pilot.real();
  f.segment(n, n) = rx_pilot.imag();
  f.segment(2 * n, n) = rx_data.real();
  f.segment(3 * n, n) = rx_data.imag();
  return f;
}

namespace {

inline MatD sigmoid(const MatD& z) {
  return ((-z.array()).exp() + 1.0).inverse().matrix();
}

}  // namespace

MatD forward_batch(const Mlp& net, const MatD& features) {
  if (features.rows() != net.input_size()) {
    throw framing_error("forward: feature dimension " +
                        std::to_string(features.rows()) +
                        " does not match input size " +
                        std::to_string(net.input_size()));
  }
  MatD a = features;
  for (int i = 0; i < net.depth(); ++i) {
    MatD z = net.weights[static_cast<std::size_t>(i)] * a;
    z.colwise() += net.biases[static_cast<std::size_t>(i)];
    if (i + 1 < net.depth()) {
      a = z.cwiseMax(0.0);
    } else {
      a = sigmoid(z);
    }
  }
  if (!a.allFinite()) throw numeric_error("forward: non-finite activation");
  return a;
}

VecD forward(const Mlp& net, const VecDRef& features) {
  return forward_batch(net, features);
}

double bce_loss(const VecDRef& pred, const VecDRef& target) {
  if (pred.size() != target.size()) {
    throw framing_error("bce_loss: size mismatch");
  }
  const auto p = pred.array().min(1.0 - 1e-12).max(1e-12);
  const auto t = target.array();
  return -(t * p.log() + (1.0 - t) * (1.0 - p).log()).mean();
}

Gradients backward_batch(const Mlp& net, const MatD& features,
                         const MatD& targets, double* loss_out) {
  const Eigen::Index batch = features.cols();
  if (targets.cols() != batch || targets.rows() != net.output_size()) {
    throw framing_error("backward: target shape mismatch");
  }
  const int depth = net.depth();
  // Forward pass keeping the activations; relu gates are recovered from the
  // stored outputs (a > 0 iff z > 0).
  std::vector<MatD> acts(static_cast<std::size_t>(depth) + 1);
  acts[0] = features;
  for (int i = 0; i < depth; ++i) {
    MatD z = net.weights[static_cast<std::size_t>(i)] * acts[static_cast<std::size_t>(i)];
    z.colwise() += net.biases[static_cast<std::size_t>(i)];
    acts[static_cast<std::size_t>(i) + 1] =
        (i + 1 < depth) ? z.cwiseMax(0.0) : sigmoid(z);
  }
  const MatD& out = acts.back();
  if (loss_out != nullptr) {
    const auto p = out.array().min(1.0 - 1e-12).max(1e-12);
    const auto t = targets.array();
    *loss_out = -(t * p.log() + (1.0 - t) * (1.0 - p).log()).mean();
  }

  Gradients g;
  g.w.resize(static_cast<std::size_t>(depth));
  g.b.resize(static_cast<std::size_t>(depth));
  // Sigmoid + BCE cancel to (p - t), scaled by the double mean over bits
  // and batch.
  MatD delta = (out - targets) /
               (static_cast<double>(net.output_size()) * static_cast<double>(batch));
  for (int i = depth - 1; i >= 0; --i) {
    const auto ui = static_cast<std::size_t>(i);
    g.w[ui].noalias() = delta * acts[ui].transpose();
    g.b[ui] = delta.rowwise().sum();
    if (i > 0) {
      MatD back = net.weights[ui].transpose() * delta;
      delta = back.cwiseProduct(
          (acts[ui].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

Gradients backward(const Mlp& net, const VecDRef& features,
                   const VecDRef& target) {
  return backward_batch(net, features, target, nullptr);
}

AdamState AdamState::like(const Mlp& net) {
  AdamState st;
  for (const auto& w : net.weights) st.mw.push_back(MatD::Zero(w.rows(), w.cols()));
  for (const auto& w : net.weights) st.vw.push_back(MatD::Zero(w.rows(), w.cols()));
  for (const auto& b : net.biases) st.mb.push_back(VecD::Zero(b.size()));
  for (const auto& b : net.biases) st.vb.push_back(VecD::Zero(b.size()));
  return st;
}

void adam_step(Mlp& net, const Gradients& g, AdamState& state,
               const TrainConfig& cfg) {
  cfg.validate();
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(cfg.beta1, t);
  const double corr2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    state.mw[i] = cfg.beta1 * state.mw[i] + (1.0 - cfg.beta1) * g.w[i];
    state.vw[i].array() = cfg.beta2 * state.vw[i].array() +
                          (1.0 - cfg.beta2) * g.w[i].array().square();
    net.weights[i].array() -=
        cfg.learning_rate * (state.mw[i].array() / corr1) /
        ((state.vw[i].array() / corr2).sqrt() + cfg.eps);

    state.mb[i] = cfg.beta1 * state.mb[i] + (1.0 - cfg.beta1) * g.b[i];
    state.vb[i].array() = cfg.beta2 * state.vb[i].array() +
                          (1.0 - cfg.beta2) * g.b[i].array().square();
    net.biases[i].array() -=
        cfg.learning_rate * (state.mb[i].array() / corr1) /
        ((state.vb[i].array() / corr2).sqrt() + cfg.eps);
  }
}

Dataset generate_dataset(const SimConfig& cfg, const TrainConfig& tcfg, int n) {
  cfg.validate();
  tcfg.validate();
  if (n < 1) throw config_error("generate_dataset: need at least one sample");
  if (tcfg.bit_group_index >= cfg.bit_groups()) {
    throw config_error("generate_dataset: bit group out of range");
  }
  SimConfig sim = cfg;
  sim.snr_db = tcfg.train_snr_db;

  const PilotPlan plan = make_pilot_plan(sim);
  const SmSymbolGrid pilot_grid = build_pilot_grid(plan, sim);
  const int first_bit = 6 * tcfg.bit_group_index;

  Dataset data;
  data.features.resize(4 * sim.n_fft, n);
  data.labels.resize(6, n);
  const std::uint64_t base = derive_seed(tcfg.seed, "dataset");
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(base, static_cast<std::uint64_t>(i)));
    const FrameBits bits = random_frame_bits(sim, rng);
    const SmSymbolGrid data_grid = map_bits_to_grid(bits, sim);
    const ChannelRealization ch = draw_channel(rng, sim.pdp, sim.n_t);
    const FrameRx rx = transmit_frame(pilot_grid, data_grid, ch, sim, rng);
    data.features.col(i) = build_features(rx.pilot, rx.data);
    for (int b = 0; b < 6; ++b) {
      data.labels(b, i) =
          static_cast<double>(bits[static_cast<std::size_t>(first_bit + b)]);
    }
  }
  return data;
}

TrainResult train(Mlp& net, const Dataset& data, const TrainConfig& tcfg) {
  net.validate();
  tcfg.validate();
  const Eigen::Index n = data.size();
  if (n < 1) throw config_error("train: empty dataset");
  if (data.features.rows() != net.input_size() ||
      data.labels.rows() != net.output_size()) {
    throw framing_error("train: dataset shape does not match the network");
  }

  AdamState state = AdamState::like(net);
  Rng shuffle_rng(derive_seed(tcfg.seed, "shuffle"));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  const Eigen::Index batch =
      std::min<Eigen::Index>(tcfg.batch_size, n);
  MatD bx(data.features.rows(), batch);
  MatD bt(data.labels.rows(), batch);

  TrainResult result;
  TrainConfig step_cfg = tcfg;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    // Fisher-Yates with the dedicated stream keeps batch order reproducible.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1],
                order[shuffle_rng.uniform_below(i)]);
    }
    double loss_sum = 0.0;
    Eigen::Index sample_count = 0;
    for (Eigen::Index start = 0; start + batch <= n; start += batch) {
      for (Eigen::Index j = 0; j < batch; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + j)];
        bx.col(j) = data.features.col(src);
        bt.col(j) = data.labels.col(src);
      }
      double loss = 0.0;
      const Gradients g = backward_batch(net, bx, bt, &loss);
      if (!std::isfinite(loss)) {
        throw numeric_error("train: loss diverged at epoch " +
                            std::to_string(epoch) + " (loss not finite)");
      }
      adam_step(net, g, state, step_cfg);
      loss_sum += loss * static_cast<double>(batch);
      sample_count += batch;
    }
    result.epoch_loss.push_back(
        sample_count > 0 ? loss_sum / static_cast<double>(sample_count) : 0.0);
    step_cfg.learning_rate *= tcfg.lr_decay;
  }
  return result;
}

Mlp train_detector(const SimConfig& cfg, const TrainConfig& tcfg) {
  const Dataset data = generate_dataset(cfg, tcfg, tcfg.dataset_size);
  Mlp net = init_mlp(detector_layer_sizes(cfg.n_fft),
                     derive_seed(tcfg.seed, "init"));
  net.bit_group = tcfg.bit_group_index;
  net.train_snr_db = tcfg.train_snr_db;
  net.seed = tcfg.seed;
  train(net, data, tcfg);
  return net;
}

FrameBits predict_bits(const Mlp& net, const VecDRef& features) {
  const VecD out = forward(net, features);
  FrameBits bits(static_cast<std::size_t>(out.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    bits[static_cast<std::size_t>(i)] = out[i] >= 0.5 ? 1 : 0;
  }
  return bits;
}

namespace {

constexpr char kMagic[8] = {'S', 'M', 'O', 'F', 'D', 'M', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v, const char* what) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw io_error(std::string("weight file truncated reading ") + what);
}

}  // namespace

void save_weights(const Mlp& net, const std::string& path) {
  net.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open weight file for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  const auto sizes = net.layer_sizes();
  write_pod(out, static_cast<std::uint32_t>(sizes.size()));
  for (int s : sizes) write_pod(out, static_cast<std::int32_t>(s));
  write_pod(out, net.seed);
  write_pod(out, net.train_snr_db);
  write_pod(out, static_cast<std::int32_t>(net.bit_group));
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    // Row-major on disk regardless of Eigen's in-memory layout.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
        w = net.weights[i];
    out.write(reinterpret_cast<const char*>(w.data()),
              static_cast<std::streamsize>(sizeof(double) * w.size()));
    out.write(reinterpret_cast<const char*>(net.biases[i].data()),
              static_cast<std::streamsize>(sizeof(double) * net.biases[i].size()));
  }
  out.flush();
  if (!out) throw io_error("failed writing weight file: " + path);
}

Mlp load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw missing_artifact_error("weight file not found: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw io_error("not a weight file: " + path);
  }
  std::uint32_t version = 0;
  read_pod(in, version, "version");
  if (version != kVersion) {
    throw io_error("unsupported weight file version " +
                   std::to_string(version) + " in " + path);
  }
  std::uint32_t n_sizes = 0;
  read_pod(in, n_sizes, "layer count");
  if (n_sizes < 2 || n_sizes > 64) {
    throw io_error("implausible layer count in " + path);
  }
  std::vector<int> sizes(n_sizes);
  for (auto& s : sizes) {
    std::int32_t v = 0;
    read_pod(in, v, "layer size");
    if (v < 1) throw io_error("non-positive layer size in " + path);
    s = v;
  }
  Mlp net;
  read_pod(in, net.seed, "seed");
  read_pod(in, net.train_snr_db, "train snr");
  std::int32_t group = 0;
  read_pod(in, group, "bit group");
  net.bit_group = group;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(
        sizes[i + 1], sizes[i]);
    in.read(reinterpret_cast<char*>(w.data()),
            static_cast<std::streamsize>(sizeof(double) * w.size()));
    if (!in) throw io_error("weight file truncated reading layer " +
                            std::to_string(i) + ": " + path);
    VecD b(sizes[i + 1]);
    in.read(reinterpret_cast<char*>(b.data()),
            static_cast<std::streamsize>(sizeof(double) * b.size()));
    if (!in) throw io_error("weight file truncated reading bias " +
                            std::to_string(i) + ": " + path);
    net.weights.emplace_back(w);
    net.biases.push_back(std::move(b));
  }
  in.peek();
  if (!in.eof()) throw io_error("trailing bytes in weight file: " + path);
  net.validate();
  return net;
}

namespace {
constexpr char kDatasetMagic[8] = {'S', 'M', 'O', 'F', 'D', 'M', 'D', 'S'};
}

void save_dataset(const DatasetFile& file, const std::string& path) {
  if (file.data.size() < 1 || file.data.labels.cols() != file.data.size()) {
    throw config_error("save_dataset: empty or inconsistent dataset");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open dataset file for writing: " + path);
  out.write(kDatasetMagic, sizeof(kDatasetMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(file.data.size()));
  write_pod(out, static_cast<std::uint32_t>(file.data.features.rows()));
  write_pod(out, static_cast<std::uint32_t>(file.data.labels.rows()));
  write_pod(out, file.train_snr_db);
  write_pod(out, static_cast<std::int32_t>(file.bit_group));
  write_pod(out, file.seed);
  out.write(reinterpret_cast<const char*>(file.data.features.data()),
            static_cast<std::streamsize>(sizeof(double) *
                                         file.data.features.size()));
  out.write(reinterpret_cast<const char*>(file.data.labels.data()),
            static_cast<std::streamsize>(sizeof(double) *
                                         file.data.labels.size()));
  out.flush();
  if (!out) throw io_error("failed writing dataset file: " + path);
}

DatasetFile load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw missing_artifact_error("dataset file not found: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kDatasetMagic, sizeof(kDatasetMagic)) != 0) {
    throw io_error("not a dataset file: " + path);
  }
  std::uint32_t version = 0;
  read_pod(in, version, "version");
  if (version != kVersion) {
    throw io_error("unsupported dataset file version in " + path);
  }
  std::uint64_t count = 0;
  std::uint32_t feat_dim = 0, label_dim = 0;
  read_pod(in, count, "sample count");
  read_pod(in, feat_dim, "feature dim");
  read_pod(in, label_dim, "label dim");
  if (count < 1 || feat_dim < 1 || label_dim < 1 || count > (1ull << 32)) {
    throw io_error("implausible dataset header in " + path);
  }
  DatasetFile file;
  read_pod(in, file.train_snr_db, "train snr");
  std::int32_t group = 0;
  read_pod(in, group, "bit group");
  file.bit_group = group;
  read_pod(in, file.seed, "seed");
  file.data.features.resize(feat_dim, static_cast<Eigen::Index>(count));
  file.data.labels.resize(label_dim, static_cast<Eigen::Index>(count));
  in.read(reinterpret_cast<char*>(file.data.features.data()),
          static_cast<std::streamsize>(sizeof(double) *
                                       file.data.features.size()));
  if (!in) throw io_error("dataset file truncated reading features: " + path);
  in.read(reinterpret_cast<char*>(file.data.labels.data()),
          static_cast<std::streamsize>(sizeof(double) *
                                       file.data.labels.size()));
  if (!in) throw io_error("dataset file truncated reading labels: " + path);
  in.peek();
  if (!in.eof()) throw io_error("trailing bytes in dataset file: " + path);
  return file;
}

}  // namespace smofdm
