#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "smofdm/errors.hpp"
#include "smofdm/neural.hpp"

using namespace smofdm;

namespace {

VecD random_vec(Rng& rng, Eigen::Index n, double scale = 1.0) {
  VecD v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = scale * (2.0 * rng.uniform01() - 1.0);
  }
  return v;
}

VecD random_bits_vec(Rng& rng, Eigen::Index n) {
  VecD v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<double>(rng.coin());
  return v;
}

double loss_at(const Mlp& net, const VecD& x, const VecD& t) {
  return bce_loss(forward(net, x), t);
}

}  // namespace

TEST_CASE("build_features layout and energy") {
  VecC zero = VecC::Zero(64);
  CHECK(build_features(zero, zero).cwiseAbs().maxCoeff() == 0.0);
  CHECK(build_features(zero, zero).size() == 256);

  VecC pilot = VecC::Zero(64), data = VecC::Zero(64);
  pilot[0] = cxd(3.0, 4.0);
  const VecD f = build_features(pilot, data);
  CHECK(f[0] == 3.0);
  CHECK(f[64] == 4.0);
  CHECK(f.cwiseAbs().sum() == 7.0);

  Rng rng(51);
  VecC p(64), d(64);
  for (int k = 0; k < 64; ++k) {
    p[k] = cxd(rng.gaussian(), rng.gaussian());
    d[k] = cxd(rng.gaussian(), rng.gaussian());
  }
  const VecD g = build_features(p, d);
  CHECK(std::abs(g.squaredNorm() - (p.squaredNorm() + d.squaredNorm())) <
        1e-12);

  CHECK_THROWS_AS((void)build_features(VecC::Zero(64), VecC::Zero(32)),
                  framing_error);
}

TEST_CASE("forward: zero parameters, single-neuron toy, batched equality") {
  Mlp zero_net = init_mlp({256, 10, 6}, 1);
  for (auto& w : zero_net.weights) w.setZero();
  const VecD out = forward(zero_net, VecD::Ones(256));
  for (int i = 0; i < 6; ++i) CHECK(out[i] == 0.5);

  Mlp toy = init_mlp({1, 1, 1}, 2);
  toy.weights[0](0, 0) = 1.0;
  toy.weights[1](0, 0) = 1.0;
  toy.biases[0].setZero();
  toy.biases[1].setZero();
  VecD two(1);
  two << 2.0;
  CHECK(forward(toy, two)[0] ==
        doctest::Approx(0.8807970779778823).epsilon(1e-12));

  Rng rng(52);
  Mlp net = init_mlp({16, 12, 5}, 3);
  MatD batch(16, 9);
  for (int c = 0; c < 9; ++c) batch.col(c) = random_vec(rng, 16);
  const MatD batched = forward_batch(net, batch);
  for (int c = 0; c < 9; ++c) {
    CHECK((batched.col(c) - forward(net, batch.col(c))).cwiseAbs().maxCoeff() <=
          1e-12);
  }

  CHECK_THROWS_AS((void)forward(net, VecD::Zero(15)), framing_error);
}

TEST_CASE("forward outputs stay in (0,1) and finite") {
  Rng rng(53);
  Mlp net = init_mlp({8, 32, 16, 4}, 4);
  for (int t = 0; t < 200; ++t) {
    const VecD out = forward(net, random_vec(rng, 8, 5.0));
    CHECK(out.allFinite());
    CHECK(out.minCoeff() > 0.0);
    CHECK(out.maxCoeff() < 1.0);
  }
}

TEST_CASE("bce_loss closed forms") {
  Rng rng(54);
  VecD half = VecD::Constant(6, 0.5);
  VecD target = random_bits_vec(rng, 6);  // any target
  CHECK(bce_loss(half, target) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  VecD ones = VecD::Ones(6);
  CHECK(bce_loss(ones, ones) < 1e-10);

  VecD p9 = VecD::Constant(6, 0.9);
  CHECK(bce_loss(p9, ones) == doctest::Approx(-std::log(0.9)).epsilon(1e-12));
}

TEST_CASE("backward: BCE-sigmoid cancellation at zero parameters") {
  Mlp net = init_mlp({4, 3, 6}, 5);
  for (auto& w : net.weights) w.setZero();
  VecD x = VecD::Ones(4);
  VecD t(6);
  t << 1, 0, 1, 0, 1, 1;
  const Gradients g = backward(net, x, t);
  for (int i = 0; i < 6; ++i) {
    CHECK(g.b[1][i] == doctest::Approx((0.5 - t[i]) / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("backward matches central finite differences on every parameter") {
  Rng rng(56);
  Mlp net = init_mlp({8, 10, 5, 3}, 57);
  const VecD x = random_vec(rng, 8, 1.5);
  const VecD t = random_bits_vec(rng, 3);
  const Gradients g = backward(net, x, t);
  const double h = 1e-6;

  auto check_param = [&](double* p, double analytic) {
    const double saved = *p;
    *p = saved + h;
    const double up = loss_at(net, x, t);
    *p = saved - h;
    const double down = loss_at(net, x, t);
    *p = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-10});
    CHECK(std::abs(analytic - fd) / denom < 1e-5);
  };

  for (std::size_t layer = 0; layer < net.weights.size(); ++layer) {
    MatD& w = net.weights[layer];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        check_param(&w(r, c), g.w[layer](r, c));
      }
    }
    VecD& b = net.biases[layer];
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      check_param(&b[r], g.b[layer][r]);
    }
  }
}

TEST_CASE("dead ReLU units receive exactly zero gradient") {
  Mlp net = init_mlp({4, 3, 2}, 58);
  net.weights[0].row(1).setZero();
  net.biases[0][1] = -1.0;  // pre-activation is always -1
  Rng rng(59);
  for (int t = 0; t < 20; ++t) {
    const Gradients g =
        backward(net, random_vec(rng, 4), random_bits_vec(rng, 2));
    CHECK(g.w[0].row(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.b[0][1] == 0.0);
  }
}

TEST_CASE("adam: first-step sign update, zero gradient, scalar convergence") {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;

  Mlp net = init_mlp({1, 1}, 60);
  net.weights[0](0, 0) = 0.7;
  net.biases[0][0] = -0.2;
  AdamState st = AdamState::like(net);
  Gradients g;
  g.w = {MatD::Constant(1, 1, 3.0)};
  g.b = {VecD::Constant(1, -0.5)};
  adam_step(net, g, st, cfg);
  CHECK(net.weights[0](0, 0) ==
        doctest::Approx(0.7 - cfg.learning_rate).epsilon(1e-6));
  CHECK(net.biases[0][0] ==
        doctest::Approx(-0.2 + cfg.learning_rate).epsilon(1e-6));

  // zero gradient leaves parameters untouched
  Mlp frozen = init_mlp({2, 2}, 61);
  const MatD w_before = frozen.weights[0];
  AdamState st2 = AdamState::like(frozen);
  Gradients zg;
  zg.w = {MatD::Zero(2, 2)};
  zg.b = {VecD::Zero(2)};
  adam_step(frozen, zg, st2, cfg);
  CHECK(frozen.weights[0] == w_before);

  // quadratic bowl: loss = theta^2, gradient 2 theta
  Mlp scalar = init_mlp({1, 1}, 62);
  scalar.weights[0](0, 0) = 1.0;
  scalar.biases[0].setZero();
  AdamState st3 = AdamState::like(scalar);
  TrainConfig bowl;
  bowl.learning_rate = 0.1;
  for (int step = 0; step < 200; ++step) {
    Gradients grad;
    grad.w = {MatD::Constant(1, 1, 2.0 * scalar.weights[0](0, 0))};
    grad.b = {VecD::Zero(1)};
    adam_step(scalar, grad, st3, bowl);
  }
  CHECK(std::abs(scalar.weights[0](0, 0)) < 0.05);
}

TEST_CASE("generate_dataset: determinism, label balance, group slicing") {
  SimConfig cfg;
  TrainConfig tcfg;
  tcfg.train_snr_db = 20.0;
  tcfg.bit_group_index = 0;
  tcfg.seed = 63;

  const Dataset a = generate_dataset(cfg, tcfg, 500);
  const Dataset b = generate_dataset(cfg, tcfg, 500);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.features.rows() == 256);
  CHECK(a.labels.rows() == 6);

  // group-0 labels are the first six transmitted bits: re-derive the frame
  // from the same per-sample stream.
  for (int i = 0; i < 20; ++i) {
    Rng rng(derive_seed(derive_seed(tcfg.seed, "dataset"),
                        static_cast<std::uint64_t>(i)));
    const FrameBits bits = random_frame_bits(cfg, rng);
    for (int bit = 0; bit < 6; ++bit) {
      CHECK(a.labels(bit, i) == static_cast<double>(bits[bit]));
    }
  }

  TrainConfig big = tcfg;
  const Dataset d = generate_dataset(cfg, big, 100000);
  for (int bit = 0; bit < 6; ++bit) {
    CHECK(d.labels.row(bit).mean() == doctest::Approx(0.5).epsilon(0.02));
  }

  TrainConfig bad = tcfg;
  bad.bit_group_index = 32;
  CHECK_THROWS_AS((void)generate_dataset(cfg, bad, 10), config_error);
}

TEST_CASE("training overfits a tiny dataset and the loss trends down") {
  SimConfig cfg;
  TrainConfig tcfg;
  tcfg.seed = 64;
  tcfg.epochs = 500;
  const Dataset data = generate_dataset(cfg, tcfg, 64);
  Mlp net = init_mlp(detector_layer_sizes(cfg.n_fft), derive_seed(tcfg.seed, "init"));
  const TrainResult result = train(net, data, tcfg);
  REQUIRE(result.epoch_loss.size() == 500);
  CHECK(result.epoch_loss.back() < 1e-2);

  int increases = 0;
  for (std::size_t e = 1; e < result.epoch_loss.size(); ++e) {
    increases += result.epoch_loss[e] > result.epoch_loss[e - 1];
  }
  CHECK(increases <= 25);  // non-increasing in at least 95% of transitions
}

TEST_CASE("zero learning rate leaves parameters and loss unchanged") {
  SimConfig cfg;
  TrainConfig tcfg;
  tcfg.seed = 65;
  tcfg.epochs = 3;
  tcfg.learning_rate = 0.0;
  // One full batch per epoch so the reshuffle cannot change the epoch loss.
  const Dataset data = generate_dataset(cfg, tcfg, 256);
  Mlp net = init_mlp(detector_layer_sizes(cfg.n_fft), 66);
  const MatD w0 = net.weights[0];
  const TrainResult result = train(net, data, tcfg);
  CHECK(net.weights[0] == w0);
  // The reshuffle reorders the loss summation, so compare to rounding noise.
  CHECK(std::abs(result.epoch_loss[0] - result.epoch_loss[1]) < 1e-12);
  CHECK(std::abs(result.epoch_loss[1] - result.epoch_loss[2]) < 1e-12);
}

TEST_CASE("training is bit-deterministic under a fixed seed") {
  SimConfig cfg;
  TrainConfig tcfg;
  tcfg.seed = 67;
  tcfg.epochs = 2;
  tcfg.dataset_size = 300;
  const Mlp a = train_detector(cfg, tcfg);
  const Mlp b = train_detector(cfg, tcfg);
  REQUIRE(a.weights.size() == b.weights.size());
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    CHECK(a.weights[i] == b.weights[i]);
    CHECK(a.biases[i] == b.biases[i]);
  }
}

TEST_CASE("predict_bits thresholds at one half") {
  Mlp net = init_mlp({4, 6}, 68);
  net.weights[0].setZero();
  net.biases[0] << 2.0, -2.0, 0.0, -0.05, 0.05, 30.0;
  const FrameBits bits = predict_bits(net, VecD::Zero(4));
  CHECK(bits == FrameBits{1, 0, 1, 0, 1, 1});

  Mlp zero = init_mlp({4, 6}, 69);
  for (auto& w : zero.weights) w.setZero();
  CHECK(predict_bits(zero, VecD::Zero(4)) == FrameBits{1, 1, 1, 1, 1, 1});
}

TEST_CASE("weight files roundtrip bit-exactly and reject corruption") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "smofdm_nn_test";
  fs::create_directories(dir);
  const std::string path = (dir / "net.nn").string();

  Mlp net = init_mlp({16, 10, 6}, 70);
  net.bit_group = 7;
  net.train_snr_db = 15.0;
  net.seed = 70;
  save_weights(net, path);
  const Mlp loaded = load_weights(path);
  CHECK(loaded.bit_group == 7);
  CHECK(loaded.train_snr_db == 15.0);
  CHECK(loaded.seed == 70);
  CHECK(loaded.layer_sizes() == net.layer_sizes());

  Rng rng(71);
  for (int t = 0; t < 10; ++t) {
    const VecD x = random_vec(rng, 16);
    CHECK(forward(net, x) == forward(loaded, x));
  }

  // truncate: loading must fail cleanly
  const auto size = fs::file_size(path);
  fs::resize_file(path, size - 9);
  CHECK_THROWS_AS((void)load_weights(path), io_error);

  CHECK_THROWS_AS((void)load_weights((dir / "absent.nn").string()),
                  missing_artifact_error);

  std::ofstream junk(dir / "junk.nn", std::ios::binary);
  junk << "not a weight file at all";
  junk.close();
  CHECK_THROWS_AS((void)load_weights((dir / "junk.nn").string()), io_error);
  fs::remove_all(dir);
}

TEST_CASE("dataset files roundtrip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "smofdm_ds_test";
  fs::create_directories(dir);
  const std::string path = (dir / "data.ds").string();

  SimConfig cfg;
  TrainConfig tcfg;
  tcfg.seed = 72;
  DatasetFile file;
  file.data = generate_dataset(cfg, tcfg, 50);
  file.train_snr_db = tcfg.train_snr_db;
  file.bit_group = tcfg.bit_group_index;
  file.seed = tcfg.seed;
  save_dataset(file, path);
  const DatasetFile loaded = load_dataset(path);
  CHECK(loaded.data.features == file.data.features);
  CHECK(loaded.data.labels == file.data.labels);
  CHECK(loaded.seed == 72);

  fs::resize_file(path, fs::file_size(path) / 2);
  CHECK_THROWS_AS((void)load_dataset(path), io_error);
  fs::remove_all(dir);
}

TEST_CASE("a briefly trained group network beats chance at its train SNR") {
  SimConfig cfg;
  TrainConfig tcfg;
  tcfg.seed = 73;
  tcfg.dataset_size = 20000;
  tcfg.epochs = 4;
  const Mlp net = train_detector(cfg, tcfg);

  SimConfig eval_cfg = cfg;
  eval_cfg.snr_db = tcfg.train_snr_db;
  const PilotPlan plan = make_pilot_plan(eval_cfg);
  const SmSymbolGrid pilot_grid = build_pilot_grid(plan, eval_cfg);
  Rng rng(74);
  long long errors = 0;
  const int frames = 500;
  for (int f = 0; f < frames; ++f) {
    const FrameBits bits = random_frame_bits(eval_cfg, rng);
    const SmSymbolGrid dg = map_bits_to_grid(bits, eval_cfg);
    const ChannelRealization ch = draw_channel(rng, eval_cfg.pdp, eval_cfg.n_t);
    const FrameRx rx = transmit_frame(pilot_grid, dg, ch, eval_cfg, rng);
    const FrameBits hat = predict_bits(net, build_features(rx.pilot, rx.data));
    for (int b = 0; b < 6; ++b) {
      errors += hat[static_cast<std::size_t>(b)] != bits[static_cast<std::size_t>(b)];
    }
  }
  const double ber = static_cast<double>(errors) / (6.0 * frames);
  // 0.5 - 3 sigma over 3000 bits is 0.473; a real detector sits far below.
  CHECK(ber < 0.45);
}
