#include "smofdm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "smofdm/errors.hpp"

namespace smofdm {

double wilson_halfwidth(long long errors, long long n) {
  if (n <= 0) return 0.0;
  constexpr double z = 1.959963984540054;  // 95%
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(errors) / nn;
  const double z2 = z * z;
  return z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) /
         (1.0 + z2 / nn);
}

DetectorSpec DetectorSpec::classical(Kind kind, std::string label) {
  if (kind == Kind::Dnn) throw config_error("classical() cannot build a DNN spec");
  DetectorSpec spec;
  spec.kind = kind;
  spec.label = std::move(label);
  return spec;
}

DetectorSpec DetectorSpec::neural(std::string label, DnnFrameDetector detector) {
  detector.validate();
  DetectorSpec spec;
  spec.kind = Kind::Dnn;
  spec.label = std::move(label);
  spec.dnn = std::move(detector);
  return spec;
}

namespace {

constexpr long long kBlockFrames = 256;

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

EstimatorKind to_estimator(DetectorSpec::Kind kind) {
  switch (kind) {
    case DetectorSpec::Kind::Lse: return EstimatorKind::Lse;
    case DetectorSpec::Kind::Mmse: return EstimatorKind::Mmse;
    case DetectorSpec::Kind::Perfect: return EstimatorKind::Perfect;
    case DetectorSpec::Kind::Dnn: break;
  }
  throw config_error("detector kind has no classical estimator");
}

std::uint64_t point_seed_for(const SimConfig& cfg, const std::string& label,
                             double snr_db, int point_index) {
  std::uint64_t s = derive_seed(cfg.master_seed, label);
  s = derive_seed(s, static_cast<std::uint64_t>(std::llround(snr_db * 1000.0)));
  return derive_seed(s, static_cast<std::uint64_t>(point_index));
}

}  // namespace

BerRecord run_ber_point(const SimConfig& cfg_in, const DetectorSpec& det,
                        const MonteCarloBudget& budget, int point_index,
                        int threads) {
  SimConfig cfg = cfg_in;
  cfg.validate();
  if (budget.max_frames < 1) throw config_error("budget needs at least one frame");
  const int n_threads = resolve_threads(threads);

  const PilotPlan plan = make_pilot_plan(cfg);
  const SmSymbolGrid pilot_grid = build_pilot_grid(plan, cfg);

  std::optional<ClassicalFrameDetector> classical;
  int first_bit = 0;
  int covered = cfg.frame_bits();
  std::vector<int> group_ids;
  if (det.kind == DetectorSpec::Kind::Dnn) {
    det.dnn.validate();
    first_bit = det.dnn.first_bit();
    covered = det.dnn.covered_bits();
    if (first_bit + covered > cfg.frame_bits()) {
      throw config_error("detector covers bits beyond the frame");
    }
    group_ids = det.dnn.covered_groups();
  } else {
    classical.emplace(to_estimator(det.kind), cfg);
  }

  const std::uint64_t point_seed =
      point_seed_for(cfg, det.label, cfg.snr_db, point_index);

  long long frames = 0;
  long long errors = 0;
  while (frames < budget.max_frames) {
    const long long block =
        std::min<long long>(kBlockFrames, budget.max_frames - frames);
    std::vector<long long> block_errors(static_cast<std::size_t>(n_threads), 0);

    auto worker = [&](int tid, long long lo, long long hi) {
      if (lo >= hi) return;
      const long long chunk = hi - lo;
      MatD features;
      std::vector<FrameBits> truth;
      if (!group_ids.empty()) {
        features.resize(4 * cfg.n_fft, chunk);
        truth.resize(static_cast<std::size_t>(chunk));
      }
      long long local_errors = 0;
      for (long long i = lo; i < hi; ++i) {
        Rng rng(derive_seed(point_seed, static_cast<std::uint64_t>(frames + i)));
        const FrameBits bits = random_frame_bits(cfg, rng);
        const SmSymbolGrid data_grid = map_bits_to_grid(bits, cfg);
        const ChannelRealization ch = draw_channel(rng, cfg.pdp, cfg.n_t);
        const FrameRx rx = transmit_frame(pilot_grid, data_grid, ch, cfg, rng);
        if (classical) {
          const FrameBits hat = classical->detect(rx.pilot, rx.data, &ch);
          for (int b = 0; b < covered; ++b) {
            local_errors +=
                hat[static_cast<std::size_t>(b)] !=
                bits[static_cast<std::size_t>(first_bit + b)];
          }
        } else {
          features.col(i - lo) = build_features(rx.pilot, rx.data);
          FrameBits& t = truth[static_cast<std::size_t>(i - lo)];
          t.assign(bits.begin() + first_bit, bits.begin() + first_bit + covered);
        }
      }
      if (!group_ids.empty()) {
        for (std::size_t pos = 0; pos < group_ids.size(); ++pos) {
          const auto it = std::find_if(
              det.dnn.groups.begin(), det.dnn.groups.end(),
              [&](const EnsembleDetector& g) {
                return g.bit_group() == group_ids[pos];
              });
          const MatD soft = ensemble_soft_batch(*it, features);
          for (long long c = 0; c < chunk; ++c) {
            const FrameBits& t = truth[static_cast<std::size_t>(c)];
            for (int b = 0; b < 6; ++b) {
              const std::uint8_t bit = soft(b, c) >= 0.5 ? 1 : 0;
              local_errors += bit != t[6 * pos + static_cast<std::size_t>(b)];
            }
          }
        }
      }
      block_errors[static_cast<std::size_t>(tid)] = local_errors;
    };

    if (n_threads == 1 || block == 1) {
      worker(0, 0, block);
    } else {
      std::vector<std::thread> pool;
      const long long per = (block + n_threads - 1) / n_threads;
      for (int t = 0; t < n_threads; ++t) {
        const long long lo = t * per;
        const long long hi = std::min<long long>(block, lo + per);
        pool.emplace_back(worker, t, lo, hi);
      }
      for (auto& th : pool) th.join();
    }
    for (long long e : block_errors) errors += e;
    frames += block;
    if (budget.target_bit_errors > 0 && errors >= budget.target_bit_errors) {
      break;
    }
  }

  BerRecord rec;
  rec.detector = det.label;
  rec.snr_db = cfg.snr_db;
  rec.frames = frames;
  rec.bit_errors = errors;
  rec.bits_counted = frames * static_cast<long long>(covered);
  rec.ber = rec.bits_counted > 0
                ? static_cast<double>(errors) / static_cast<double>(rec.bits_counted)
                : 0.0;
  rec.ci_halfwidth = wilson_halfwidth(errors, rec.bits_counted);
  return rec;
}

std::vector<BerRecord> run_sweep(const std::vector<SweepCurve>& curves,
                                 const std::vector<double>& snr_db_list,
                                 const MonteCarloBudget& budget, int threads) {
  if (curves.empty() || snr_db_list.empty()) {
    throw config_error("sweep needs at least one curve and one SNR");
  }
  std::vector<BerRecord> records;
  for (const auto& curve : curves) {
    for (std::size_t i = 0; i < snr_db_list.size(); ++i) {
      SimConfig cfg = curve.cfg;
      cfg.snr_db = snr_db_list[i];
      records.push_back(run_ber_point(cfg, curve.det, budget,
                                      static_cast<int>(i), threads));
    }
  }
  return records;
}

std::vector<BerRecord> run_sweep(const SimConfig& cfg_template,
                                 const std::vector<double>& snr_db_list,
                                 const std::vector<DetectorSpec>& detectors,
                                 const MonteCarloBudget& budget, int threads) {
  std::vector<SweepCurve> curves;
  for (const auto& det : detectors) curves.push_back({cfg_template, det});
  return run_sweep(curves, snr_db_list, budget, threads);
}

std::string weight_file_name(const SimConfig& cfg, int group,
                             double train_snr_db) {
  char snr[32];
  std::snprintf(snr, sizeof(snr), "%g", train_snr_db);
  std::ostringstream name;
  name << "mlp_L" << cfg.pdp.paths() << "_cp" << cfg.cp_len << "_p"
       << cfg.pilots_per_antenna << "_g" << group << "_snr" << snr << ".nn";
  return name.str();
}

namespace {

SimConfig preset_base_config(std::uint64_t master_seed) {
  SimConfig cfg;
  cfg.master_seed = master_seed;
  return cfg;
}

constexpr double kSingleTrainSnrDb = 20.0;
const std::vector<double> kEnsembleTrainSnrsDb = {5.0, 10.0, 15.0, 20.0};
const std::vector<double> kPresetSnrListDb = {0.0, 5.0, 10.0, 15.0, 20.0, 25.0};

void append_requirements(std::vector<WeightRequirement>& reqs,
                         const SimConfig& cfg, const std::vector<int>& groups,
                         const std::vector<double>& train_snrs) {
  for (int g : groups) {
    for (double snr : train_snrs) {
      reqs.push_back({cfg, g, snr, weight_file_name(cfg, g, snr)});
    }
  }
}

}  // namespace

std::vector<WeightRequirement> preset_weight_requirements(
    const std::string& name, const PresetOptions& opt) {
  if (opt.groups.empty()) throw config_error("preset needs at least one group");
  SimConfig base = preset_base_config(opt.master_seed);
  std::vector<WeightRequirement> reqs;
  if (name == "fig3") {
    base.pdp = PowerDelayProfile::uniform(3);
    base.cp_len = 16;
    for (int pilots : {32, 4}) {
      SimConfig cfg = base;
      cfg.pilots_per_antenna = pilots;
      append_requirements(reqs, cfg, opt.groups, {kSingleTrainSnrDb});
    }
  } else if (name == "fig4") {
    base.pdp = PowerDelayProfile::uniform(8);
    base.pilots_per_antenna = 32;
    for (int cp : {16, 0}) {
      SimConfig cfg = base;
      cfg.cp_len = cp;
      append_requirements(reqs, cfg, opt.groups, {kSingleTrainSnrDb});
    }
  } else if (name == "fig5") {
    base.pdp = PowerDelayProfile::uniform(3);
    base.cp_len = 16;
    for (int pilots : {32, 4}) {
      SimConfig cfg = base;
      cfg.pilots_per_antenna = pilots;
      append_requirements(reqs, cfg, opt.groups, kEnsembleTrainSnrsDb);
    }
  } else {
    throw config_error("unknown experiment preset '" + name +
                       "' (expected fig3, fig4 or fig5)");
  }
  return reqs;
}

namespace {

Mlp load_preset_weights(const std::string& dir, const SimConfig& cfg, int group,
                        double train_snr_db) {
  const auto path =
      std::filesystem::path(dir) / weight_file_name(cfg, group, train_snr_db);
  Mlp net = load_weights(path.string());
  if (net.bit_group != group) {
    throw config_error("weight file " + path.string() +
                       " was trained for bit group " +
                       std::to_string(net.bit_group));
  }
  return net;
}

DnnFrameDetector load_group_detectors(const std::string& dir,
                                      const SimConfig& cfg,
                                      const std::vector<int>& groups,
                                      const std::vector<double>& train_snrs) {
  DnnFrameDetector det;
  for (int g : groups) {
    EnsembleDetector ens;
    for (double snr : train_snrs) {
      ens.members.push_back(load_preset_weights(dir, cfg, g, snr));
    }
    det.groups.push_back(std::move(ens));
  }
  det.validate();
  return det;
}

}  // namespace

Experiment experiment_preset(const std::string& name,
                             const PresetOptions& opt) {
  // Validates the preset name (and group list) up front.
  (void)preset_weight_requirements(name, opt);

  Experiment exp;
  exp.name = name;
  exp.snr_db_list = kPresetSnrListDb;
  SimConfig base = preset_base_config(opt.master_seed);

  auto label = [](const std::string& stem, const std::string& variant) {
    return stem + "_" + variant;
  };

  if (name == "fig3") {
    base.pdp = PowerDelayProfile::uniform(3);
    base.cp_len = 16;
    for (int pilots : {32, 4}) {
      SimConfig cfg = base;
      cfg.pilots_per_antenna = pilots;
      const std::string v = "p" + std::to_string(pilots);
      exp.curves.push_back(
          {cfg, DetectorSpec::classical(DetectorSpec::Kind::Lse, label("lse", v))});
      exp.curves.push_back(
          {cfg, DetectorSpec::classical(DetectorSpec::Kind::Mmse, label("mmse", v))});
      exp.curves.push_back(
          {cfg, DetectorSpec::neural(
                    label("dnn", v),
                    load_group_detectors(opt.weights_dir, cfg, opt.groups,
                                         {kSingleTrainSnrDb}))});
    }
  } else if (name == "fig4") {
    base.pdp = PowerDelayProfile::uniform(8);
    base.pilots_per_antenna = 32;
    for (int cp : {16, 0}) {
      SimConfig cfg = base;
      cfg.cp_len = cp;
      const std::string v = "cp" + std::to_string(cp);
      exp.curves.push_back(
          {cfg, DetectorSpec::classical(DetectorSpec::Kind::Lse, label("lse", v))});
      exp.curves.push_back(
          {cfg, DetectorSpec::classical(DetectorSpec::Kind::Mmse, label("mmse", v))});
      exp.curves.push_back(
          {cfg, DetectorSpec::neural(
                    label("dnn", v),
                    load_group_detectors(opt.weights_dir, cfg, opt.groups,
                                         {kSingleTrainSnrDb}))});
    }
  } else {
    base.pdp = PowerDelayProfile::uniform(3);
    base.cp_len = 16;
    for (int pilots : {32, 4}) {
      SimConfig cfg = base;
      cfg.pilots_per_antenna = pilots;
      const std::string v = "p" + std::to_string(pilots);
      exp.curves.push_back(
          {cfg, DetectorSpec::classical(DetectorSpec::Kind::Mmse, label("mmse", v))});
      exp.curves.push_back(
          {cfg, DetectorSpec::neural(
                    label("dnn", v),
                    load_group_detectors(opt.weights_dir, cfg, opt.groups,
                                         {kSingleTrainSnrDb}))});
      exp.curves.push_back(
          {cfg, DetectorSpec::neural(
                    label("ens", v),
                    load_group_detectors(opt.weights_dir, cfg, opt.groups,
                                         kEnsembleTrainSnrsDb))});
    }
  }
  return exp;
}

int train_missing_weights(const std::vector<WeightRequirement>& reqs,
                          const std::string& dir, const TrainBudget& budget,
                          int threads, bool verbose) {
  namespace fs = std::filesystem;
  if (!dir.empty()) fs::create_directories(dir);
  std::vector<const WeightRequirement*> todo;
  for (const auto& r : reqs) {
    if (!fs::exists(fs::path(dir) / r.file_name)) todo.push_back(&r);
  }
  if (todo.empty()) return 0;

  const int n_threads = std::min<int>(resolve_threads(threads),
                                      static_cast<int>(todo.size()));
  std::mutex log_mutex;
  std::size_t next = 0;
  std::mutex next_mutex;
  auto worker = [&]() {
    for (;;) {
      std::size_t idx;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next >= todo.size()) return;
        idx = next++;
      }
      const WeightRequirement& req = *todo[idx];
      TrainConfig tcfg;
      tcfg.dataset_size = budget.dataset_size;
      tcfg.epochs = budget.epochs;
      tcfg.train_snr_db = req.train_snr_db;
      tcfg.bit_group_index = req.group;
      tcfg.seed = derive_seed(budget.seed, req.file_name);
      const auto t0 = std::chrono::steady_clock::now();
      const Mlp net = train_detector(req.cfg, tcfg);
      save_weights(net, (fs::path(dir) / req.file_name).string());
      if (verbose) {
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
        std::lock_guard<std::mutex> lock(log_mutex);
        std::fprintf(stderr, "trained %s (%.0f s)\n", req.file_name.c_str(),
                     secs);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return static_cast<int>(todo.size());
}

std::string format_csv(const std::vector<BerRecord>& records,
                       const std::vector<std::string>& comments) {
  if (records.empty()) throw config_error("no records to emit");
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "detector,snr_db,frames,bit_errors,ber,ci_halfwidth\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%s,%.2f,%lld,%lld,%.6e,%.6e\n",
                  r.detector.c_str(), r.snr_db, r.frames, r.bit_errors, r.ber,
                  r.ci_halfwidth);
    out << buf;
  }
  return out.str();
}

void emit_csv(const std::vector<BerRecord>& records, const std::string& path,
              const std::vector<std::string>& comments) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot write CSV: " + path);
  f << format_csv(records, comments);
  if (!f) throw io_error("failed writing CSV: " + path);
}

namespace {

constexpr double kPlotFloor = 1e-6;

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (snr, ber)
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                          "#bcbd22", "#e377c2"};

}  // namespace

std::string render_svg(const std::vector<BerRecord>& records) {
  if (records.empty()) throw config_error("no records to plot");
  std::vector<Series> series;
  double snr_min = records.front().snr_db;
  double snr_max = snr_min;
  for (const auto& r : records) {
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const Series& s) { return s.label == r.detector; });
    if (it == series.end()) {
      series.push_back({r.detector, {}});
      it = series.end() - 1;
    }
    it->points.emplace_back(r.snr_db, std::max(r.ber, kPlotFloor));
    snr_min = std::min(snr_min, r.snr_db);
    snr_max = std::max(snr_max, r.snr_db);
  }
  if (snr_max <= snr_min) snr_max = snr_min + 1.0;

  const double width = 860, height = 620;
  const double left = 70, right = 200, top = 30, bottom = 60;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  const double log_floor = std::log10(kPlotFloor);  // -6 .. 0 on the y axis

  auto xpos = [&](double snr) {
    return left + (snr - snr_min) / (snr_max - snr_min) * pw;
  };
  auto ypos = [&](double ber) {
    const double l = std::log10(ber);
    return top + (0.0 - l) / (0.0 - log_floor) * ph;
  };
  char buf[256];
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // decade grid and y labels
  for (int d = 0; d >= log_floor; --d) {
    const double y = ypos(std::pow(10.0, d));
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"#dddddd\"/>\n",
                  left, y, left + pw, y);
    svg << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" "
                  "text-anchor=\"end\" font-family=\"sans-serif\">1e%d</text>\n",
                  left - 6, y + 4, d);
    svg << buf;
  }
  // x ticks every 5 dB
  for (double snr = std::ceil(snr_min / 5.0) * 5.0; snr <= snr_max + 1e-9;
       snr += 5.0) {
    const double x = xpos(snr);
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"#dddddd\"/>\n",
                  x, top, x, top + ph);
    svg << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" "
                  "text-anchor=\"middle\" font-family=\"sans-serif\">%g</text>\n",
                  x, top + ph + 18, snr);
    svg << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                "fill=\"none\" stroke=\"black\"/>\n",
                left, top, pw, ph);
  svg << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"13\" "
                "text-anchor=\"middle\" font-family=\"sans-serif\">SNR "
                "(dB)</text>\n",
                left + pw / 2, height - 16);
  svg << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"18\" y=\"%.1f\" font-size=\"13\" "
                "text-anchor=\"middle\" font-family=\"sans-serif\" "
                "transform=\"rotate(-90 18 %.1f)\">BER</text>\n",
                top + ph / 2, top + ph / 2);
  svg << buf;

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::ostringstream pts;
    for (const auto& [snr, ber] : series[s].points) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", xpos(snr), ypos(ber));
      pts << buf;
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.8\" points=\"" << pts.str() << "\"/>\n";
    for (const auto& [snr, ber] : series[s].points) {
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n",
                    xpos(snr), ypos(ber), color);
      svg << buf;
    }
    // legend entry
    const double ly = top + 14 + 18 * static_cast<double>(s);
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"%s\" stroke-width=\"1.8\"/>\n",
                  left + pw + 14, ly, left + pw + 40, ly, color);
    svg << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" "
                  "font-family=\"sans-serif\">%s</text>\n",
                  left + pw + 46, ly + 4, series[s].label.c_str());
    svg << buf;
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_svg(const std::vector<BerRecord>& records, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw io_error("cannot write SVG: " + path);
  f << render_svg(records);
  if (!f) throw io_error("failed writing SVG: " + path);
}

}  // namespace smofdm
