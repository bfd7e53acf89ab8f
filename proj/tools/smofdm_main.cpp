// Command-line front end: offline training, single-point evaluation, BER
// sweeps (experiment presets fig3/fig4/fig5), dataset generation and
// ensemble manifests.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smofdm/errors.hpp"
#include "smofdm/harness.hpp"
#include "smofdm/neural.hpp"

namespace {

using namespace smofdm;

// Shared physical-layer options; a key=value config file provides the base
// values and explicit flags override it.
struct SimOpts {
  std::string config_path;
  std::optional<int> n_fft, cp_len, pilots, paths;
  std::optional<double> snr_db;
  std::optional<std::uint64_t> master_seed, pilot_seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    "key=value config file (flags override it)");
    cmd->add_option("--n-fft", n_fft, "subcarrier count");
    cmd->add_option("--cp-len", cp_len, "cyclic prefix length in samples");
    cmd->add_option("--pilots", pilots, "pilots per transmit antenna");
    cmd->add_option("--paths", paths, "channel path count (uniform profile)");
    cmd->add_option("--snr-db", snr_db, "signal-to-noise ratio in dB");
    cmd->add_option("--seed", master_seed, "master seed");
    cmd->add_option("--pilot-seed", pilot_seed, "pilot value sequence seed");
  }

  SimConfig resolve() const {
    SimConfig cfg =
        config_path.empty() ? SimConfig{} : load_sim_config(config_path);
    if (n_fft) cfg.n_fft = *n_fft;
    if (cp_len) cfg.cp_len = *cp_len;
    if (pilots) cfg.pilots_per_antenna = *pilots;
    if (paths) cfg.pdp = PowerDelayProfile::uniform(*paths);
    if (snr_db) cfg.snr_db = *snr_db;
    if (master_seed) cfg.master_seed = *master_seed;
    if (pilot_seed) cfg.pilot_seed = *pilot_seed;
    cfg.validate();
    return cfg;
  }
};

void print_records(const std::vector<BerRecord>& records) {
  std::fputs("detector,snr_db,frames,bit_errors,ber,ci_halfwidth\n", stdout);
  for (const auto& r : records) {
    std::printf("%s,%.2f,%lld,%lld,%.6e,%.6e\n", r.detector.c_str(), r.snr_db,
                r.frames, r.bit_errors, r.ber, r.ci_halfwidth);
  }
}

DnnFrameDetector detector_from_weight_files(const std::vector<std::string>& files) {
  DnnFrameDetector det;
  for (const auto& f : files) {
    EnsembleDetector ens;
    ens.members.push_back(load_weights(f));
    det.groups.push_back(std::move(ens));
  }
  det.validate();
  return det;
}

DnnFrameDetector detector_from_manifests(const std::vector<std::string>& files) {
  DnnFrameDetector det;
  for (const auto& f : files) det.groups.push_back(load_ensemble_manifest(f));
  det.validate();
  return det;
}

int run(int argc, char** argv) {
  CLI::App app{"SM-OFDM link simulator with DNN, ensemble and LSE/MMSE receivers"};
  app.require_subcommand(1);

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train one six-bit group network");
  SimOpts train_sim;
  train_sim.attach(train_cmd);
  TrainConfig tcfg;
  std::string train_out;
  train_cmd->add_option("--group", tcfg.bit_group_index, "bit group index")
      ->required();
  train_cmd->add_option("--train-snr-db", tcfg.train_snr_db,
                        "training SNR in dB (default 20)");
  train_cmd->add_option("--dataset-size", tcfg.dataset_size,
                        "training frames to simulate");
  train_cmd->add_option("--epochs", tcfg.epochs, "training epochs");
  train_cmd->add_option("--batch-size", tcfg.batch_size, "mini-batch size");
  train_cmd->add_option("--lr", tcfg.learning_rate, "Adam learning rate");
  train_cmd->add_option("--train-seed", tcfg.seed,
                        "seed for init, dataset and batch order");
  train_cmd->add_option("--out", train_out, "output weight file")->required();

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "measure BER at one SNR point");
  SimOpts eval_sim;
  eval_sim.attach(eval_cmd);
  std::string eval_detector = "mmse";
  std::string eval_label;
  std::vector<std::string> eval_weights, eval_manifests;
  std::string eval_csv;
  MonteCarloBudget eval_budget;
  int eval_threads = 0;
  eval_cmd->add_option("--detector", eval_detector,
                       "lse | mmse | perfect | dnn | ensemble");
  eval_cmd->add_option("--label", eval_label, "curve label (defaults to detector)");
  eval_cmd->add_option("--weights", eval_weights,
                       "weight files, one per bit group (dnn)");
  eval_cmd->add_option("--manifest", eval_manifests,
                       "manifest files, one per bit group (ensemble)");
  eval_cmd->add_option("--frames", eval_budget.max_frames, "frame cap");
  eval_cmd->add_option("--min-errors", eval_budget.target_bit_errors,
                       "stop after this many bit errors (0 = run the cap)");
  eval_cmd->add_option("--threads", eval_threads, "worker threads (0 = auto)");
  eval_cmd->add_option("--out-csv", eval_csv, "also write the record to a CSV");

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "BER-vs-SNR curves");
  SimOpts sweep_sim;
  sweep_sim.attach(sweep_cmd);
  std::string preset, weights_dir = "weights", sweep_csv, sweep_svg;
  std::vector<double> sweep_snrs;
  std::vector<std::string> sweep_detectors;
  std::vector<std::string> sweep_weights, sweep_manifests;
  std::vector<int> sweep_groups = {0, 1, 2, 3};
  MonteCarloBudget sweep_budget;
  int sweep_threads = 0;
  bool train_missing = false;
  TrainBudget train_budget;
  sweep_cmd->add_option("--preset", preset, "fig3 | fig4 | fig5");
  sweep_cmd->add_option("--weights-dir", weights_dir,
                        "directory holding preset weight files");
  sweep_cmd->add_option("--groups", sweep_groups,
                        "bit groups the DNN curves cover");
  sweep_cmd->add_option("--snr", sweep_snrs,
                        "explicit SNR list in dB (non-preset mode)");
  sweep_cmd->add_option("--detectors", sweep_detectors,
                        "non-preset mode: lse mmse perfect dnn ensemble");
  sweep_cmd->add_option("--weights", sweep_weights,
                        "weight files for the explicit dnn detector");
  sweep_cmd->add_option("--manifest", sweep_manifests,
                        "manifest files for the explicit ensemble detector");
  sweep_cmd->add_option("--frames", sweep_budget.max_frames, "frame cap per point");
  sweep_cmd->add_option("--min-errors", sweep_budget.target_bit_errors,
                        "stop a point after this many bit errors");
  sweep_cmd->add_option("--threads", sweep_threads, "worker threads (0 = auto)");
  sweep_cmd->add_flag("--train-missing", train_missing,
                      "train preset weight files that do not exist yet");
  sweep_cmd->add_option("--train-dataset-size", train_budget.dataset_size,
                        "frames per training set for --train-missing");
  sweep_cmd->add_option("--train-epochs", train_budget.epochs,
                        "epochs for --train-missing");
  sweep_cmd->add_option("--train-seed", train_budget.seed,
                        "base training seed for --train-missing");
  sweep_cmd->add_option("--out-csv", sweep_csv, "CSV output path");
  sweep_cmd->add_option("--out-svg", sweep_svg, "SVG plot output path");

  // ---- gen-data ----
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a labeled dataset");
  SimOpts gen_sim;
  gen_sim.attach(gen_cmd);
  int gen_count = 10000, gen_group = 0;
  double gen_snr = 20.0;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen_cmd->add_option("--count", gen_count, "sample count");
  gen_cmd->add_option("--group", gen_group, "bit group index");
  gen_cmd->add_option("--train-snr-db", gen_snr, "simulation SNR in dB");
  gen_cmd->add_option("--gen-seed", gen_seed, "dataset seed");
  gen_cmd->add_option("--out", gen_out, "output dataset file")->required();

  // ---- ensemble-manifest ----
  auto* man_cmd =
      app.add_subcommand("ensemble-manifest", "write an ensemble manifest");
  int man_group = 0;
  std::vector<std::string> man_members;
  std::string man_out;
  man_cmd->add_option("--group", man_group, "bit group index")->required();
  man_cmd->add_option("--member", man_members, "member weight files")
      ->required();
  man_cmd->add_option("--out", man_out, "manifest path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (train_cmd->parsed()) {
    const SimConfig cfg = train_sim.resolve();
    if (tcfg.bit_group_index >= cfg.bit_groups()) {
      std::fprintf(stderr, "group %d out of range (frame has %d groups)\n",
                   tcfg.bit_group_index, cfg.bit_groups());
      return 1;
    }
    const Mlp net = train_detector(cfg, tcfg);
    save_weights(net, train_out);
    std::printf("wrote %s (group %d, train SNR %g dB)\n", train_out.c_str(),
                net.bit_group, net.train_snr_db);
    return 0;
  }

  if (eval_cmd->parsed()) {
    const SimConfig cfg = eval_sim.resolve();
    DetectorSpec spec;
    const std::string label = eval_label.empty() ? eval_detector : eval_label;
    if (eval_detector == "lse") {
      spec = DetectorSpec::classical(DetectorSpec::Kind::Lse, label);
    } else if (eval_detector == "mmse") {
      spec = DetectorSpec::classical(DetectorSpec::Kind::Mmse, label);
    } else if (eval_detector == "perfect") {
      spec = DetectorSpec::classical(DetectorSpec::Kind::Perfect, label);
    } else if (eval_detector == "dnn") {
      if (eval_weights.empty()) {
        std::fprintf(stderr, "--detector dnn requires --weights\n");
        return 1;
      }
      spec = DetectorSpec::neural(label, detector_from_weight_files(eval_weights));
    } else if (eval_detector == "ensemble") {
      if (eval_manifests.empty()) {
        std::fprintf(stderr, "--detector ensemble requires --manifest\n");
        return 1;
      }
      spec = DetectorSpec::neural(label, detector_from_manifests(eval_manifests));
    } else {
      std::fprintf(stderr, "unknown detector '%s'\n", eval_detector.c_str());
      return 1;
    }
    const BerRecord rec = run_ber_point(cfg, spec, eval_budget, 0, eval_threads);
    print_records({rec});
    if (!eval_csv.empty()) emit_csv({rec}, eval_csv);
    return 0;
  }

  if (sweep_cmd->parsed()) {
    const SimConfig cfg = sweep_sim.resolve();
    std::vector<BerRecord> records;
    std::vector<std::string> comments;
    if (!preset.empty()) {
      PresetOptions opt;
      opt.weights_dir = weights_dir;
      opt.groups = sweep_groups;
      opt.master_seed = cfg.master_seed;
      if (train_missing) {
        train_missing_weights(preset_weight_requirements(preset, opt),
                              weights_dir, train_budget, sweep_threads);
      }
      const Experiment exp = experiment_preset(preset, opt);
      comments.push_back("preset: " + exp.name);
      std::string gl = "groups:";
      for (int g : opt.groups) gl += " " + std::to_string(g);
      comments.push_back(gl);
      comments.push_back("master_seed: " + std::to_string(opt.master_seed));
      const auto snrs = sweep_snrs.empty() ? exp.snr_db_list : sweep_snrs;
      records = run_sweep(exp.curves, snrs, sweep_budget, sweep_threads);
    } else {
      if (sweep_detectors.empty() || sweep_snrs.empty()) {
        std::fprintf(stderr,
                     "sweep needs --preset or both --detectors and --snr\n");
        return 1;
      }
      std::vector<DetectorSpec> specs;
      for (const auto& d : sweep_detectors) {
        if (d == "lse") {
          specs.push_back(DetectorSpec::classical(DetectorSpec::Kind::Lse, d));
        } else if (d == "mmse") {
          specs.push_back(DetectorSpec::classical(DetectorSpec::Kind::Mmse, d));
        } else if (d == "perfect") {
          specs.push_back(
              DetectorSpec::classical(DetectorSpec::Kind::Perfect, d));
        } else if (d == "dnn") {
          if (sweep_weights.empty()) {
            std::fprintf(stderr, "detector dnn requires --weights\n");
            return 1;
          }
          specs.push_back(
              DetectorSpec::neural(d, detector_from_weight_files(sweep_weights)));
        } else if (d == "ensemble") {
          if (sweep_manifests.empty()) {
            std::fprintf(stderr, "detector ensemble requires --manifest\n");
            return 1;
          }
          specs.push_back(
              DetectorSpec::neural(d, detector_from_manifests(sweep_manifests)));
        } else {
          std::fprintf(stderr, "unknown detector '%s'\n", d.c_str());
          return 1;
        }
      }
      comments.push_back("master_seed: " + std::to_string(cfg.master_seed));
      records = run_sweep(cfg, sweep_snrs, specs, sweep_budget, sweep_threads);
    }
    print_records(records);
    if (!sweep_csv.empty()) emit_csv(records, sweep_csv, comments);
    if (!sweep_svg.empty()) emit_svg(records, sweep_svg);
    return 0;
  }

  if (gen_cmd->parsed()) {
    const SimConfig cfg = gen_sim.resolve();
    TrainConfig gcfg;
    gcfg.bit_group_index = gen_group;
    gcfg.train_snr_db = gen_snr;
    gcfg.seed = gen_seed;
    if (gen_group >= cfg.bit_groups()) {
      std::fprintf(stderr, "group %d out of range\n", gen_group);
      return 1;
    }
    DatasetFile file;
    file.data = generate_dataset(cfg, gcfg, gen_count);
    file.train_snr_db = gen_snr;
    file.bit_group = gen_group;
    file.seed = gen_seed;
    save_dataset(file, gen_out);
    std::printf("wrote %s (%d samples, group %d, %g dB)\n", gen_out.c_str(),
                gen_count, gen_group, gen_snr);
    return 0;
  }

  if (man_cmd->parsed()) {
    for (const auto& m : man_members) {
      const Mlp net = load_weights(m);
      if (net.bit_group != man_group) {
        throw config_error("member " + m + " was trained for group " +
                           std::to_string(net.bit_group));
      }
    }
    write_ensemble_manifest(man_out, man_group, man_members);
    // Reload through the manifest to prove the paths resolve.
    (void)load_ensemble_manifest(man_out);
    std::printf("wrote %s (%zu members, group %d)\n", man_out.c_str(),
                man_members.size(), man_group);
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const smofdm::missing_artifact_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
