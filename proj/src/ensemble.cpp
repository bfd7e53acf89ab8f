#include "smofdm/ensemble.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smofdm/errors.hpp"

namespace smofdm {

int EnsembleDetector::bit_group() const {
  if (members.empty()) throw config_error("ensemble: no members");
  return members.front().bit_group;
}

void EnsembleDetector::validate() const {
  if (members.empty()) throw config_error("ensemble: needs at least one member");
  const int group = members.front().bit_group;
  const int in = members.front().input_size();
  const int out = members.front().output_size();
  for (const auto& m : members) {
    m.validate();
    if (m.bit_group != group) {
      throw config_error("ensemble: members trained for different bit groups");
    }
    if (m.input_size() != in || m.output_size() != out) {
      throw config_error("ensemble: member dimensions differ");
    }
  }
}

EnsemblePrediction ensemble_predict(const EnsembleDetector& ens,
                                    const VecDRef& features) {
  ens.validate();
  VecD soft = VecD::Zero(ens.members.front().output_size());
  for (const auto& m : ens.members) {
    soft += forward(m, features);
  }
  soft /= static_cast<double>(ens.size());
  EnsemblePrediction pred;
  pred.bits.resize(static_cast<std::size_t>(soft.size()));
  for (Eigen::Index i = 0; i < soft.size(); ++i) {
    pred.bits[static_cast<std::size_t>(i)] = soft[i] >= 0.5 ? 1 : 0;
  }
  pred.soft = std::move(soft);
  return pred;
}

MatD ensemble_soft_batch(const EnsembleDetector& ens, const MatD& features) {
  ens.validate();
  MatD soft = MatD::Zero(ens.members.front().output_size(), features.cols());
  for (const auto& m : ens.members) {
    soft += forward_batch(m, features);
  }
  return soft / static_cast<double>(ens.size());
}

std::vector<int> DnnFrameDetector::covered_groups() const {
  std::vector<int> ids;
  for (const auto& g : groups) ids.push_back(g.bit_group());
  std::sort(ids.begin(), ids.end());
  return ids;
}

int DnnFrameDetector::first_bit() const { return 6 * covered_groups().front(); }

int DnnFrameDetector::covered_bits() const {
  return 6 * static_cast<int>(groups.size());
}

void DnnFrameDetector::validate() const {
  if (groups.empty()) throw config_error("frame detector: no groups configured");
  for (const auto& g : groups) g.validate();
  const auto ids = covered_groups();
  for (std::size_t i = 1; i < ids.size(); ++i) {
    if (ids[i] == ids[i - 1]) {
      throw config_error("frame detector: duplicate bit group " +
                         std::to_string(ids[i]));
    }
    if (ids[i] != ids[i - 1] + 1) {
      throw config_error("frame detector: gap between bit groups " +
                         std::to_string(ids[i - 1]) + " and " +
                         std::to_string(ids[i]));
    }
  }
}

FrameBits detect_frame_dnn(const DnnFrameDetector& det, const VecC& rx_pilot,
                           const VecC& rx_data) {
  det.validate();
  const VecD features = build_features(rx_pilot, rx_data);
  const auto ids = det.covered_groups();
  FrameBits out(static_cast<std::size_t>(det.covered_bits()));
  for (std::size_t pos = 0; pos < ids.size(); ++pos) {
    const auto it =
        std::find_if(det.groups.begin(), det.groups.end(),
                     [&](const EnsembleDetector& g) {
                       return g.bit_group() == ids[pos];
                     });
    const EnsemblePrediction pred = ensemble_predict(*it, features);
    std::copy(pred.bits.begin(), pred.bits.end(), out.begin() + 6 * pos);
  }
  return out;
}

EnsembleDetector load_ensemble_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw missing_artifact_error("ensemble manifest not found: " + path);
  const auto dir = std::filesystem::path(path).parent_path();
  EnsembleDetector ens;
  int expected_group = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int group = 0;
    std::string file;
    if (!(ls >> group)) continue;  // blank or comment-only line
    if (!(ls >> file)) {
      throw io_error("manifest line " + std::to_string(lineno) +
                     ": expected '<group> <weight file>'");
    }
    if (expected_group < 0) {
      expected_group = group;
    } else if (group != expected_group) {
      throw config_error("manifest mixes bit groups " +
                         std::to_string(expected_group) + " and " +
                         std::to_string(group));
    }
    std::filesystem::path p(file);
    if (p.is_relative()) p = dir / p;
    Mlp net = load_weights(p.string());
    if (net.bit_group != group) {
      throw config_error("manifest expects group " + std::to_string(group) +
                         " but " + file + " was trained for group " +
                         std::to_string(net.bit_group));
    }
    ens.members.push_back(std::move(net));
  }
  ens.validate();
  return ens;
}

void write_ensemble_manifest(const std::string& path, int group,
                             const std::vector<std::string>& member_paths) {
  if (member_paths.empty()) {
    throw config_error("manifest needs at least one member");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot write manifest: " + path);
  for (const auto& p : member_paths) {
    out << group << ' ' << p << '\n';
  }
  if (!out) throw io_error("failed writing manifest: " + path);
}

}  // namespace smofdm
