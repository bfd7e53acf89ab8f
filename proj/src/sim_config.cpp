#include "smofdm/sim_config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "smofdm/errors.hpp"
#include "smofdm/numerics.hpp"

namespace smofdm {

void PowerDelayProfile::validate() const {
  if (tap_powers.empty()) {
    throw config_error("power delay profile needs at least one tap");
  }
  double sum = 0.0;
  for (double p : tap_powers) {
    if (!(p >= 0.0)) throw config_error("tap power must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw config_error("tap powers must sum to 1, got " + std::to_string(sum));
  }
}

PowerDelayProfile PowerDelayProfile::uniform(int paths) {
  if (paths < 1) throw config_error("power delay profile needs at least one tap");
  PowerDelayProfile pdp;
  pdp.tap_powers.assign(static_cast<std::size_t>(paths),
                        1.0 / static_cast<double>(paths));
  return pdp;
}

namespace {

int exact_log2(int v, const char* what) {
  if (v < 1 || (v & (v - 1)) != 0) {
    throw config_error(std::string(what) + " must be a power of two, got " +
                       std::to_string(v));
  }
  int bits = 0;
  while ((1 << bits) < v) ++bits;
  return bits;
}

}  // namespace

int SimConfig::antenna_bits() const { return exact_log2(n_t, "n_t"); }

int SimConfig::symbol_bits() const { return exact_log2(mod_order, "mod_order"); }

double SimConfig::noise_var() const { return std::pow(10.0, -snr_db / 10.0); }

void SimConfig::validate() const {
  if (!is_pow2(n_fft)) throw config_error("n_fft must be a power of two");
  (void)antenna_bits();
  (void)symbol_bits();
  if (mod_order != 4) {
    throw config_error("only 4-QAM is supported, got order " +
                       std::to_string(mod_order));
  }
  if (n_rx != 1) throw config_error("exactly one receive antenna is supported");
  if (cp_len < 0 || cp_len > n_fft) {
    throw config_error("cp_len must lie in [0, n_fft]");
  }
  if (pilots_per_antenna < 1 ||
      pilots_per_antenna * n_t > n_fft) {
    throw config_error("pilots_per_antenna * n_t must not exceed n_fft");
  }
  if (n_fft % pilots_per_antenna != 0) {
    throw config_error("pilot comb requires pilots_per_antenna to divide n_fft");
  }
  if ((n_fft / pilots_per_antenna) % n_t != 0) {
    throw config_error("pilot comb offset requires n_t to divide the comb step");
  }
  if (frame_bits() % 6 != 0) {
    throw config_error("frame bits must split into six-bit groups");
  }
  pdp.validate();
  if (pdp.paths() > n_fft) throw config_error("more channel taps than subcarriers");
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

SimConfig parse_sim_config(const std::string& text) {
  SimConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error("config line " + std::to_string(lineno) +
                         ": expected key=value");
    }
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "n_t") cfg.n_t = std::stoi(value);
      else if (key == "n_rx") cfg.n_rx = std::stoi(value);
      else if (key == "n_fft") cfg.n_fft = std::stoi(value);
      else if (key == "cp_len") cfg.cp_len = std::stoi(value);
      else if (key == "modulation") {
        std::string v = lower(value);
        v.erase(std::remove(v.begin(), v.end(), '-'), v.end());
        if (v != "4qam" && v != "qam4") {
          throw config_error("unsupported modulation '" + value + "'");
        }
        cfg.mod_order = 4;
      } else if (key == "pilots_per_antenna") {
        cfg.pilots_per_antenna = std::stoi(value);
      } else if (key == "channel_paths") {
        cfg.pdp = PowerDelayProfile::uniform(std::stoi(value));
      } else if (key == "snr_db") {
        cfg.snr_db = std::stod(value);
      } else if (key == "master_seed") {
        cfg.master_seed = std::stoull(value);
      } else if (key == "pilot_seed") {
        cfg.pilot_seed = std::stoull(value);
      } else {
        throw config_error("unknown config key '" + key + "'");
      }
    } catch (const config_error&) {
      throw;
    } catch (const std::exception&) {
      throw config_error("config line " + std::to_string(lineno) +
                         ": bad value for '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_sim_config(buf.str());
}

}  // namespace smofdm
