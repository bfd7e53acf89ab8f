#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace smofdm {

// Per-tap average powers of the multipath channel. Taps sit at integer
// delays 0..L-1 and the powers sum to one.
struct PowerDelayProfile {
  std::vector<double> tap_powers;

  int paths() const { return static_cast<int>(tap_powers.size()); }
  void validate() const;

  // sigma_l^2 = 1/L for all L taps.
  static PowerDelayProfile uniform(int paths);
};

// All physical-layer and experiment parameters. SNR is defined as
// 1/noise_var with unit average active-symbol energy, applied per time
// sample; the unitary FFT keeps the frequency-domain variance identical.
struct SimConfig {
  int n_t = 2;
  int n_rx = 1;
  int n_fft = 64;
  int cp_len = 16;
  int mod_order = 4;  // 4-QAM is the only supported constellation
  int pilots_per_antenna = 32;
  PowerDelayProfile pdp = PowerDelayProfile::uniform(3);
  double snr_db = 20.0;
  std::uint64_t master_seed = 1;
  std::uint64_t pilot_seed = 0x70696c74;  // fixed pilot-value sequence

  int antenna_bits() const;
  int symbol_bits() const;
  int bits_per_subcarrier() const { return antenna_bits() + symbol_bits(); }
  int frame_bits() const { return n_fft * bits_per_subcarrier(); }
  int bit_groups() const { return frame_bits() / 6; }
  double noise_var() const;

  void validate() const;
};

// Plain-text key=value file, one pair per line, '#' starts a comment.
// Unknown keys are rejected; absent keys keep their defaults.
SimConfig parse_sim_config(const std::string& text);
SimConfig load_sim_config(const std::string& path);

}  // namespace smofdm
