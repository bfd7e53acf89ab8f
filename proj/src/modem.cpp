#include "smofdm/modem.hpp"

#include <cmath>
#include <string>

#include "smofdm/errors.hpp"

namespace smofdm {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

const std::array<cxd, 4>& qam4_constellation() {
  static const std::array<cxd, 4> table = {
      cxd(kInvSqrt2, kInvSqrt2),    // 00
      cxd(kInvSqrt2, -kInvSqrt2),   // 01
      cxd(-kInvSqrt2, kInvSqrt2),   // 10
      cxd(-kInvSqrt2, -kInvSqrt2),  // 11
  };
  return table;
}

cxd qam4_point(int symbol_index) {
  if (symbol_index < 0 || symbol_index > 3) {
    throw std::out_of_range("qam4_point: symbol index " +
                            std::to_string(symbol_index));
  }
  return qam4_constellation()[static_cast<std::size_t>(symbol_index)];
}

void PilotPlan::validate(int n_fft) const {
  if (indices.size() != values.size()) {
    throw config_error("pilot plan: index/value shape mismatch");
  }
  std::vector<char> used(static_cast<std::size_t>(n_fft), 0);
  for (std::size_t a = 0; a < indices.size(); ++a) {
    if (static_cast<int>(indices[a].size()) != pilots_per_antenna ||
        indices[a].size() != values[a].size()) {
      throw config_error("pilot plan: antenna " + std::to_string(a) +
                         " has wrong pilot count");
    }
    for (int p : indices[a]) {
      if (p < 0 || p >= n_fft) {
        throw config_error("pilot plan: index out of range");
      }
      if (used[static_cast<std::size_t>(p)]++) {
        throw config_error("pilot plan: subcarrier " + std::to_string(p) +
                           " assigned to two antennas");
      }
    }
  }
}

PilotPlan make_pilot_plan(const SimConfig& cfg) {
  cfg.validate();
  const int step = cfg.n_fft / cfg.pilots_per_antenna;
  PilotPlan plan;
  plan.pilots_per_antenna = cfg.pilots_per_antenna;
  plan.indices.resize(static_cast<std::size_t>(cfg.n_t));
  plan.values.resize(static_cast<std::size_t>(cfg.n_t));
  Rng rng(cfg.pilot_seed);
  for (int a = 0; a < cfg.n_t; ++a) {
    const int offset = a * step / cfg.n_t;
    for (int i = 0; i < cfg.pilots_per_antenna; ++i) {
      plan.indices[a].push_back(offset + i * step);
      plan.values[a].push_back(
          qam4_point(static_cast<int>(rng.uniform_below(4))));
    }
  }
  plan.validate(cfg.n_fft);
  return plan;
}

FrameBits random_frame_bits(const SimConfig& cfg, Rng& rng) {
  FrameBits bits(static_cast<std::size_t>(cfg.frame_bits()));
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.coin());
  return bits;
}

SmSymbolGrid map_bits_to_grid(const FrameBits& bits, const SimConfig& cfg) {
  const int bps = cfg.bits_per_subcarrier();
  if (static_cast<int>(bits.size()) != cfg.frame_bits()) {
    throw framing_error("map_bits_to_grid: expected " +
                        std::to_string(cfg.frame_bits()) + " bits, got " +
                        std::to_string(bits.size()));
  }
  SmSymbolGrid grid = SmSymbolGrid::Zero(cfg.n_t, cfg.n_fft);
  for (int k = 0; k < cfg.n_fft; ++k) {
    const int base = k * bps;
    int antenna = 0;
    for (int b = 0; b < cfg.antenna_bits(); ++b) {
      antenna = (antenna << 1) | bits[static_cast<std::size_t>(base + b)];
    }
    int symbol = 0;
    for (int b = 0; b < cfg.symbol_bits(); ++b) {
      symbol = (symbol << 1) |
               bits[static_cast<std::size_t>(base + cfg.antenna_bits() + b)];
    }
    grid(antenna, k) = qam4_point(symbol);
  }
  return grid;
}

FrameBits demap_decisions_to_bits(const std::vector<SmDecision>& decisions,
                                  const SimConfig& cfg) {
  if (static_cast<int>(decisions.size()) != cfg.n_fft) {
    throw framing_error("demap: expected one decision per subcarrier");
  }
  const int bps = cfg.bits_per_subcarrier();
  FrameBits bits(static_cast<std::size_t>(cfg.frame_bits()));
  for (int k = 0; k < cfg.n_fft; ++k) {
    const auto& d = decisions[static_cast<std::size_t>(k)];
    if (d.antenna < 0 || d.antenna >= cfg.n_t || d.symbol < 0 ||
        d.symbol >= cfg.mod_order) {
      throw std::out_of_range("demap: decision out of range at subcarrier " +
                              std::to_string(k));
    }
    const int base = k * bps;
    for (int b = 0; b < cfg.antenna_bits(); ++b) {
      bits[static_cast<std::size_t>(base + b)] = static_cast<std::uint8_t>(
          (d.antenna >> (cfg.antenna_bits() - 1 - b)) & 1);
    }
    for (int b = 0; b < cfg.symbol_bits(); ++b) {
      bits[static_cast<std::size_t>(base + cfg.antenna_bits() + b)] =
          static_cast<std::uint8_t>((d.symbol >> (cfg.symbol_bits() - 1 - b)) & 1);
    }
  }
  return bits;
}

SmSymbolGrid build_pilot_grid(const PilotPlan& plan, const SimConfig& cfg) {
  plan.validate(cfg.n_fft);
  if (static_cast<int>(plan.indices.size()) != cfg.n_t) {
    throw config_error("pilot plan antenna count does not match config");
  }
  SmSymbolGrid grid = SmSymbolGrid::Zero(cfg.n_t, cfg.n_fft);
  for (int a = 0; a < cfg.n_t; ++a) {
    const auto& idx = plan.indices[static_cast<std::size_t>(a)];
    const auto& val = plan.values[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      grid(a, idx[i]) = val[i];
    }
  }
  return grid;
}

MatC ofdm_modulate(const SmSymbolGrid& grid, int cp_len) {
  const Eigen::Index n = grid.cols();
  MatC streams(grid.rows(), n + cp_len);
  for (Eigen::Index a = 0; a < grid.rows(); ++a) {
    streams.row(a) = add_cp(ifft(grid.row(a).transpose()), cp_len).transpose();
  }
  return streams;
}

VecC ofdm_demodulate(const VecCRef& rx, int cp_len, int n_fft) {
  if (rx.size() != n_fft + cp_len) {
    throw framing_error("ofdm_demodulate: expected " +
                        std::to_string(n_fft + cp_len) + " samples, got " +
                        std::to_string(rx.size()));
  }
  if (cp_len == 0) return fft(rx);
  return fft(remove_cp(rx, cp_len));
}

bool is_valid_sm_grid(const SmSymbolGrid& grid, bool require_full) {
  for (Eigen::Index k = 0; k < grid.cols(); ++k) {
    int nonzero = 0;
    for (Eigen::Index a = 0; a < grid.rows(); ++a) {
      if (grid(a, k) != cxd(0.0, 0.0)) ++nonzero;
    }
    if (nonzero > 1 || (require_full && nonzero != 1)) return false;
  }
  return true;
}

}  // namespace smofdm
