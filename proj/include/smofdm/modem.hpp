#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "smofdm/numerics.hpp"
#include "smofdm/sim_config.hpp"
#include "smofdm/types.hpp"

namespace smofdm {

// Bits as 0/1 bytes, subcarriers serialized in ascending index order with
// antenna bits first, symbol bits second.
using FrameBits = std::vector<std::uint8_t>;

// Gray-mapped 4-QAM with unit average energy, indexed by the two symbol
// bits MSB-first: 00 -> (1+j)/s2, 01 -> (1-j)/s2, 10 -> (-1+j)/s2,
// 11 -> (-1-j)/s2.
const std::array<cxd, 4>& qam4_constellation();
cxd qam4_point(int symbol_index);

// Active-antenna + constellation-point hypothesis for one subcarrier.
struct SmDecision {
  int antenna = 0;
  int symbol = 0;
};

// Per-antenna pilot subcarrier index sets with their known values.
// Index sets are pairwise disjoint across antennas.
struct PilotPlan {
  std::vector<std::vector<int>> indices;  // per antenna, ascending
  std::vector<std::vector<cxd>> values;   // same shape as indices
  int pilots_per_antenna = 0;

  void validate(int n_fft) const;
};

// Evenly spaced comb per antenna with step n_fft / pilots_per_antenna,
// antenna a offset by a * step / n_t; values drawn from the 4-QAM table by
// cfg.pilot_seed so every run sees the identical pilot symbol.
PilotPlan make_pilot_plan(const SimConfig& cfg);

FrameBits random_frame_bits(const SimConfig& cfg, Rng& rng);

// Per subcarrier: the first log2(n_t) bits pick the active row, the next
// log2(M) bits pick the Gray-mapped constellation point. All other rows
// stay zero.
SmSymbolGrid map_bits_to_grid(const FrameBits& bits, const SimConfig& cfg);

// Exact inverse of the bit-to-(antenna, symbol) mapping.
FrameBits demap_decisions_to_bits(const std::vector<SmDecision>& decisions,
                                  const SimConfig& cfg);

SmSymbolGrid build_pilot_grid(const PilotPlan& plan, const SimConfig& cfg);

// Per row: unitary IFFT then cyclic prefix. Returns n_t x (n_fft + cp_len),
// one time-domain stream per antenna.
MatC ofdm_modulate(const SmSymbolGrid& grid, int cp_len);

// Strip the prefix and return the unitary FFT of the remaining n_fft samples.
VecC ofdm_demodulate(const VecCRef& rx, int cp_len, int n_fft);

// True when every column has at most one nonzero entry and data columns
// (all of them if require_full) carry exactly one.
bool is_valid_sm_grid(const SmSymbolGrid& grid, bool require_full = true);

}  // namespace smofdm
