#pragma once

#include "smofdm/modem.hpp"
#include "smofdm/numerics.hpp"
#include "smofdm/sim_config.hpp"
#include "smofdm/types.hpp"

namespace smofdm {

// One block-fading realization: taps(a, l) is the tap at integer delay l of
// transmit antenna a's channel. Immutable once drawn; constant over the
// two-symbol frame.
struct ChannelRealization {
  MatC taps;  // n_t x L

  int n_t() const { return static_cast<int>(taps.rows()); }
  int paths() const { return static_cast<int>(taps.cols()); }
};

// taps(a, l) ~ CN(0, sigma_l^2), independent across antennas and draws.
ChannelRealization draw_channel(Rng& rng, const PowerDelayProfile& pdp, int n_t);

// y[n] = sum_a sum_l taps(a,l) tx(a, n-l) + w[n] over the continuous
// streams, with zero history before the stream start. w ~ CN(0, noise_var).
// One receive antenna; output length equals the input length.
VecC apply_channel(const MatC& tx, const ChannelRealization& ch,
                   double noise_var, Rng& rng);

// H(a, k) = sum_l taps(a, l) e^{-j 2 pi k l / n_fft}. With the unitary
// signal transforms this is exactly the per-subcarrier gain under CP.
MatC frequency_response(const ChannelRealization& ch, int n_fft);

// Demodulated frequency-domain frame.
struct FrameRx {
  VecC pilot;
  VecC data;
};

// Sends the two-symbol frame (pilot symbol first) through one realization
// as a single continuous stream and demodulates both halves. With
// cp_len = 0 the pilot symbol's tail leaks into the data symbol.
FrameRx transmit_frame(const SmSymbolGrid& pilot_grid,
                       const SmSymbolGrid& data_grid,
                       const ChannelRealization& ch, const SimConfig& cfg,
                       Rng& rng);

}  // namespace smofdm
