#include "smofdm/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "smofdm/errors.hpp"

namespace smofdm {

ChannelRealization draw_channel(Rng& rng, const PowerDelayProfile& pdp,
                                int n_t) {
  pdp.validate();
  if (n_t < 1) throw config_error("draw_channel: need at least one antenna");
  ChannelRealization ch;
  ch.taps.resize(n_t, pdp.paths());
  for (int a = 0; a < n_t; ++a) {
    for (int l = 0; l < pdp.paths(); ++l) {
      ch.taps(a, l) = sample_complex_gaussian(
          rng, pdp.tap_powers[static_cast<std::size_t>(l)]);
    }
  }
  return ch;
}

VecC apply_channel(const MatC& tx, const ChannelRealization& ch,
                   double noise_var, Rng& rng) {
  if (tx.rows() != ch.taps.rows()) {
    throw config_error("apply_channel: stream count " +
                       std::to_string(tx.rows()) +
                       " does not match realization with " +
                       std::to_string(ch.taps.rows()) + " antennas");
  }
  if (noise_var < 0.0) throw config_error("apply_channel: negative noise variance");
  const Eigen::Index len = tx.cols();
  const Eigen::Index paths = ch.taps.cols();
  VecC y = VecC::Zero(len);
  for (Eigen::Index n = 0; n < len; ++n) {
    cxd acc(0.0, 0.0);
    const Eigen::Index lmax = std::min(paths - 1, n);
    for (Eigen::Index l = 0; l <= lmax; ++l) {
      for (Eigen::Index a = 0; a < tx.rows(); ++a) {
        acc += ch.taps(a, l) * tx(a, n - l);
      }
    }
    y[n] = acc;
  }
  if (noise_var > 0.0) {
    for (Eigen::Index n = 0; n < len; ++n) {
      y[n] += sample_complex_gaussian(rng, noise_var);
    }
  }
  return y;
}

MatC frequency_response(const ChannelRealization& ch, int n_fft) {
  const int paths = ch.paths();
  if (paths > n_fft) {
    throw config_error("frequency_response: more taps than subcarriers");
  }
  MatC h(ch.n_t(), n_fft);
  for (int a = 0; a < ch.n_t(); ++a) {
    for (int k = 0; k < n_fft; ++k) {
      cxd acc(0.0, 0.0);
      for (int l = 0; l < paths; ++l) {
        const double ang = -2.0 * std::numbers::pi * k * l / n_fft;
        acc += ch.taps(a, l) * std::polar(1.0, ang);
      }
      h(a, k) = acc;
    }
  }
  return h;
}

FrameRx transmit_frame(const SmSymbolGrid& pilot_grid,
                       const SmSymbolGrid& data_grid,
                       const ChannelRealization& ch, const SimConfig& cfg,
                       Rng& rng) {
  if (pilot_grid.rows() != data_grid.rows() ||
      pilot_grid.cols() != data_grid.cols()) {
    throw framing_error("transmit_frame: grid dimensions differ");
  }
  const Eigen::Index sym_len = cfg.n_fft + cfg.cp_len;
  const MatC tx_pilot = ofdm_modulate(pilot_grid, cfg.cp_len);
  const MatC tx_data = ofdm_modulate(data_grid, cfg.cp_len);
  MatC tx(tx_pilot.rows(), 2 * sym_len);
  tx << tx_pilot, tx_data;
  const VecC y = apply_channel(tx, ch, cfg.noise_var(), rng);
  FrameRx rx;
  rx.pilot = ofdm_demodulate(y.head(sym_len), cfg.cp_len, cfg.n_fft);
  rx.data = ofdm_demodulate(y.segment(sym_len, sym_len), cfg.cp_len, cfg.n_fft);
  return rx;
}

}  // namespace smofdm
