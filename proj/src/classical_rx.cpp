#include "smofdm/classical_rx.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

#include "smofdm/errors.hpp"

namespace smofdm {

ChannelEstimate lse_estimate(const VecC& rx_pilot, const PilotPlan& plan,
                             const SmSymbolGrid& pilot_grid,
                             const SimConfig& cfg) {
  if (rx_pilot.size() != cfg.n_fft) {
    throw framing_error("lse_estimate: pilot symbol length mismatch");
  }
  plan.validate(cfg.n_fft);
  ChannelEstimate h = ChannelEstimate::Zero(cfg.n_t, cfg.n_fft);
  for (int a = 0; a < cfg.n_t; ++a) {
    const auto& idx = plan.indices[static_cast<std::size_t>(a)];
    std::vector<cxd> at_pilots(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const cxd x = pilot_grid(a, idx[i]);
      if (x == cxd(0.0, 0.0)) {
        throw config_error("lse_estimate: zero pilot value at subcarrier " +
                           std::to_string(idx[i]));
      }
      at_pilots[i] = rx_pilot[idx[i]] / x;
    }
    // Piecewise-linear fill between pilot tones, constant beyond the edges.
    std::size_t seg = 0;
    for (int k = 0; k < cfg.n_fft; ++k) {
      if (k <= idx.front()) {
        h(a, k) = at_pilots.front();
        continue;
      }
      if (k >= idx.back()) {
        h(a, k) = at_pilots.back();
        continue;
      }
      while (idx[seg + 1] < k) ++seg;
      if (k == idx[seg]) {
        h(a, k) = at_pilots[seg];
      } else {
        const double t = static_cast<double>(k - idx[seg]) /
                         static_cast<double>(idx[seg + 1] - idx[seg]);
        h(a, k) = (1.0 - t) * at_pilots[seg] + t * at_pilots[seg + 1];
      }
    }
  }
  return h;
}

namespace {

// R[k,k'] depends only on the tone distance d = k - k'.
cxd pdp_covariance(const PowerDelayProfile& pdp, int d, int n_fft) {
  cxd acc(0.0, 0.0);
  for (int l = 0; l < pdp.paths(); ++l) {
    acc += pdp.tap_powers[static_cast<std::size_t>(l)] *
           std::polar(1.0, -2.0 * std::numbers::pi * d * l / n_fft);
  }
  return acc;
}

}  // namespace

MmseEstimator::MmseEstimator(const PilotPlan& plan,
                             const PowerDelayProfile& pdp, double noise_var,
                             const SimConfig& cfg)
    : pilot_indices_(plan.indices), n_fft_(cfg.n_fft) {
  plan.validate(cfg.n_fft);
  pdp.validate();
  if (noise_var < 0.0) throw config_error("mmse: negative noise variance");
  for (const auto& idx : pilot_indices_) {
    const int np = static_cast<int>(idx.size());
    MatC r_pp(np, np);
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < np; ++j) {
        r_pp(i, j) = pdp_covariance(pdp, idx[i] - idx[j], n_fft_);
      }
    }
    r_pp.diagonal().array() += noise_var;
    // Pivots below this relative threshold are treated as zero, which turns
    // the solve into a truncated pseudo-inverse for vanishing noise_var.
    // Without it, 1e-15 rounding noise in H_ls would be amplified by
    // 1/noise_var through the near-null modes of a rank-L covariance.
    Eigen::CompleteOrthogonalDecomposition<MatC> cod;
    cod.setThreshold(1e-9);
    cod.compute(r_pp);
    if (noise_var == 0.0 && cod.rank() < np) {
      throw numeric_error(
          "mmse: singular pilot covariance (noise_var = 0 with rank-deficient "
          "R_pp)");
    }
    MatC r_fp(n_fft_, np);
    for (int k = 0; k < n_fft_; ++k) {
      for (int j = 0; j < np; ++j) {
        r_fp(k, j) = pdp_covariance(pdp, k - idx[j], n_fft_);
      }
    }
    weights_.push_back(r_fp * cod.pseudoInverse());
  }
}

ChannelEstimate MmseEstimator::estimate(const VecC& rx_pilot,
                                        const SmSymbolGrid& pilot_grid) const {
  if (rx_pilot.size() != n_fft_) {
    throw framing_error("mmse_estimate: pilot symbol length mismatch");
  }
  const int n_t = static_cast<int>(pilot_indices_.size());
  ChannelEstimate h(n_t, n_fft_);
  for (int a = 0; a < n_t; ++a) {
    const auto& idx = pilot_indices_[static_cast<std::size_t>(a)];
    VecC h_ls(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const cxd x = pilot_grid(a, idx[i]);
      if (x == cxd(0.0, 0.0)) {
        throw config_error("mmse_estimate: zero pilot value");
      }
      h_ls[static_cast<Eigen::Index>(i)] = rx_pilot[idx[i]] / x;
    }
    h.row(a) = (weights_[static_cast<std::size_t>(a)] * h_ls).transpose();
  }
  return h;
}

ChannelEstimate mmse_estimate(const VecC& rx_pilot, const PilotPlan& plan,
                              const SmSymbolGrid& pilot_grid, double noise_var,
                              const PowerDelayProfile& pdp,
                              const SimConfig& cfg) {
  return MmseEstimator(plan, pdp, noise_var, cfg).estimate(rx_pilot, pilot_grid);
}

SmDecision ml_detect_subcarrier(cxd y_k, const VecCRef& h_col,
                                std::span<const cxd> constellation) {
  SmDecision best;
  double best_metric = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < h_col.size(); ++a) {
    for (std::size_t s = 0; s < constellation.size(); ++s) {
      const double metric = std::norm(y_k - h_col[a] * constellation[s]);
      if (metric < best_metric) {
        best_metric = metric;
        best = {static_cast<int>(a), static_cast<int>(s)};
      }
    }
  }
  return best;
}

ClassicalFrameDetector::ClassicalFrameDetector(EstimatorKind kind,
                                               const SimConfig& cfg)
    : kind_(kind), cfg_(cfg), plan_(make_pilot_plan(cfg)) {
  pilot_grid_ = build_pilot_grid(plan_, cfg_);
  if (kind_ == EstimatorKind::Mmse) {
    mmse_ = std::make_unique<MmseEstimator>(plan_, cfg_.pdp, cfg_.noise_var(),
                                            cfg_);
  }
}

ChannelEstimate ClassicalFrameDetector::estimate(
    const VecC& rx_pilot, const ChannelRealization* ch) const {
  switch (kind_) {
    case EstimatorKind::Lse:
      return lse_estimate(rx_pilot, plan_, pilot_grid_, cfg_);
    case EstimatorKind::Mmse:
      return mmse_->estimate(rx_pilot, pilot_grid_);
    case EstimatorKind::Perfect:
      if (ch == nullptr) {
        throw config_error("perfect-CSI detection requires the realization");
      }
      return frequency_response(*ch, cfg_.n_fft);
  }
  throw config_error("unknown estimator kind");
}

FrameBits ClassicalFrameDetector::detect(const VecC& rx_pilot,
                                         const VecC& rx_data,
                                         const ChannelRealization* ch) const {
  if (rx_data.size() != cfg_.n_fft) {
    throw framing_error("detect: data symbol length mismatch");
  }
  const ChannelEstimate h = estimate(rx_pilot, ch);
  const auto& constellation = qam4_constellation();
  std::vector<SmDecision> decisions(static_cast<std::size_t>(cfg_.n_fft));
  for (int k = 0; k < cfg_.n_fft; ++k) {
    decisions[static_cast<std::size_t>(k)] =
        ml_detect_subcarrier(rx_data[k], h.col(k), constellation);
  }
  return demap_decisions_to_bits(decisions, cfg_);
}

FrameBits detect_frame_classical(const VecC& rx_pilot, const VecC& rx_data,
                                 EstimatorKind kind, const SimConfig& cfg,
                                 const ChannelRealization* ch) {
  return ClassicalFrameDetector(kind, cfg).detect(rx_pilot, rx_data, ch);
}

}  // namespace smofdm
