#pragma once

#include "penreg/diagnostics/rhat.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>

namespace penreg {

/// Autocovariance at lags 0..n-1 with divisor n, via zero-padded FFT.
inline Eigen::VectorXd autocovariance(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::Index m = 1;
  while (m < 2 * n) m *= 2;
  std::vector<double> padded(static_cast<std::size_t>(m), 0.0);
  const double mean = x.mean();
  for (Eigen::Index i = 0; i < n; ++i) padded[static_cast<std::size_t>(i)] = x[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& f : freq) f = std::norm(f);
  std::vector<double> back;
  fft.inv(back, freq);
  Eigen::VectorXd out(n);
  for (Eigen::Index t = 0; t < n; ++t) out[t] = back[static_cast<std::size_t>(t)] / static_cast<double>(n);
  return out;
}

/// Effective sample size of the chains as given (no splitting or ranking).
/// Autocorrelations are combined across chains and truncated with Geyer's
/// initial monotone sequence. The result is capped at 10 times the draw count.
inline double ess_basic(const ChainSet& chains) {
  detail::require_chain_shape(chains, 1, 4);
  const Eigen::Index m = chains.cols();
  const Eigen::Index n = chains.rows();
  const double nd = static_cast<double>(n);
  std::vector<Eigen::VectorXd> acov;
  Eigen::VectorXd means(m), vars(m);
  for (Eigen::Index c = 0; c < m; ++c) {
    acov.push_back(autocovariance(chains.col(c)));
    means[c] = chains.col(c).mean();
    vars[c] = acov.back()[0] * nd / (nd - 1.0);
  }
  const double mean_var = vars.mean();
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m > 1) var_plus += math::variance(means);
  require(var_plus > 0.0, ErrorKind::ZeroVariance, "chains have zero variance");

  auto rho = [&](Eigen::Index t) {
    double s = 0.0;
    for (const auto& a : acov) s += a[t];
    return 1.0 - (mean_var - s / static_cast<double>(m)) / var_plus;
  };
  Eigen::VectorXd rho_hat = Eigen::VectorXd::Zero(n);
  double rho_even = 1.0;
  double rho_odd = rho(1);
  rho_hat[0] = rho_even;
  rho_hat[1] = rho_odd;
  Eigen::Index t = 1;
  while (t < n - 4 && rho_even + rho_odd > 0.0) {
    rho_even = rho(t + 1);
    rho_odd = rho(t + 2);
    if (rho_even + rho_odd >= 0.0) {
      rho_hat[t + 1] = rho_even;
      rho_hat[t + 2] = rho_odd;
    }
    t += 2;
  }
  const Eigen::Index max_t = t;
  if (rho_even > 0.0) rho_hat[max_t + 1] = rho_even;
  for (Eigen::Index s = 1; s <= max_t - 3; s += 2) {
    if (rho_hat[s + 1] + rho_hat[s + 2] > rho_hat[s - 1] + rho_hat[s]) {
      rho_hat[s + 1] = 0.5 * (rho_hat[s - 1] + rho_hat[s]);
      rho_hat[s + 2] = rho_hat[s + 1];
    }
  }
  const double total = static_cast<double>(m) * nd;
  const double tau = -1.0 + 2.0 * rho_hat.head(max_t).sum() + rho_hat[max_t + 1];
  if (!(tau > 0.0)) return 10.0 * total;
  return std::min(total / tau, 10.0 * total);
}

/// Bulk effective sample size: split chains, rank-normalize, then ess_basic.
inline double ess_bulk(const ChainSet& chains) {
  detail::require_chain_shape(chains, 1, 8);
  return ess_basic(rank_normalize(split_chains(chains)));
}

}  // namespace penreg
