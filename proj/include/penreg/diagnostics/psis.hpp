#pragma once

#include "penreg/error.hpp"
#include "penreg/math.hpp"
#include "penreg/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace penreg {

/// log p - log q, elementwise.
inline Eigen::VectorXd importance_ratios(const Eigen::VectorXd& log_p, const Eigen::VectorXd& log_q) {
  require(log_p.size() == log_q.size(), ErrorKind::LengthMismatch, "log_p and log_q differ in length");
  require(log_q.allFinite(), ErrorKind::NonFinite, "log_q must be finite");
  return log_p - log_q;
}

struct GpdFit {
  double k_hat = 0.0;
  double sigma_hat = 0.0;
  Eigen::Index n_tail = 0;
};

/// Generalized Pareto fit to exceedances (values above a threshold) by the
/// profile-likelihood posterior-mean estimator of Zhang and Stephens.
/// With `regularize`, k is shrunk toward 0.5 by (k n + 5) / (n + 10).
inline GpdFit fit_gpd(std::vector<double> x, bool regularize = true) {
  const auto n = x.size();
  require(n >= 5, ErrorKind::TooFewTailPoints, "GPD fit needs at least 5 tail points");
  std::sort(x.begin(), x.end());
  require(x.back() > x.front() && x.back() > 0.0, ErrorKind::TooFewTailPoints, "tail sample has zero spread");
  const double nd = static_cast<double>(n);
  const double prior = 3.0;
  const int m = 30 + static_cast<int>(std::floor(std::sqrt(nd)));
  const double x_star = x[static_cast<std::size_t>(std::floor(nd / 4.0 + 0.5)) - 1];  // first quartile
  Eigen::VectorXd theta(m), log_lik(m);
  for (int j = 0; j < m; ++j) {
    theta[j] = 1.0 / x.back() + (1.0 - std::sqrt(m / (j + 0.5))) / prior / x_star;
    double k = 0.0;
    for (double xi : x) k += std::log1p(-theta[j] * xi);
    k /= nd;
    log_lik[j] = nd * (std::log(-theta[j] / k) - k - 1.0);
  }
  const Eigen::VectorXd w = (log_lik.array() - math::log_sum_exp(log_lik)).exp();
  const double theta_hat = (theta.array() * w.array()).sum();
  double k = 0.0;
  for (double xi : x) k += std::log1p(-theta_hat * xi);
  k /= nd;
  const double sigma = -k / theta_hat;
  if (regularize) k = (k * nd + 5.0) / (nd + 10.0);
  if (std::isnan(k)) k = math::kInf;
  return GpdFit{k, sigma, static_cast<Eigen::Index>(n)};
}

/// Quantile function of GPD(0, sigma, k).
inline double gpd_quantile(double p, double k, double sigma) {
  if (k == 0.0) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

/// Tail size min(floor(0.2 S), ceil(3 sqrt(S))).
inline Eigen::Index psis_tail_length(Eigen::Index s) {
  const auto sd = static_cast<double>(s);
  return std::min(static_cast<Eigen::Index>(std::floor(0.2 * sd)), static_cast<Eigen::Index>(std::ceil(3.0 * std::sqrt(sd))));
}

struct PsisResult {
  Eigen::VectorXd log_weights;  // smoothed, normalized to sum to one
  GpdFit fit;
};

namespace detail {

inline std::vector<Eigen::Index> ascending_order(const Eigen::VectorXd& v) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
  return order;
}

/// Exceedances exp(lw) - exp(cutoff) of the largest `tail` log weights
/// (already shifted so the maximum is zero).
inline std::vector<double> tail_exceedances(const Eigen::VectorXd& lw, const std::vector<Eigen::Index>& order,
                                            Eigen::Index tail, double cutoff) {
  std::vector<double> x;
  const auto s = static_cast<Eigen::Index>(order.size());
  for (Eigen::Index i = s - tail; i < s; ++i) x.push_back(std::exp(lw[order[static_cast<std::size_t>(i)]]) - std::exp(cutoff));
  return x;
}

}  // namespace detail

/// Pareto k-hat of the largest importance ratios. All-equal ratios give
/// k_hat = -infinity (no tail at all).
inline GpdFit pareto_khat(const Eigen::VectorXd& log_ratios) {
  const Eigen::Index s = log_ratios.size();
  require(s >= 25, ErrorKind::TooFewDraws, "Pareto k-hat needs at least 25 draws");
  require(!log_ratios.array().isNaN().any() && (log_ratios.array() < math::kInf).all(), ErrorKind::NonFinite,
          "log ratios must not be NaN or +inf");
  const Eigen::Index tail = psis_tail_length(s);
  const Eigen::VectorXd lw = log_ratios.array() - log_ratios.maxCoeff();
  const auto order = detail::ascending_order(lw);
  const double cutoff = lw[order[static_cast<std::size_t>(s - tail - 1)]];
  const auto x = detail::tail_exceedances(lw, order, tail, cutoff);
  if (*std::max_element(x.begin(), x.end()) <= 0.0) return GpdFit{-math::kInf, 0.0, tail};
  return fit_gpd(x);
}

/// Pareto-smoothed importance weights: the largest M raw weights are replaced
/// by expected order statistics of the fitted GPD. No further truncation.
inline PsisResult psis_smooth(const Eigen::VectorXd& log_ratios) {
  const Eigen::Index s = log_ratios.size();
  PsisResult out;
  out.fit = pareto_khat(log_ratios);
  Eigen::VectorXd lw = log_ratios.array() - log_ratios.maxCoeff();
  if (std::isfinite(out.fit.k_hat)) {
    const Eigen::Index tail = out.fit.n_tail;
    const auto order = detail::ascending_order(lw);
    const double cutoff = lw[order[static_cast<std::size_t>(s - tail - 1)]];
    for (Eigen::Index i = 0; i < tail; ++i) {
      const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(tail);
      const double q = gpd_quantile(p, out.fit.k_hat, out.fit.sigma_hat) + std::exp(cutoff);
      lw[order[static_cast<std::size_t>(s - tail + i)]] = std::log(q);
    }
  }
  out.log_weights = lw.array() - math::log_sum_exp(lw);
  return out;
}

/// Resample `n_out` rows of `draws` with replacement, proportionally to the
/// Pareto-smoothed weights.
inline Eigen::MatrixXd psis_smooth_and_resample(const Eigen::MatrixXd& draws, const Eigen::VectorXd& log_ratios,
                                                Eigen::Index n_out, std::uint64_t seed, GpdFit* fit = nullptr) {
  require(draws.rows() == log_ratios.size(), ErrorKind::LengthMismatch, "draws and log ratios differ in length");
  const PsisResult smoothed = psis_smooth(log_ratios);
  if (fit) *fit = smoothed.fit;
  Eigen::MatrixXd out(n_out, draws.cols());
  if (n_out == 0) return out;
  const Eigen::VectorXd w = smoothed.log_weights.array().exp();
  std::discrete_distribution<Eigen::Index> pick(w.data(), w.data() + w.size());
  Rng rng = make_rng(seed);
  for (Eigen::Index i = 0; i < n_out; ++i) out.row(i) = draws.row(pick(rng));
  return out;
}

}  // namespace penreg
