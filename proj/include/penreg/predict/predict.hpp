#pragma once

#include "penreg/approx/gaussian.hpp"
#include "penreg/error.hpp"
#include "penreg/math.hpp"
#include "penreg/model/dataset.hpp"
#include "penreg/random.hpp"
#include "penreg/samplers/draws.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace penreg {

/// Constrained posterior draws (draw x parameter) with parameter names, from
/// MCMC or from an approximation.
struct PosteriorSample {
  std::vector<std::string> names;
  Eigen::MatrixXd draws;

  static PosteriorSample from(const DrawMatrix& dm) { return {dm.names, dm.pooled()}; }
  static PosteriorSample from(std::vector<std::string> names, const ApproxDraws& d) {
    return {std::move(names), d.constrained};
  }

  Eigen::Index n_draws() const { return draws.rows(); }

  std::optional<Eigen::Index> find(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return static_cast<Eigen::Index>(k);
    return std::nullopt;
  }

  Eigen::VectorXd column(const std::string& name) const {
    const auto k = find(name);
    if (!k) fail(ErrorKind::InvalidArgument, "posterior sample has no parameter " + name);
    return draws.col(*k);
  }

  /// draw x p matrix of beta[1..p].
  Eigen::MatrixXd coefficients(Eigen::Index p) const {
    Eigen::MatrixXd out(n_draws(), p);
    for (Eigen::Index j = 0; j < p; ++j) out.col(j) = column("beta[" + std::to_string(j + 1) + "]");
    return out;
  }

  Eigen::Index n_coefficients() const {
    Eigen::Index p = 0;
    while (find("beta[" + std::to_string(p + 1) + "]")) ++p;
    return p;
  }

  /// draw x new-row matrix of linear predictors.
  Eigen::MatrixXd linear_predictor(const Eigen::MatrixXd& x_new) const {
    const Eigen::Index p = n_coefficients();
    require(p >= 1, ErrorKind::InvalidArgument, "posterior sample has no coefficients");
    require(x_new.cols() == p, ErrorKind::DimensionMismatch,
            "x_new has " + std::to_string(x_new.cols()) + " columns, model has " + std::to_string(p));
    Eigen::MatrixXd eta = coefficients(p) * x_new.transpose();
    eta.colwise() += column("beta0");
    return eta;
  }
};

/// Predicted outcomes, new observation x posterior draw.
struct PpdDraws {
  Eigen::MatrixXd values;
};

struct PredictionSummary {
  Eigen::VectorXd point;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Posterior predictive for a Gaussian outcome, including observation noise.
inline PpdDraws ppd_linear(const PosteriorSample& post, const Eigen::MatrixXd& x_new, std::uint64_t seed) {
  const Eigen::MatrixXd eta = post.linear_predictor(x_new);
  const Eigen::VectorXd sigma = post.column("sigma");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PpdDraws out;
  out.values.resize(x_new.rows(), post.n_draws());
  for (Eigen::Index m = 0; m < post.n_draws(); ++m)
    for (Eigen::Index i = 0; i < x_new.rows(); ++i) out.values(i, m) = eta(m, i) + sigma[m] * normal(rng);
  return out;
}

/// Per-draw risks inverse-logit(beta0 + x beta) for a binary outcome.
inline PpdDraws ppd_logistic(const PosteriorSample& post, const Eigen::MatrixXd& x_new) {
  const Eigen::MatrixXd eta = post.linear_predictor(x_new);
  PpdDraws out;
  out.values = eta.transpose().unaryExpr([](double v) { return math::inv_logit(v); });
  return out;
}

/// PPD means and the alpha/2, 1 - alpha/2 empirical quantiles (type 7) per row.
inline PredictionSummary summarize_ppd(const PpdDraws& ppd, double alpha = 0.05) {
  require(alpha >= 0.0 && alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in [0, 1)");
  require(ppd.values.cols() >= 1, ErrorKind::InvalidArgument, "PPD has no draws");
  const Eigen::Index n = ppd.values.rows();
  PredictionSummary s{ppd.values.rowwise().mean(), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  std::vector<double> row(static_cast<std::size_t>(ppd.values.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd::Map(row.data(), ppd.values.cols()) = ppd.values.row(i).transpose();
    std::sort(row.begin(), row.end());
    s.lower[i] = math::quantile_sorted(row, alpha / 2.0);
    s.upper[i] = math::quantile_sorted(row, 1.0 - alpha / 2.0);
  }
  return s;
}

inline double mse(const Eigen::VectorXd& point, const Eigen::VectorXd& y) {
  require(point.size() == y.size(), ErrorKind::LengthMismatch, "predictions and outcomes differ in length");
  require(y.size() >= 1, ErrorKind::InvalidArgument, "need at least one outcome");
  return (point - y).squaredNorm() / static_cast<double>(y.size());
}

/// Fraction of outcomes inside the closed interval [lower, upper].
inline double coverage(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, const Eigen::VectorXd& y) {
  require(lower.size() == y.size() && upper.size() == y.size(), ErrorKind::LengthMismatch,
          "interval bounds and outcomes differ in length");
  require(y.size() >= 1, ErrorKind::InvalidArgument, "need at least one outcome");
  require((lower.array() <= upper.array()).all(), ErrorKind::InvalidArgument, "lower bound exceeds upper bound");
  const auto inside = ((lower.array() <= y.array()) && (y.array() <= upper.array())).count();
  return static_cast<double>(inside) / static_cast<double>(y.size());
}

enum class CoefGroup { intercept, nonzero, zero };

/// Mean absolute error per group; a group with no members is absent.
struct GroupBias {
  std::optional<double> intercept;
  std::optional<double> nonzero;
  std::optional<double> zero;
};

/// Index 0 is the intercept; the rest split on whether the true value is zero.
inline std::vector<CoefGroup> coefficient_groups(const Eigen::VectorXd& theta_true) {
  std::vector<CoefGroup> g(static_cast<std::size_t>(theta_true.size()));
  for (Eigen::Index k = 0; k < theta_true.size(); ++k)
    g[static_cast<std::size_t>(k)] = k == 0 ? CoefGroup::intercept : theta_true[k] != 0.0 ? CoefGroup::nonzero : CoefGroup::zero;
  return g;
}

inline GroupBias bias_by_group(const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta_true,
                               const std::vector<CoefGroup>& groups) {
  require(theta_hat.size() == theta_true.size() && groups.size() == static_cast<std::size_t>(theta_true.size()),
          ErrorKind::LengthMismatch, "estimates, truths and groups differ in length");
  double sum[3] = {0.0, 0.0, 0.0};
  int count[3] = {0, 0, 0};
  for (Eigen::Index k = 0; k < theta_hat.size(); ++k) {
    const auto g = static_cast<int>(groups[static_cast<std::size_t>(k)]);
    sum[g] += std::abs(theta_hat[k] - theta_true[k]);
    ++count[g];
  }
  auto avg = [&](int g) { return count[g] ? std::optional<double>(sum[g] / count[g]) : std::nullopt; };
  return GroupBias{avg(0), avg(1), avg(2)};
}

/// Posterior-mean (beta0, beta) mapped from standardized predictors back to
/// the original predictor scale of `fitted`.
inline Eigen::VectorXd coefficients_on_original_scale(const PosteriorSample& post, const Dataset& fitted) {
  const Eigen::Index p = post.n_coefficients();
  require(p == fitted.p(), ErrorKind::DimensionMismatch, "coefficient count differs from training data");
  const Eigen::VectorXd b_std = post.coefficients(p).colwise().mean().transpose();
  Eigen::VectorXd out(p + 1);
  out[0] = post.column("beta0").mean();
  if (!fitted.standardized) {
    out.tail(p) = b_std;
    return out;
  }
  out.tail(p) = b_std.array() / fitted.column_sds.array();
  out[0] -= out.tail(p).dot(fitted.column_means);
  return out;
}

struct BinaryMetrics {
  std::optional<double> auc;  // absent when only one class is present
  double accuracy = 0.0;
  double brier = 0.0;
};

/// Mann-Whitney AUC with ties weighted 1/2.
inline std::optional<double> auc(const Eigen::VectorXd& risk, const Eigen::VectorXd& y) {
  require(risk.size() == y.size(), ErrorKind::LengthMismatch, "risks and outcomes differ in length");
  const Eigen::Index n = y.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return risk[a] < risk[b]; });
  // Mid-ranks over tied risks.
  std::vector<double> rank(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && risk[order[j + 1]] == risk[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) rank[static_cast<std::size_t>(order[k])] = mid;
    i = j + 1;
  }
  double n1 = 0.0, rank_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] == 1.0) {
      n1 += 1.0;
      rank_sum += rank[static_cast<std::size_t>(i)];
    }
  }
  const double n0 = static_cast<double>(n) - n1;
  if (n1 == 0.0 || n0 == 0.0) return std::nullopt;
  return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

inline BinaryMetrics binary_metrics(const Eigen::VectorXd& risk, const Eigen::VectorXd& y, double threshold = 0.5) {
  require(risk.size() == y.size(), ErrorKind::LengthMismatch, "risks and outcomes differ in length");
  require(y.size() >= 1, ErrorKind::InvalidArgument, "need at least one outcome");
  require((y.array() == 0.0 || y.array() == 1.0).all(), ErrorKind::InvalidArgument, "outcomes must be 0 or 1");
  BinaryMetrics m;
  m.auc = auc(risk, y);
  double correct = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) correct += ((risk[i] > threshold ? 1.0 : 0.0) == y[i]) ? 1.0 : 0.0;
  m.accuracy = correct / static_cast<double>(y.size());
  m.brier = (risk - y).squaredNorm() / static_cast<double>(y.size());
  return m;
}

}  // namespace penreg
