#pragma once

#include "penreg/error.hpp"
#include "penreg/math.hpp"
#include "penreg/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace penreg {

struct RidgeFit {
  double intercept = 0.0;
  Eigen::VectorXd beta;
  double lambda = 0.0;
  bool logistic = false;

  /// Linear predictions, or risks for the logistic fit.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd eta = (x * beta).array() + intercept;
    if (logistic) eta = eta.unaryExpr([](double v) { return math::inv_logit(v); });
    return eta;
  }
};

/// 13 penalties, log-spaced from 1e-4 to 1e4.
inline std::vector<double> ridge_lambda_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 12; ++k) g.push_back(std::pow(10.0, -4.0 + 8.0 * k / 12.0));
  return g;
}

/// Penalized least squares with an unpenalized intercept (columns centred internally).
inline RidgeFit ridge_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  const Eigen::RowVectorXd xm = x.colwise().mean();
  const double ym = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - xm;
  Eigen::MatrixXd a = xc.transpose() * xc;
  a.diagonal().array() += lambda;
  RidgeFit f;
  f.beta = a.ldlt().solve(xc.transpose() * (y.array() - ym).matrix());
  f.intercept = ym - xm.dot(f.beta);
  f.lambda = lambda;
  return f;
}

/// Penalized logistic regression by Newton iterations; intercept unpenalized.
inline RidgeFit ridge_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda, int max_iter = 100) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Eigen::MatrixXd z(n, p + 1);
  z.col(0).setOnes();
  z.rightCols(p) = x;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p + 1);
  Eigen::VectorXd pen = Eigen::VectorXd::Constant(p + 1, lambda);
  pen[0] = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd mu = (z * w).unaryExpr([](double v) { return math::inv_logit(v); });
    const Eigen::VectorXd grad = z.transpose() * (y - mu) - (pen.array() * w.array()).matrix();
    const Eigen::VectorXd wt = (mu.array() * (1.0 - mu.array())).max(1e-10);
    Eigen::MatrixXd h = z.transpose() * wt.asDiagonal() * z;
    h.diagonal() += pen;
    h.diagonal().array() += 1e-10;
    const Eigen::VectorXd step = h.ldlt().solve(grad);
    w += step;
    if (step.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  RidgeFit f;
  f.intercept = w[0];
  f.beta = w.tail(p);
  f.lambda = lambda;
  f.logistic = true;
  return f;
}

/// Penalty chosen by k-fold CV (squared error, or log loss for logistic) over
/// the fixed grid, then refit on all rows.
inline RidgeFit ridge_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool logistic, std::uint64_t seed,
                         int folds = 5) {
  const Eigen::Index n = x.rows();
  require(n >= folds && folds >= 2, ErrorKind::InvalidArgument, "ridge CV needs at least as many rows as folds");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto fit = [&](const Eigen::MatrixXd& xa, const Eigen::VectorXd& ya, double lambda) {
    return logistic ? ridge_logistic(xa, ya, lambda) : ridge_linear(xa, ya, lambda);
  };
  const auto grid = ridge_lambda_grid();
  double best_loss = math::kInf, best_lambda = grid.front();
  for (const double lambda : grid) {
    double loss = 0.0;
    for (int f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> tr, te;
      for (Eigen::Index i = 0; i < n; ++i) (i % folds == f ? te : tr).push_back(order[static_cast<std::size_t>(i)]);
      const RidgeFit m = fit(x(tr, Eigen::all), y(tr), lambda);
      const Eigen::VectorXd pred = m.predict(x(te, Eigen::all));
      const Eigen::VectorXd yt = y(te);
      for (Eigen::Index i = 0; i < yt.size(); ++i) {
        if (logistic) {
          const double pr = std::clamp(pred[i], 1e-12, 1.0 - 1e-12);
          loss -= yt[i] * std::log(pr) + (1.0 - yt[i]) * std::log1p(-pr);
        } else {
          loss += (pred[i] - yt[i]) * (pred[i] - yt[i]);
        }
      }
    }
    if (loss < best_loss) {
      best_loss = loss;
      best_lambda = lambda;
    }
  }
  return fit(x, y, best_lambda);
}

}  // namespace penreg
