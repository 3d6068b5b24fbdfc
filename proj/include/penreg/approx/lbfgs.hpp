#pragma once

#include "penreg/error.hpp"
#include "penreg/samplers/draws.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <string>
#include <vector>

namespace penreg {

struct LbfgsConfig {
  int max_iter = 1000;
  int history = 6;
  /// Stop once the gradient norm falls below this.
  double grad_tol = 1e-8;
  /// Stop once the relative change in the objective falls below this; 0 disables.
  double rel_obj_tol = 0.0;
  double armijo_c = 1e-4;
  int max_backtracks = 60;
};

struct LbfgsIterate {
  Eigen::VectorXd x;
  Eigen::VectorXd grad;  // gradient of the log density at x
  double log_p = 0.0;
};

struct CurvaturePair {
  Eigen::VectorXd s;  // x_{k+1} - x_k
  Eigen::VectorXd y;  // change in the gradient of -log p
};

struct LbfgsResult {
  std::vector<LbfgsIterate> path;      // path[0] is the start
  std::vector<bool> pair_accepted;     // per step: curvature condition held
  std::vector<CurvaturePair> pairs;    // per step, aligned with pair_accepted
  bool converged = false;
  std::string message;

  const LbfgsIterate& last() const { return path.back(); }
  int iterations() const { return static_cast<int>(path.size()) - 1; }
};

namespace detail {

/// Two-loop recursion: returns H * v for the L-BFGS inverse Hessian of -log p.
inline Eigen::VectorXd two_loop(const std::deque<CurvaturePair>& hist, const Eigen::VectorXd& v, double gamma) {
  Eigen::VectorXd q = v;
  std::vector<double> alpha(hist.size());
  for (std::size_t i = hist.size(); i-- > 0;) {
    const double rho = 1.0 / hist[i].y.dot(hist[i].s);
    alpha[i] = rho * hist[i].s.dot(q);
    q -= alpha[i] * hist[i].y;
  }
  q *= gamma;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double rho = 1.0 / hist[i].y.dot(hist[i].s);
    const double beta = rho * hist[i].y.dot(q);
    q += (alpha[i] - beta) * hist[i].s;
  }
  return q;
}

inline bool curvature_ok(const CurvaturePair& p) {
  const double sy = p.s.dot(p.y);
  return std::isfinite(sy) && sy > 1e-12 * p.y.squaredNorm();
}

}  // namespace detail

/// Maximize the target's log density by L-BFGS with backtracking Armijo line
/// search, recording every accepted iterate.
template <GradientTarget T>
LbfgsResult lbfgs_maximize(const T& target, const Eigen::VectorXd& x0, const LbfgsConfig& cfg = {}) {
  require(cfg.history >= 1, ErrorKind::InvalidArgument, "history must be at least 1");
  LbfgsResult res;
  LbfgsIterate cur;
  cur.x = x0;
  cur.log_p = target.log_density_gradient(cur.x, cur.grad);
  require(std::isfinite(cur.log_p) && cur.grad.allFinite(), ErrorKind::NonFinite,
          "L-BFGS start has non-finite log density or gradient");
  res.path.push_back(cur);
  std::deque<CurvaturePair> hist;
  double gamma = 1.0 / std::max(1.0, cur.grad.norm());

  for (int it = 0; it < cfg.max_iter; ++it) {
    if (cur.grad.norm() < cfg.grad_tol) {
      res.converged = true;
      res.message = "gradient norm below tolerance";
      return res;
    }
    // ascent direction on log p = descent direction on -log p
    Eigen::VectorXd dir = detail::two_loop(hist, cur.grad, gamma);
    double slope = cur.grad.dot(dir);
    if (!(slope > 0.0) || !dir.allFinite()) {
      hist.clear();
      gamma = 1.0 / std::max(1.0, cur.grad.norm());
      dir = gamma * cur.grad;
      slope = cur.grad.dot(dir);
    }
    double step = 1.0;
    LbfgsIterate next;
    bool accepted = false;
    for (int b = 0; b < cfg.max_backtracks; ++b, step *= 0.5) {
      next.x = cur.x + step * dir;
      next.log_p = target.log_density_gradient(next.x, next.grad);
      if (std::isfinite(next.log_p) && next.grad.allFinite() && next.log_p >= cur.log_p + cfg.armijo_c * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.message = "line search failed";
      return res;
    }
    CurvaturePair pair{next.x - cur.x, cur.grad - next.grad};
    const bool ok = detail::curvature_ok(pair);
    if (ok) {
      hist.push_back(pair);
      if (static_cast<int>(hist.size()) > cfg.history) hist.pop_front();
      gamma = pair.s.dot(pair.y) / pair.y.squaredNorm();
    }
    res.pairs.push_back(std::move(pair));
    res.pair_accepted.push_back(ok);
    const double rel = std::abs(next.log_p - cur.log_p) / std::max({std::abs(next.log_p), std::abs(cur.log_p), 1.0});
    cur = std::move(next);
    res.path.push_back(cur);
    if (cfg.rel_obj_tol > 0.0 && rel < cfg.rel_obj_tol) {
      res.converged = true;
      res.message = "relative objective change below tolerance";
      return res;
    }
  }
  res.converged = cur.grad.norm() < cfg.grad_tol;
  res.message = res.converged ? "gradient norm below tolerance" : "iteration limit reached";
  return res;
}

}  // namespace penreg
