#pragma once

#include "penreg/approx/gaussian.hpp"
#include "penreg/approx/lbfgs.hpp"
#include "penreg/model/regression.hpp"

#include <optional>

namespace penreg {

struct LaplaceConfig {
  int max_iter = 10000;
  double fd_step = 1e-5;
};

/// Negative Hessian of the log density by central differences of the
/// analytic gradient, symmetrized.
template <GradientTarget T>
Eigen::MatrixXd negative_hessian(const T& target, const Eigen::VectorXd& x, double h) {
  const Eigen::Index d = x.size();
  Eigen::MatrixXd hess(d, d);
  Eigen::VectorXd gp, gm;
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    target.log_density_gradient(xp, gp);
    target.log_density_gradient(xm, gm);
    hess.col(k) = -(gp - gm) / (2.0 * h);
  }
  require(hess.allFinite(), ErrorKind::HessianSingular, "Hessian has non-finite entries");
  return 0.5 * (hess + hess.transpose());
}

/// Normal approximation at the mode: mean = mode, covariance = inverse
/// negative Hessian. Jitter doubles from 1e-8 until the Hessian factorizes.
template <GradientTarget T>
ApproxReport laplace_fit(const T& target, const Eigen::VectorXd& init, const LaplaceConfig& cfg = {}) {
  const Eigen::Index d = target.dim();
  require(init.size() == d, ErrorKind::DimensionMismatch, "init has the wrong dimension");
  LbfgsConfig opt;
  opt.max_iter = cfg.max_iter;
  opt.grad_tol = 1e-6 * static_cast<double>(d);
  const LbfgsResult mode = lbfgs_maximize(target, init, opt);
  if (!mode.converged) {
    fail(ErrorKind::ModeNotFound, "optimizer stopped (" + mode.message + ") with gradient norm " +
                                      std::to_string(mode.last().grad.norm()));
  }
  const Eigen::MatrixXd neg_hess = negative_hessian(target, mode.last().x, cfg.fd_step);
  double jitter = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(neg_hess);
  for (double delta = 1e-8; llt.info() != Eigen::Success; delta *= 2.0) {
    if (delta > 1e-2) fail(ErrorKind::HessianSingular, "negative Hessian not positive definite after jitter 1e-2");
    jitter = delta;
    llt.compute(neg_hess + delta * Eigen::MatrixXd::Identity(d, d));
  }
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(d, d));
  cov = 0.5 * (cov + cov.transpose());
  const Eigen::LLT<Eigen::MatrixXd> cov_llt(cov);
  require(cov_llt.info() == Eigen::Success, ErrorKind::HessianSingular, "inverse Hessian not positive definite");
  ApproxReport rep{GaussianApprox::fullrank(mode.last().x, cov_llt.matrixL()), {}, true, mode.iterations(), jitter, {}};
  if (jitter > 0.0) rep.warnings.push_back("Hessian jitter " + std::to_string(jitter));
  return rep;
}

inline ApproxReport laplace_fit(const ModelSpec& spec, const Dataset& data, int optimizer_budget = 10000,
                                std::optional<Eigen::VectorXd> init = std::nullopt) {
  require(spec.continuous(), ErrorKind::InvalidArgument, "Laplace needs continuous parameters");
  const RegressionModel model(spec, data);
  return laplace_fit(model, init.value_or(Eigen::VectorXd::Zero(spec.dim())), LaplaceConfig{optimizer_budget});
}

}  // namespace penreg
