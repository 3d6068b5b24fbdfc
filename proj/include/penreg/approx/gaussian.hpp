#pragma once

#include "penreg/error.hpp"
#include "penreg/math.hpp"
#include "penreg/random.hpp"
#include "penreg/samplers/draws.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace penreg {

/// Gaussian over the unconstrained space: mean plus either a diagonal scale
/// (`sd`) or a lower-triangular covariance factor (`chol`).
struct GaussianApprox {
  Eigen::VectorXd mu;
  std::optional<Eigen::VectorXd> sd;
  std::optional<Eigen::MatrixXd> chol;

  static GaussianApprox meanfield(Eigen::VectorXd mu, Eigen::VectorXd sd) {
    require(mu.size() == sd.size(), ErrorKind::DimensionMismatch, "mu and sd differ in length");
    require((sd.array() > 0.0).all(), ErrorKind::InvalidArgument, "sd must be positive");
    return GaussianApprox{std::move(mu), std::move(sd), std::nullopt};
  }
  static GaussianApprox fullrank(Eigen::VectorXd mu, Eigen::MatrixXd chol) {
    require(chol.rows() == mu.size() && chol.cols() == mu.size(), ErrorKind::DimensionMismatch,
            "Cholesky factor has the wrong shape");
    require((chol.diagonal().array() > 0.0).all(), ErrorKind::NotPositiveDefinite,
            "Cholesky diagonal must be positive");
    chol.triangularView<Eigen::StrictlyUpper>().setZero();
    return GaussianApprox{std::move(mu), std::nullopt, std::move(chol)};
  }

  Eigen::Index dim() const { return mu.size(); }
  bool is_meanfield() const { return sd.has_value(); }

  /// mu + scale * z.
  Eigen::VectorXd transform(const Eigen::VectorXd& z) const {
    if (sd) return mu + (sd->array() * z.array()).matrix();
    return mu + chol->triangularView<Eigen::Lower>() * z;
  }

  double log_det_scale() const {
    if (sd) return sd->array().log().sum();
    return chol->diagonal().array().log().sum();
  }

  double log_density(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd z;
    if (sd) {
      z = ((theta - mu).array() / sd->array()).matrix();
    } else {
      z = chol->triangularView<Eigen::Lower>().solve(theta - mu);
    }
    return -0.5 * (static_cast<double>(dim()) * math::kLogTwoPi + z.squaredNorm()) - log_det_scale();
  }

  Eigen::MatrixXd covariance() const {
    if (sd) return sd->array().square().matrix().asDiagonal();
    const Eigen::MatrixXd l = chol->triangularView<Eigen::Lower>();
    return l * l.transpose();
  }
};

/// Result of fitting an approximation.
struct ApproxReport {
  GaussianApprox approx;
  std::vector<double> elbo_trace;
  bool converged = false;
  int iterations_used = 0;
  double jitter = 0.0;  // Laplace: diagonal jitter added to the negative Hessian
  std::vector<std::string> warnings;
};

struct ApproxDraws {
  Eigen::MatrixXd unconstrained;  // draw x dim
  Eigen::MatrixXd constrained;    // draw x dim
  Eigen::VectorXd log_q;
};

/// n draws of the approximation, mapped through the target's back-transform.
template <LogDensityTarget T>
ApproxDraws draw_from_approx(const T& target, const GaussianApprox& approx, Eigen::Index n, std::uint64_t seed) {
  require(n >= 1, ErrorKind::InvalidArgument, "need at least one draw");
  require(approx.dim() == target.dim(), ErrorKind::DimensionMismatch, "approximation dimension differs from target");
  Rng rng = make_rng(seed);
  ApproxDraws out;
  out.unconstrained.resize(n, approx.dim());
  out.constrained.resize(n, approx.dim());
  out.log_q.resize(n);
  const double log_norm = -0.5 * static_cast<double>(approx.dim()) * math::kLogTwoPi - approx.log_det_scale();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd z = standard_normal(rng, approx.dim());
    const Eigen::VectorXd theta = approx.transform(z);
    out.unconstrained.row(i) = theta.transpose();
    out.constrained.row(i) = constrain_draw(target, theta).transpose();
    out.log_q[i] = log_norm - 0.5 * z.squaredNorm();
  }
  return out;
}

/// Monte Carlo ELBO: mean of log p(theta) - log q(theta) over reparameterized draws.
template <LogDensityTarget T>
double elbo_estimate(const T& target, const GaussianApprox& approx, Eigen::Index n_draws, std::uint64_t seed) {
  require(n_draws >= 1, ErrorKind::InvalidArgument, "need at least one ELBO draw");
  Rng rng = make_rng(seed);
  const double log_norm = -0.5 * static_cast<double>(approx.dim()) * math::kLogTwoPi - approx.log_det_scale();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n_draws; ++i) {
    const Eigen::VectorXd z = standard_normal(rng, approx.dim());
    const double lp = target.log_density(approx.transform(z));
    require(std::isfinite(lp), ErrorKind::NonFinite, "non-finite log density in ELBO draw");
    total += lp - (log_norm - 0.5 * z.squaredNorm());
  }
  return total / static_cast<double>(n_draws);
}

}  // namespace penreg
