#pragma once

#include "penreg/error.hpp"
#include "penreg/math.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <utility>

namespace penreg {

/// Kinetic energy sum m^2 / (2 mass) for momentum drawn from Normal(0, mass).
inline double kinetic_energy(const Eigen::VectorXd& m, const Eigen::VectorXd& mass) {
  return 0.5 * (m.array().square() / mass.array()).sum();
}

/// exp(H_old - H_new); zero when the proposal has infinite or undefined energy.
inline double hmc_accept_prob(double h_old, double h_new) {
  if (!std::isfinite(h_new)) return 0.0;
  return std::exp(h_old - h_new);
}

/// One leapfrog step. `grad(theta)` returns the gradient of log p. Throws
/// NonFinite when the new state or momentum is not finite.
template <class Grad>
std::pair<Eigen::VectorXd, Eigen::VectorXd> leapfrog_step(const Grad& grad, const Eigen::VectorXd& theta,
                                                          const Eigen::VectorXd& m, double epsilon,
                                                          const Eigen::VectorXd& mass_diag) {
  require(epsilon > 0.0, ErrorKind::InvalidArgument, "step size must be positive");
  Eigen::VectorXd m_half = m + 0.5 * epsilon * grad(theta);
  Eigen::VectorXd theta_new = theta + epsilon * (m_half.array() / mass_diag.array()).matrix();
  Eigen::VectorXd m_new = m_half + 0.5 * epsilon * grad(theta_new);
  require(theta_new.allFinite() && m_new.allFinite(), ErrorKind::NonFinite, "leapfrog produced a non-finite state");
  return {std::move(theta_new), std::move(m_new)};
}

/// Position, momentum and cached log density / gradient at the position.
struct PhasePoint {
  Eigen::VectorXd theta;
  Eigen::VectorXd m;
  Eigen::VectorXd grad;
  double log_p = 0.0;

  double hamiltonian(const Eigen::VectorXd& mass) const { return -log_p + kinetic_energy(m, mass); }
};

/// In-place leapfrog reusing the cached gradient, so each step costs one
/// gradient evaluation. Returns false if anything became non-finite.
template <class Target>
bool leapfrog_inplace(const Target& target, PhasePoint& z, double epsilon, const Eigen::VectorXd& mass) {
  z.m += 0.5 * epsilon * z.grad;
  z.theta += epsilon * (z.m.array() / mass.array()).matrix();
  z.log_p = target.log_density_gradient(z.theta, z.grad);
  if (!std::isfinite(z.log_p) || !z.grad.allFinite()) return false;
  z.m += 0.5 * epsilon * z.grad;
  return z.theta.allFinite() && z.m.allFinite();
}

}  // namespace penreg
