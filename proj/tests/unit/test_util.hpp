#pragma once

#include "penreg/model/dataset.hpp"
#include "penreg/random.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace penreg::testing {

/// Small synthetic regression problem; binary outcomes when `binary`.
inline Dataset toy_dataset(Rng& rng, Eigen::Index n, Eigen::Index p, bool binary) {
  Dataset d;
  d.x.resize(n, p);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) d.x(i, j) = normal(rng);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta[0] = 1.0;
  if (p > 1) beta[1] = -0.5;
  Eigen::VectorXd eta = d.x * beta;
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (binary) {
      d.y[i] = uniform01(rng) < 1.0 / (1.0 + std::exp(-eta[i])) ? 1.0 : 0.0;
    } else {
      d.y[i] = eta[i] + normal(rng);
    }
  }
  return standardize(d);
}

/// Central finite-difference gradient of f at x.
template <class F>
Eigen::VectorXd finite_difference_gradient(const F& f, const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    g[k] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Composite Simpson rule on [a, b] with an even number of panels.
template <class F>
double simpson(const F& f, double a, double b, int panels = 20000) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace penreg::testing
