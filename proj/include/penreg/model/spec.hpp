#pragma once

#include "penreg/error.hpp"
#include "penreg/math.hpp"
#include "penreg/model/prior.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace penreg {

enum class Likelihood { linear, logistic };

/// How the coefficient block is stored in the unconstrained vector for the
/// horseshoe family. `centered` stores beta itself; `noncentered` stores
/// z = beta / (tau * lambda_tilde) with z ~ N(0, 1). Other priors are always
/// centered.
enum class Parameterization { centered, noncentered };

inline std::string_view to_string(Likelihood l) { return l == Likelihood::linear ? "linear" : "logistic"; }

struct Block {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
  bool positive = false;  // log-transformed in the unconstrained space
};

/// Likelihood, prior and the parameter-block table. Build with `make_spec`.
struct ModelSpec {
  Likelihood likelihood = Likelihood::linear;
  PriorConfig prior;
  Eigen::Index p = 0;
  double intercept_scale = 10.0;
  Parameterization parameterization = Parameterization::centered;
  std::vector<Block> layout;

  Eigen::Index dim() const { return layout.empty() ? 0 : layout.back().offset + layout.back().size; }

  const Block* find(std::string_view name) const {
    for (const auto& b : layout)
      if (b.name == name) return &b;
    return nullptr;
  }
  bool has(std::string_view name) const { return find(name) != nullptr; }
  Eigen::Index offset(std::string_view name) const {
    const Block* b = find(name);
    require(b != nullptr, ErrorKind::InvalidArgument, "no block named " + std::string(name));
    return b->offset;
  }

  Eigen::Index beta0_index() const { return 0; }
  Eigen::Index beta_offset() const { return 1; }
  bool has_sigma() const { return likelihood == Likelihood::linear; }
  bool has_shrinkage() const { return prior.is_horseshoe_family(); }
  bool has_slab() const { return prior.kind == PriorKind::regularized_horseshoe; }
  bool noncentered() const {
    return has_shrinkage() && parameterization == Parameterization::noncentered;
  }
  bool continuous() const { return prior.kind != PriorKind::spike_slab; }

  std::vector<std::string> parameter_names() const {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(dim()));
    for (const auto& b : layout) {
      if (b.size == 1 && b.name != "beta" && b.name != "lambda") {
        names.push_back(b.name);
      } else {
        for (Eigen::Index j = 0; j < b.size; ++j) names.push_back(b.name + "[" + std::to_string(j + 1) + "]");
      }
    }
    return names;
  }
};

/// Resolve defaults, validate and lay out the blocks
/// beta0 | beta[1..p] | sigma | tau | lambda[1..p] | c2 (present blocks only).
inline ModelSpec make_spec(Likelihood likelihood, PriorConfig prior, Eigen::Index p, double intercept_scale = 10.0,
                           Parameterization parameterization = Parameterization::centered) {
  require(p >= 1, ErrorKind::InvalidArgument, "need at least one predictor");
  require(intercept_scale > 0.0, ErrorKind::InvalidArgument, "intercept scale must be positive");
  if (prior.kind == PriorKind::regularized_horseshoe && prior.p0 <= 0.0) {
    // default guess: one in ten predictors relevant, at least one
    prior.p0 = std::clamp(std::ceil(0.1 * static_cast<double>(p)), 1.0, std::max(1.0, static_cast<double>(p) - 1.0));
  }
  if (p == 1 && prior.kind == PriorKind::regularized_horseshoe) {
    fail(ErrorKind::InvalidSparsity, "regularized horseshoe needs p >= 2 so that 0 < p0 < p");
  }
  prior.validate(static_cast<long>(p));

  ModelSpec s;
  s.likelihood = likelihood;
  s.prior = prior;
  s.p = p;
  s.intercept_scale = intercept_scale;
  s.parameterization = parameterization;
  Eigen::Index off = 0;
  auto add = [&](std::string name, Eigen::Index size, bool positive) {
    s.layout.push_back(Block{std::move(name), off, size, positive});
    off += size;
  };
  add("beta0", 1, false);
  add("beta", p, false);
  if (s.has_sigma()) add("sigma", 1, true);
  if (s.has_shrinkage()) {
    add("tau", 1, true);
    add("lambda", p, true);
  }
  if (s.has_slab()) add("c2", 1, true);
  return s;
}

/// Regularized local scale: c^2 lambda^2 / (c^2 + tau^2 lambda^2).
inline double lambda_tilde(double lambda, double tau, double c2) {
  require(lambda > 0.0 && tau > 0.0 && c2 > 0.0 && std::isfinite(lambda) && std::isfinite(tau) && std::isfinite(c2),
          ErrorKind::InvalidArgument, "lambda_tilde requires positive finite inputs");
  const double l2 = lambda * lambda;
  return c2 * l2 / (c2 + tau * tau * l2);
}

/// Global-scale guess from an expected number of relevant predictors.
inline double tau0(double p0, double p, double sigma, double n) {
  require(p0 > 0.0 && p0 < p, ErrorKind::InvalidSparsity, "tau0 requires 0 < p0 < p");
  require(n >= 1.0 && sigma > 0.0, ErrorKind::InvalidArgument, "tau0 requires n >= 1 and sigma > 0");
  return p0 / (p - p0) * sigma / std::sqrt(n);
}

struct ConstrainedParams {
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  std::optional<double> sigma;
  std::optional<double> tau;
  Eigen::VectorXd lambda;
  std::optional<double> c2;
};

namespace detail {

/// log of tau^2 * lambda_tilde_j^2 (regularized) or tau^2 lambda_j^2 (plain),
/// evaluated on the log scale for stability.
inline double log_local_variance(bool regularized, double log_tau, double log_lambda, double log_c2) {
  const double a = 2.0 * log_tau + 2.0 * log_lambda;
  if (!regularized) return a;
  return a + log_c2 - math::log_sum_exp(log_c2, a);
}

}  // namespace detail

/// Map an unconstrained vector to parameters. Returns the log-Jacobian of the
/// exp transforms (sum of the unconstrained coordinates of positive blocks).
inline std::pair<ConstrainedParams, double> to_constrained(const ModelSpec& spec, const Eigen::VectorXd& u) {
  require(u.size() == spec.dim(), ErrorKind::DimensionMismatch,
          "expected " + std::to_string(spec.dim()) + " coordinates, got " + std::to_string(u.size()));
  ConstrainedParams out;
  double log_jac = 0.0;
  out.beta0 = u[0];
  out.beta = u.segment(1, spec.p);
  for (const auto& b : spec.layout) {
    if (!b.positive) continue;
    log_jac += u.segment(b.offset, b.size).sum();
  }
  if (spec.has_sigma()) out.sigma = std::exp(u[spec.offset("sigma")]);
  if (spec.has_shrinkage()) {
    out.tau = std::exp(u[spec.offset("tau")]);
    out.lambda = u.segment(spec.offset("lambda"), spec.p).array().exp();
  }
  if (spec.has_slab()) out.c2 = std::exp(u[spec.offset("c2")]);
  if (spec.noncentered()) {
    const double log_tau = u[spec.offset("tau")];
    const double log_c2 = spec.has_slab() ? u[spec.offset("c2")] : 0.0;
    const auto lam = spec.offset("lambda");
    for (Eigen::Index j = 0; j < spec.p; ++j) {
      const double lv = detail::log_local_variance(spec.has_slab(), log_tau, u[lam + j], log_c2);
      out.beta[j] = u[1 + j] * std::exp(0.5 * lv);
    }
  }
  return {std::move(out), log_jac};
}

inline Eigen::VectorXd to_unconstrained(const ModelSpec& spec, const ConstrainedParams& params) {
  require(params.beta.size() == spec.p, ErrorKind::DimensionMismatch, "beta length differs from p");
  Eigen::VectorXd u(spec.dim());
  auto log_positive = [](double v, const char* name) {
    if (!(v > 0.0)) fail(ErrorKind::NonPositive, std::string(name) + " must be positive");
    return std::log(v);
  };
  u[0] = params.beta0;
  u.segment(1, spec.p) = params.beta;
  if (spec.has_sigma()) {
    require(params.sigma.has_value(), ErrorKind::InvalidArgument, "sigma missing");
    u[spec.offset("sigma")] = log_positive(*params.sigma, "sigma");
  }
  if (spec.has_shrinkage()) {
    require(params.tau.has_value() && params.lambda.size() == spec.p, ErrorKind::InvalidArgument,
            "tau or lambda missing");
    u[spec.offset("tau")] = log_positive(*params.tau, "tau");
    const auto lam = spec.offset("lambda");
    for (Eigen::Index j = 0; j < spec.p; ++j) u[lam + j] = log_positive(params.lambda[j], "lambda");
  }
  if (spec.has_slab()) {
    require(params.c2.has_value(), ErrorKind::InvalidArgument, "c2 missing");
    u[spec.offset("c2")] = log_positive(*params.c2, "c2");
  }
  if (spec.noncentered()) {
    const double log_tau = u[spec.offset("tau")];
    const double log_c2 = spec.has_slab() ? u[spec.offset("c2")] : 0.0;
    const auto lam = spec.offset("lambda");
    for (Eigen::Index j = 0; j < spec.p; ++j) {
      const double lv = detail::log_local_variance(spec.has_slab(), log_tau, u[lam + j], log_c2);
      u[1 + j] = params.beta[j] * std::exp(-0.5 * lv);
    }
  }
  return u;
}

/// Constrained values flattened in layout order (the column order of draws).
inline Eigen::VectorXd constrain_vector(const ModelSpec& spec, const Eigen::VectorXd& u) {
  const auto [cp, lj] = to_constrained(spec, u);
  (void)lj;
  Eigen::VectorXd out(spec.dim());
  out[0] = cp.beta0;
  out.segment(1, spec.p) = cp.beta;
  if (cp.sigma) out[spec.offset("sigma")] = *cp.sigma;
  if (cp.tau) {
    out[spec.offset("tau")] = *cp.tau;
    out.segment(spec.offset("lambda"), spec.p) = cp.lambda;
  }
  if (cp.c2) out[spec.offset("c2")] = *cp.c2;
  return out;
}

}  // namespace penreg
