#pragma once

#include "penreg/approx/gaussian.hpp"
#include "penreg/model/regression.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace penreg {

enum class VariationalFamily { meanfield, fullrank };

inline std::string to_string(VariationalFamily f) { return f == VariationalFamily::meanfield ? "meanfield" : "fullrank"; }

struct ViConfig {
  int max_iter = 10000;
  int n_elbo_draws = 100;
  int n_grad_draws = 1;
  /// Base step size; unset means a short search over {100, 10, 1, 0.1, 0.01}.
  std::optional<double> learning_rate;
  int elbo_check_every = 100;
  double rel_tol = 0.01;
  std::uint64_t seed = 0;
  /// Starting mean on the unconstrained scale; unset means zeros. Scales start at 1.
  std::optional<Eigen::VectorXd> init;
  int adapt_iter = 50;

  void validate(Eigen::Index dim) const {
    require(max_iter >= 1 && n_elbo_draws >= 1 && n_grad_draws >= 1 && elbo_check_every >= 1 && adapt_iter >= 1,
            ErrorKind::InvalidArgument, "VI counts must be at least 1");
    require(rel_tol > 0.0, ErrorKind::InvalidArgument, "rel_tol must be positive");
    if (learning_rate) require(*learning_rate > 0.0, ErrorKind::InvalidArgument, "learning_rate must be positive");
    if (init) require(init->size() == dim, ErrorKind::DimensionMismatch, "init has the wrong dimension");
  }
};

namespace detail {

/// Variational parameters packed in one vector: mu, then either log-sd
/// (mean-field) or the lower triangle of L column by column with the diagonal
/// stored as its log (full-rank).
class ViParams {
 public:
  ViParams(VariationalFamily family, const Eigen::VectorXd& mu) : family_(family), d_(mu.size()) {
    const Eigen::Index n_scale = family == VariationalFamily::meanfield ? d_ : d_ * (d_ + 1) / 2;
    x_ = Eigen::VectorXd::Zero(d_ + n_scale);
    x_.head(d_) = mu;
  }

  Eigen::VectorXd& values() { return x_; }
  const Eigen::VectorXd& values() const { return x_; }

  GaussianApprox approx() const {
    const Eigen::VectorXd mu = x_.head(d_);
    if (family_ == VariationalFamily::meanfield) return GaussianApprox::meanfield(mu, x_.tail(d_).array().exp());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d_, d_);
    Eigen::Index k = d_;
    for (Eigen::Index j = 0; j < d_; ++j)
      for (Eigen::Index i = j; i < d_; ++i, ++k) l(i, j) = i == j ? std::exp(x_[k]) : x_[k];
    return GaussianApprox::fullrank(mu, l);
  }

  /// Reparameterized single-draw gradient of the ELBO, accumulated into `out`.
  /// `g` is the target gradient at theta = mu + scale * z. The log q term is
  /// differentiated only through theta (path derivative), so the estimate has
  /// zero variance when q matches a Gaussian target exactly.
  void accumulate_gradient(const GaussianApprox& q, const Eigen::VectorXd& z, const Eigen::VectorXd& g,
                           Eigen::VectorXd& out) const {
    if (family_ == VariationalFamily::meanfield) {
      const Eigen::ArrayXd sd = q.sd->array();
      const Eigen::ArrayXd h = g.array() + z.array() / sd;
      out.head(d_).array() += h;
      out.tail(d_).array() += h * z.array() * sd;
      return;
    }
    const Eigen::VectorXd h = g + q.chol->triangularView<Eigen::Lower>().transpose().solve(z);
    out.head(d_) += h;
    Eigen::Index k = d_;
    for (Eigen::Index j = 0; j < d_; ++j)
      for (Eigen::Index i = j; i < d_; ++i, ++k) out[k] += i == j ? h[i] * z[j] * (*q.chol)(i, i) : h[i] * z[j];
  }

 private:
  VariationalFamily family_;
  Eigen::Index d_;
  Eigen::VectorXd x_;
};

/// Running state of the per-coordinate step size: base * iter^(-1/2) / (1 + sqrt(s)),
/// with s an exponential moving average of squared gradients.
struct StepSequence {
  double base = 1.0;
  Eigen::VectorXd s;
  long iter = 0;

  Eigen::VectorXd step(const Eigen::VectorXd& grad) {
    const Eigen::VectorXd g2 = grad.array().square();
    s = iter == 0 ? g2 : Eigen::VectorXd(0.1 * g2 + 0.9 * s);
    ++iter;
    const double decay = base / std::sqrt(static_cast<double>(iter));
    return (decay * grad.array() / (1.0 + s.array().sqrt())).matrix();
  }
};

template <GradientTarget T>
bool sgd_step(const T& target, ViParams& params, StepSequence& seq, int n_grad_draws, Rng& rng) {
  const Eigen::Index d = target.dim();
  const GaussianApprox q = params.approx();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.values().size());
  Eigen::VectorXd g;
  for (int s = 0; s < n_grad_draws; ++s) {
    const Eigen::VectorXd z = standard_normal(rng, d);
    const double lp = target.log_density_gradient(q.transform(z), g);
    if (!std::isfinite(lp) || !g.allFinite()) return false;
    params.accumulate_gradient(q, z, g, grad);
  }
  grad /= static_cast<double>(n_grad_draws);
  params.values() += seq.step(grad);
  return params.values().allFinite();
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Picks the base step size by running a few iterations from the start for
/// each candidate and keeping the one with the highest ELBO.
template <GradientTarget T>
double search_learning_rate(const T& target, VariationalFamily family, const Eigen::VectorXd& mu0,
                            const ViConfig& cfg) {
  static constexpr std::array<double, 5> candidates{100.0, 10.0, 1.0, 0.1, 0.01};
  double best_rate = 0.0;
  double best_elbo = -math::kInf;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    ViParams params(family, mu0);
    StepSequence seq{candidates[c], {}, 0};
    Rng rng = make_rng(cfg.seed, 100 + c);
    bool ok = true;
    for (int it = 0; it < cfg.adapt_iter && ok; ++it) ok = sgd_step(target, params, seq, cfg.n_grad_draws, rng);
    if (!ok) continue;
    double elbo = -math::kInf;
    try {
      elbo = elbo_estimate(target, params.approx(), cfg.n_elbo_draws, derive_seed(cfg.seed, 200 + c));
    } catch (const Error&) {
      continue;
    }
    if (elbo > best_elbo) {
      best_elbo = elbo;
      best_rate = candidates[c];
    }
  }
  if (!(best_rate > 0.0)) fail(ErrorKind::Diverged, "every candidate step size produced a non-finite ELBO");
  return best_rate;
}

}  // namespace detail

/// Gaussian variational approximation by stochastic gradient ascent on the
/// ELBO with reparameterized gradients. Returns the iterate with the best
/// checked ELBO.
template <GradientTarget T>
ApproxReport advi_fit(const T& target, VariationalFamily family, const ViConfig& cfg = {}) {
  const Eigen::Index d = target.dim();
  cfg.validate(d);
  const Eigen::VectorXd mu0 = cfg.init.value_or(Eigen::VectorXd::Zero(d));
  const double rate = cfg.learning_rate ? *cfg.learning_rate : detail::search_learning_rate(target, family, mu0, cfg);

  detail::ViParams params(family, mu0);
  detail::StepSequence seq{rate, {}, 0};
  Rng rng = make_rng(cfg.seed, 1);
  ApproxReport rep{params.approx(), {}, false, 0, 0.0, {}};
  double best_elbo = -math::kInf;
  std::vector<double> rel_changes;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    if (!detail::sgd_step(target, params, seq, cfg.n_grad_draws, rng)) {
      fail(ErrorKind::Diverged, "non-finite gradient or parameters at iteration " + std::to_string(it));
    }
    rep.iterations_used = it;
    if (it % cfg.elbo_check_every != 0) continue;
    const GaussianApprox q = params.approx();
    double elbo = 0.0;
    try {
      elbo = elbo_estimate(target, q, cfg.n_elbo_draws, derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(it)));
    } catch (const Error& e) {
      fail(ErrorKind::Diverged, std::string("ELBO became non-finite: ") + e.what());
    }
    if (!rep.elbo_trace.empty()) {
      const double prev = rep.elbo_trace.back();
      rel_changes.push_back(std::abs((elbo - prev) / elbo));
    }
    rep.elbo_trace.push_back(elbo);
    if (elbo > best_elbo) {
      best_elbo = elbo;
      rep.approx = q;
    }
    if (rel_changes.size() >= 3 &&
        detail::median_of({rel_changes.end() - 3, rel_changes.end()}) < cfg.rel_tol) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged) rep.warnings.push_back("ELBO did not converge within max_iter");
  if (rep.elbo_trace.empty()) rep.approx = params.approx();
  return rep;
}

inline ApproxReport advi_fit(const ModelSpec& spec, const Dataset& data, VariationalFamily family,
                             const ViConfig& cfg = {}) {
  require(spec.continuous(), ErrorKind::InvalidArgument, "variational inference needs continuous parameters");
  const RegressionModel model(spec, data);
  return advi_fit(model, family, cfg);
}

}  // namespace penreg
