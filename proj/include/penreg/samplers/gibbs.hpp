#pragma once

#include "penreg/math.hpp"
#include "penreg/model/dataset.hpp"
#include "penreg/model/prior.hpp"
#include "penreg/samplers/draws.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>

namespace penreg {

namespace detail {

inline double draw_inv_gamma(double shape, double rate, Rng& rng) {
  std::gamma_distribution<double> gamma(shape, 1.0 / rate);
  return 1.0 / gamma(rng);
}

}  // namespace detail

/// Conjugate hyperparameters shared by the Gibbs samplers:
/// sigma^2 ~ Inv-Gamma(a0, b0), intercept ~ Normal(0, intercept_scale^2).
struct GibbsConfig {
  double a0 = 0.01;
  double b0 = 0.01;
  double intercept_scale = 10.0;
  /// Hold sigma at this value instead of sampling it.
  std::optional<double> fixed_sigma;

  double next_sigma2(double rss, double n, Rng& rng) const {
    if (fixed_sigma) return *fixed_sigma * *fixed_sigma;
    return detail::draw_inv_gamma(a0 + 0.5 * n, b0 + 0.5 * rss, rng);
  }
};

namespace detail {

inline double prior_precision(double scale) { return std::isinf(scale) ? 0.0 : 1.0 / (scale * scale); }

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z(x.rows(), x.cols() + 1);
  z.col(0).setOnes();
  z.rightCols(x.cols()) = x;
  return z;
}

inline std::vector<std::string> linear_names(Eigen::Index p) {
  std::vector<std::string> names{"beta0"};
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("beta[" + std::to_string(j + 1) + "]");
  names.push_back("sigma");
  return names;
}

/// Starting sigma^2 from chain config: the last init coordinate is log sigma.
inline double initial_sigma2(const ChainConfig& cfg, int chain, Eigen::Index dim, Rng& rng) {
  const Eigen::VectorXd u = cfg.initial_point(chain, dim, rng);
  return std::exp(2.0 * u[dim - 1]);
}

inline Chain run_ridge_chain(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const Eigen::VectorXd& prior_prec,
                             const GibbsConfig& g, const ChainConfig& cfg, int chain) {
  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(chain) + 1);
  const Eigen::Index k = z.cols();
  const double n = static_cast<double>(z.rows());
  const Eigen::MatrixXd ztz = z.transpose() * z;
  const Eigen::VectorXd zty = z.transpose() * y;
  double sigma2 = g.fixed_sigma ? *g.fixed_sigma * *g.fixed_sigma : initial_sigma2(cfg, chain, k + 1, rng);
  Eigen::VectorXd beta(k);

  Chain out;
  out.draws.resize(cfg.n_draws, k + 1);
  out.meta.resize(static_cast<std::size_t>(cfg.n_draws));
  for (int it = 0; it < cfg.n_warmup + cfg.n_draws; ++it) {
    Eigen::MatrixXd precision = ztz / sigma2;
    precision.diagonal() += prior_prec;
    const Eigen::LLT<Eigen::MatrixXd> llt(precision);
    require(llt.info() == Eigen::Success, ErrorKind::SingularPrecision, "posterior precision is not positive definite");
    const Eigen::VectorXd mean = llt.solve(zty / sigma2);
    beta = mean + llt.matrixU().solve(standard_normal(rng, k));
    const double rss = (y - z * beta).squaredNorm();
    sigma2 = g.next_sigma2(rss, n, rng);
    if (it >= cfg.n_warmup) {
      const int row = it - cfg.n_warmup;
      out.draws.row(row).head(k) = beta.transpose();
      out.draws(row, k) = std::sqrt(sigma2);
      out.meta[static_cast<std::size_t>(row)] = IterationMeta{true, false, 0.0, 0.0};
    }
  }
  return out;
}

inline Chain run_ssvs_chain(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const PriorConfig& prior,
                            const GibbsConfig& g, const ChainConfig& cfg, int chain) {
  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(chain) + 1);
  const Eigen::Index k = z.cols();
  const Eigen::Index p = k - 1;
  const double n = static_cast<double>(z.rows());
  const Eigen::VectorXd col_sq = z.colwise().squaredNorm().transpose();
  double sigma2 = g.fixed_sigma ? *g.fixed_sigma * *g.fixed_sigma : initial_sigma2(cfg, chain, k + 1, rng);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXi gamma(p);
  std::bernoulli_distribution include(prior.inclusion);
  for (Eigen::Index j = 0; j < p; ++j) gamma[j] = include(rng) ? 1 : 0;
  Eigen::VectorXd resid = y - z * beta;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double log_odds_prior = std::log(prior.inclusion) - std::log1p(-prior.inclusion);
  const double intercept_prec = prior_precision(g.intercept_scale);

  Chain out;
  out.draws.resize(cfg.n_draws, k + 1 + p);
  out.meta.resize(static_cast<std::size_t>(cfg.n_draws));
  for (int it = 0; it < cfg.n_warmup + cfg.n_draws; ++it) {
    for (Eigen::Index j = 0; j < k; ++j) {
      double prec0 = intercept_prec;
      if (j > 0) {
        const double s = gamma[j - 1] ? prior.slab_sd : prior.spike_sd;
        prec0 = 1.0 / (s * s);
      }
      resid += z.col(j) * beta[j];
      const double prec = col_sq[j] / sigma2 + prec0;
      require(prec > 0.0 && std::isfinite(prec), ErrorKind::SingularPrecision, "conditional precision is not positive");
      const double mean = z.col(j).dot(resid) / sigma2 / prec;
      beta[j] = mean + normal(rng) / std::sqrt(prec);
      resid -= z.col(j) * beta[j];
      if (j > 0) {
        const double log_slab = math::normal_lpdf(beta[j], 0.0, prior.slab_sd);
        const double log_spike = math::normal_lpdf(beta[j], 0.0, prior.spike_sd);
        const double prob = math::inv_logit(log_odds_prior + log_slab - log_spike);
        gamma[j - 1] = uniform01(rng) < prob ? 1 : 0;
      }
    }
    sigma2 = g.next_sigma2(resid.squaredNorm(), n, rng);
    if (it >= cfg.n_warmup) {
      const int row = it - cfg.n_warmup;
      out.draws.row(row).head(k) = beta.transpose();
      out.draws(row, k) = std::sqrt(sigma2);
      out.draws.row(row).tail(p) = gamma.cast<double>().transpose();
      out.meta[static_cast<std::size_t>(row)] = IterationMeta{true, false, 0.0, 0.0};
    }
  }
  return out;
}

}  // namespace detail

/// Two-block Gibbs sampler for the linear model with independent normal
/// priors on the coefficients (`normal_prior_scale`, infinity for flat) and
/// a conjugate inverse-gamma prior on sigma^2. Every update is accepted.
/// Columns: beta0, beta[1..p], sigma.
inline DrawMatrix gibbs_ridge_sample(const Dataset& data, double normal_prior_scale, const ChainConfig& cfg,
                                     const GibbsConfig& g = {}) {
  validate(data);
  require(normal_prior_scale > 0.0, ErrorKind::InvalidArgument, "prior scale must be positive");
  require(g.a0 > 0.0 && g.b0 > 0.0, ErrorKind::InvalidArgument, "inverse-gamma hyperparameters must be positive");
  const Eigen::Index p = data.p();
  cfg.validate(p + 2);
  const Eigen::MatrixXd z = detail::with_intercept(data.x);
  Eigen::VectorXd prior_prec = Eigen::VectorXd::Constant(p + 1, detail::prior_precision(normal_prior_scale));
  prior_prec[0] = detail::prior_precision(g.intercept_scale);
  DrawMatrix out;
  out.names = detail::linear_names(p);
  out.chains = run_chains(cfg.n_chains, [&](int c) { return detail::run_ridge_chain(z, data.y, prior_prec, g, cfg, c); });
  return out;
}

/// Coordinatewise stochastic-search variable selection for the spike-and-slab
/// prior. Columns: beta0, beta[1..p], sigma, gamma[1..p] (slab indicators).
inline DrawMatrix gibbs_ssvs_sample(const Dataset& data, const PriorConfig& prior, const ChainConfig& cfg,
                                    const GibbsConfig& g = {}) {
  validate(data);
  require(prior.kind == PriorKind::spike_slab, ErrorKind::InvalidArgument, "SSVS needs a spike_slab prior");
  // spike_sd == slab_sd is allowed here: the indicators then carry no information.
  require(prior.spike_sd > 0.0 && prior.slab_sd > 0.0 && prior.inclusion > 0.0 && prior.inclusion < 1.0,
          ErrorKind::InvalidArgument, "invalid spike_slab hyperparameters");
  const Eigen::Index p = data.p();
  cfg.validate(p + 2);
  const Eigen::MatrixXd z = detail::with_intercept(data.x);
  DrawMatrix out;
  out.names = detail::linear_names(p);
  for (Eigen::Index j = 0; j < p; ++j) out.names.push_back("gamma[" + std::to_string(j + 1) + "]");
  out.chains = run_chains(cfg.n_chains, [&](int c) { return detail::run_ssvs_chain(z, data.y, prior, g, cfg, c); });
  return out;
}

}  // namespace penreg
