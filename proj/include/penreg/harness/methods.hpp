#pragma once

#include "penreg/approx/advi.hpp"
#include "penreg/approx/laplace.hpp"
#include "penreg/approx/pathfinder.hpp"
#include "penreg/diagnostics/psis.hpp"
#include "penreg/diagnostics/quality.hpp"
#include "penreg/harness/ridge.hpp"
#include "penreg/predict/predict.hpp"
#include "penreg/samplers/gibbs.hpp"
#include "penreg/samplers/hmc.hpp"
#include "penreg/samplers/mh.hpp"

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace penreg {

enum class Method { hmc, pathfinder_hmc, mh, gibbs_ridge, gibbs_ssvs, vi_meanfield, vi_fullrank, laplace, ridge_baseline };

inline constexpr std::array<Method, 9> kAllMethods{Method::hmc,          Method::pathfinder_hmc, Method::mh,
                                                   Method::gibbs_ridge,  Method::gibbs_ssvs,     Method::vi_meanfield,
                                                   Method::vi_fullrank,  Method::laplace,        Method::ridge_baseline};

inline std::string to_string(Method m) {
  switch (m) {
    case Method::hmc: return "hmc";
    case Method::pathfinder_hmc: return "pathfinder_hmc";
    case Method::mh: return "mh";
    case Method::gibbs_ridge: return "gibbs_ridge";
    case Method::gibbs_ssvs: return "gibbs_ssvs";
    case Method::vi_meanfield: return "vi_meanfield";
    case Method::vi_fullrank: return "vi_fullrank";
    case Method::laplace: return "laplace";
    case Method::ridge_baseline: return "ridge_baseline";
  }
  return "unknown";
}

inline Method method_from_string(std::string_view s) {
  for (Method m : kAllMethods)
    if (to_string(m) == s) return m;
  fail(ErrorKind::ConfigError, "unknown method " + std::string(s));
}

inline bool is_mcmc(Method m) {
  return m == Method::hmc || m == Method::pathfinder_hmc || m == Method::mh || m == Method::gibbs_ridge ||
         m == Method::gibbs_ssvs;
}

/// Per-method knobs. Defaults: 4 chains x (1000 warmup + 2000 draws), 100
/// warmup after Pathfinder, VI up to 10000 iterations, 2000 approximate draws.
struct MethodSettings {
  int chains = 4;
  int warmup = 1000;
  int draws = 2000;
  int hybrid_warmup = 100;
  /// Ceiling of the jittered trajectory length for hmc and pathfinder_hmc.
  int max_leapfrog = 128;
  int vi_max_iter = 10000;
  int approx_draws = 2000;
  int laplace_budget = 10000;
  PathfinderConfig pathfinder;
  /// Normal prior sd for gibbs_ridge when the run's prior is not normal.
  double ridge_prior_scale = 1.0;
  /// Spike-and-slab prior for gibbs_ssvs when the run's prior is not spike_slab.
  PriorConfig ssvs_prior = PriorConfig::make_spike_slab();
  double alpha = 0.05;  // prediction interval level 1 - alpha
};

/// One fitting problem: standardized training data plus a held-out set.
struct FitProblem {
  ModelSpec spec;
  Dataset train;            // standardized; keeps the training transform
  Eigen::MatrixXd x_test;   // standardized with the training transform
  Eigen::VectorXd y_test;
  std::optional<Eigen::VectorXd> theta_true;  // (intercept, beta) on the original predictor scale
};

/// Metrics of one fit; every field is absent when it does not apply.
struct FitMetrics {
  double runtime_seconds = 0.0;
  std::optional<double> runtime_pathfinder_seconds;
  std::optional<QualityLabel> quality;
  std::optional<double> mse, coverage, bias_intercept, bias_nonzero, bias_zero;
  std::optional<double> rhat_max, ess_min_ratio, div_ratio, k_hat;
  std::optional<double> auc, accuracy, brier;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<Eigen::Index> regression_columns(const std::vector<std::string>& names) {
  std::vector<Eigen::Index> cols;
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == "beta0" || names[k] == "sigma" || names[k].rfind("beta[", 0) == 0)
      cols.push_back(static_cast<Eigen::Index>(k));
  return cols;
}

inline void add_mcmc_quality(const DrawMatrix& dm, FitMetrics& m) {
  const DiagnosticsReport rep = summarize_mcmc(dm, regression_columns(dm.names));
  m.rhat_max = rep.rhat_max;
  m.ess_min_ratio = rep.ess_min_ratio;
  m.div_ratio = rep.div_ratio;
  m.quality = rep.quality;
  for (const auto& w : rep.warnings) m.warnings.push_back(w);
  for (const auto& w : dm.warnings) m.warnings.push_back(w);
}

/// Pareto k-hat of log p - log q over the approximation's draws.
inline double approx_khat(const RegressionModel& model, const ApproxDraws& d) {
  Eigen::VectorXd log_p(d.unconstrained.rows());
  for (Eigen::Index i = 0; i < log_p.size(); ++i) {
    const double lp = model.log_density(d.unconstrained.row(i).transpose());
    log_p[i] = std::isfinite(lp) ? lp : -math::kInf;
  }
  return pareto_khat(importance_ratios(log_p, d.log_q)).k_hat;
}

inline void add_predictive_metrics(const FitProblem& prob, const PosteriorSample& post, std::uint64_t seed,
                                   double alpha, FitMetrics& m) {
  if (prob.spec.likelihood == Likelihood::linear) {
    const PredictionSummary s = summarize_ppd(ppd_linear(post, prob.x_test, seed), alpha);
    m.mse = mse(s.point, prob.y_test);
    m.coverage = coverage(s.lower, s.upper, prob.y_test);
  } else {
    const PredictionSummary s = summarize_ppd(ppd_logistic(post, prob.x_test), alpha);
    const BinaryMetrics b = binary_metrics(s.point, prob.y_test);
    m.auc = b.auc;
    m.accuracy = b.accuracy;
    m.brier = b.brier;
  }
}

inline void add_bias(const FitProblem& prob, const Eigen::VectorXd& theta_hat, FitMetrics& m) {
  if (!prob.theta_true) return;
  const GroupBias b = bias_by_group(theta_hat, *prob.theta_true, coefficient_groups(*prob.theta_true));
  m.bias_intercept = b.intercept;
  m.bias_nonzero = b.nonzero;
  m.bias_zero = b.zero;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Fits one method and evaluates it on the held-out rows. Runtime covers the
/// fit and, for approximations, drawing from the fitted distribution.
inline FitMetrics fit_and_evaluate(Method method, const FitProblem& prob, const MethodSettings& s, std::uint64_t seed) {
  FitMetrics m;
  const auto t0 = std::chrono::steady_clock::now();
  const ChainConfig chains{.n_chains = s.chains, .n_warmup = s.warmup, .n_draws = s.draws, .seed = seed};
  const bool linear = prob.spec.likelihood == Likelihood::linear;
  HmcConfig hmc;
  hmc.max_leapfrog = s.max_leapfrog;

  if (method == Method::ridge_baseline) {
    const RidgeFit fit = ridge_cv(prob.train.x, prob.train.y, !linear, seed);
    m.runtime_seconds = detail::seconds_since(t0);
    const Eigen::VectorXd pred = fit.predict(prob.x_test);
    if (linear) {
      m.mse = mse(pred, prob.y_test);
    } else {
      const BinaryMetrics b = binary_metrics(pred, prob.y_test);
      m.auc = b.auc;
      m.accuracy = b.accuracy;
      m.brier = b.brier;
    }
    if (prob.theta_true) {
      PosteriorSample point{{"beta0"}, Eigen::MatrixXd(1, fit.beta.size() + 1)};
      for (Eigen::Index j = 0; j < fit.beta.size(); ++j) point.names.push_back("beta[" + std::to_string(j + 1) + "]");
      point.draws(0, 0) = fit.intercept;
      point.draws.row(0).tail(fit.beta.size()) = fit.beta.transpose();
      detail::add_bias(prob, coefficients_on_original_scale(point, prob.train), m);
    }
    return m;
  }

  PosteriorSample post;
  if (is_mcmc(method)) {
    DrawMatrix dm;
    switch (method) {
      case Method::hmc: dm = hmc_sample(prob.spec, prob.train, chains, hmc); break;
      case Method::pathfinder_hmc: {
        PathfinderConfig pf = s.pathfinder;
        pf.seed = derive_seed(seed, 1);
        dm = pathfinder_init_hmc(prob.spec, prob.train, pf, chains, hmc, s.hybrid_warmup);
        m.runtime_pathfinder_seconds = dm.metadata.at("pathfinder_seconds");
        break;
      }
      case Method::mh: dm = mh_sample(prob.spec, prob.train, chains); break;
      case Method::gibbs_ridge: {
        require(linear, ErrorKind::InvalidArgument, "gibbs_ridge supports continuous outcomes only");
        const double scale = prob.spec.prior.kind == PriorKind::normal ? prob.spec.prior.scale : s.ridge_prior_scale;
        dm = gibbs_ridge_sample(prob.train, scale, chains, GibbsConfig{.intercept_scale = prob.spec.intercept_scale});
        break;
      }
      case Method::gibbs_ssvs: {
        require(linear, ErrorKind::InvalidArgument, "gibbs_ssvs supports continuous outcomes only");
        const PriorConfig prior = prob.spec.prior.kind == PriorKind::spike_slab ? prob.spec.prior : s.ssvs_prior;
        dm = gibbs_ssvs_sample(prob.train, prior, chains, GibbsConfig{.intercept_scale = prob.spec.intercept_scale});
        break;
      }
      default: break;
    }
    m.runtime_seconds = detail::seconds_since(t0);
    detail::add_mcmc_quality(dm, m);
    post = PosteriorSample::from(dm);
  } else {
    const RegressionModel model(prob.spec, prob.train);
    ApproxReport rep;
    if (method == Method::laplace) {
      rep = laplace_fit(prob.spec, prob.train, s.laplace_budget);
    } else {
      ViConfig vi;
      vi.max_iter = s.vi_max_iter;
      vi.seed = derive_seed(seed, 1);
      rep = advi_fit(model, method == Method::vi_meanfield ? VariationalFamily::meanfield : VariationalFamily::fullrank, vi);
    }
    const ApproxDraws draws = draw_from_approx(model, rep.approx, s.approx_draws, derive_seed(seed, 2));
    m.runtime_seconds = detail::seconds_since(t0);
    m.k_hat = detail::approx_khat(model, draws);
    m.quality = classify_quality(QualityMetrics{std::nullopt, std::nullopt, std::nullopt, m.k_hat});
    for (const auto& w : rep.warnings) m.warnings.push_back(w);
    post = PosteriorSample::from(model.parameter_names(), draws);
  }
  detail::add_predictive_metrics(prob, post, derive_seed(seed, 3), s.alpha, m);
  if (prob.theta_true) detail::add_bias(prob, coefficients_on_original_scale(post, prob.train), m);
  return m;
}

}  // namespace penreg
