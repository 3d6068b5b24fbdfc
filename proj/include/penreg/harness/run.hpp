#pragma once

#include "penreg/harness/config.hpp"
#include "penreg/harness/report.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>
#include <vector>

namespace penreg {

/// Called once per finished row, possibly from a worker thread (serialized).
using RowCallback = std::function<void(const ResultRow&)>;

namespace detail {

inline std::size_t method_index(Method m) {
  return static_cast<std::size_t>(std::find(kAllMethods.begin(), kAllMethods.end(), m) - kAllMethods.begin());
}

inline ResultRow fit_row(Method method, const FitProblem& prob, const MethodSettings& settings, std::uint64_t seed,
                         ResultRow row) {
  row.method = to_string(method);
  try {
    const FitMetrics m = fit_and_evaluate(method, prob, settings, seed);
    if (m.quality) row.quality = m.quality->label;
    row.runtime_seconds = m.runtime_seconds;
    row.runtime_pathfinder_seconds = m.runtime_pathfinder_seconds;
    row.mse = m.mse;
    row.coverage = m.coverage;
    row.bias_intercept = m.bias_intercept;
    row.bias_nonzero = m.bias_nonzero;
    row.bias_zero = m.bias_zero;
    row.rhat_max = m.rhat_max;
    row.ess_min_ratio = m.ess_min_ratio;
    row.div_ratio = m.div_ratio;
    row.k_hat = m.k_hat;
    row.auc = m.auc;
    row.accuracy = m.accuracy;
    row.brier = m.brier;
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
  }
  return row;
}

/// Runs task(i) for i in [0, n) on up to `workers` threads.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
  const auto n_threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline ModelSpec spec_for(const RunConfig& cfg, const PriorConfig& prior, Likelihood lik, Eigen::Index p,
                          std::optional<int> true_nonzero) {
  PriorConfig pr = prior;
  if (pr.kind == PriorKind::regularized_horseshoe && pr.p0 <= 0.0 && true_nonzero) {
    pr.p0 = std::clamp(static_cast<double>(*true_nonzero), 1.0, std::max(1.0, static_cast<double>(p) - 1.0));
  }
  return make_spec(lik, pr, p, 10.0, cfg.parameterization);
}

/// Fits every (prior, method) pair on one prepared train/test split.
inline std::vector<ResultRow> fit_all(const RunConfig& cfg, FitProblem prob, Likelihood lik,
                                      std::optional<int> true_nonzero, std::uint64_t split_seed, ResultRow base,
                                      const RowCallback& on_row, std::mutex& callback_mutex) {
  std::vector<ResultRow> rows;
  for (std::size_t k = 0; k < cfg.priors.size(); ++k) {
    base.prior = cfg.priors[k].name;
    for (Method m : cfg.methods) {
      const std::uint64_t seed = derive_seed(split_seed, 1000 + 16 * k + method_index(m));
      ResultRow row;
      try {
        prob.spec = spec_for(cfg, cfg.priors[k].prior, lik, prob.train.p(), true_nonzero);
        row = fit_row(m, prob, cfg.settings_for(m), seed, base);
      } catch (const std::exception& e) {
        row = base;
        row.method = to_string(m);
        row.failed = true;
        row.error = e.what();
      }
      if (on_row) {
        const std::lock_guard lock(callback_mutex);
        on_row(row);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::vector<ResultRow> collect_sorted(std::vector<std::vector<ResultRow>>& per_task) {
  std::vector<ResultRow> out;
  for (auto& v : per_task)
    for (auto& r : v) out.push_back(std::move(r));
  std::stable_sort(out.begin(), out.end(), row_less);
  return out;
}

}  // namespace detail

/// Fold of each row after a seeded shuffle: the shuffled order is cut into
/// `folds` contiguous blocks whose sizes differ by at most one.
inline std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
  require(folds >= 2, ErrorKind::ConfigError, "cross-validation needs at least 2 folds");
  require(n >= folds, ErrorKind::InvalidArgument, "fewer rows than folds");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng = make_rng(seed, 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (int f = 0; f < folds; ++f) {
    const Eigen::Index lo = n * f / folds, hi = n * (f + 1) / folds;
    for (Eigen::Index i = lo; i < hi; ++i) fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = f;
  }
  return fold;
}

/// Train/test split for one fold; standardization is fit on the training rows only.
inline std::pair<Dataset, Dataset> fold_split(const Dataset& data, const std::vector<int>& fold, int f) {
  std::vector<Eigen::Index> tr, te;
  for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
  Dataset train{data.x(tr, Eigen::all), data.y(tr)};
  Dataset test{data.x(te, Eigen::all), data.y(te)};
  train = standardize(train);
  test = apply_standardization(train, test);
  return {std::move(train), std::move(test)};
}

/// K-fold cross-validation of every configured method on a CSV dataset.
inline std::vector<ResultRow> crossvalidate(const RunConfig& cfg, const Dataset& data, const RowCallback& on_row = {}) {
  cfg.validate();
  require(cfg.data.has_value(), ErrorKind::ConfigError, "cross-validation needs a data target");
  validate(data);
  const Likelihood lik = cfg.data->type == csv::OutcomeType::binary ? Likelihood::logistic : Likelihood::linear;
  const std::vector<int> fold = fold_assignment(data.n(), cfg.folds, cfg.seed);
  std::vector<std::vector<ResultRow>> per_fold(static_cast<std::size_t>(cfg.folds));
  std::mutex callback_mutex;
  detail::parallel_for(per_fold.size(), cfg.n_workers, [&](std::size_t f) {
    ResultRow base;
    base.target = cfg.target_name();
    base.fold = static_cast<int>(f);
    const std::uint64_t fold_seed = derive_seed(cfg.seed, f + 1);
    FitProblem prob;
    try {
      auto [train, test] = fold_split(data, fold, static_cast<int>(f));
      prob.train = std::move(train);
      prob.x_test = std::move(test.x);
      prob.y_test = std::move(test.y);
    } catch (const std::exception& e) {
      for (const auto& pr : cfg.priors) {
        for (Method m : cfg.methods) {
          ResultRow row = base;
          row.prior = pr.name;
          row.method = to_string(m);
          row.failed = true;
          row.error = e.what();
          per_fold[f].push_back(row);
        }
      }
      return;
    }
    per_fold[f] = detail::fit_all(cfg, std::move(prob), lik, std::nullopt, fold_seed, base, on_row, callback_mutex);
  });
  return detail::collect_sorted(per_fold);
}

inline std::vector<ResultRow> crossvalidate(const RunConfig& cfg, const RowCallback& on_row = {}) {
  require(cfg.data.has_value(), ErrorKind::ConfigError, "cross-validation needs a data target");
  const Dataset data = csv::read_dataset(csv::read_file(cfg.data->path), cfg.data->outcome, cfg.data->type);
  return crossvalidate(cfg, data, on_row);
}

/// Simulation grid: each replication draws a fresh train/test set from the
/// scenario, standardizes with the training moments and fits every method.
/// Replications run in parallel on `n_workers` threads. CSV targets are
/// delegated to crossvalidate.
inline std::vector<ResultRow> run_grid(const RunConfig& cfg, const RowCallback& on_row = {}) {
  cfg.validate();
  if (cfg.data) return crossvalidate(cfg, on_row);
  const ScenarioConfig& scenario = *cfg.scenario;
  std::vector<std::vector<ResultRow>> per_rep(static_cast<std::size_t>(cfg.replications));
  std::mutex callback_mutex;
  detail::parallel_for(per_rep.size(), cfg.n_workers, [&](std::size_t r) {
    ResultRow base;
    base.target = scenario.name;
    base.replication = static_cast<int>(r);
    ScenarioConfig sc = scenario;
    sc.seed = derive_seed(cfg.seed, r);
    const SyntheticData sim = generate(sc);
    FitProblem prob;
    prob.train = standardize(sim.train);
    prob.x_test = apply_standardization(prob.train, sim.test.x);
    prob.y_test = sim.test.y;
    Eigen::VectorXd theta(sim.beta_true.size() + 1);
    theta << 0.0, sim.beta_true;
    prob.theta_true = std::move(theta);
    per_rep[r] = detail::fit_all(cfg, std::move(prob), Likelihood::linear, sc.k_nonzero(), sc.seed, base, on_row,
                                 callback_mutex);
  });
  return detail::collect_sorted(per_rep);
}

}  // namespace penreg
