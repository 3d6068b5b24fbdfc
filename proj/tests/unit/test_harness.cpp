#include "penreg/harness/run.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace penreg;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig c;
  c.name = "small";
  c.n_train = 60;
  c.n_test = 200;
  c.p = 5;
  c.sparsity = 0.4;
  return c;
}

MethodSettings quick_settings() {
  MethodSettings s;
  s.chains = 2;
  s.warmup = 150;
  s.draws = 200;
  s.hybrid_warmup = 50;
  s.max_leapfrog = 16;
  s.vi_max_iter = 2000;
  s.approx_draws = 400;
  s.pathfinder.n_paths = 2;
  s.pathfinder.n_final_draws = 200;
  return s;
}

RunConfig small_run(std::vector<Method> methods, int reps = 2) {
  RunConfig c;
  c.scenario = small_scenario();
  c.methods = std::move(methods);
  c.replications = reps;
  c.seed = 11;
  c.settings = quick_settings();
  return c;
}

std::string csv_without_runtimes(std::vector<ResultRow> rows) {
  for (auto& r : rows) r.runtime_seconds = r.runtime_pathfinder_seconds = std::nullopt;
  std::ostringstream out;
  write_rows_csv(out, rows);
  return out.str();
}

ResultRow make_row(std::string method, int rep, std::optional<Quality> q, double mse, double cov) {
  ResultRow r;
  r.target = "t";
  r.prior = "p";
  r.method = std::move(method);
  r.replication = rep;
  r.quality = q;
  r.mse = mse;
  r.coverage = cov;
  r.runtime_seconds = 1.0;
  return r;
}

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << content;
  return path.string();
}

}  // namespace

TEST(Method, NamesRoundTrip) {
  for (Method m : kAllMethods) EXPECT_EQ(method_from_string(to_string(m)), m);
  try {
    method_from_string("nuts");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
}

TEST(Ridge, LambdaGrid) {
  const auto g = ridge_lambda_grid();
  ASSERT_EQ(g.size(), 13U);
  EXPECT_NEAR(g.front(), 1e-4, 1e-16);
  EXPECT_NEAR(g.back(), 1e4, 1e-8);
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(g[k] / g[k - 1], std::pow(10.0, 8.0 / 12.0), 1e-9);
}

TEST(Ridge, LinearMatchesAugmentedLeastSquares) {
  Rng rng = make_rng(3);
  const Dataset d = penreg::testing::toy_dataset(rng, 40, 4, false);
  const double lambda = 2.5;
  // oracle: least squares on [1 X; 0 sqrt(lambda) I] against [y; 0]
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(44, 5);
  a.topRows(40).col(0).setOnes();
  a.topLeftCorner(40, 5).rightCols(4) = d.x;
  a.bottomRightCorner(4, 4) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(44);
  b.head(40) = d.y;
  const Eigen::VectorXd w = a.colPivHouseholderQr().solve(b);
  const RidgeFit f = ridge_linear(d.x, d.y, lambda);
  EXPECT_NEAR(f.intercept, w[0], 1e-10);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(f.beta[j], w[j + 1], 1e-10);
}

TEST(Ridge, LogisticIsStationary) {
  Rng rng = make_rng(4);
  const Dataset d = penreg::testing::toy_dataset(rng, 80, 3, true);
  const double lambda = 0.7;
  const RidgeFit f = ridge_logistic(d.x, d.y, lambda);
  const Eigen::VectorXd r = f.predict(d.x) - d.y;
  EXPECT_NEAR(r.sum(), 0.0, 1e-8);
  const Eigen::VectorXd g = d.x.transpose() * r + lambda * f.beta;
  EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Ridge, CrossValidationPicksGridPoint) {
  Rng rng = make_rng(5);
  const Dataset d = penreg::testing::toy_dataset(rng, 60, 4, false);
  const RidgeFit f = ridge_cv(d.x, d.y, false, 9);
  const auto g = ridge_lambda_grid();
  EXPECT_TRUE(std::find(g.begin(), g.end(), f.lambda) != g.end());
  EXPECT_EQ(ridge_cv(d.x, d.y, false, 9).lambda, f.lambda);
}

TEST(Csv, QuotedFieldsAndLineNumbers) {
  std::istringstream in("a,\"b,c\",d\n1,\"x\"\"y\",3\n\n4,5,6\n");
  const csv::Table t = csv::parse(in);
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b,c", "d"}));
  ASSERT_EQ(t.rows.size(), 2U);
  EXPECT_EQ(t.rows[0][1], "x\"y");
  EXPECT_EQ(t.line_numbers[1], 4U);
}

TEST(Csv, ParseErrorNamesLine) {
  std::istringstream in("y,x1\n1,2\n3,abc\n");
  const csv::Table t = csv::parse(in);
  try {
    csv::read_dataset(t, "y", csv::OutcomeType::continuous);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::istringstream ragged("y,x1\n1,2,3\n");
  EXPECT_THROW(csv::parse(ragged), Error);
}

TEST(Csv, BinaryOutcomeMustBeZeroOne) {
  std::istringstream in("y,x1\n1,2\n2,3\n");
  const csv::Table t = csv::parse(in);
  try {
    csv::read_dataset(t, "y", csv::OutcomeType::binary);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutcomeTypeMismatch);
  }
  EXPECT_NO_THROW(csv::read_dataset(t, "y", csv::OutcomeType::continuous));
}

TEST(Folds, TenRowsFiveFoldsTestTwoEach) {
  const auto f = fold_assignment(10, 5, 1);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(std::count(f.begin(), f.end(), k), 2);
  EXPECT_EQ(fold_assignment(10, 5, 1), f);
  EXPECT_NE(fold_assignment(100, 5, 1), fold_assignment(100, 5, 2));
  EXPECT_THROW(fold_assignment(3, 5, 1), Error);
}

TEST(Folds, TestFoldIsNotRecentred) {
  Rng rng = make_rng(8);
  Dataset d = penreg::testing::toy_dataset(rng, 50, 3, false);
  const auto fold = fold_assignment(50, 5, 3);
  for (Eigen::Index i = 0; i < 50; ++i)
    if (fold[static_cast<std::size_t>(i)] == 0) d.x.row(i).array() += 5.0;  // shift the test fold
  const auto [train, test] = fold_split(d, fold, 0);
  EXPECT_NEAR(train.x.colwise().mean().cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_GT(test.x.colwise().mean().minCoeff(), 1.0);
  EXPECT_EQ(train.n() + test.n(), 50);
}

TEST(RunGrid, RidgeBaselineRows) {
  RunConfig c = small_run({Method::ridge_baseline}, 3);
  c.scenario = find_scenario("1a");
  const auto rows = run_grid(c);
  ASSERT_EQ(rows.size(), 3U);
  for (const auto& r : rows) {
    EXPECT_FALSE(r.failed);
    EXPECT_TRUE(r.mse.has_value());
    EXPECT_FALSE(r.quality.has_value());
    EXPECT_FALSE(r.k_hat || r.rhat_max || r.ess_min_ratio || r.div_ratio);
    EXPECT_FALSE(r.coverage.has_value());
    EXPECT_TRUE(r.bias_nonzero.has_value());
  }
}

TEST(RunGrid, MetricBundlesByMethodFamily) {
  const auto rows = run_grid(small_run({Method::hmc, Method::vi_meanfield, Method::laplace, Method::gibbs_ridge}, 1));
  ASSERT_EQ(rows.size(), 4U);
  for (const auto& r : rows) {
    ASSERT_FALSE(r.failed) << r.method << ": " << r.error;
    const bool mcmc = r.rhat_max && r.ess_min_ratio && r.div_ratio;
    const bool any_mcmc = r.rhat_max || r.ess_min_ratio || r.div_ratio;
    EXPECT_EQ(mcmc, any_mcmc);
    EXPECT_NE(mcmc, r.k_hat.has_value()) << r.method;
    EXPECT_TRUE(r.quality.has_value());
    EXPECT_TRUE(r.mse && r.coverage && r.bias_intercept && r.bias_nonzero && r.bias_zero);
    EXPECT_FALSE(r.auc || r.accuracy || r.brier);
    EXPECT_FALSE(r.runtime_pathfinder_seconds.has_value());
  }
}

TEST(RunGrid, HybridCarriesPathfinderRuntime) {
  const auto rows = run_grid(small_run({Method::pathfinder_hmc}, 1));
  ASSERT_EQ(rows.size(), 1U);
  ASSERT_FALSE(rows[0].failed) << rows[0].error;
  ASSERT_TRUE(rows[0].runtime_pathfinder_seconds.has_value());
  EXPECT_GT(*rows[0].runtime_pathfinder_seconds, 0.0);
  EXPECT_LE(*rows[0].runtime_pathfinder_seconds, *rows[0].runtime_seconds);
}

TEST(RunGrid, FailedFitIsRecordedNotThrown) {
  RunConfig c = small_run({Method::laplace, Method::ridge_baseline}, 1);
  c.priors = {{"ssvs", PriorConfig::make_spike_slab()}};
  const auto rows = run_grid(c);
  ASSERT_EQ(rows.size(), 2U);
  const auto& lap = rows[0].method == "laplace" ? rows[0] : rows[1];
  EXPECT_TRUE(lap.failed);
  EXPECT_NE(lap.error.find("InvalidArgument"), std::string::npos);
  EXPECT_FALSE(lap.mse.has_value());
}

TEST(RunGrid, DeterministicApartFromRuntime) {
  RunConfig c = small_run({Method::hmc, Method::vi_meanfield, Method::pathfinder_hmc, Method::ridge_baseline}, 2);
  const auto a = run_grid(c);
  c.n_workers = 2;
  const auto b = run_grid(c);
  EXPECT_EQ(csv_without_runtimes(a), csv_without_runtimes(b));
}

TEST(RunGrid, RowsSortedAndSeedsDistinct) {
  const auto rows = run_grid(small_run({Method::vi_meanfield, Method::ridge_baseline}, 3));
  ASSERT_EQ(rows.size(), 6U);
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end(), row_less));
  std::set<double> mses;
  for (const auto& r : rows)
    if (r.method == "ridge_baseline") mses.insert(*r.mse);
  EXPECT_EQ(mses.size(), 3U);
}

TEST(CrossValidate, OneClassFoldLeavesAucAbsent) {
  // 10 rows, 5 folds; outcome 1 on a single row, so four test folds hold one class only
  std::string text = "y,x1,x2\n";
  for (int i = 0; i < 10; ++i)
    text += std::string(i == 3 ? "1" : "0") + "," + std::to_string(0.3 * i) + "," + std::to_string((i * 7) % 5) + "\n";
  RunConfig c;
  c.data = DataTarget{write_temp("penreg_one_class.csv", text), "y", csv::OutcomeType::binary};
  c.methods = {Method::ridge_baseline};
  c.folds = 5;
  c.seed = 2;
  const auto rows = crossvalidate(c);
  ASSERT_EQ(rows.size(), 5U);
  int with_auc = 0;
  for (const auto& r : rows) {
    ASSERT_FALSE(r.failed) << r.error;
    EXPECT_TRUE(r.fold.has_value());
    EXPECT_TRUE(r.brier.has_value());
    with_auc += r.auc.has_value();
  }
  EXPECT_EQ(with_auc, 1);  // only the fold holding the positive row has both classes
  const auto summary = aggregate_and_filter(rows, default_aggregate_config(rows));
  ASSERT_EQ(summary.size(), 1U);
  EXPECT_EQ(summary[0].auc, std::find_if(rows.begin(), rows.end(), [](const ResultRow& r) { return r.auc; })->auc);
}

TEST(Aggregate, AllBadRowsDropTheMethod) {
  std::vector<ResultRow> rows{make_row("a", 0, Quality::bad, 1.0, 0.9), make_row("a", 1, Quality::bad, 1.0, 0.9),
                              make_row("b", 0, Quality::good, 1.0, 0.9)};
  const auto s = aggregate_and_filter(rows, AggregateConfig{1});
  ASSERT_EQ(s.size(), 1U);
  EXPECT_EQ(s[0].method, "b");
}

TEST(Aggregate, SingleGoodRowGivesDegenerateInterval) {
  const auto s = aggregate_and_filter({make_row("a", 0, Quality::good, 0.7, 0.93)}, AggregateConfig{1});
  ASSERT_EQ(s.size(), 1U);
  EXPECT_EQ(s[0].mse, 0.7);
  EXPECT_EQ(s[0].mse_lower, 0.7);
  EXPECT_EQ(s[0].mse_upper, 0.7);
  EXPECT_EQ(s[0].coverage_lower, 0.93);
  EXPECT_EQ(s[0].wins, 1);
  EXPECT_EQ(s[0].output_percent, 100.0);
}

TEST(Aggregate, TooFewUsableRunsLeaveStatisticsAbsent) {
  std::vector<ResultRow> rows;
  for (int r = 0; r < 24; ++r) rows.push_back(make_row("a", r, Quality::good, 0.5, 0.95));
  rows.push_back(make_row("a", 24, Quality::bad, 0.5, 0.95));
  auto s = aggregate_and_filter(rows, default_aggregate_config(rows));
  ASSERT_EQ(s.size(), 1U);
  EXPECT_EQ(s[0].n_usable, 24);
  EXPECT_FALSE(s[0].mse.has_value());
  rows.push_back(make_row("a", 25, Quality::questionable, 0.5, 0.95));
  s = aggregate_and_filter(rows, default_aggregate_config(rows));
  EXPECT_EQ(s[0].n_usable, 25);
  EXPECT_EQ(s[0].mse, 0.5);
}

TEST(Aggregate, IntervalIsEmpiricalQuantile) {
  std::vector<ResultRow> rows;
  for (int r = 0; r < 41; ++r) rows.push_back(make_row("a", r, Quality::good, r, 0.9));
  const auto s = aggregate_and_filter(rows, AggregateConfig{1});
  // type-7 quantile of 0..40: 0.025 * 40 = 1, 0.975 * 40 = 39
  EXPECT_DOUBLE_EQ(*s[0].mse_lower, 1.0);
  EXPECT_DOUBLE_EQ(*s[0].mse_upper, 39.0);
  EXPECT_DOUBLE_EQ(*s[0].mse, 20.0);
}

TEST(Aggregate, WinsTieBreakByMethodName) {
  std::vector<ResultRow> rows{make_row("b", 0, Quality::good, 0.5, 0.9), make_row("a", 0, Quality::good, 0.5, 0.9),
                              make_row("c", 1, Quality::good, 0.4, 0.9), make_row("a", 1, Quality::good, 0.6, 0.9),
                              make_row("b", 2, Quality::bad, 0.1, 0.9), make_row("a", 2, Quality::good, 0.6, 0.9)};
  const auto s = aggregate_and_filter(rows, AggregateConfig{1});
  std::map<std::string, int> wins;
  int total = 0;
  for (const auto& r : s) {
    wins[r.method] = r.wins;
    total += r.wins;
  }
  EXPECT_EQ(wins["a"], 2);  // tie on dataset 0, and dataset 2 since b was bad
  EXPECT_EQ(wins["b"], 0);
  EXPECT_EQ(wins["c"], 1);
  EXPECT_LE(total, 3);
}

TEST(Aggregate, AddingBadRowsNeverChangesStatistics) {
  Rng rng = make_rng(21);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ResultRow> rows;
    for (int r = 0; r < 10; ++r)
      for (const char* m : {"a", "b"})
        rows.push_back(make_row(m, r, r % 3 == 0 ? Quality::questionable : Quality::good, u(rng), u(rng) / 2));
    const auto before = aggregate_and_filter(rows, AggregateConfig{1});
    for (int k = 0; k < 5; ++k) {
      auto bad = make_row(k % 2 ? "a" : "b", static_cast<int>(u(rng) * 5), Quality::bad, u(rng) / 10, u(rng));
      rows.push_back(bad);
      ResultRow crashed = make_row("a", 3, std::nullopt, 0.0, 0.0);
      crashed.failed = true;
      crashed.mse = crashed.coverage = std::nullopt;
      rows.push_back(crashed);
    }
    const auto after = aggregate_and_filter(rows, AggregateConfig{1});
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
      EXPECT_EQ(before[i].mse, after[i].mse);
      EXPECT_EQ(before[i].mse_lower, after[i].mse_lower);
      EXPECT_EQ(before[i].mse_upper, after[i].mse_upper);
      EXPECT_EQ(before[i].coverage, after[i].coverage);
      EXPECT_EQ(before[i].runtime_seconds, after[i].runtime_seconds);
      EXPECT_EQ(before[i].wins, after[i].wins);
      EXPECT_EQ(before[i].n_usable, after[i].n_usable);
    }
  }
}

TEST(Report, EmptyRowsGiveHeaderOnly) {
  std::ostringstream out;
  write_rows_csv(out, {});
  EXPECT_EQ(out.str(), csv::join(result_header()) + "\n");
  EXPECT_EQ(result_header().front(), "target");
  EXPECT_EQ(result_header().back(), "error");
}

TEST(Report, CsvRoundTripIsExact) {
  auto rows = run_grid(small_run({Method::vi_meanfield, Method::gibbs_ridge, Method::ridge_baseline}, 2));
  ResultRow failed = make_row("laplace", 0, std::nullopt, 0.0, 0.0);
  failed.failed = true;
  failed.mse = failed.coverage = failed.runtime_seconds = std::nullopt;
  failed.error = "ModeNotFound: line search failed, \"quoted\"";
  rows.push_back(failed);
  rows.back().fold = 3;
  std::ostringstream first;
  write_rows_csv(first, rows);
  std::istringstream in(first.str());
  const auto back = read_rows_csv(in);
  ASSERT_EQ(back.size(), rows.size());
  std::ostringstream second;
  write_rows_csv(second, back);
  EXPECT_EQ(first.str(), second.str());
  EXPECT_EQ(back[0].mse, rows[0].mse);  // 17 significant digits round-trip doubles exactly
}

TEST(Report, RuntimeHasThreeDecimals) {
  ResultRow r = make_row("a", 0, Quality::good, 0.5, 0.9);
  r.runtime_seconds = 1.23456;
  const auto f = result_fields(r);
  EXPECT_EQ(f[7], "1.235");
  const auto j = rows_to_json({r});
  EXPECT_DOUBLE_EQ(j[0]["runtime_seconds"].get<double>(), 1.235);
  EXPECT_TRUE(j[0]["k_hat"].is_null());
  EXPECT_TRUE(j[0]["fold"].is_null());
  EXPECT_EQ(j[0]["quality"], "good");
}

TEST(Report, JsonRowsRoundTrip) {
  std::vector<ResultRow> rows{make_row("a", 0, Quality::good, 0.5, 0.9), make_row("b", 1, std::nullopt, 0.25, 1.0)};
  rows[1].fold = 2;
  rows[1].auc = 0.75;
  const auto back = rows_from_json(rows_to_json(rows));
  std::ostringstream a, b;
  write_rows_csv(a, rows);
  write_rows_csv(b, back);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Report, UnwritablePathIsIoError) {
  try {
    emit_report({}, ReportFormat::csv, "/nonexistent-dir/rows.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
}

TEST(Report, ReadsEitherFormatFromFile) {
  std::vector<ResultRow> rows{make_row("a", 0, Quality::good, 0.5, 0.9)};
  const auto dir = std::filesystem::temp_directory_path();
  emit_report(rows, ReportFormat::csv, (dir / "penreg_rows.csv").string());
  emit_report(rows, ReportFormat::json, (dir / "penreg_rows.json").string());
  EXPECT_EQ(read_rows_file((dir / "penreg_rows.csv").string()).size(), 1U);
  EXPECT_EQ(read_rows_file((dir / "penreg_rows.json").string())[0].mse, 0.5);
}

TEST(Config, ParsesFullExample) {
  std::istringstream in(R"({
    "scenario": {"base": "2b", "name": "custom", "n_train": 80},
    "methods": ["hmc", "vi_meanfield"],
    "prior": {"kind": "normal", "scale": 0.5, "name": "ridge_prior"},
    "parameterization": "centered",
    "replications": 7, "seed": 99, "n_workers": 3,
    "method_settings": {"default": {"draws": 500}, "hmc": {"chains": 2}}
  })");
  const RunConfig c = parse_run_config(in);
  ASSERT_TRUE(c.scenario.has_value());
  EXPECT_EQ(c.scenario->name, "custom");
  EXPECT_EQ(c.scenario->n_train, 80);
  EXPECT_EQ(c.scenario->p, 100);
  EXPECT_EQ(c.scenario->coef_pattern, CoefPattern::different);
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::hmc, Method::vi_meanfield}));
  ASSERT_EQ(c.priors.size(), 1U);
  EXPECT_EQ(c.priors[0].name, "ridge_prior");
  EXPECT_EQ(c.priors[0].prior.kind, PriorKind::normal);
  EXPECT_EQ(c.priors[0].prior.scale, 0.5);
  EXPECT_EQ(c.parameterization, Parameterization::centered);
  EXPECT_EQ(c.replications, 7);
  EXPECT_EQ(c.seed, 99U);
  EXPECT_EQ(c.n_workers, 3);
  EXPECT_EQ(c.settings_for(Method::hmc).chains, 2);
  EXPECT_EQ(c.settings_for(Method::hmc).draws, 500);
  EXPECT_EQ(c.settings_for(Method::vi_meanfield).chains, 4);
  EXPECT_EQ(c.settings_for(Method::vi_meanfield).draws, 500);
}

TEST(Config, DefaultsMirrorMethodTable) {
  std::istringstream in(R"({"scenario": "1a", "methods": ["hmc"]})");
  const RunConfig c = parse_run_config(in);
  EXPECT_EQ(c.settings.chains, 4);
  EXPECT_EQ(c.settings.warmup, 1000);
  EXPECT_EQ(c.settings.draws, 2000);
  EXPECT_EQ(c.settings.hybrid_warmup, 100);
  EXPECT_EQ(c.settings.vi_max_iter, 10000);
  EXPECT_EQ(c.settings.approx_draws, 2000);
  EXPECT_EQ(c.settings.pathfinder.n_paths, 4);
  EXPECT_EQ(c.settings.pathfinder.max_lbfgs_iter, 1000);
  EXPECT_FALSE(c.settings.pathfinder.psis_resample);
  ASSERT_EQ(c.priors.size(), 1U);
  EXPECT_EQ(c.priors[0].prior.kind, PriorKind::regularized_horseshoe);
  EXPECT_EQ(c.priors[0].prior.df_local, 3.0);
  EXPECT_EQ(c.parameterization, Parameterization::noncentered);
}

TEST(Config, SensitivityPreset) {
  std::istringstream in(R"({"scenario": "1a", "methods": ["vi_meanfield"], "preset": "sensitivity"})");
  const RunConfig c = parse_run_config(in);
  ASSERT_EQ(c.priors.size(), 4U);
  EXPECT_EQ(c.priors[0].prior.df_local, 1.0);
  EXPECT_EQ(c.priors[2].prior.kind, PriorKind::normal);
  EXPECT_EQ(c.priors[3].prior.kind, PriorKind::student_t);
}

TEST(Config, RejectsMalformedInput) {
  auto kind_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_run_config(in);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::IoError;  // sentinel: no error
  };
  EXPECT_EQ(kind_of("{"), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of(R"({"scenario": "1a", "methods": ["hmc"], "bogus": 1})"), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of(R"({"scenario": "9z", "methods": ["hmc"]})"), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of(R"({"scenario": "1a", "methods": []})"), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of(R"({"scenario": "1a", "methods": ["hmc"], "replications": 0})"), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of(R"({"scenario": "1a", "data": {"path": "x.csv", "outcome": "y"}, "methods": ["hmc"]})"),
            ErrorKind::ConfigError);
  EXPECT_EQ(kind_of(R"({"data": {"path": "x.csv", "outcome": "y"}, "methods": ["hmc"], "folds": 1})"),
            ErrorKind::ConfigError);
  EXPECT_EQ(kind_of(R"({"scenario": "1a", "methods": ["hmc"], "replications": "many"})"), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of(R"({"scenario": "1a", "methods": ["hmc"], "method_settings": {"hmc": {"chains": 0}}})"),
            ErrorKind::ConfigError);
}

TEST(Config, ScenarioJsonRoundTrip) {
  for (const auto& sc : scenario_table()) {
    const ScenarioConfig back = config_json::scenario_from_json(config_json::scenario_to_json(sc));
    EXPECT_EQ(back.name, sc.name);
    EXPECT_EQ(back.p, sc.p);
    EXPECT_EQ(back.sparsity, sc.sparsity);
    EXPECT_EQ(back.correlation, sc.correlation);
    EXPECT_EQ(back.r2, sc.r2);
    EXPECT_EQ(back.cov_structure, sc.cov_structure);
    EXPECT_EQ(back.coef_pattern, sc.coef_pattern);
  }
}

TEST(Config, ShippedConfigsParse) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(PENREG_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(read_run_config(entry.path().string())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 3);
}
