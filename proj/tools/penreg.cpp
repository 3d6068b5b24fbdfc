#include "penreg/harness/run.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitAllFailed = 3;

struct Flags {
  std::string config;
  std::string scenario;
  std::string methods;
  std::string data;
  std::string outcome;
  std::string outcome_type;
  std::string out = "-";
  std::string format = "csv";
  std::string summary;
  std::optional<int> reps;
  std::optional<int> folds;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool quiet = false;
};

std::vector<penreg::Method> parse_methods(const std::string& list) {
  std::vector<penreg::Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(penreg::method_from_string(item));
  return out;
}

penreg::RunConfig build_config(const Flags& f) {
  penreg::RunConfig c;
  if (!f.config.empty()) {
    c = penreg::read_run_config(f.config);
  } else {
    c.n_workers = penreg::default_workers();
  }
  if (!f.scenario.empty()) {
    c.scenario = penreg::find_scenario(f.scenario);
    c.data.reset();
  }
  if (!f.data.empty()) {
    c.data = penreg::DataTarget{f.data, f.outcome, penreg::csv::OutcomeType::continuous};
    c.scenario.reset();
  }
  if (c.data) {
    if (!f.outcome.empty()) c.data->outcome = f.outcome;
    if (!f.outcome_type.empty()) {
      c.data->type = f.outcome_type == "binary" ? penreg::csv::OutcomeType::binary : penreg::csv::OutcomeType::continuous;
    }
  }
  if (!f.methods.empty()) c.methods = parse_methods(f.methods);
  if (f.reps) c.replications = *f.reps;
  if (f.folds) c.folds = *f.folds;
  if (f.seed) c.seed = *f.seed;
  if (f.workers) c.n_workers = *f.workers;
  c.validate();
  return c;
}

void print_progress(const penreg::ResultRow& r) {
  std::fprintf(stderr, "%s %s %s %s=%d %s", r.target.c_str(), r.prior.c_str(), r.method.c_str(),
               r.fold ? "fold" : "rep", r.fold ? *r.fold : r.replication, r.failed ? "failed" : "ok");
  if (r.runtime_seconds) std::fprintf(stderr, " %.2fs", *r.runtime_seconds);
  if (r.quality) std::fprintf(stderr, " %s", std::string(penreg::to_string(*r.quality)).c_str());
  if (r.failed) std::fprintf(stderr, " (%s)", r.error.c_str());
  std::fprintf(stderr, "\n");
}

int run_fits(const Flags& f, bool expect_data) {
  const penreg::RunConfig cfg = build_config(f);
  if (expect_data && !cfg.data) penreg::fail(penreg::ErrorKind::ConfigError, "fit needs --data or a data config");
  if (!expect_data && !cfg.scenario) {
    penreg::fail(penreg::ErrorKind::ConfigError, "simulate needs --scenario or a scenario config");
  }
  const auto format = penreg::report_format_from_string(f.format);
  penreg::RowCallback progress;
  if (!f.quiet) progress = print_progress;
  const auto rows = penreg::run_grid(cfg, progress);
  penreg::emit_report(rows, format, f.out);
  if (!f.summary.empty()) {
    const auto summary = penreg::aggregate_and_filter(rows, penreg::default_aggregate_config(rows));
    penreg::emit_summary(summary, format, f.summary);
  }
  const bool all_failed = std::all_of(rows.begin(), rows.end(), [](const penreg::ResultRow& r) { return r.failed; });
  return all_failed ? kExitAllFailed : 0;
}

int exit_code_for(penreg::ErrorKind k) {
  switch (k) {
    case penreg::ErrorKind::ConfigError: return kExitConfig;
    case penreg::ErrorKind::ParseError:
    case penreg::ErrorKind::OutcomeTypeMismatch:
    case penreg::ErrorKind::IoError:
    case penreg::ErrorKind::ConstantColumn:
    case penreg::ErrorKind::NonFinite:
    case penreg::ErrorKind::DimensionMismatch:
      return kExitData;
    default: return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian penalized regression: simulation studies and cross-validated fits"};
  app.require_subcommand(1);
  Flags f;
  std::string report_in;
  int min_usable = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON run configuration");
    sub->add_option("--methods", f.methods, "comma-separated methods, e.g. hmc,vi_meanfield");
    sub->add_option("--seed", f.seed, "master seed");
    sub->add_option("--out", f.out, "output path for result rows ('-' for stdout)");
    sub->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--summary", f.summary, "also write the aggregated summary here");
    sub->add_option("--workers", f.workers, "parallel replications or folds")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", f.quiet, "no progress lines on stderr");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run a simulation scenario for several methods");
  add_common(simulate);
  simulate->add_option("--scenario", f.scenario, "scenario name, 1a..4b");
  simulate->add_option("--reps", f.reps, "replications")->check(CLI::PositiveNumber);

  CLI::App* fit = app.add_subcommand("fit", "cross-validate methods on a CSV dataset");
  add_common(fit);
  fit->add_option("--data", f.data, "CSV file with a header row");
  fit->add_option("--outcome", f.outcome, "outcome column name");
  fit->add_option("--outcome-type", f.outcome_type, "continuous or binary")
      ->check(CLI::IsMember({"continuous", "binary"}));
  fit->add_option("--folds", f.folds, "number of folds");

  CLI::App* report = app.add_subcommand("report", "aggregate existing result rows");
  report->add_option("--in", report_in, "result rows (CSV or JSON)")->required();
  report->add_option("--out", f.out, "summary output path ('-' for stdout)");
  report->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  report->add_flag("--quiet", f.quiet, "accepted for symmetry; report prints no progress");
  report->add_option("--min-usable", min_usable, "usable runs needed for statistics (default 25, 1 for CV rows)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*simulate) return run_fits(f, false);
    if (*fit) return run_fits(f, true);
    const auto rows = penreg::read_rows_file(report_in);
    penreg::AggregateConfig agg = penreg::default_aggregate_config(rows);
    if (min_usable >= 0) agg.min_usable = min_usable;
    penreg::emit_summary(penreg::aggregate_and_filter(rows, agg), penreg::report_format_from_string(f.format), f.out);
    return 0;
  } catch (const penreg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (*report && e.kind() == penreg::ErrorKind::IoError) return kExitData;
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
