#pragma once

#include "penreg/diagnostics/quality.hpp"
#include "penreg/harness/csv.hpp"
#include "penreg/math.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace penreg {

/// One fit of one method on one replication (simulation) or fold (CV).
struct ResultRow {
  std::string target;
  std::string prior;
  std::string method;
  int replication = 0;
  std::optional<int> fold;
  bool failed = false;
  std::optional<Quality> quality;
  std::optional<double> runtime_seconds, runtime_pathfinder_seconds;
  std::optional<double> mse, coverage, bias_intercept, bias_nonzero, bias_zero;
  std::optional<double> rhat_max, ess_min_ratio, div_ratio, k_hat;
  std::optional<double> auc, accuracy, brier;
  std::string error;

  /// Ran and was not labelled bad. Rows without a label (ridge) count when they ran.
  bool usable() const { return !failed && (!quality || *quality != Quality::bad); }
};

inline bool row_less(const ResultRow& a, const ResultRow& b) {
  return std::tie(a.target, a.prior, a.method, a.replication, a.fold) <
         std::tie(b.target, b.prior, b.method, b.replication, b.fold);
}

/// Per (target, prior, method) aggregate over usable rows.
struct SummaryRow {
  std::string target;
  std::string prior;
  std::string method;
  int n_runs = 0;
  int n_estimates = 0;  // runs that returned estimates
  int n_usable = 0;     // returned estimates of non-bad quality
  int n_good = 0, n_questionable = 0, n_bad = 0;
  double output_percent = 0.0;
  int wins = 0;
  std::optional<double> mse, mse_lower, mse_upper;
  std::optional<double> coverage, coverage_lower, coverage_upper;
  std::optional<double> bias_intercept, bias_nonzero, bias_zero;
  std::optional<double> runtime_seconds, runtime_pathfinder_seconds;
  std::optional<double> rhat_max, ess_min_ratio, div_ratio, k_hat;
  std::optional<double> auc, accuracy, brier;
};

namespace report_detail {

using OptField = std::optional<double> ResultRow::*;
using SumField = std::optional<double> SummaryRow::*;

struct RowMetric {
  const char* name;
  OptField field;
  bool runtime;
};

inline const std::array<RowMetric, 14>& row_metrics() {
  static const std::array<RowMetric, 14> m{{
      {"runtime_seconds", &ResultRow::runtime_seconds, true},
      {"runtime_pathfinder_seconds", &ResultRow::runtime_pathfinder_seconds, true},
      {"mse", &ResultRow::mse, false},
      {"coverage", &ResultRow::coverage, false},
      {"bias_intercept", &ResultRow::bias_intercept, false},
      {"bias_nonzero", &ResultRow::bias_nonzero, false},
      {"bias_zero", &ResultRow::bias_zero, false},
      {"rhat_max", &ResultRow::rhat_max, false},
      {"ess_min_ratio", &ResultRow::ess_min_ratio, false},
      {"div_ratio", &ResultRow::div_ratio, false},
      {"k_hat", &ResultRow::k_hat, false},
      {"auc", &ResultRow::auc, false},
      {"accuracy", &ResultRow::accuracy, false},
      {"brier", &ResultRow::brier, false},
  }};
  return m;
}

struct SummaryMetric {
  const char* name;
  SumField field;
  bool runtime;
};

inline const std::array<SummaryMetric, 18>& summary_metrics() {
  static const std::array<SummaryMetric, 18> m{{
      {"mse", &SummaryRow::mse, false},
      {"mse_lower", &SummaryRow::mse_lower, false},
      {"mse_upper", &SummaryRow::mse_upper, false},
      {"coverage", &SummaryRow::coverage, false},
      {"coverage_lower", &SummaryRow::coverage_lower, false},
      {"coverage_upper", &SummaryRow::coverage_upper, false},
      {"bias_intercept", &SummaryRow::bias_intercept, false},
      {"bias_nonzero", &SummaryRow::bias_nonzero, false},
      {"bias_zero", &SummaryRow::bias_zero, false},
      {"runtime_seconds", &SummaryRow::runtime_seconds, true},
      {"runtime_pathfinder_seconds", &SummaryRow::runtime_pathfinder_seconds, true},
      {"rhat_max", &SummaryRow::rhat_max, false},
      {"ess_min_ratio", &SummaryRow::ess_min_ratio, false},
      {"div_ratio", &SummaryRow::div_ratio, false},
      {"k_hat", &SummaryRow::k_hat, false},
      {"auc", &SummaryRow::auc, false},
      {"accuracy", &SummaryRow::accuracy, false},
      {"brier", &SummaryRow::brier, false},
  }};
  return m;
}

inline std::string format_number(double v, bool runtime) {
  char buf[64];
  if (runtime) {
    std::snprintf(buf, sizeof buf, "%.3f", v);
  } else if (std::isnan(v)) {
    return "nan";
  } else if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  } else {
    std::snprintf(buf, sizeof buf, "%.17g", v);
  }
  return buf;
}

inline std::string format_opt(const std::optional<double>& v, bool runtime) {
  return v ? format_number(*v, runtime) : std::string();
}

inline std::optional<double> parse_opt(const std::string& s, std::size_t line_no, const char* column) {
  if (s.empty()) return std::nullopt;
  if (s == "nan") return math::kNaN;
  if (s == "inf") return math::kInf;
  if (s == "-inf") return -math::kInf;
  return csv::parse_double(s, line_no, column);
}

inline double round_runtime(double v) { return std::round(v * 1000.0) / 1000.0; }

inline nlohmann::json json_number(const std::optional<double>& v, bool runtime) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return runtime ? round_runtime(*v) : *v;
}

inline std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  require(file.good(), ErrorKind::IoError, "cannot write " + path);
  return file;
}

inline Quality quality_from_string(const std::string& s, std::size_t line_no) {
  for (Quality q : {Quality::good, Quality::questionable, Quality::bad})
    if (to_string(q) == s) return q;
  fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": unknown quality '" + s + "'");
}

}  // namespace report_detail

enum class ReportFormat { csv, json };

inline ReportFormat report_format_from_string(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  fail(ErrorKind::ConfigError, "format must be csv or json");
}

/// Fixed CSV column order for result rows.
inline std::vector<std::string> result_header() {
  std::vector<std::string> h{"target", "prior", "method", "replication", "fold", "status", "quality"};
  for (const auto& m : report_detail::row_metrics()) h.emplace_back(m.name);
  h.emplace_back("error");
  return h;
}

inline std::vector<std::string> result_fields(const ResultRow& r) {
  std::vector<std::string> f{r.target,
                             r.prior,
                             r.method,
                             std::to_string(r.replication),
                             r.fold ? std::to_string(*r.fold) : std::string(),
                             r.failed ? "failed" : "ok",
                             r.quality ? std::string(to_string(*r.quality)) : std::string()};
  for (const auto& m : report_detail::row_metrics()) f.push_back(report_detail::format_opt(r.*m.field, m.runtime));
  f.push_back(r.error);
  return f;
}

inline void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << csv::join(result_header()) << '\n';
  for (const auto& r : rows) out << csv::join(result_fields(r)) << '\n';
}

inline nlohmann::json rows_to_json(const std::vector<ResultRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"target", r.target},
                     {"prior", r.prior},
                     {"method", r.method},
                     {"replication", r.replication},
                     {"fold", r.fold ? nlohmann::json(*r.fold) : nlohmann::json(nullptr)},
                     {"status", r.failed ? "failed" : "ok"},
                     {"quality", r.quality ? nlohmann::json(std::string(to_string(*r.quality))) : nlohmann::json(nullptr)}};
    for (const auto& m : report_detail::row_metrics()) j[m.name] = report_detail::json_number(r.*m.field, m.runtime);
    j["error"] = r.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.error);
    arr.push_back(std::move(j));
  }
  return arr;
}

/// Reads rows written by write_rows_csv.
inline std::vector<ResultRow> read_rows_csv(std::istream& in) {
  const csv::Table t = csv::parse(in);
  require(t.header == result_header(), ErrorKind::ParseError, "line 1: not a result-row header");
  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const std::size_t line = t.line_numbers[i];
    ResultRow r;
    r.target = f[0];
    r.prior = f[1];
    r.method = f[2];
    r.replication = static_cast<int>(csv::parse_double(f[3], line, "replication"));
    if (!f[4].empty()) r.fold = static_cast<int>(csv::parse_double(f[4], line, "fold"));
    require(f[5] == "ok" || f[5] == "failed", ErrorKind::ParseError,
            "line " + std::to_string(line) + ": status must be ok or failed");
    r.failed = f[5] == "failed";
    if (!f[6].empty()) r.quality = report_detail::quality_from_string(f[6], line);
    std::size_t k = 7;
    for (const auto& m : report_detail::row_metrics()) r.*m.field = report_detail::parse_opt(f[k++], line, m.name);
    r.error = f[k];
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<ResultRow> rows_from_json(const nlohmann::json& arr) {
  require(arr.is_array(), ErrorKind::ParseError, "result rows must be a JSON array");
  std::vector<ResultRow> rows;
  try {
    for (const auto& j : arr) {
      ResultRow r;
      r.target = j.at("target").get<std::string>();
      r.prior = j.at("prior").get<std::string>();
      r.method = j.at("method").get<std::string>();
      r.replication = j.at("replication").get<int>();
      if (!j.at("fold").is_null()) r.fold = j.at("fold").get<int>();
      r.failed = j.at("status").get<std::string>() == "failed";
      if (!j.at("quality").is_null()) r.quality = report_detail::quality_from_string(j.at("quality").get<std::string>(), 0);
      for (const auto& m : report_detail::row_metrics())
        if (j.contains(m.name) && !j.at(m.name).is_null()) r.*m.field = j.at(m.name).get<double>();
      if (j.contains("error") && !j.at("error").is_null()) r.error = j.at("error").get<std::string>();
      rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("malformed result row: ") + e.what());
  }
  return rows;
}

/// Reads result rows from a CSV or JSON file (JSON when the first
/// non-blank character is '[').
inline std::vector<ResultRow> read_rows_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::IoError, "cannot open " + path);
  in >> std::ws;
  if (in.peek() == '[') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::ParseError, std::string("invalid JSON: ") + e.what());
    }
    return rows_from_json(j);
  }
  return read_rows_csv(in);
}

inline void emit_report(const std::vector<ResultRow>& rows, ReportFormat format, const std::string& path) {
  std::ofstream file;
  std::ostream& out = report_detail::open_out(path, file);
  if (format == ReportFormat::csv) {
    write_rows_csv(out, rows);
  } else {
    out << rows_to_json(rows).dump(2) << '\n';
  }
  require(!out.fail(), ErrorKind::IoError, "write failed for " + (path.empty() ? std::string("stdout") : path));
}

// ---- aggregation ----

struct AggregateConfig {
  /// Fewer usable runs than this leaves the statistics absent.
  int min_usable = 25;
};

/// 25 usable replications for simulation rows, 1 for cross-validation rows.
inline AggregateConfig default_aggregate_config(const std::vector<ResultRow>& rows) {
  const bool cv = std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.fold.has_value(); });
  return AggregateConfig{cv ? 1 : 25};
}

namespace report_detail {

inline std::optional<double> mean_of(const std::vector<const ResultRow*>& rows, OptField f) {
  double sum = 0.0;
  int n = 0;
  for (const auto* r : rows) {
    if (!(r->*f) || std::isnan(*(r->*f))) continue;
    sum += *(r->*f);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

inline std::pair<std::optional<double>, std::optional<double>> interval_of(const std::vector<const ResultRow*>& rows,
                                                                           OptField f) {
  std::vector<double> v;
  for (const auto* r : rows)
    if ((r->*f) && !std::isnan(*(r->*f))) v.push_back(*(r->*f));
  if (v.empty()) return {std::nullopt, std::nullopt};
  std::sort(v.begin(), v.end());
  return {math::quantile_sorted(v, 0.025), math::quantile_sorted(v, 0.975)};
}

}  // namespace report_detail

/// Drops failed and bad-quality rows, then per (target, prior, method)
/// averages the metrics, takes 2.5/97.5% empirical intervals of MSE and
/// coverage and counts lowest-error wins per dataset. A dataset is one
/// (target, prior, replication, fold); the error is MSE, or Brier when no
/// MSE is present. Ties go to the method whose name sorts first. Methods
/// with no usable rows are left out.
inline std::vector<SummaryRow> aggregate_and_filter(const std::vector<ResultRow>& rows, const AggregateConfig& cfg) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::vector<const ResultRow*>> all, usable;
  for (const auto& r : rows) {
    all[{r.target, r.prior, r.method}].push_back(&r);
    if (r.usable()) usable[{r.target, r.prior, r.method}].push_back(&r);
  }

  using DatasetKey = std::tuple<std::string, std::string, int, std::optional<int>>;
  std::map<DatasetKey, const ResultRow*> best;
  auto error_of = [](const ResultRow& r) -> std::optional<double> {
    if (r.mse && !std::isnan(*r.mse)) return r.mse;
    if (r.brier && !std::isnan(*r.brier)) return r.brier;
    return std::nullopt;
  };
  for (const auto& r : rows) {
    if (!r.usable()) continue;
    const auto e = error_of(r);
    if (!e) continue;
    const DatasetKey k{r.target, r.prior, r.replication, r.fold};
    auto it = best.find(k);
    if (it == best.end() || *e < *error_of(*it->second) || (*e == *error_of(*it->second) && r.method < it->second->method))
      best[k] = &r;
  }
  std::map<Key, int> wins;
  for (const auto& [k, r] : best) ++wins[{r->target, r->prior, r->method}];

  std::vector<SummaryRow> out;
  for (const auto& [key, good_rows] : usable) {
    const auto& every = all.at(key);
    SummaryRow s;
    std::tie(s.target, s.prior, s.method) = key;
    s.n_runs = static_cast<int>(every.size());
    for (const auto* r : every) {
      if (r->failed) continue;
      ++s.n_estimates;
      if (r->quality == Quality::good) ++s.n_good;
      if (r->quality == Quality::questionable) ++s.n_questionable;
      if (r->quality == Quality::bad) ++s.n_bad;
    }
    s.n_usable = static_cast<int>(good_rows.size());
    s.output_percent = 100.0 * s.n_estimates / s.n_runs;
    s.wins = wins.count(key) ? wins.at(key) : 0;
    if (s.n_usable >= cfg.min_usable) {
      using report_detail::interval_of;
      using report_detail::mean_of;
      s.mse = mean_of(good_rows, &ResultRow::mse);
      std::tie(s.mse_lower, s.mse_upper) = interval_of(good_rows, &ResultRow::mse);
      s.coverage = mean_of(good_rows, &ResultRow::coverage);
      std::tie(s.coverage_lower, s.coverage_upper) = interval_of(good_rows, &ResultRow::coverage);
      s.bias_intercept = mean_of(good_rows, &ResultRow::bias_intercept);
      s.bias_nonzero = mean_of(good_rows, &ResultRow::bias_nonzero);
      s.bias_zero = mean_of(good_rows, &ResultRow::bias_zero);
      s.runtime_seconds = mean_of(good_rows, &ResultRow::runtime_seconds);
      s.runtime_pathfinder_seconds = mean_of(good_rows, &ResultRow::runtime_pathfinder_seconds);
      s.rhat_max = mean_of(good_rows, &ResultRow::rhat_max);
      s.ess_min_ratio = mean_of(good_rows, &ResultRow::ess_min_ratio);
      s.div_ratio = mean_of(good_rows, &ResultRow::div_ratio);
      s.k_hat = mean_of(good_rows, &ResultRow::k_hat);
      s.auc = mean_of(good_rows, &ResultRow::auc);
      s.accuracy = mean_of(good_rows, &ResultRow::accuracy);
      s.brier = mean_of(good_rows, &ResultRow::brier);
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<std::string> summary_header() {
  std::vector<std::string> h{"target",        "prior",  "method",         "n_runs",
                             "n_estimates",   "n_usable", "n_good",       "n_questionable",
                             "n_bad",         "output_percent", "wins"};
  for (const auto& m : report_detail::summary_metrics()) h.emplace_back(m.name);
  return h;
}

inline void emit_summary(const std::vector<SummaryRow>& rows, ReportFormat format, const std::string& path) {
  std::ofstream file;
  std::ostream& out = report_detail::open_out(path, file);
  if (format == ReportFormat::csv) {
    out << csv::join(summary_header()) << '\n';
    for (const auto& s : rows) {
      std::vector<std::string> f{s.target,
                                 s.prior,
                                 s.method,
                                 std::to_string(s.n_runs),
                                 std::to_string(s.n_estimates),
                                 std::to_string(s.n_usable),
                                 std::to_string(s.n_good),
                                 std::to_string(s.n_questionable),
                                 std::to_string(s.n_bad),
                                 report_detail::format_number(s.output_percent, false),
                                 std::to_string(s.wins)};
      for (const auto& m : report_detail::summary_metrics()) f.push_back(report_detail::format_opt(s.*m.field, m.runtime));
      out << csv::join(f) << '\n';
    }
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : rows) {
      nlohmann::json j{{"target", s.target},         {"prior", s.prior},
                       {"method", s.method},         {"n_runs", s.n_runs},
                       {"n_estimates", s.n_estimates}, {"n_usable", s.n_usable},
                       {"n_good", s.n_good},         {"n_questionable", s.n_questionable},
                       {"n_bad", s.n_bad},           {"output_percent", s.output_percent},
                       {"wins", s.wins}};
      for (const auto& m : report_detail::summary_metrics()) j[m.name] = report_detail::json_number(s.*m.field, m.runtime);
      arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
  }
  require(!out.fail(), ErrorKind::IoError, "write failed for " + (path.empty() ? std::string("stdout") : path));
}

}  // namespace penreg
