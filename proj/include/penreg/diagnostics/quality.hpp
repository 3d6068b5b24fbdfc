#pragma once

#include "penreg/diagnostics/ess.hpp"
#include "penreg/diagnostics/rhat.hpp"
#include "penreg/samplers/draws.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace penreg {

enum class Quality { good = 0, questionable = 1, bad = 2 };

inline std::string_view to_string(Quality q) {
  switch (q) {
    case Quality::good: return "good";
    case Quality::questionable: return "questionable";
    case Quality::bad: return "bad";
  }
  return "unknown";
}

/// Either the MCMC bundle (all three of rhat_max, ess_min_ratio, div_ratio)
/// or the approximation bundle (k_hat), never both.
struct QualityMetrics {
  std::optional<double> rhat_max;
  std::optional<double> ess_min_ratio;
  std::optional<double> div_ratio;
  std::optional<double> k_hat;
};

struct QualityReason {
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  Quality level = Quality::good;
};

struct QualityLabel {
  Quality label = Quality::good;
  std::vector<QualityReason> reasons;  // metrics that fell short of "good"
};

inline QualityLabel classify_quality(const QualityMetrics& m) {
  const bool mcmc = m.rhat_max || m.ess_min_ratio || m.div_ratio;
  const bool full_mcmc = m.rhat_max && m.ess_min_ratio && m.div_ratio;
  require(mcmc != m.k_hat.has_value(), ErrorKind::MissingMetric,
          "supply either the MCMC metrics or k_hat, not both or neither");
  require(!mcmc || full_mcmc, ErrorKind::MissingMetric, "MCMC quality needs rhat_max, ess_min_ratio and div_ratio");

  QualityLabel out;
  auto note = [&](const char* metric, double value, double threshold, Quality level) {
    if (level == Quality::good) return;
    out.reasons.push_back(QualityReason{metric, value, threshold, level});
    out.label = std::max(out.label, level);
  };
  if (mcmc) {
    // NaN metrics (e.g. zero-variance chains) count as bad
    const double rhat = *m.rhat_max, ess = *m.ess_min_ratio, div = *m.div_ratio;
    note("rhat", rhat, rhat > 1.1 || std::isnan(rhat) ? 1.1 : 1.05,
         rhat > 1.1 || std::isnan(rhat) ? Quality::bad : rhat > 1.05 ? Quality::questionable : Quality::good);
    note("ess_ratio", ess, ess < 0.1 || std::isnan(ess) ? 0.1 : 0.5,
         ess < 0.1 || std::isnan(ess) ? Quality::bad : ess < 0.5 ? Quality::questionable : Quality::good);
    note("divergent_ratio", div, 0.1, div > 0.1 || std::isnan(div) ? Quality::bad : Quality::good);
  } else {
    const double k = *m.k_hat;
    note("k_hat", k, k > 5.0 || std::isnan(k) ? 5.0 : 0.7,
         k > 5.0 || std::isnan(k) ? Quality::bad : k > 0.7 ? Quality::questionable : Quality::good);
  }
  return out;
}

struct ParameterDiagnostics {
  std::string name;
  double rhat = 0.0;        // split, rank-normalized
  double rhat_basic = 0.0;  // classical, unsplit
  double ess_bulk = 0.0;
};

struct DiagnosticsReport {
  std::vector<ParameterDiagnostics> parameters;
  double rhat_max = 0.0;
  double rhat_mean = 0.0;
  double ess_min_ratio = 0.0;
  double ess_mean = 0.0;
  double div_ratio = 0.0;
  QualityLabel quality;
  std::vector<std::string> warnings;
};

/// Convergence summary over the columns of `draws` listed in `columns`
/// (all columns when empty). Zero-variance parameters are reported as NaN
/// and make the label bad.
inline DiagnosticsReport summarize_mcmc(const DrawMatrix& draws, const std::vector<Eigen::Index>& columns = {}) {
  std::vector<Eigen::Index> cols = columns;
  if (cols.empty())
    for (Eigen::Index k = 0; k < draws.n_params(); ++k) cols.push_back(k);
  DiagnosticsReport rep;
  const double total = static_cast<double>(draws.n_chains()) * draws.n_draws();
  double rhat_sum = 0.0, ess_sum = 0.0;
  rep.rhat_max = 0.0;
  rep.ess_min_ratio = math::kInf;
  for (Eigen::Index k : cols) {
    ParameterDiagnostics pd;
    pd.name = draws.names[static_cast<std::size_t>(k)];
    const ChainSet cs = draws.parameter(k);
    try {
      pd.rhat = split_rhat_rank_normalized(cs);
      pd.rhat_basic = cs.cols() >= 2 ? rhat_basic(cs) : math::kNaN;
      pd.ess_bulk = ess_bulk(cs);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroVariance) throw;
      pd.rhat = pd.rhat_basic = pd.ess_bulk = math::kNaN;
      rep.warnings.push_back("ZeroVariance: " + pd.name);
    }
    rhat_sum += pd.rhat;
    ess_sum += pd.ess_bulk;
    rep.rhat_max = std::isnan(pd.rhat) || std::isnan(rep.rhat_max) ? math::kNaN : std::max(rep.rhat_max, pd.rhat);
    const double ratio = pd.ess_bulk / total;
    rep.ess_min_ratio = std::isnan(ratio) || std::isnan(rep.ess_min_ratio) ? math::kNaN : std::min(rep.ess_min_ratio, ratio);
    rep.parameters.push_back(std::move(pd));
  }
  const auto count = static_cast<double>(cols.size());
  rep.rhat_mean = rhat_sum / count;
  rep.ess_mean = ess_sum / count;
  rep.div_ratio = draws.divergent_fraction();
  rep.quality = classify_quality(QualityMetrics{rep.rhat_max, rep.ess_min_ratio, rep.div_ratio, std::nullopt});
  return rep;
}

}  // namespace penreg
