#pragma once

#include "penreg/error.hpp"

#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace penreg {

enum class PriorKind { normal, student_t, spike_slab, horseshoe, regularized_horseshoe };

inline std::string_view to_string(PriorKind k) {
  switch (k) {
    case PriorKind::normal: return "normal";
    case PriorKind::student_t: return "student_t";
    case PriorKind::spike_slab: return "spike_slab";
    case PriorKind::horseshoe: return "horseshoe";
    case PriorKind::regularized_horseshoe: return "regularized_horseshoe";
  }
  return "unknown";
}

inline PriorKind prior_kind_from_string(std::string_view s) {
  if (s == "normal") return PriorKind::normal;
  if (s == "student_t") return PriorKind::student_t;
  if (s == "spike_slab") return PriorKind::spike_slab;
  if (s == "horseshoe") return PriorKind::horseshoe;
  if (s == "regularized_horseshoe") return PriorKind::regularized_horseshoe;
  fail(ErrorKind::ConfigError, "unknown prior kind '" + std::string(s) + "'");
}

/// Prior on the regression coefficients. Only the fields belonging to `kind`
/// are read; the factories below set sensible defaults for the rest.
struct PriorConfig {
  PriorKind kind = PriorKind::regularized_horseshoe;

  // normal(0, scale) and student_t(df, 0, scale)
  double scale = 1.0;
  double df = 3.0;

  // spike-and-slab: beta_j ~ pi N(0, slab_sd^2) + (1 - pi) N(0, spike_sd^2)
  double spike_sd = 0.001;
  double slab_sd = 1.0;
  double inclusion = 0.5;

  // horseshoe: tau ~ C+(0, sigma_tau)
  double sigma_tau = 1.0;

  // regularized horseshoe: lambda_j ~ t+(df_local), tau ~ C+(0, tau0(p0)),
  // c^2 ~ Inv-Gamma(slab_df / 2, slab_df * slab_scale^2 / 2).
  // p0 <= 0 means "not set"; make_spec resolves it.
  double df_local = 3.0;
  double p0 = 0.0;
  double slab_df = 1.0;
  double slab_scale = 2.0;

  static PriorConfig make_normal(double scale) {
    PriorConfig c;
    c.kind = PriorKind::normal;
    c.scale = scale;
    return c;
  }
  static PriorConfig make_student_t(double df, double scale) {
    PriorConfig c;
    c.kind = PriorKind::student_t;
    c.df = df;
    c.scale = scale;
    return c;
  }
  static PriorConfig make_spike_slab(double spike_sd = 0.001, double slab_sd = 1.0, double inclusion = 0.5) {
    PriorConfig c;
    c.kind = PriorKind::spike_slab;
    c.spike_sd = spike_sd;
    c.slab_sd = slab_sd;
    c.inclusion = inclusion;
    return c;
  }
  static PriorConfig make_horseshoe(double sigma_tau = 1.0) {
    PriorConfig c;
    c.kind = PriorKind::horseshoe;
    c.sigma_tau = sigma_tau;
    return c;
  }
  static PriorConfig make_regularized_horseshoe(double df_local = 3.0, double p0 = 0.0, double slab_df = 1.0,
                                                double slab_scale = 2.0) {
    PriorConfig c;
    c.kind = PriorKind::regularized_horseshoe;
    c.df_local = df_local;
    c.p0 = p0;
    c.slab_df = slab_df;
    c.slab_scale = slab_scale;
    return c;
  }

  bool is_horseshoe_family() const {
    return kind == PriorKind::horseshoe || kind == PriorKind::regularized_horseshoe;
  }

  /// Checks the hyperparameters for `kind` against `p` predictors.
  void validate(long p) const {
    auto positive = [](double v, const char* name) {
      require(v > 0.0, ErrorKind::InvalidArgument, std::string(name) + " must be positive");
    };
    switch (kind) {
      case PriorKind::normal: positive(scale, "normal scale"); break;
      case PriorKind::student_t:
        positive(df, "student_t df");
        positive(scale, "student_t scale");
        break;
      case PriorKind::spike_slab:
        positive(spike_sd, "spike sd");
        positive(slab_sd, "slab sd");
        require(spike_sd < slab_sd, ErrorKind::InvalidArgument, "spike sd must be smaller than slab sd");
        require(inclusion > 0.0 && inclusion < 1.0, ErrorKind::InvalidArgument, "inclusion must lie in (0, 1)");
        break;
      case PriorKind::horseshoe: positive(sigma_tau, "sigma_tau"); break;
      case PriorKind::regularized_horseshoe:
        positive(df_local, "df_local");
        positive(slab_df, "slab df");
        positive(slab_scale, "slab scale");
        require(p0 > 0.0 && p0 < static_cast<double>(p), ErrorKind::InvalidSparsity,
                "p0 must satisfy 0 < p0 < p");
        break;
    }
  }
};

/// The four prior configurations of the sensitivity study.
inline std::vector<std::pair<std::string, PriorConfig>> sensitivity_priors() {
  return {
      {"reg_hs_df1", PriorConfig::make_regularized_horseshoe(1.0)},
      {"reg_hs_df3", PriorConfig::make_regularized_horseshoe(3.0)},
      {"normal_0.01", PriorConfig::make_normal(0.01)},
      {"student_t_3_0.1", PriorConfig::make_student_t(3.0, 0.1)},
  };
}

}  // namespace penreg
