#pragma once

#include "penreg/error.hpp"
#include "penreg/model/dataset.hpp"
#include "penreg/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace penreg {

enum class CovStructure { partial, full };
enum class CoefPattern { equal, different };

inline std::string to_string(CovStructure s) { return s == CovStructure::partial ? "partial" : "full"; }
inline std::string to_string(CoefPattern c) { return c == CoefPattern::equal ? "equal" : "different"; }

struct ScenarioConfig {
  std::string name;
  int n_train = 100;
  int n_test = 1000;
  int p = 20;
  double sparsity = 0.2;
  double correlation = 0.5;
  double r2 = 0.5;
  CovStructure cov_structure = CovStructure::partial;
  CoefPattern coef_pattern = CoefPattern::equal;
  std::uint64_t seed = 0;

  int k_nonzero() const { return static_cast<int>(std::floor(sparsity * p + 1e-9)); }

  void validate() const {
    require(n_train >= 2 && n_test >= 1 && p >= 1, ErrorKind::ConfigError, "scenario sizes must be positive");
    require(sparsity > 0.0 && sparsity < 1.0, ErrorKind::ConfigError, "sparsity must lie in (0, 1)");
    require(k_nonzero() >= 1, ErrorKind::ConfigError, "sparsity * p must give at least one nonzero coefficient");
    require(correlation >= 0.0 && correlation < 1.0, ErrorKind::ConfigError, "correlation must lie in [0, 1)");
    require(r2 > 0.0 && r2 < 1.0, ErrorKind::ConfigError, "r2 must lie in (0, 1)");
  }
};

struct SyntheticData {
  Dataset train;
  Dataset test;
  Eigen::VectorXd beta_true;  // after scaling; no intercept
  double scale_factor = 0.0;
};

/// Unit-diagonal covariance; `partial` correlates only the first k predictors.
inline Eigen::MatrixXd build_covariance(int p, int k_nonzero, double correlation, CovStructure structure) {
  require(p >= 1 && k_nonzero >= 0 && k_nonzero <= p, ErrorKind::InvalidArgument, "need 0 <= k <= p");
  const int block = structure == CovStructure::full ? p : k_nonzero;
  if (block > 1) {
    require(correlation > -1.0 / (block - 1.0) && correlation < 1.0, ErrorKind::NotPositiveDefinite,
            "compound-symmetric correlation outside (-1/(k-1), 1)");
  }
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(p, p);
  sigma.topLeftCorner(block, block).setConstant(correlation);
  sigma.diagonal().setOnes();
  return sigma;
}

/// First k entries 1 (equal) or 1..k (different), the rest 0; before scaling.
inline Eigen::VectorXd build_coefficients(int p, int k_nonzero, CoefPattern pattern) {
  require(k_nonzero >= 1 && k_nonzero <= p, ErrorKind::InvalidArgument, "need 1 <= k <= p");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < k_nonzero; ++j) b[j] = pattern == CoefPattern::equal ? 1.0 : j + 1.0;
  return b;
}

/// sqrt(r2 / (B' Sigma B)): the multiplier that makes Var(X beta) = r2.
inline double scale_factor(const Eigen::VectorXd& b, const Eigen::MatrixXd& sigma, double r2) {
  require(sigma.rows() == b.size() && sigma.cols() == b.size(), ErrorKind::DimensionMismatch,
          "covariance and coefficients differ in dimension");
  const double q = b.dot(sigma * b);
  if (!(q > 0.0)) fail(ErrorKind::ZeroSignal, "coefficient vector carries no signal");
  return std::sqrt(r2 / q);
}

namespace detail {

inline Dataset draw_rows(const Eigen::MatrixXd& chol, const Eigen::VectorXd& beta, double noise_sd, int n, Rng& rng) {
  Dataset d;
  d.x.resize(n, chol.rows());
  for (int i = 0; i < n; ++i) d.x.row(i) = (chol * standard_normal(rng, chol.rows())).transpose();
  d.y = d.x * beta + noise_sd * standard_normal(rng, n);
  return d;
}

}  // namespace detail

/// X ~ MVN(0, Sigma), Y = X B c + N(0, 1 - r2) with c the R^2-fixing factor.
/// Train and test come from separate substreams of the seed.
inline SyntheticData generate(const ScenarioConfig& cfg) {
  cfg.validate();
  const int k = cfg.k_nonzero();
  const Eigen::MatrixXd sigma = build_covariance(cfg.p, k, cfg.correlation, cfg.cov_structure);
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  require(llt.info() == Eigen::Success, ErrorKind::NotPositiveDefinite, "scenario covariance is not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();
  const Eigen::VectorXd b = build_coefficients(cfg.p, k, cfg.coef_pattern);
  SyntheticData out;
  out.scale_factor = scale_factor(b, sigma, cfg.r2);
  out.beta_true = b * out.scale_factor;
  const double noise_sd = std::sqrt(1.0 - cfg.r2);
  Rng train_rng = make_rng(cfg.seed, 1);
  Rng test_rng = make_rng(cfg.seed, 2);
  out.train = detail::draw_rows(chol, out.beta_true, noise_sd, cfg.n_train, train_rng);
  out.test = detail::draw_rows(chol, out.beta_true, noise_sd, cfg.n_test, test_rng);
  return out;
}

/// The eight simulation settings 1a..4b.
inline std::vector<ScenarioConfig> scenario_table() {
  struct Row {
    const char* id;
    int p;
    double sparsity, rho, r2;
  };
  static constexpr Row rows[] = {{"1", 20, 0.2, 0.5, 0.5}, {"2", 100, 0.05, 0.5, 0.5}, {"3", 500, 0.05, 0.9, 0.5},
                                 {"4", 1000, 0.05, 0.9, 0.2}};
  std::vector<ScenarioConfig> out;
  for (const Row& r : rows) {
    for (const bool b : {false, true}) {
      ScenarioConfig c;
      c.name = std::string(r.id) + (b ? "b" : "a");
      c.n_train = 100;
      c.n_test = 1000;
      c.p = r.p;
      c.sparsity = r.sparsity;
      c.correlation = r.rho;
      c.r2 = r.r2;
      c.cov_structure = b ? CovStructure::full : CovStructure::partial;
      c.coef_pattern = b ? CoefPattern::different : CoefPattern::equal;
      out.push_back(c);
    }
  }
  return out;
}

inline ScenarioConfig find_scenario(std::string_view name) {
  for (const auto& c : scenario_table())
    if (c.name == name) return c;
  fail(ErrorKind::ConfigError, "unknown scenario " + std::string(name));
}

}  // namespace penreg
