#pragma once

#include "penreg/error.hpp"
#include "penreg/random.hpp"

#include <Eigen/Dense>

#include <concepts>
#include <cstdint>
#include <future>
#include <map>
#include <string>
#include <vector>

namespace penreg {

/// Anything with a dimension and an unnormalized log density on R^dim.
template <class T>
concept LogDensityTarget = requires(const T& t, const Eigen::VectorXd& u) {
  { t.dim() } -> std::convertible_to<Eigen::Index>;
  { t.log_density(u) } -> std::convertible_to<double>;
};

/// A target that also returns its gradient; the return value is the log density.
template <class T>
concept GradientTarget = LogDensityTarget<T> && requires(const T& t, const Eigen::VectorXd& u, Eigen::VectorXd& g) {
  { t.log_density_gradient(u, g) } -> std::convertible_to<double>;
};

template <LogDensityTarget T>
Eigen::VectorXd constrain_draw(const T& target, const Eigen::VectorXd& u) {
  if constexpr (requires { target.constrain(u); }) {
    return target.constrain(u);
  } else {
    return u;
  }
}

template <LogDensityTarget T>
std::vector<std::string> target_parameter_names(const T& target) {
  if constexpr (requires { target.parameter_names(); }) {
    return target.parameter_names();
  } else {
    std::vector<std::string> names;
    for (Eigen::Index k = 0; k < target.dim(); ++k) names.push_back("theta[" + std::to_string(k + 1) + "]");
    return names;
  }
}

struct ChainConfig {
  int n_chains = 4;
  int n_warmup = 1000;
  int n_draws = 2000;
  std::uint64_t seed = 0;
  /// One unconstrained start per chain; empty means uniform(-2, 2) per coordinate.
  std::vector<Eigen::VectorXd> init;

  void validate(Eigen::Index dim) const {
    require(n_chains >= 1, ErrorKind::InvalidArgument, "n_chains must be at least 1");
    require(n_draws >= 1, ErrorKind::InvalidArgument, "n_draws must be at least 1");
    require(n_warmup >= 0, ErrorKind::InvalidArgument, "n_warmup must be non-negative");
    if (!init.empty()) {
      require(init.size() == static_cast<std::size_t>(n_chains), ErrorKind::InvalidArgument,
              "provided inits must match n_chains");
      for (const auto& v : init)
        require(v.size() == dim, ErrorKind::DimensionMismatch, "init vector has the wrong dimension");
    }
  }

  Eigen::VectorXd initial_point(int chain, Eigen::Index dim, Rng& rng) const {
    if (!init.empty()) return init[static_cast<std::size_t>(chain)];
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    Eigen::VectorXd u(dim);
    for (auto& v : u) v = unif(rng);
    return u;
  }
};

struct IterationMeta {
  bool accepted = false;
  bool divergent = false;
  double energy = 0.0;  // HMC: Hamiltonian of the state kept by the transition
  double log_density = 0.0;
};

struct Chain {
  Eigen::MatrixXd draws;  // iteration x parameter, constrained scale
  std::vector<IterationMeta> meta;
  double step_size = 0.0;     // HMC: adapted step size
  Eigen::VectorXd mass;       // HMC: adapted diagonal mass
  double proposal_sd = 0.0;   // MH: adapted proposal scale
};

/// Post-warmup draws from all chains plus per-iteration bookkeeping.
struct DrawMatrix {
  std::vector<std::string> names;
  std::vector<Chain> chains;
  std::vector<std::string> warnings;
  /// Named scalars attached by callers, e.g. the wall time of an initialization phase.
  std::map<std::string, double> metadata;

  int n_chains() const { return static_cast<int>(chains.size()); }
  int n_draws() const { return chains.empty() ? 0 : static_cast<int>(chains.front().draws.rows()); }
  Eigen::Index n_params() const { return chains.empty() ? 0 : chains.front().draws.cols(); }

  Eigen::Index index_of(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return static_cast<Eigen::Index>(k);
    fail(ErrorKind::InvalidArgument, "no parameter named " + name);
  }

  /// iteration x chain matrix for one parameter.
  Eigen::MatrixXd parameter(Eigen::Index k) const {
    Eigen::MatrixXd out(n_draws(), n_chains());
    for (int c = 0; c < n_chains(); ++c) out.col(c) = chains[static_cast<std::size_t>(c)].draws.col(k);
    return out;
  }

  /// All chains stacked: (chains * draws) x parameter.
  Eigen::MatrixXd pooled() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n_chains()) * n_draws(), n_params());
    for (int c = 0; c < n_chains(); ++c)
      out.middleRows(static_cast<Eigen::Index>(c) * n_draws(), n_draws()) = chains[static_cast<std::size_t>(c)].draws;
    return out;
  }

  double acceptance_rate() const {
    double acc = 0.0, total = 0.0;
    for (const auto& ch : chains)
      for (const auto& m : ch.meta) {
        acc += m.accepted ? 1.0 : 0.0;
        total += 1.0;
      }
    return total > 0.0 ? acc / total : 0.0;
  }

  double divergent_fraction() const {
    double div = 0.0, total = 0.0;
    for (const auto& ch : chains)
      for (const auto& m : ch.meta) {
        div += m.divergent ? 1.0 : 0.0;
        total += 1.0;
      }
    return total > 0.0 ? div / total : 0.0;
  }
};

/// Runs `run(c)` for every chain on its own thread and collects the results in
/// chain order. Each chain owns its RNG, so the output does not depend on scheduling.
template <class Run>
std::vector<Chain> run_chains(int n_chains, const Run& run) {
  std::vector<std::future<Chain>> pending;
  pending.reserve(static_cast<std::size_t>(n_chains));
  for (int c = 0; c < n_chains; ++c) pending.push_back(std::async(std::launch::async, run, c));
  std::vector<Chain> chains;
  chains.reserve(pending.size());
  for (auto& f : pending) chains.push_back(f.get());
  return chains;
}

}  // namespace penreg
