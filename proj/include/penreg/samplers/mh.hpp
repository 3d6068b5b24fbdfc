#pragma once

#include "penreg/math.hpp"
#include "penreg/model/regression.hpp"
#include "penreg/samplers/draws.hpp"

#include <cmath>
#include <optional>

namespace penreg {

/// Symmetric-proposal Metropolis ratio exp(log_p_new - log_p_old).
inline double mh_accept_ratio(double log_p_new, double log_p_old) {
  if (log_p_new == -math::kInf || std::isnan(log_p_new)) return 0.0;
  return std::exp(log_p_new - log_p_old);
}

/// One Metropolis step with a caller-supplied symmetric proposal.
/// Returns true when the proposal is accepted; `state` and `log_p` are updated in place.
template <class State, class LogDensity, class Propose>
bool mh_transition(State& state, double& log_p, const LogDensity& log_density, const Propose& propose, Rng& rng) {
  State candidate = propose(state, rng);
  const double lp = log_density(candidate);
  const double r = mh_accept_ratio(lp, log_p);
  if (r > uniform01(rng)) {
    state = std::move(candidate);
    log_p = lp;
    return true;
  }
  return false;
}

struct MhConfig {
  /// Starting proposal scale; unset means 2.38 / sqrt(dim).
  std::optional<double> proposal_sd;
  double target_accept = 0.234;
  bool adapt = true;
};

namespace detail {

template <LogDensityTarget T>
Chain run_mh_chain(const T& target, const ChainConfig& cfg, const MhConfig& mh, int chain_index) {
  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(chain_index) + 1);
  const Eigen::Index d = target.dim();
  Eigen::VectorXd theta = cfg.initial_point(chain_index, d, rng);
  double log_p = target.log_density(theta);
  require(std::isfinite(log_p), ErrorKind::NonFinite, "MH initial point has non-finite log density");

  double log_sd = std::log(mh.proposal_sd.value_or(2.38 / std::sqrt(static_cast<double>(d))));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto density = [&](const Eigen::VectorXd& v) { return target.log_density(v); };
  double sd = std::exp(log_sd);
  auto propose = [&](const Eigen::VectorXd& v, Rng& g) {
    Eigen::VectorXd out(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) out[k] = v[k] + sd * normal(g);
    return out;
  };

  for (int it = 0; it < cfg.n_warmup; ++it) {
    const bool acc = mh_transition(theta, log_p, density, propose, rng);
    if (mh.adapt) {
      log_sd += ((acc ? 1.0 : 0.0) - mh.target_accept) / std::pow(it + 1.0, 0.6);
      sd = std::exp(log_sd);
    }
  }

  Chain out;
  out.proposal_sd = sd;
  out.draws.resize(cfg.n_draws, d);
  out.meta.resize(static_cast<std::size_t>(cfg.n_draws));
  for (int it = 0; it < cfg.n_draws; ++it) {
    const bool acc = mh_transition(theta, log_p, density, propose, rng);
    out.draws.row(it) = constrain_draw(target, theta).transpose();
    out.meta[static_cast<std::size_t>(it)] = IterationMeta{acc, false, 0.0, log_p};
  }
  return out;
}

}  // namespace detail

/// Random-walk Metropolis with Gaussian proposals in the unconstrained space.
/// The proposal scale adapts toward `target_accept` during warmup only.
template <LogDensityTarget T>
DrawMatrix mh_sample(const T& target, const ChainConfig& cfg, const MhConfig& mh = {}) {
  cfg.validate(target.dim());
  if (mh.proposal_sd) require(*mh.proposal_sd > 0.0, ErrorKind::InvalidArgument, "proposal_sd must be positive");
  DrawMatrix out;
  out.names = target_parameter_names(target);
  out.chains = run_chains(cfg.n_chains, [&](int c) { return detail::run_mh_chain(target, cfg, mh, c); });
  if (out.acceptance_rate() < 0.01) out.warnings.push_back("AllRejected: post-warmup acceptance below 1%");
  return out;
}

inline DrawMatrix mh_sample(const ModelSpec& spec, const Dataset& data, const ChainConfig& cfg, const MhConfig& mh = {}) {
  const RegressionModel model(spec, data);
  return mh_sample(model, cfg, mh);
}

}  // namespace penreg
