#pragma once

#include "penreg/model/regression.hpp"
#include "penreg/samplers/draws.hpp"
#include "penreg/samplers/leapfrog.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace penreg {

struct HmcConfig {
  /// Fixed step size; unset means dual-averaging adaptation during warmup.
  std::optional<double> step_size;
  /// Fixed number of leapfrog steps; unset means uniform on 1..max_leapfrog per iteration.
  std::optional<int> n_leapfrog;
  int max_leapfrog = 32;
  double target_accept = 0.8;
  /// Fixed diagonal mass; unset means windowed estimation during warmup.
  std::optional<Eigen::VectorXd> mass_diag;
  double divergence_threshold = 1000.0;

  void validate(Eigen::Index dim) const {
    require(target_accept >= 0.6 && target_accept <= 0.99, ErrorKind::InvalidArgument,
            "target_accept must lie in [0.6, 0.99]");
    if (step_size) require(*step_size > 0.0, ErrorKind::InvalidArgument, "step_size must be positive");
    if (n_leapfrog) require(*n_leapfrog >= 1, ErrorKind::InvalidArgument, "n_leapfrog must be at least 1");
    require(max_leapfrog >= 1, ErrorKind::InvalidArgument, "max_leapfrog must be at least 1");
    require(divergence_threshold > 0.0, ErrorKind::InvalidArgument, "divergence_threshold must be positive");
    if (mass_diag) {
      require(mass_diag->size() == dim, ErrorKind::DimensionMismatch, "mass_diag has the wrong dimension");
      require((mass_diag->array() > 0.0).all(), ErrorKind::InvalidArgument, "mass_diag must be positive");
    }
  }
};

/// Step-size adaptation by dual averaging toward a target acceptance statistic.
class DualAveraging {
 public:
  DualAveraging(double target, double gamma = 0.05, double t0 = 10.0, double kappa = 0.75)
      : target_(target), gamma_(gamma), t0_(t0), kappa_(kappa) {}

  void restart(double epsilon) {
    mu_ = std::log(10.0 * epsilon);
    h_bar_ = 0.0;
    log_eps_bar_ = 0.0;
    t_ = 0;
  }

  /// Feed one acceptance statistic; returns the step size for the next iteration.
  double update(double accept_stat) {
    ++t_;
    const double t = static_cast<double>(t_);
    const double w = 1.0 / (t + t0_);
    h_bar_ = (1.0 - w) * h_bar_ + w * (target_ - accept_stat);
    const double log_eps = mu_ - std::sqrt(t) / gamma_ * h_bar_;
    const double eta = std::pow(t, -kappa_);
    log_eps_bar_ = eta * log_eps + (1.0 - eta) * log_eps_bar_;
    return std::exp(log_eps);
  }

  double final_step_size() const { return std::exp(log_eps_bar_); }

 private:
  double target_, gamma_, t0_, kappa_;
  double mu_ = 0.0, h_bar_ = 0.0, log_eps_bar_ = 0.0;
  long t_ = 0;
};

/// Warmup schedule: a fast initial buffer, doubling slow windows that end
/// with a mass update, and a fast terminal buffer.
struct WarmupSchedule {
  int init_buffer = 0;
  int term_buffer = 0;
  std::vector<int> window_ends;  // iteration index (exclusive) at which each slow window closes

  static WarmupSchedule make(int n_warmup, bool adapt_mass) {
    WarmupSchedule s;
    if (!adapt_mass || n_warmup < 20) return s;
    if (n_warmup >= 150) {
      s.init_buffer = 75;
      s.term_buffer = 50;
    } else {
      s.init_buffer = static_cast<int>(0.15 * n_warmup);
      s.term_buffer = static_cast<int>(0.1 * n_warmup);
    }
    const int slow_end = n_warmup - s.term_buffer;
    int window = std::min(25, slow_end - s.init_buffer);
    int start = s.init_buffer;
    while (start < slow_end) {
      int end = start + window;
      if (end + 2 * window > slow_end) end = slow_end;
      s.window_ends.push_back(end);
      start = end;
      window *= 2;
    }
    return s;
  }
};

namespace detail {

struct WelfordDiag {
  long n = 0;
  Eigen::VectorXd mean, m2;

  void reset(Eigen::Index d) {
    n = 0;
    mean = Eigen::VectorXd::Zero(d);
    m2 = Eigen::VectorXd::Zero(d);
  }
  void add(const Eigen::VectorXd& x) {
    ++n;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += (delta.array() * (x - mean).array()).matrix();
  }
  /// Sample variance shrunk toward 1e-3 as in common HMC practice.
  Eigen::VectorXd regularized_variance() const {
    const double nd = static_cast<double>(n);
    const Eigen::VectorXd var = m2 / (nd - 1.0);
    return ((nd / (nd + 5.0)) * var.array() + 1e-3 * (5.0 / (nd + 5.0))).matrix();
  }
};

struct Transition {
  bool accepted = false;
  bool divergent = false;
  double accept_stat = 0.0;
  double energy = 0.0;
};

template <GradientTarget T>
Transition hmc_transition(const T& target, PhasePoint& z, double epsilon, int n_steps, const Eigen::VectorXd& mass,
                          double threshold, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < z.m.size(); ++k) z.m[k] = std::sqrt(mass[k]) * normal(rng);
  const double h0 = z.hamiltonian(mass);
  PhasePoint prop = z;
  Transition tr;
  double h = h0;
  for (int s = 0; s < n_steps; ++s) {
    if (!leapfrog_inplace(target, prop, epsilon, mass)) {
      tr.divergent = true;
      break;
    }
    h = prop.hamiltonian(mass);
    if (!std::isfinite(h) || h - h0 > threshold) {
      tr.divergent = true;
      break;
    }
  }
  if (tr.divergent) {
    tr.energy = h0;
    return tr;
  }
  const double r = hmc_accept_prob(h0, h);
  tr.accept_stat = std::min(1.0, r);
  if (r > uniform01(rng)) {
    tr.accepted = true;
    z = std::move(prop);
    tr.energy = h;
  } else {
    tr.energy = h0;
  }
  return tr;
}

template <GradientTarget T>
double initial_step_size(const T& target, const PhasePoint& start, double epsilon, const Eigen::VectorXd& mass,
                         Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto log_accept = [&](double eps) {
    PhasePoint z = start;
    for (Eigen::Index k = 0; k < z.m.size(); ++k) z.m[k] = std::sqrt(mass[k]) * normal(rng);
    const double h0 = z.hamiltonian(mass);
    if (!leapfrog_inplace(target, z, eps, mass)) return -math::kInf;
    const double h = z.hamiltonian(mass);
    return std::isfinite(h) ? h0 - h : -math::kInf;
  };
  const double log_half = std::log(0.5);
  const int direction = log_accept(epsilon) > log_half ? 1 : -1;
  for (int i = 0; i < 60; ++i) {
    const double next = direction > 0 ? 2.0 * epsilon : 0.5 * epsilon;
    const double la = log_accept(next);
    if (direction > 0 ? !(la > log_half) : la > log_half) break;
    epsilon = next;
  }
  return epsilon;
}

template <GradientTarget T>
PhasePoint initial_phase_point(const T& target, const ChainConfig& cfg, int chain, Rng& rng) {
  const Eigen::Index d = target.dim();
  for (int attempt = 0; attempt < 100; ++attempt) {
    PhasePoint z;
    z.theta = cfg.initial_point(chain, d, rng);
    z.m = Eigen::VectorXd::Zero(d);
    z.log_p = target.log_density_gradient(z.theta, z.grad);
    if (std::isfinite(z.log_p) && z.grad.allFinite()) return z;
    if (!cfg.init.empty()) break;
  }
  fail(ErrorKind::NonFinite, "could not find an initial point with finite log density");
}

template <GradientTarget T>
Chain run_hmc_chain(const T& target, const ChainConfig& cfg, const HmcConfig& hmc, int chain) {
  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(chain) + 1);
  const Eigen::Index d = target.dim();
  PhasePoint z = initial_phase_point(target, cfg, chain, rng);
  Eigen::VectorXd mass = hmc.mass_diag.value_or(Eigen::VectorXd::Ones(d));
  const bool adapt_step = !hmc.step_size.has_value();
  const bool adapt_mass = !hmc.mass_diag.has_value();
  std::uniform_int_distribution<int> jitter(1, hmc.max_leapfrog);
  auto n_steps = [&]() { return hmc.n_leapfrog ? *hmc.n_leapfrog : jitter(rng); };

  double epsilon = hmc.step_size.value_or(1.0);
  DualAveraging da(hmc.target_accept);
  if (adapt_step) {
    epsilon = initial_step_size(target, z, epsilon, mass, rng);
    da.restart(epsilon);
  }

  const WarmupSchedule schedule = WarmupSchedule::make(cfg.n_warmup, adapt_mass);
  WelfordDiag welford;
  welford.reset(d);
  std::size_t next_window = 0;
  for (int it = 0; it < cfg.n_warmup; ++it) {
    const Transition tr = hmc_transition(target, z, epsilon, n_steps(), mass, hmc.divergence_threshold, rng);
    if (adapt_step) epsilon = da.update(tr.accept_stat);
    if (next_window < schedule.window_ends.size() && it >= schedule.init_buffer) {
      welford.add(z.theta);
      if (it + 1 == schedule.window_ends[next_window]) {
        mass = welford.regularized_variance().cwiseInverse();  // precision-like mass for unit-scale dynamics
        welford.reset(d);
        ++next_window;
        if (adapt_step) {
          epsilon = initial_step_size(target, z, epsilon, mass, rng);
          da.restart(epsilon);
        }
      }
    }
  }
  if (adapt_step && cfg.n_warmup > 0) epsilon = da.final_step_size();

  Chain out;
  out.step_size = epsilon;
  out.mass = mass;
  out.draws.resize(cfg.n_draws, d);
  out.meta.resize(static_cast<std::size_t>(cfg.n_draws));
  int divergent = 0;
  for (int it = 0; it < cfg.n_draws; ++it) {
    const Transition tr = hmc_transition(target, z, epsilon, n_steps(), mass, hmc.divergence_threshold, rng);
    divergent += tr.divergent ? 1 : 0;
    out.draws.row(it) = constrain_draw(target, z.theta).transpose();
    out.meta[static_cast<std::size_t>(it)] = IterationMeta{tr.accepted, tr.divergent, tr.energy, z.log_p};
  }
  if (divergent > 0.99 * cfg.n_draws) {
    fail(ErrorKind::ChainFailed, "chain " + std::to_string(chain) + ": more than 99% of transitions diverged");
  }
  return out;
}

}  // namespace detail

/// Fixed-length HMC (jittered trajectory length unless fixed) with
/// dual-averaging step size and windowed diagonal mass adaptation in warmup.
template <GradientTarget T>
DrawMatrix hmc_sample(const T& target, const ChainConfig& cfg, const HmcConfig& hmc = {}) {
  cfg.validate(target.dim());
  hmc.validate(target.dim());
  DrawMatrix out;
  out.names = target_parameter_names(target);
  out.chains = run_chains(cfg.n_chains, [&](int c) { return detail::run_hmc_chain(target, cfg, hmc, c); });
  if (out.divergent_fraction() > 0.0) {
    out.warnings.push_back("divergent transitions: " + std::to_string(out.divergent_fraction()));
  }
  return out;
}

inline DrawMatrix hmc_sample(const ModelSpec& spec, const Dataset& data, const ChainConfig& cfg,
                             const HmcConfig& hmc = {}) {
  require(spec.continuous(), ErrorKind::InvalidArgument, "HMC needs continuous parameters; spike_slab is discrete");
  const RegressionModel model(spec, data);
  return hmc_sample(model, cfg, hmc);
}

}  // namespace penreg
