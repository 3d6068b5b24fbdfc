#pragma once

#include "penreg/approx/gaussian.hpp"
#include "penreg/approx/lbfgs.hpp"
#include "penreg/diagnostics/psis.hpp"
#include "penreg/model/regression.hpp"
#include "penreg/samplers/hmc.hpp"

#include <chrono>
#include <future>
#include <string>
#include <vector>

namespace penreg {

struct PathfinderConfig {
  int n_paths = 4;
  int max_lbfgs_iter = 1000;
  int history_size = 6;
  int n_elbo_draws = 5;
  int n_final_draws = 1000;
  bool psis_resample = false;
  std::uint64_t seed = 0;

  void validate() const {
    require(n_paths >= 1, ErrorKind::InvalidArgument, "n_paths must be at least 1");
    require(history_size >= 1, ErrorKind::InvalidArgument, "history_size must be at least 1");
    require(max_lbfgs_iter >= 1 && n_elbo_draws >= 1 && n_final_draws >= 1, ErrorKind::InvalidArgument,
            "Pathfinder counts must be at least 1");
  }
};

/// Normal with covariance diag(alpha) + beta gamma beta^T, kept in factored
/// form so draws and densities cost O(d m^2).
class LowRankNormal {
 public:
  /// Builds the inverse-Hessian estimate from curvature pairs (oldest first) and
  /// centres it at theta + H grad. Returns nullopt if it is not positive definite.
  static std::optional<LowRankNormal> from_pairs(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                                                 const std::vector<const CurvaturePair*>& pairs) {
    const Eigen::Index d = theta.size();
    const auto m = static_cast<Eigen::Index>(pairs.size());
    if (m == 0) return std::nullopt;
    Eigen::MatrixXd s(d, m), y(d, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      s.col(j) = pairs[static_cast<std::size_t>(j)]->s;
      y.col(j) = pairs[static_cast<std::size_t>(j)]->y;
    }
    const double a = s.col(m - 1).dot(y.col(m - 1)) / y.col(m - 1).squaredNorm();
    if (!(a > 0.0) || !std::isfinite(a)) return std::nullopt;
    const Eigen::MatrixXd sty = s.transpose() * y;
    const Eigen::MatrixXd r = sty.triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(m, m));
    if (!r_inv.allFinite()) return std::nullopt;
    const Eigen::MatrixXd e = sty.diagonal().asDiagonal();

    LowRankNormal out;
    out.alpha_ = Eigen::VectorXd::Constant(d, a);
    out.beta_.resize(d, 2 * m);
    out.beta_ << a * y, s;
    out.gamma_ = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    out.gamma_.topRightCorner(m, m) = -r_inv;
    out.gamma_.bottomLeftCorner(m, m) = -r_inv.transpose();
    out.gamma_.bottomRightCorner(m, m) = r_inv.transpose() * (e + a * y.transpose() * y) * r_inv;
    out.mu_ = theta + out.apply(grad);

    const Eigen::VectorXd alpha_sqrt = out.alpha_.cwiseSqrt();
    const Eigen::MatrixXd scaled = alpha_sqrt.cwiseInverse().asDiagonal() * out.beta_;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(scaled);
    const Eigen::Index k = std::min(d, 2 * m);
    out.q_ = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
    const Eigen::MatrixXd rr = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(k, k) + rr * out.gamma_ * rr.transpose();
    inner = 0.5 * (inner + inner.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(inner);
    if (llt.info() != Eigen::Success) return std::nullopt;
    out.l_ = llt.matrixL();
    out.log_det_ = out.alpha_.array().log().sum() + 2.0 * out.l_.diagonal().array().log().sum();
    if (!out.mu_.allFinite() || !std::isfinite(out.log_det_)) return std::nullopt;
    return out;
  }

  Eigen::Index dim() const { return mu_.size(); }
  const Eigen::VectorXd& mean() const { return mu_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    return (alpha_.array() * v.array()).matrix() + beta_ * (gamma_ * (beta_.transpose() * v));
  }

  Eigen::MatrixXd covariance() const {
    Eigen::MatrixXd cov = beta_ * gamma_ * beta_.transpose();
    cov.diagonal() += alpha_;
    return 0.5 * (cov + cov.transpose());
  }

  /// Maps standard normal u to a draw.
  Eigen::VectorXd transform(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd qtu = q_.transpose() * u;
    const Eigen::VectorXd inner = q_ * (l_ * qtu) + u - q_ * qtu;
    return mu_ + (alpha_.cwiseSqrt().array() * inner.array()).matrix();
  }

  /// log q of transform(u).
  double log_density_of(const Eigen::VectorXd& u) const {
    return -0.5 * (log_det_ + u.squaredNorm() + static_cast<double>(dim()) * math::kLogTwoPi);
  }

  GaussianApprox as_gaussian() const {
    const Eigen::LLT<Eigen::MatrixXd> llt(covariance());
    require(llt.info() == Eigen::Success, ErrorKind::NotPositiveDefinite, "Pathfinder covariance not positive definite");
    return GaussianApprox::fullrank(mu_, llt.matrixL());
  }

 private:
  Eigen::VectorXd alpha_, mu_;
  Eigen::MatrixXd beta_, gamma_, q_, l_;
  double log_det_ = 0.0;
};

struct PathResult {
  LowRankNormal approx;
  double elbo = 0.0;
  std::vector<double> elbo_trace;  // per L-BFGS iterate; -inf where skipped
  std::size_t best_iterate = 0;
  int lbfgs_iterations = 0;
  bool lbfgs_converged = false;
};

struct PathfinderResult {
  ApproxReport report;
  std::vector<std::string> names;
  Eigen::MatrixXd draws;          // constrained
  Eigen::MatrixXd unconstrained;  // same rows, unconstrained
  std::vector<PathResult> paths;  // successful paths only
  double seconds = 0.0;
};

namespace detail {

/// One path: L-BFGS from `x0`, then the max-ELBO normal along its iterates.
/// The ELBO draws reuse one standard-normal matrix for every iterate.
template <GradientTarget T>
PathResult run_path(const T& target, const Eigen::VectorXd& x0, const PathfinderConfig& cfg, std::uint64_t seed) {
  LbfgsConfig opt;
  opt.max_iter = cfg.max_lbfgs_iter;
  opt.history = cfg.history_size;
  const LbfgsResult path = lbfgs_maximize(target, x0, opt);
  if (path.iterations() == 0) fail(ErrorKind::PathFailed, "L-BFGS made no accepted step: " + path.message);

  const Eigen::Index d = target.dim();
  Rng rng = make_rng(seed);
  Eigen::MatrixXd u(d, cfg.n_elbo_draws);
  for (int j = 0; j < cfg.n_elbo_draws; ++j) u.col(j) = standard_normal(rng, d);

  std::optional<PathResult> best;
  std::vector<double> trace;
  std::vector<const CurvaturePair*> hist;
  for (std::size_t k = 1; k < path.path.size(); ++k) {
    if (path.pair_accepted[k - 1]) {
      hist.push_back(&path.pairs[k - 1]);
      if (hist.size() > static_cast<std::size_t>(cfg.history_size)) hist.erase(hist.begin());
    }
    const auto normal = LowRankNormal::from_pairs(path.path[k].x, path.path[k].grad, hist);
    double elbo = -math::kInf;
    if (normal) {
      double total = 0.0;
      for (int j = 0; j < cfg.n_elbo_draws; ++j) {
        const double lp = target.log_density(normal->transform(u.col(j)));
        total += lp - normal->log_density_of(u.col(j));
      }
      if (std::isfinite(total)) elbo = total / cfg.n_elbo_draws;
    }
    trace.push_back(elbo);
    if (normal && std::isfinite(elbo) && (!best || elbo > best->elbo)) {
      best = PathResult{*normal, elbo, {}, k, path.iterations(), path.converged};
    }
  }
  if (!best) fail(ErrorKind::PathFailed, "no iterate produced a usable normal approximation");
  best->elbo_trace = std::move(trace);
  return *best;
}

}  // namespace detail

/// Multi-path Pathfinder. Each path starts from uniform(-2, 2) inits; draws
/// are pooled evenly across paths, or importance-resampled with PSIS.
template <GradientTarget T>
PathfinderResult pathfinder_fit(const T& target, const PathfinderConfig& cfg = {}) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const Eigen::Index d = target.dim();

  std::vector<std::future<PathResult>> pending;
  for (int p = 0; p < cfg.n_paths; ++p) {
    pending.push_back(std::async(std::launch::async, [&target, &cfg, d, p]() {
      Rng rng = make_rng(cfg.seed, 2 * static_cast<std::uint64_t>(p) + 1);
      std::uniform_real_distribution<double> unif(-2.0, 2.0);
      Eigen::VectorXd x0(d);
      for (auto& v : x0) v = unif(rng);
      return detail::run_path(target, x0, cfg, derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(p) + 2));
    }));
  }
  PathfinderResult out;
  out.names = target_parameter_names(target);
  for (int p = 0; p < cfg.n_paths; ++p) {
    try {
      out.paths.push_back(pending[static_cast<std::size_t>(p)].get());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::PathFailed && e.kind() != ErrorKind::NonFinite) throw;
      out.report.warnings.push_back("path " + std::to_string(p + 1) + " failed: " + e.what());
    }
  }
  if (out.paths.empty()) fail(ErrorKind::PathfinderFailed, "all Pathfinder paths failed");

  std::size_t best = 0;
  out.report.converged = true;
  for (std::size_t i = 0; i < out.paths.size(); ++i) {
    if (out.paths[i].elbo > out.paths[best].elbo) best = i;
    out.report.iterations_used += out.paths[i].lbfgs_iterations;
    out.report.converged = out.report.converged && out.paths[i].lbfgs_converged;
  }
  out.report.approx = out.paths[best].approx.as_gaussian();
  out.report.elbo_trace = out.paths[best].elbo_trace;

  const auto n_paths = static_cast<Eigen::Index>(out.paths.size());
  Rng rng = make_rng(cfg.seed, 0);
  auto draw_rows = [&](const LowRankNormal& q, Eigen::Index n, Eigen::MatrixXd& unc, Eigen::VectorXd& log_q,
                       Eigen::Index offset) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd z = standard_normal(rng, d);
      unc.row(offset + i) = q.transform(z).transpose();
      log_q[offset + i] = q.log_density_of(z);
    }
  };
  if (cfg.psis_resample) {
    const Eigen::Index per = cfg.n_final_draws;
    Eigen::MatrixXd unc(per * n_paths, d);
    Eigen::VectorXd log_q(per * n_paths), log_p(per * n_paths);
    for (Eigen::Index p = 0; p < n_paths; ++p) draw_rows(out.paths[static_cast<std::size_t>(p)].approx, per, unc, log_q, p * per);
    for (Eigen::Index i = 0; i < unc.rows(); ++i) {
      log_p[i] = target.log_density(unc.row(i).transpose());
      if (!std::isfinite(log_p[i])) log_p[i] = -math::kInf;
    }
    out.unconstrained = psis_smooth_and_resample(unc, importance_ratios(log_p, log_q), cfg.n_final_draws,
                                                 derive_seed(cfg.seed, 7));
  } else {
    out.unconstrained.resize(cfg.n_final_draws, d);
    Eigen::VectorXd log_q(cfg.n_final_draws);
    Eigen::Index offset = 0;
    for (Eigen::Index p = 0; p < n_paths; ++p) {
      const Eigen::Index n = cfg.n_final_draws / n_paths + (p < cfg.n_final_draws % n_paths ? 1 : 0);
      draw_rows(out.paths[static_cast<std::size_t>(p)].approx, n, out.unconstrained, log_q, offset);
      offset += n;
    }
  }
  out.draws.resize(out.unconstrained.rows(), d);
  for (Eigen::Index i = 0; i < out.unconstrained.rows(); ++i)
    out.draws.row(i) = constrain_draw(target, out.unconstrained.row(i).transpose()).transpose();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

inline PathfinderResult pathfinder_fit(const ModelSpec& spec, const Dataset& data, const PathfinderConfig& cfg = {}) {
  require(spec.continuous(), ErrorKind::InvalidArgument, "Pathfinder needs continuous parameters");
  const RegressionModel model(spec, data);
  return pathfinder_fit(model, cfg);
}

/// Pathfinder draws as HMC starting points, followed by HMC with a short warmup.
/// Inits are spread evenly over the pooled draws and may coincide.
template <GradientTarget T>
DrawMatrix pathfinder_init_hmc(const T& target, const PathfinderConfig& pf, ChainConfig chain_cfg,
                               const HmcConfig& hmc = {}, int n_warmup = 100) {
  const PathfinderResult fit = pathfinder_fit(target, pf);
  const Eigen::Index n = fit.unconstrained.rows();
  require(chain_cfg.n_chains <= n, ErrorKind::InvalidArgument, "more chains than Pathfinder draws");
  chain_cfg.init.clear();
  for (int c = 0; c < chain_cfg.n_chains; ++c)
    chain_cfg.init.push_back(fit.unconstrained.row(c * n / chain_cfg.n_chains).transpose());
  chain_cfg.n_warmup = n_warmup;
  DrawMatrix out = hmc_sample(target, chain_cfg, hmc);
  out.metadata["pathfinder_seconds"] = fit.seconds;
  for (const auto& w : fit.report.warnings) out.warnings.push_back("pathfinder: " + w);
  return out;
}

inline DrawMatrix pathfinder_init_hmc(const ModelSpec& spec, const Dataset& data, const PathfinderConfig& pf,
                                      const ChainConfig& chain_cfg, const HmcConfig& hmc = {}, int n_warmup = 100) {
  require(spec.continuous(), ErrorKind::InvalidArgument, "Pathfinder needs continuous parameters");
  const RegressionModel model(spec, data);
  return pathfinder_init_hmc(model, pf, chain_cfg, hmc, n_warmup);
}

}  // namespace penreg
