#pragma once

#include "penreg/error.hpp"
#include "penreg/math.hpp"
#include "penreg/model/dataset.hpp"
#include "penreg/model/spec.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace penreg {

/// Pseudo residual sd used in tau0 for the logistic likelihood (no sigma
/// parameter there); the binomial pseudo-variance 1/(mu (1 - mu)) at mu = 1/2.
inline constexpr double kLogisticPseudoSigma = 2.0;

/// Residual-scale prior: sigma ~ half-Cauchy(0, 2).
inline constexpr double kSigmaPriorScale = 2.0;

/// Regression posterior on the unconstrained scale. Owns its spec and data, so
/// it can be handed to any sampler or approximator; evaluation is const and
/// safe to call from several threads.
///
/// The density includes every normalising constant that depends only on
/// hyperparameters, so values are comparable across methods.
class RegressionModel {
 public:
  RegressionModel(ModelSpec spec, Dataset data) : spec_(std::move(spec)), data_(std::move(data)) {
    validate(data_);
    require(data_.p() == spec_.p, ErrorKind::DimensionMismatch,
            "data has " + std::to_string(data_.p()) + " predictors, spec expects " + std::to_string(spec_.p));
    if (spec_.likelihood == Likelihood::logistic) {
      for (Eigen::Index i = 0; i < data_.n(); ++i)
        require(data_.y[i] == 0.0 || data_.y[i] == 1.0, ErrorKind::OutcomeTypeMismatch,
                "logistic outcome must be coded 0/1");
    }
  }

  const ModelSpec& spec() const { return spec_; }
  const Dataset& data() const { return data_; }
  Eigen::Index dim() const { return spec_.dim(); }

  /// Log density; -inf when any term is non-finite.
  double log_density(const Eigen::VectorXd& u) const { return evaluate(u, nullptr); }

  /// Log density and its gradient in one pass.
  double log_density_gradient(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const {
    grad.resize(dim());
    return evaluate(u, &grad);
  }

  Eigen::VectorXd constrain(const Eigen::VectorXd& u) const { return constrain_vector(spec_, u); }
  std::vector<std::string> parameter_names() const { return spec_.parameter_names(); }

 private:
  double evaluate(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const {
    require(u.size() == dim(), ErrorKind::DimensionMismatch,
            "expected " + std::to_string(dim()) + " coordinates, got " + std::to_string(u.size()));
    const auto p = spec_.p;
    const auto n = data_.n();
    const auto& prior = spec_.prior;
    const bool want_grad = grad != nullptr;
    if (want_grad) grad->setZero();

    const double beta0 = u[0];
    Eigen::VectorXd beta = u.segment(1, p);

    // Horseshoe-family local variances v_j = tau^2 lambda_tilde_j^2 and the
    // derivatives of log v_j with respect to log tau / log lambda_j / log c2.
    Eigen::VectorXd log_v, dlogv_dlocal, dlogv_dc2;
    Eigen::Index i_tau = -1, i_lam = -1, i_c2 = -1, i_sigma = -1;
    if (spec_.has_sigma()) i_sigma = spec_.offset("sigma");
    if (spec_.has_shrinkage()) {
      i_tau = spec_.offset("tau");
      i_lam = spec_.offset("lambda");
      if (spec_.has_slab()) i_c2 = spec_.offset("c2");
      const double log_tau = u[i_tau];
      const double log_c2 = i_c2 >= 0 ? u[i_c2] : 0.0;
      log_v.resize(p);
      dlogv_dlocal.resize(p);
      dlogv_dc2.resize(p);
      for (Eigen::Index j = 0; j < p; ++j) {
        log_v[j] = detail::log_local_variance(spec_.has_slab(), log_tau, u[i_lam + j], log_c2);
        if (spec_.has_slab()) {
          // frac = tau^2 lambda^2 / (c^2 + tau^2 lambda^2)
          const double frac = math::inv_logit(2.0 * log_tau + 2.0 * u[i_lam + j] - log_c2);
          dlogv_dlocal[j] = 2.0 * (1.0 - frac);
          dlogv_dc2[j] = frac;
        } else {
          dlogv_dlocal[j] = 2.0;
          dlogv_dc2[j] = 0.0;
        }
      }
    }
    Eigen::VectorXd scale_j;  // sqrt(v_j), used by the noncentered map
    if (spec_.noncentered()) {
      scale_j = (0.5 * log_v.array()).exp();
      beta = beta.cwiseProduct(scale_j);
    }

    // Likelihood.
    const Eigen::VectorXd eta = (data_.x * beta).array() + beta0;
    Eigen::VectorXd d_eta(n);
    double lp = 0.0;
    double g_log_sigma = 0.0;
    if (spec_.likelihood == Likelihood::linear) {
      const double log_sigma = u[i_sigma];
      const Eigen::VectorXd r = data_.y - eta;
      const double rss = r.squaredNorm();
      const double inv_var = std::exp(-2.0 * log_sigma);
      lp += -0.5 * static_cast<double>(n) * math::kLogTwoPi - static_cast<double>(n) * log_sigma -
            0.5 * rss * inv_var;
      if (want_grad) {
        d_eta = r * inv_var;
        g_log_sigma += -static_cast<double>(n) + rss * inv_var;
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        lp += data_.y[i] * eta[i] - math::log1p_exp(eta[i]);
        if (want_grad) d_eta[i] = data_.y[i] - math::inv_logit(eta[i]);
      }
    }

    Eigen::VectorXd g_beta;  // d lp / d beta (constrained coefficients)
    double g_beta0 = 0.0;
    if (want_grad) {
      g_beta = data_.x.transpose() * d_eta;
      g_beta0 = d_eta.sum();
    }

    // Intercept prior; an infinite scale means flat.
    if (std::isfinite(spec_.intercept_scale)) {
      lp += math::normal_lpdf(beta0, 0.0, spec_.intercept_scale);
      if (want_grad) g_beta0 += -beta0 / (spec_.intercept_scale * spec_.intercept_scale);
    }

    // Residual scale: half-Cauchy(0, 2) plus the log-Jacobian.
    if (spec_.has_sigma()) {
      const double log_sigma = u[i_sigma];
      const double z = 2.0 * (log_sigma - std::log(kSigmaPriorScale));
      lp += math::kLogTwoOverPi - std::log(kSigmaPriorScale) - math::log1p_exp(z) + log_sigma;
      if (want_grad) g_log_sigma += -2.0 * math::inv_logit(z) + 1.0;
    }

    Eigen::VectorXd g_log_v;
    if (spec_.has_shrinkage() && want_grad) g_log_v = Eigen::VectorXd::Zero(p);

    // Coefficient prior.
    switch (prior.kind) {
      case PriorKind::normal: {
        if (std::isfinite(prior.scale)) {
          const double s2 = prior.scale * prior.scale;
          lp += static_cast<double>(p) * (-0.5 * math::kLogTwoPi - std::log(prior.scale)) -
                0.5 * beta.squaredNorm() / s2;
          if (want_grad) g_beta -= beta / s2;
        }
        break;
      }
      case PriorKind::student_t: {
        const double nu = prior.df, s = prior.scale;
        const double c = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
                         std::log(s);
        for (Eigen::Index j = 0; j < p; ++j) {
          const double b = beta[j];
          lp += c - 0.5 * (nu + 1.0) * std::log1p(b * b / (nu * s * s));
          if (want_grad) g_beta[j] += -(nu + 1.0) * b / (nu * s * s + b * b);
        }
        break;
      }
      case PriorKind::spike_slab: {
        const double log_pi = std::log(prior.inclusion), log_1m = std::log1p(-prior.inclusion);
        const double cs = prior.slab_sd, es = prior.spike_sd;
        for (Eigen::Index j = 0; j < p; ++j) {
          const double b = beta[j];
          const double a1 = log_pi + math::normal_lpdf(b, 0.0, cs);
          const double a0 = log_1m + math::normal_lpdf(b, 0.0, es);
          const double l = math::log_sum_exp(a1, a0);
          lp += l;
          if (want_grad) {
            const double w1 = std::exp(a1 - l);
            g_beta[j] += -b * (w1 / (cs * cs) + (1.0 - w1) / (es * es));
          }
        }
        break;
      }
      case PriorKind::horseshoe:
      case PriorKind::regularized_horseshoe: {
        if (spec_.noncentered()) {
          const auto z = u.segment(1, p);
          lp += static_cast<double>(p) * (-0.5 * math::kLogTwoPi) - 0.5 * z.squaredNorm();
          if (want_grad) {
            // beta_j = z_j exp(log v_j / 2)
            g_log_v += 0.5 * g_beta.cwiseProduct(beta);
            g_beta = g_beta.cwiseProduct(scale_j) - z;  // now d/dz
          }
        } else {
          for (Eigen::Index j = 0; j < p; ++j) {
            const double b = beta[j];
            const double ratio = b * b * std::exp(-log_v[j]);  // beta^2 / v
            lp += -0.5 * math::kLogTwoPi - 0.5 * log_v[j] - 0.5 * ratio;
            if (want_grad) {
              g_beta[j] += -b * std::exp(-log_v[j]);
              g_log_v[j] += -0.5 + 0.5 * ratio;
            }
          }
        }
        break;
      }
    }

    if (spec_.has_shrinkage()) {
      const double log_tau = u[i_tau];
      double g_log_tau = 0.0, g_log_c2 = 0.0;
      Eigen::VectorXd g_log_lambda = Eigen::VectorXd::Zero(want_grad ? p : 0);

      // Local scales: half-Cauchy(0, 1) for the plain horseshoe,
      // half-t(df_local, 0, 1) for the regularized one; log-Jacobian included.
      const double nu = spec_.has_slab() ? prior.df_local : 1.0;
      const double log_nu = std::log(nu);
      const double c_lam = std::log(2.0) + std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                           0.5 * std::log(nu * std::numbers::pi);
      for (Eigen::Index j = 0; j < p; ++j) {
        const double ll = u[i_lam + j];
        const double z = 2.0 * ll - log_nu;  // log(lambda^2 / nu)
        lp += c_lam - 0.5 * (nu + 1.0) * math::log1p_exp(z) + ll;
        if (want_grad) g_log_lambda[j] += -(nu + 1.0) * math::inv_logit(z) + 1.0;
      }

      // Global scale: half-Cauchy with scale sigma_tau, or tau0 for the
      // regularized prior (scaled by the residual sd, which couples tau and sigma).
      double log_scale = 0.0;
      bool scale_depends_on_sigma = false;
      if (spec_.has_slab()) {
        const double ratio = prior.p0 / (static_cast<double>(p) - prior.p0) / std::sqrt(static_cast<double>(n));
        if (spec_.has_sigma()) {
          log_scale = std::log(ratio) + u[i_sigma];
          scale_depends_on_sigma = true;
        } else {
          log_scale = std::log(ratio * kLogisticPseudoSigma);
        }
      } else {
        log_scale = std::log(prior.sigma_tau);
      }
      {
        const double z = 2.0 * (log_tau - log_scale);
        lp += math::kLogTwoOverPi - log_scale - math::log1p_exp(z) + log_tau;
        if (want_grad) {
          const double q = math::inv_logit(z);
          g_log_tau += -2.0 * q + 1.0;
          if (scale_depends_on_sigma) g_log_sigma += -1.0 + 2.0 * q;
        }
      }

      // Slab: c^2 ~ Inv-Gamma(v/2, v s^2/2) plus log-Jacobian.
      if (spec_.has_slab()) {
        const double log_c2 = u[i_c2];
        const double alpha = 0.5 * prior.slab_df;
        const double rate = 0.5 * prior.slab_df * prior.slab_scale * prior.slab_scale;
        lp += alpha * std::log(rate) - std::lgamma(alpha) - (alpha + 1.0) * log_c2 - rate * std::exp(-log_c2) +
              log_c2;
        if (want_grad) g_log_c2 += -alpha + rate * std::exp(-log_c2);
      }

      if (want_grad) {
        for (Eigen::Index j = 0; j < p; ++j) {
          g_log_tau += g_log_v[j] * dlogv_dlocal[j];
          g_log_lambda[j] += g_log_v[j] * dlogv_dlocal[j];
          g_log_c2 += g_log_v[j] * dlogv_dc2[j];
        }
        (*grad)[i_tau] = g_log_tau;
        grad->segment(i_lam, p) = g_log_lambda;
        if (i_c2 >= 0) (*grad)[i_c2] = g_log_c2;
      }
    }

    if (want_grad) {
      (*grad)[0] = g_beta0;
      grad->segment(1, p) = g_beta;
      if (i_sigma >= 0) (*grad)[i_sigma] = g_log_sigma;
    }
    if (!std::isfinite(lp)) return -math::kInf;
    return lp;
  }

  ModelSpec spec_;
  Dataset data_;
};

/// Unnormalised log posterior on the unconstrained scale (log-Jacobian included).
inline double log_joint(const ModelSpec& spec, const Dataset& data, const Eigen::VectorXd& u) {
  const double v = RegressionModel(spec, data).log_density(u);
  require(std::isfinite(v), ErrorKind::NonFinite, "log joint is not finite");
  return v;
}

inline Eigen::VectorXd grad_log_joint(const ModelSpec& spec, const Dataset& data, const Eigen::VectorXd& u) {
  Eigen::VectorXd g;
  const double v = RegressionModel(spec, data).log_density_gradient(u, g);
  require(std::isfinite(v) && g.allFinite(), ErrorKind::NonFinite, "log joint gradient is not finite");
  return g;
}

}  // namespace penreg
