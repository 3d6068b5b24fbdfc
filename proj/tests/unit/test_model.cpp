#include "penreg/model/regression.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace penreg;
using penreg::testing::finite_difference_gradient;
using penreg::testing::toy_dataset;

namespace {

std::vector<PriorConfig> all_priors() {
  return {PriorConfig::make_normal(1.5), PriorConfig::make_student_t(3.0, 0.5), PriorConfig::make_spike_slab(0.05, 1.0, 0.3),
          PriorConfig::make_horseshoe(1.0), PriorConfig::make_regularized_horseshoe(3.0)};
}

Dataset raw_dataset(Eigen::MatrixXd x, Eigen::VectorXd y) {
  Dataset d;
  d.x = std::move(x);
  d.y = std::move(y);
  return d;
}

}  // namespace

TEST(Standardize, CentersAndScalesWithSampleSd) {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  const Dataset s = standardize(raw_dataset(x, Eigen::VectorXd::Zero(3)));
  EXPECT_NEAR(s.x(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(s.x(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(s.x(2, 0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.column_means[0], 2.0);
  EXPECT_DOUBLE_EQ(s.column_sds[0], 1.0);
  EXPECT_TRUE(s.standardized);
}

TEST(Standardize, IdempotentOnStandardizedData) {
  Rng rng = make_rng(3);
  const Dataset once = toy_dataset(rng, 40, 4, false);
  const Dataset twice = standardize(once);
  EXPECT_LT((once.x - twice.x).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index j = 0; j < once.p(); ++j) {
    EXPECT_NEAR(once.x.col(j).mean(), 0.0, 1e-10);
    EXPECT_NEAR(std::sqrt(once.x.col(j).squaredNorm() / (once.n() - 1.0)), 1.0, 1e-10);
  }
}

TEST(Standardize, RejectsConstantColumn) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  try {
    standardize(raw_dataset(x, Eigen::VectorXd::Zero(3)));
    FAIL() << "expected ConstantColumn";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConstantColumn);
  }
}

TEST(Standardize, TestRowsUseTrainingTransform) {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  const Dataset s = standardize(raw_dataset(x, Eigen::VectorXd::Zero(3)));
  Eigen::MatrixXd xt(2, 1);
  xt << 4, 6;
  const Eigen::MatrixXd z = apply_standardization(s, xt);
  EXPECT_DOUBLE_EQ(z(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(z(1, 0), 4.0);
}

TEST(Layout, BlocksCoverDimension) {
  const auto spec = make_spec(Likelihood::linear, PriorConfig::make_regularized_horseshoe(3.0, 4.0), 20);
  EXPECT_EQ(spec.dim(), 1 + 20 + 1 + 1 + 20 + 1);
  Eigen::Index expect = 0;
  for (const auto& b : spec.layout) {
    EXPECT_EQ(b.offset, expect);
    expect += b.size;
  }
  EXPECT_EQ(expect, spec.dim());
  EXPECT_EQ(spec.parameter_names().size(), static_cast<std::size_t>(spec.dim()));

  const auto logistic = make_spec(Likelihood::logistic, PriorConfig::make_horseshoe(), 5);
  EXPECT_FALSE(logistic.has("sigma"));
  EXPECT_TRUE(logistic.has("tau"));
  EXPECT_FALSE(logistic.has("c2"));
  EXPECT_EQ(logistic.dim(), 1 + 5 + 1 + 5);

  const auto normal = make_spec(Likelihood::linear, PriorConfig::make_normal(1.0), 5);
  EXPECT_FALSE(normal.has("tau"));
  EXPECT_FALSE(normal.has("lambda"));
  EXPECT_EQ(normal.dim(), 1 + 5 + 1);
}

TEST(Transform, ExamplesAndJacobian) {
  const auto spec = make_spec(Likelihood::linear, PriorConfig::make_horseshoe(), 2);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(spec.dim());
  u[spec.offset("tau")] = std::log(2.0);
  const auto [cp, lj] = to_constrained(spec, u);
  EXPECT_DOUBLE_EQ(*cp.sigma, 1.0);
  EXPECT_NEAR(*cp.tau, 2.0, 1e-15);
  EXPECT_NEAR(lj, std::log(2.0), 1e-15);

  ConstrainedParams e = cp;
  e.sigma = std::numbers::e;
  EXPECT_NEAR(to_unconstrained(spec, e)[spec.offset("sigma")], 1.0, 1e-15);
  e.sigma = 1.0;
  EXPECT_EQ(to_unconstrained(spec, e)[spec.offset("sigma")], 0.0);
}

TEST(Transform, RejectsNonPositiveAndWrongDimension) {
  const auto spec = make_spec(Likelihood::linear, PriorConfig::make_normal(1.0), 2);
  ConstrainedParams cp;
  cp.beta = Eigen::VectorXd::Zero(2);
  cp.sigma = 0.0;
  try {
    to_unconstrained(spec, cp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositive);
  }
  try {
    to_constrained(spec, Eigen::VectorXd::Zero(7));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(Transform, RoundTripProperty) {
  Rng rng = make_rng(11);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto prior = all_priors()[trial % 5];
    const auto param = trial % 2 ? Parameterization::noncentered : Parameterization::centered;
    const auto lik = trial % 3 ? Likelihood::linear : Likelihood::logistic;
    const auto spec = make_spec(lik, prior, 1 + trial % 6 + (prior.kind == PriorKind::regularized_horseshoe ? 2 : 0),
                                10.0, param);
    Eigen::VectorXd u(spec.dim());
    for (auto& v : u) v = unif(rng);
    const auto back = to_unconstrained(spec, to_constrained(spec, u).first);
    ASSERT_LT((back - u).cwiseAbs().maxCoeff(), 1e-12) << "trial " << trial;
  }
}

TEST(LambdaTilde, Examples) {
  EXPECT_DOUBLE_EQ(lambda_tilde(1.0, 1.0, 1.0), 0.5);
  EXPECT_NEAR(lambda_tilde(1e-6, 1.0, 1.0), 1e-12, 1e-18);
  EXPECT_NEAR(lambda_tilde(1e6, 1.0, 4.0), 4.0, 4.0 * 1e-6);
}

TEST(LambdaTilde, MonotoneAndBoundedProperty) {
  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> logu(-6.0, 6.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double lam = std::exp(logu(rng)), tau = std::exp(logu(rng)), c2 = std::exp(logu(rng));
    const double v = lambda_tilde(lam, tau, c2);
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, c2 / (tau * tau) * (1 + 1e-12));
    EXPECT_LE(v, lam * lam * (1 + 1e-12));
    EXPECT_GE(lambda_tilde(lam * 1.1, tau, c2), v);
  }
}

TEST(Tau0, Examples) {
  EXPECT_NEAR(tau0(4, 20, 1.0, 100), 0.025, 1e-15);
  EXPECT_NEAR(tau0(5, 100, 1.0, 100), 0.0052631578947368, 1e-12);
  EXPECT_NEAR(tau0(10, 20, 10.0, 100), 1.0, 1e-15);
  for (double p0 : {0.0, 20.0, 25.0}) {
    try {
      tau0(p0, 20, 1.0, 100);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidSparsity);
    }
  }
}

TEST(LogJoint, LinearLikelihoodAtZero) {
  const int n = 7;
  Rng rng = make_rng(1);
  Dataset d = toy_dataset(rng, n, 3, false);
  d.y.setZero();
  const auto spec = make_spec(Likelihood::linear, PriorConfig::make_normal(math::kInf), 3, math::kInf);
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(spec.dim());  // beta = 0, sigma = 1
  const double sigma_prior = math::kLogTwoOverPi - std::log(2.0) - std::log1p(0.25);
  EXPECT_NEAR(log_joint(spec, d, u) - sigma_prior, -0.5 * n * math::kLogTwoPi, 1e-12);
}

TEST(LogJoint, LogisticAtZeroLinearPredictor) {
  const int n = 9;
  Rng rng = make_rng(2);
  const Dataset d = toy_dataset(rng, n, 2, true);
  const auto spec = make_spec(Likelihood::logistic, PriorConfig::make_normal(math::kInf), 2, math::kInf);
  EXPECT_NEAR(log_joint(spec, d, Eigen::VectorXd::Zero(spec.dim())), n * std::log(0.5), 1e-12);
}

TEST(LogJoint, RejectsNonBinaryLogisticOutcome) {
  Rng rng = make_rng(2);
  const Dataset d = toy_dataset(rng, 10, 2, false);
  const auto spec = make_spec(Likelihood::logistic, PriorConfig::make_normal(1.0), 2);
  EXPECT_THROW(RegressionModel(spec, d), Error);
}

TEST(LogJoint, PermutationInvariance) {
  Rng rng = make_rng(8);
  for (const auto& prior : all_priors()) {
    for (auto param : {Parameterization::centered, Parameterization::noncentered}) {
      const int p = 5;
      const Dataset d = toy_dataset(rng, 30, p, false);
      const auto spec = make_spec(Likelihood::linear, prior, p, 10.0, param);
      Eigen::VectorXd u = standard_normal(rng, spec.dim()) * 0.7;
      const std::vector<int> perm = {3, 0, 4, 1, 2};
      Dataset dp = d;
      Eigen::VectorXd up = u;
      for (int j = 0; j < p; ++j) {
        dp.x.col(j) = d.x.col(perm[j]);
        up[1 + j] = u[1 + perm[j]];
        if (spec.has("lambda")) up[spec.offset("lambda") + j] = u[spec.offset("lambda") + perm[j]];
      }
      EXPECT_NEAR(log_joint(spec, d, u), log_joint(spec, dp, up), 1e-10) << to_string(prior.kind);
    }
  }
}

TEST(Gradient, MatchesFiniteDifferencesAcrossPriors) {
  Rng rng = make_rng(21);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto prior = all_priors()[trial % 5];
    const auto lik = (trial / 5) % 2 ? Likelihood::logistic : Likelihood::linear;
    const auto param = (trial / 10) % 2 ? Parameterization::noncentered : Parameterization::centered;
    const int p = 2 + trial % 4;
    const Dataset d = toy_dataset(rng, 25, p, lik == Likelihood::logistic);
    const auto spec = make_spec(lik, prior, p, 10.0, param);
    const RegressionModel model(spec, d);
    const Eigen::VectorXd u = standard_normal(rng, spec.dim()) * 0.8;
    Eigen::VectorXd g;
    model.log_density_gradient(u, g);
    const Eigen::VectorXd fd =
        finite_difference_gradient([&](const Eigen::VectorXd& v) { return model.log_density(v); }, u, 1e-5);
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      ASSERT_NEAR(g[k], fd[k], std::max(1e-5, 1e-4 * std::abs(g[k])))
          << "trial " << trial << " prior " << to_string(prior.kind) << " coord " << k;
    }
    ++checked;
  }
  EXPECT_GE(checked, 50);
}

TEST(Gradient, StationaryAtPriorMode) {
  Rng rng = make_rng(4);
  Dataset d = toy_dataset(rng, 10, 3, false);
  d.y.setZero();
  const auto spec = make_spec(Likelihood::linear, PriorConfig::make_normal(1.0), 3);
  const Eigen::VectorXd g = grad_log_joint(spec, d, Eigen::VectorXd::Zero(spec.dim()));
  EXPECT_LT(g.segment(0, 4).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Gradient, LinearFlatPriorClosedForm) {
  Rng rng = make_rng(6);
  const Dataset d = toy_dataset(rng, 15, 1, false);
  const auto spec = make_spec(Likelihood::linear, PriorConfig::make_normal(math::kInf), 1, math::kInf);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(spec.dim());
  const double beta = 0.3, sigma = 1.7;
  u[1] = beta;
  u[spec.offset("sigma")] = std::log(sigma);
  const double expected = (d.x.col(0).array() * (d.y.array() - d.x.col(0).array() * beta)).sum() / (sigma * sigma);
  EXPECT_NEAR(grad_log_joint(spec, d, u)[1], expected, 1e-12);
}

TEST(Jacobian, IntegralOverPositiveBlockMatchesConstrainedScale) {
  // Density of log sigma from the model vs likelihood x half-Cauchy prior on sigma.
  Rng rng = make_rng(9);
  const Dataset d = toy_dataset(rng, 6, 1, false);
  const auto spec = make_spec(Likelihood::linear, PriorConfig::make_normal(math::kInf), 1, math::kInf);
  const RegressionModel model(spec, d);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(spec.dim());
  const auto i_sigma = spec.offset("sigma");
  auto unconstrained = [&](double t) {
    Eigen::VectorXd v = u;
    v[i_sigma] = t;
    return std::exp(model.log_density(v));
  };
  auto constrained = [&](double sigma) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < d.n(); ++i) ll += math::normal_lpdf(d.y[i], 0.0, sigma);
    const double half_cauchy = 2.0 / (std::numbers::pi * 2.0 * (1.0 + sigma * sigma / 4.0));
    return std::exp(ll) * half_cauchy;
  };
  const double a = 0.2, b = 5.0;
  const double iu = penreg::testing::simpson(unconstrained, std::log(a), std::log(b));
  const double ic = penreg::testing::simpson(constrained, a, b);
  EXPECT_NEAR(iu / ic, 1.0, 1e-4);
}
