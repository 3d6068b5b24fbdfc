#include "penreg/diagnostics/psis.hpp"
#include "penreg/diagnostics/quality.hpp"
#include "penreg/random.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace penreg;

namespace {

ChainSet read_fixture(const std::string& name) {
  std::ifstream in(std::string(PENREG_FIXTURE_DIR) + "/" + name);
  EXPECT_TRUE(in.good()) << name;
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string a, b;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    rows.emplace_back(std::stod(a), std::stod(b));
  }
  ChainSet out(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = rows[i].first;
    out(static_cast<Eigen::Index>(i), 1) = rows[i].second;
  }
  return out;
}

ChainSet iid_chains(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  ChainSet out(n, m);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = normal(rng);
  return out;
}

ChainSet ar1_chain(Eigen::Index n, double phi, double noise_sd, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  ChainSet out(n, 1);
  double x = normal(rng) / std::sqrt(1 - phi * phi);
  for (Eigen::Index i = 0; i < n; ++i) {
    x = phi * x + noise_sd * normal(rng);
    out(i, 0) = x;
  }
  return out;
}

std::vector<double> gpd_sample(double k, double sigma, int n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<double> x;
  for (int i = 0; i < n; ++i) x.push_back(gpd_quantile(uniform01(rng), k, sigma));
  return x;
}

}  // namespace

TEST(Rhat, IdenticalChainsGiveFiniteSampleFloor) {
  ChainSet c = iid_chains(500, 1, 1);
  ChainSet two(500, 2);
  two << c, c;
  EXPECT_NEAR(rhat_basic(two), std::sqrt(499.0 / 500.0), 1e-12);
}

TEST(Rhat, ShiftedMeanFixture) {
  const ChainSet c = read_fixture("shifted_mean_chains.csv");
  EXPECT_NEAR(rhat_basic(c), 1.16, 0.02);
  EXPECT_GT(split_rhat_rank_normalized(c), 1.05);
}

TEST(Rhat, TrendingFixtureOnlyCaughtBySplit) {
  const ChainSet c = read_fixture("trending_chains.csv");
  EXPECT_LE(rhat_basic(c), 1.02);
  EXPECT_NEAR(split_rhat_rank_normalized(c), 1.56, 0.05);
  EXPECT_GT(split_rhat_rank_normalized(c), 1.1);
}

TEST(Rhat, ConvergesToOneForLongStationaryChains) {
  EXPECT_NEAR(rhat_basic(iid_chains(10000, 2, 2)), 1.0, 0.01);
  EXPECT_LT(split_rhat_rank_normalized(iid_chains(2000, 4, 3)), 1.01);
}

TEST(Rhat, SplitRankInvariantUnderMonotoneTransform) {
  const ChainSet c = iid_chains(300, 4, 4);
  EXPECT_NEAR(split_rhat_rank_normalized(c), split_rhat_rank_normalized(c.array().exp().matrix()), 1e-12);
}

TEST(Rhat, SplitNotBelowClassicalOnStationaryChains) {
  for (std::uint64_t seed = 10; seed < 40; ++seed) {
    const ChainSet c = iid_chains(400, 4, seed);
    EXPECT_GE(split_rhat_rank_normalized(c), rhat_basic(c) - 0.02) << seed;
  }
}

TEST(Rhat, ConstantChainsRaiseZeroVariance) {
  try {
    rhat_basic(ChainSet::Constant(20, 2, 3.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroVariance);
  }
}

TEST(RankNormalize, AverageRanksForTies) {
  ChainSet c(4, 1);
  c << 1.0, 2.0, 2.0, 3.0;
  const ChainSet z = rank_normalize(c);
  EXPECT_DOUBLE_EQ(z(1, 0), z(2, 0));
  EXPECT_NEAR(z(1, 0), math::normal_quantile((2.5 - 0.375) / 4.25), 1e-15);
  EXPECT_NEAR(z(0, 0), math::normal_quantile((1 - 0.375) / 4.25), 1e-15);
}

TEST(Ess, IndependentDrawsGiveTotalCount) {
  const double ess = ess_bulk(iid_chains(2000, 4, 5));
  EXPECT_NEAR(ess / 8000.0, 1.0, 0.1);
}

TEST(Ess, Ar1MatchesAnalyticRatio) {
  const double phi = 0.9;
  const ChainSet c = ar1_chain(100000, phi, 1.0, 6);
  const double ratio = ess_bulk(c) / 100000.0;
  const double expected = (1 - phi) / (1 + phi);
  EXPECT_GT(ratio, expected / 1.5);
  EXPECT_LT(ratio, expected * 1.5);
}

TEST(Ess, AntitheticChainIsSuperEfficientButCapped) {
  ChainSet c(1000, 1);
  Rng rng = make_rng(7);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < 1000; ++i) c(i, 0) = (i % 2 ? 1.0 : -1.0) + 0.01 * normal(rng);
  const double ess = ess_bulk(c);
  EXPECT_GT(ess, 1000.0);
  EXPECT_LE(ess, 10000.0);
  const double moderate = ess_bulk(ar1_chain(20000, -0.5, 1.0, 8));
  EXPECT_GT(moderate, 20000.0);
}

TEST(Ess, InvariantUnderMonotoneTransform) {
  const ChainSet c = ar1_chain(3000, 0.5, 1.0, 9);
  ChainSet four(750, 4);
  for (int k = 0; k < 4; ++k) four.col(k) = c.col(0).segment(750 * k, 750);
  EXPECT_NEAR(ess_bulk(four), ess_bulk((four.array() * 3.0).exp().matrix()), 1e-9);
}

TEST(ImportanceRatios, Examples) {
  const Eigen::Vector3d lp(0, -1, -2), lq(-1, -1, -1);
  const Eigen::VectorXd r = importance_ratios(lp, lq);
  EXPECT_EQ(r, Eigen::Vector3d(1, 0, -1));
  const Eigen::VectorXd same = importance_ratios(lq, lq);
  EXPECT_TRUE((same.array() == same[0]).all());
  const Eigen::VectorXd shifted = importance_ratios((lp.array() + 4.0).matrix(), lq);
  EXPECT_TRUE(((shifted - r).array() == 4.0).all());
  EXPECT_THROW(importance_ratios(Eigen::Vector2d(0, 0), lq), Error);
}

TEST(FitGpd, RecoversShapeOfHeavyTail) {
  const GpdFit fit = fit_gpd(gpd_sample(0.5, 1.0, 2000, 11));
  EXPECT_NEAR(fit.k_hat, 0.5, 0.05);
  EXPECT_EQ(fit.n_tail, 2000);
}

TEST(FitGpd, ExponentialTailHasZeroShape) {
  const GpdFit fit = fit_gpd(gpd_sample(0.0, 2.0, 2000, 12));
  EXPECT_NEAR(fit.k_hat, 0.0, 0.05);
  EXPECT_NEAR(fit.sigma_hat, 2.0, 0.2);
}

TEST(FitGpd, DegenerateInputs) {
  for (const auto& x : {std::vector<double>(10, 1.0), std::vector<double>{1, 2, 3}}) {
    try {
      fit_gpd(x);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::TooFewTailPoints);
    }
  }
}

TEST(ParetoKhat, TailLength) {
  EXPECT_EQ(psis_tail_length(2000), 135);
  EXPECT_EQ(psis_tail_length(100), 20);
  EXPECT_EQ(psis_tail_length(25), 5);
}

TEST(ParetoKhat, ConstantRatiosGiveMinusInfinity) {
  const GpdFit fit = pareto_khat(Eigen::VectorXd::Constant(100, -3.2));
  EXPECT_EQ(fit.k_hat, -math::kInf);
  EXPECT_EQ(classify_quality(QualityMetrics{.k_hat = fit.k_hat}).label, Quality::good);
  EXPECT_THROW(pareto_khat(Eigen::VectorXd::Zero(24)), Error);
}

TEST(ParetoKhat, NarrowProposalForBimodalTargetIsFlagged) {
  Rng rng = make_rng(13);
  std::normal_distribution<double> normal;
  Eigen::VectorXd lr(2000);
  for (Eigen::Index i = 0; i < lr.size(); ++i) {
    const double x = normal(rng);
    const double log_p = math::log_sum_exp(std::log(0.5) + math::normal_lpdf(x, -3, 1),
                                           std::log(0.5) + math::normal_lpdf(x, 3, 1));
    lr[i] = log_p - math::normal_lpdf(x, 0, 1);
  }
  EXPECT_GT(pareto_khat(lr).k_hat, 0.7);
}

TEST(ParetoKhat, InvariantUnderConstantShift) {
  Rng rng = make_rng(14);
  const Eigen::VectorXd lr = standard_normal(rng, 500) * 1.5;
  const GpdFit a = pareto_khat(lr);
  for (double c : {-7.0, 0.25, 12.0}) {
    EXPECT_NEAR(pareto_khat((lr.array() + c).matrix()).k_hat, a.k_hat, 1e-12);
  }
}

TEST(Psis, UniformWeightsBootstrap) {
  Rng rng = make_rng(15);
  const Eigen::MatrixXd draws = standard_normal(rng, 200);
  const Eigen::MatrixXd out = psis_smooth_and_resample(draws, Eigen::VectorXd::Zero(200), 20000, 3);
  std::set<double> inputs(draws.data(), draws.data() + draws.size());
  std::map<double, int> counts;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    ASSERT_TRUE(inputs.count(out(i, 0)));
    ++counts[out(i, 0)];
  }
  EXPECT_EQ(counts.size(), 200u);
  for (const auto& [v, c] : counts) EXPECT_NEAR(c, 100, 45);
  EXPECT_EQ(psis_smooth_and_resample(draws, Eigen::VectorXd::Zero(200), 0, 3).rows(), 0);
}

TEST(Psis, ResamplingCorrectsWideProposal) {
  // q = N(0, 2^2) draws reweighted toward p = N(0, 1)
  int closer = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_rng(100 + seed);
    const Eigen::VectorXd x = standard_normal(rng, 2000) * 2.0;
    Eigen::VectorXd lr(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) lr[i] = math::normal_lpdf(x[i], 0, 1) - math::normal_lpdf(x[i], 0, 2);
    const Eigen::MatrixXd out = psis_smooth_and_resample(x, lr, 2000, seed);
    const double sd_out = std::sqrt(math::variance(out.col(0)));
    const double sd_raw = std::sqrt(math::variance(x));
    closer += std::abs(sd_out - 1.0) < std::abs(sd_raw - 1.0) ? 1 : 0;
  }
  EXPECT_EQ(closer, 20);
}

TEST(Psis, ResampledMeanHasLowerBiasThanRawProposal) {
  // q = N(0.5, 1.5^2), p = N(0, 1); sign test over 50 seeds
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = make_rng(500 + seed);
    const Eigen::VectorXd x = (standard_normal(rng, 1000) * 1.5).array() + 0.5;
    Eigen::VectorXd lr(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      lr[i] = math::normal_lpdf(x[i], 0, 1) - math::normal_lpdf(x[i], 0.5, 1.5);
    const Eigen::MatrixXd out = psis_smooth_and_resample(x, lr, 1000, seed);
    wins += std::abs(out.col(0).mean()) < std::abs(x.mean()) ? 1 : 0;
  }
  EXPECT_GE(wins, 32);  // one-sided binomial p < 0.05
}

TEST(Quality, TableExamples) {
  EXPECT_EQ(classify_quality({.rhat_max = 1.00, .ess_min_ratio = 0.6, .div_ratio = 0.0}).label, Quality::good);
  EXPECT_EQ(classify_quality({.k_hat = 0.8}).label, Quality::questionable);
  EXPECT_EQ(classify_quality({.k_hat = 6.0}).label, Quality::bad);
  EXPECT_EQ(classify_quality({.k_hat = 0.7}).label, Quality::good);
  const QualityLabel worst = classify_quality({.rhat_max = 1.07, .ess_min_ratio = 0.05, .div_ratio = 0.0});
  EXPECT_EQ(worst.label, Quality::bad);
  EXPECT_EQ(worst.reasons.size(), 2u);
  EXPECT_EQ(classify_quality({.rhat_max = 1.07, .ess_min_ratio = 0.6, .div_ratio = 0.0}).label, Quality::questionable);
  EXPECT_EQ(classify_quality({.rhat_max = 1.0, .ess_min_ratio = 0.6, .div_ratio = 0.2}).label, Quality::bad);
}

TEST(Quality, MissingOrMixedMetrics) {
  for (const QualityMetrics& m : {QualityMetrics{}, QualityMetrics{.rhat_max = 1.0},
                                  QualityMetrics{.rhat_max = 1.0, .ess_min_ratio = 1, .div_ratio = 0, .k_hat = 0.1}}) {
    try {
      classify_quality(m);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::MissingMetric);
    }
  }
}

TEST(Quality, MonotoneInEachMetric) {
  Rng rng = make_rng(16);
  std::uniform_real_distribution<double> rhat(0.99, 1.2), ess(0.0, 1.0), div(0.0, 0.3), k(-1.0, 8.0);
  for (int i = 0; i < 2000; ++i) {
    const QualityMetrics base{.rhat_max = rhat(rng), .ess_min_ratio = ess(rng), .div_ratio = div(rng)};
    const Quality q = classify_quality(base).label;
    QualityMetrics worse = base;
    worse.rhat_max = *base.rhat_max + 0.03;
    EXPECT_GE(classify_quality(worse).label, q);
    worse = base;
    worse.ess_min_ratio = *base.ess_min_ratio * 0.7;
    EXPECT_GE(classify_quality(worse).label, q);
    worse = base;
    worse.div_ratio = *base.div_ratio + 0.05;
    EXPECT_GE(classify_quality(worse).label, q);
    const double kv = k(rng);
    EXPECT_GE(classify_quality({.k_hat = kv + 0.5}).label, classify_quality({.k_hat = kv}).label);
  }
}
