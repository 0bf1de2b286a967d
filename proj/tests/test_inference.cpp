#include "prism/inference.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "prism/errors.hpp"
#include "prism/special_functions.hpp"

using namespace prism;
using prism::special::incomplete_beta;
using prism::special::student_t_cdf;

namespace {

std::vector<double> iota_vec(std::size_t n) {
  std::vector<double> v(n);
  std::iota(v.begin(), v.end(), 1.0);
  return v;
}

std::vector<double> noisy(const std::vector<double>& x, double scale, std::mt19937_64& gen) {
  std::normal_distribution<double> e(0, scale);
  std::vector<double> y(x);
  for (auto& v : y) v += e(gen);
  return y;
}

TestConfig small(std::size_t b, std::uint64_t seed = 1234) {
  TestConfig c;
  c.resamples = b;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(DeltaStatistic, Examples) {
  const std::vector<double> r{0.3, 1.2, -0.4, 2.2, 0.9};
  std::mt19937_64 gen(1);
  EXPECT_EQ(delta_statistic(r, noisy(r, 0.5, gen), r, RankMetric::Spearman).delta_hat, 0.0);
  std::vector<double> rev(r);
  std::transform(r.begin(), r.end(), rev.begin(), [](double v) { return -v; });
  const auto d = delta_statistic(r, r, rev, RankMetric::Spearman);
  EXPECT_DOUBLE_EQ(d.rho_rt, 1.0);
  EXPECT_DOUBLE_EQ(d.rho_dt, -1.0);
  EXPECT_DOUBLE_EQ(d.delta_hat, 2.0);
}

TEST(Bootstrap, PValueFloor) {
  const auto r = iota_vec(12);
  std::vector<double> rev(r.rbegin(), r.rend());
  const TestReport rep = bootstrap_test(r, r, rev, small(10'000));
  EXPECT_EQ(rep.non_positive, 0u);
  EXPECT_EQ(rep.p_value, 1.0 / 10'001.0);
  EXPECT_EQ(rep.verdict, Verdict::NonMemberEvidence);
  EXPECT_EQ(rep.deltas.size(), 10'000u);
}

TEST(Bootstrap, IdentityTestGivesPOne) {
  std::mt19937_64 gen(2);
  const auto r = noisy(iota_vec(30), 3, gen);
  const auto t = noisy(r, 2, gen);
  const TestReport rep = bootstrap_test(r, t, r, small(500));
  EXPECT_EQ(rep.delta_hat, 0.0);
  EXPECT_EQ(rep.p_value, 1.0);
  EXPECT_EQ(rep.ci_low, 0.0);
  EXPECT_EQ(rep.ci_high, 0.0);
  EXPECT_EQ(rep.verdict, Verdict::Inconclusive);
}

TEST(Bootstrap, PValueArithmetic) {
  std::vector<double> deltas(10'000, 0.5);
  std::fill(deltas.begin(), deltas.begin() + 5000, -0.1);
  EXPECT_DOUBLE_EQ(bootstrap_p_value(deltas), 5001.0 / 10001.0);
  std::fill(deltas.begin(), deltas.end(), 0.0);
  EXPECT_EQ(bootstrap_p_value(deltas), 1.0);
}

TEST(PercentileCi, Examples) {
  const auto v = iota_vec(101);
  std::vector<double> d(v.size());
  std::transform(v.begin(), v.end(), d.begin(), [](double x) { return x - 1; });
  std::shuffle(d.begin(), d.end(), std::mt19937_64(3));
  const auto [lo, hi] = percentile_ci(d, 0.95);
  EXPECT_NEAR(lo, 2.5, 1e-12);
  EXPECT_NEAR(hi, 97.5, 1e-12);
  const auto [c1, c2] = percentile_ci(std::vector<double>(7, 0.25), 0.9);
  EXPECT_EQ(c1, 0.25);
  EXPECT_EQ(c2, 0.25);
}

TEST(Bootstrap, BoundsAndDeterminism) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = noisy(iota_vec(40), 8, gen);
    const auto t = noisy(r, 6, gen);
    const auto d = noisy(r, 6, gen);
    const TestConfig cfg = small(300, trial);
    const TestReport a = bootstrap_test(r, t, d, cfg);
    const TestReport b = bootstrap_test(r, t, d, cfg);
    EXPECT_GE(a.p_value, 1.0 / 301);
    EXPECT_LE(a.p_value, 1.0);
    EXPECT_NEAR(a.delta_hat, a.rho_rt - a.rho_dt, 1e-12);
    EXPECT_EQ(a.verdict == Verdict::NonMemberEvidence, a.p_value < cfg.alpha);
    EXPECT_EQ(a.deltas, b.deltas);
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_EQ(a.ci_low, b.ci_low);
    EXPECT_EQ(a.ci_high, b.ci_high);
  }
}

TEST(Bootstrap, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 gen(6);
  const auto r = noisy(iota_vec(60), 10, gen);
  const auto t = noisy(r, 5, gen), d = noisy(r, 9, gen);
  TestConfig one = small(2000), four = small(2000);
  four.threads = 4;
  const TestReport a = bootstrap_test(r, t, d, one), b = bootstrap_test(r, t, d, four);
  EXPECT_EQ(a.deltas, b.deltas);
  EXPECT_EQ(a.p_value, b.p_value);
  EXPECT_EQ(a.redraw_count, b.redraw_count);
}

TEST(Bootstrap, MonotoneTransformInvariance) {
  std::mt19937_64 gen(7);
  const auto r = noisy(iota_vec(50), 10, gen);
  const auto t = noisy(r, 5, gen), d = noisy(r, 9, gen);
  auto f = [](std::vector<double> v) {
    for (auto& x : v) x = std::atan(x / 7) * 5 + 2;
    return v;
  };
  for (RankMetric m : {RankMetric::Spearman, RankMetric::KendallTau}) {
    TestConfig cfg = small(500);
    cfg.metric = m;
    const TestReport a = bootstrap_test(r, t, d, cfg), b = bootstrap_test(f(r), f(t), f(d), cfg);
    EXPECT_EQ(a.rho_rt, b.rho_rt);
    EXPECT_EQ(a.rho_dt, b.rho_dt);
    EXPECT_EQ(a.deltas, b.deltas);
    EXPECT_EQ(a.p_value, b.p_value);
  }
}

TEST(Bootstrap, MatchesBruteForceOnExplicitResamples) {
  const std::vector<double> r{0.1, 0.5, -0.2, 0.9, 0.3, -1.0, 2.0};
  const std::vector<double> t{0.2, 0.4, -0.5, 1.1, 0.0, -0.7, 1.5};
  const std::vector<double> d{0.0, 0.9, -0.1, 0.4, 0.35, -1.2, 1.0};
  const std::vector<std::vector<std::size_t>> resamples{
      {0, 1, 2, 3, 4, 5, 6}, {0, 0, 1, 2, 3, 4, 5}, {6, 5, 4, 3, 2, 1, 1},
      {1, 3, 3, 5, 6, 0, 2}, {2, 2, 4, 4, 6, 6, 0}, {5, 1, 0, 3, 3, 6, 4}};
  const TestReport rep = bootstrap_test_on(r, t, d, resamples, small(resamples.size()));
  std::size_t non_positive = 0;
  for (std::size_t b = 0; b < resamples.size(); ++b) {
    std::vector<double> rb, tb, db;
    for (auto i : resamples[b]) {
      rb.push_back(r[i]);
      tb.push_back(t[i]);
      db.push_back(d[i]);
    }
    const double delta = oracle::spearman(rb, tb) - oracle::spearman(db, tb);
    EXPECT_NEAR(rep.deltas[b], delta, 1e-12);
    if (delta <= 0) ++non_positive;
  }
  EXPECT_EQ(rep.non_positive, non_positive);
  EXPECT_DOUBLE_EQ(rep.p_value, (1.0 + non_positive) / (resamples.size() + 1.0));
}

TEST(Bootstrap, EqualsExplicitRunOnGeneratedResamples) {
  std::mt19937_64 gen(8);
  const auto r = noisy(iota_vec(25), 5, gen);
  const auto t = noisy(r, 4, gen), d = noisy(r, 4, gen);
  const TestConfig cfg = small(200, 99);
  const TestReport rep = bootstrap_test(r, t, d, cfg);
  ASSERT_EQ(rep.redraw_count, 0u);
  std::vector<std::vector<std::size_t>> rs;
  for (std::size_t b = 0; b < cfg.resamples; ++b) rs.push_back(resample_indices(cfg.seed, b, r.size()));
  const TestReport explicit_run = bootstrap_test_on(r, t, d, rs, cfg);
  EXPECT_EQ(rep.deltas, explicit_run.deltas);
  EXPECT_EQ(rep.p_value, explicit_run.p_value);
}

TEST(Bootstrap, VerdictUsesStrictInequality) {
  std::mt19937_64 gen(9);
  const auto r = noisy(iota_vec(30), 5, gen);
  const auto t = noisy(r, 4, gen), d = noisy(r, 6, gen);
  TestConfig cfg = small(400);
  const double p = bootstrap_test(r, t, d, cfg).p_value;
  ASSERT_LT(p, 1.0);
  cfg.alpha = p;
  EXPECT_EQ(bootstrap_test(r, t, d, cfg).verdict, Verdict::Inconclusive);
  cfg.alpha = std::nextafter(p, 1.0);
  EXPECT_EQ(bootstrap_test(r, t, d, cfg).verdict, Verdict::NonMemberEvidence);
}

TEST(Bootstrap, DegenerateResamplesAreRedrawn) {
  const std::vector<double> r{1, 1, 1, 2}, t{1, 2, 3, 4}, d{4, 1, 2, 3};
  const TestReport rep = bootstrap_test(r, t, d, small(500));
  EXPECT_GT(rep.redraw_count, 0u);
  EXPECT_EQ(rep.deltas.size(), 500u);
  TestConfig strict = small(500);
  strict.max_redraws = 0;
  EXPECT_THROW(bootstrap_test(r, t, d, strict), TooManyDegenerateResamples);
}

TEST(Bootstrap, ConfigValidation) {
  TestConfig c;
  c.resamples = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = TestConfig{};
  c.alpha = 1;
  EXPECT_THROW(c.validate(), UsageError);
  c = TestConfig{};
  c.ci_level = 0;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(Bootstrap, ScoreVectorsMustShareOrder) {
  const ScoreVector a("r", "s", ScoreSpec{}, {{"a", 1}, {"b", 2}, {"c", 3}});
  const ScoreVector b("t", "s", ScoreSpec{}, {{"b", 1}, {"a", 2}, {"c", 3}});
  EXPECT_THROW(bootstrap_test(a, b, a, small(10)), DataError);
}

TEST(StudentT, MatchesBoostAndScipy) {
  for (double df : {1.0, 2.5, 7.0, 19.0, 120.0}) {
    boost::math::students_t dist(df);
    for (double t : {-30.0, -4.2, -2.1009, -0.3, 0.0, 0.7, 3.3, 12.0})
      EXPECT_NEAR(student_t_cdf(t, df), boost::math::cdf(dist, t), 1e-12) << "t=" << t << " df=" << df;
  }
  EXPECT_NEAR(student_t_cdf(-2.1009, 19), 0.024613284204685424, 1e-12);
}

TEST(IncompleteBeta, Endpoints) {
  EXPECT_EQ(incomplete_beta(2, 3, 0, 1), 0.0);
  EXPECT_EQ(incomplete_beta(2, 3, 1, 0), 1.0);
  EXPECT_NEAR(incomplete_beta(1, 1, 0.3, 0.7), 0.3, 1e-15);
}

TEST(PairedT, KnownStatistic) {
  std::mt19937_64 gen(10);
  std::normal_distribution<double> e(0, 1);
  std::vector<double> z(20);
  for (auto& v : z) v = e(gen);
  const double m = std::accumulate(z.begin(), z.end(), 0.0) / 20;
  double ss = 0;
  for (double v : z) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / 19);
  std::vector<double> target(20), distilled(20);
  for (std::size_t i = 0; i < 20; ++i) {
    distilled[i] = 1.0 + 0.1 * static_cast<double>(i);
    target[i] = distilled[i] + (z[i] - m) / sd - 2.1009 / std::sqrt(20.0);
  }
  const auto less = paired_t_test(target, distilled, Alternative::Less);
  EXPECT_NEAR(less.t_stat, -2.1009, 1e-12);
  EXPECT_EQ(less.df, 19);
  boost::math::students_t dist(19);
  EXPECT_NEAR(less.p_value, boost::math::cdf(dist, less.t_stat), 1e-9);
  EXPECT_NEAR(less.p_value, 0.024613284204685424, 1e-9);
  EXPECT_NEAR(paired_t_test(target, distilled, Alternative::Greater).p_value, 0.97538671579531455, 1e-9);
  EXPECT_NEAR(paired_t_test(target, distilled, Alternative::TwoSided).p_value, 0.049226568409370848, 1e-9);
}

TEST(PairedT, ZeroVariance) {
  const std::vector<double> t{2, 3, 4}, d{1, 2, 3};
  EXPECT_THROW(paired_t_test(t, d, Alternative::Less), ZeroVarianceDifferences);
}

TEST(PairedT, NullGivesUniformPValues) {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> e(0, 1);
  double sum = 0;
  const int trials = 400;
  for (int k = 0; k < trials; ++k) {
    std::vector<double> d(200), t(200);
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = 3 * e(gen);
      t[i] = d[i] + e(gen);
    }
    sum += paired_t_test(t, d, Alternative::Less).p_value;
  }
  EXPECT_NEAR(sum / trials, 0.5, 0.06);
}
