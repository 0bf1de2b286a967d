#include "prism/ranks.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "prism/errors.hpp"

using namespace prism;

namespace {

ScoreVector surprisal(std::vector<std::pair<std::string, double>> xs) {
  std::vector<ScoreEntry> e;
  for (auto& [id, s] : xs) e.push_back({id, s});
  ScoreSpec spec;
  spec.sign = SignConvention::SurprisalPositive;
  return ScoreVector("m", "d", spec, std::move(e));
}

}  // namespace

TEST(AverageRanks, Examples) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 30, 20}), (std::vector<double>{1, 3, 2}));
  EXPECT_EQ(average_ranks(std::vector<double>{5, 5, 7}), (std::vector<double>{1.5, 1.5, 3}));
  EXPECT_THROW(average_ranks(std::vector<double>{1}), DataError);
}

TEST(AverageRanks, MatchesBruteForceWithTies) {
  std::mt19937_64 gen(7);
  const auto x = oracle::tied_vector(gen, 1000);
  const auto r = average_ranks(x);
  EXPECT_EQ(r, oracle::ranks(x));
  EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), 1000.0 * 1001 / 2, 1e-9);
  for (double v : r) {
    EXPECT_GE(v, 1);
    EXPECT_LE(v, 1000);
  }
}

TEST(Spearman, HandComputed) {
  EXPECT_NEAR(spearman_rho(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-15);
  EXPECT_NEAR(spearman_rho(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3}), 1.5 / std::sqrt(3.0),
              1e-15);
  const std::vector<double> a{0.3, -1, 2, 8};
  EXPECT_DOUBLE_EQ(spearman_rho(a, a), 1.0);
  EXPECT_DOUBLE_EQ(spearman_rho(a, std::vector<double>{-0.3, 1, -2, -8}), -1.0);
}

TEST(Kendall, HandComputed) {
  EXPECT_NEAR(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 1.0 / 3, 1e-15);
  EXPECT_DOUBLE_EQ(kendall_tau(std::vector<double>{1, 2, 3, 4}, std::vector<double>{2, 3, 4, 5}), 1.0);
}

TEST(Correlation, DegenerateVariance) {
  EXPECT_THROW(spearman_rho(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}), DegenerateVarianceError);
  EXPECT_THROW(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{4, 4, 4}), DegenerateVarianceError);
}

TEST(Correlation, MatchesOraclesOnRandomTiedVectors) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<std::size_t> len(3, 500);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = len(gen);
    const auto a = oracle::tied_vector(gen, n);
    const auto b = oracle::tied_vector(gen, n);
    ASSERT_NEAR(spearman_rho(a, b), oracle::spearman(a, b), 1e-12) << "n=" << n;
    ASSERT_NEAR(kendall_tau(a, b), oracle::kendall(a, b), 1e-12) << "n=" << n;
  }
}

TEST(Correlation, SymmetryAndTransforms) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = oracle::tied_vector(gen, 60);
    const auto b = oracle::tied_vector(gen, 60);
    std::vector<double> ea(a.size()), nb(b.size()), na(a.size());
    std::transform(a.begin(), a.end(), ea.begin(), [](double v) { return std::exp(v) * 3 + 1; });
    std::transform(b.begin(), b.end(), nb.begin(), [](double v) { return -v; });
    std::transform(a.begin(), a.end(), na.begin(), [](double v) { return -v; });
    for (RankMetric m : {RankMetric::Spearman, RankMetric::KendallTau}) {
      const double r = rank_correlation(m, a, b);
      EXPECT_DOUBLE_EQ(r, rank_correlation(m, b, a));
      EXPECT_NEAR(r, rank_correlation(m, ea, b), 1e-14);
      EXPECT_NEAR(-r, rank_correlation(m, a, nb), 1e-14);
      EXPECT_NEAR(r, rank_correlation(m, na, nb), 1e-14);
    }
  }
}

TEST(Correlation, ScoreVectorsMustBeAligned) {
  const auto a = surprisal({{"a", 1}, {"b", 2}, {"c", 3}});
  const auto b = surprisal({{"b", 1}, {"a", 2}, {"c", 3}});
  EXPECT_THROW(spearman_rho(a, b), DataError);
  EXPECT_DOUBLE_EQ(spearman_rho(a, a), 1.0);
}

TEST(RankDelta, IdenticalAndSwap) {
  const auto before = surprisal({{"a", 0.1}, {"b", 0.5}, {"c", 0.9}});
  for (const auto& row : rank_delta(before, before)) EXPECT_EQ(row.delta, 0.0);

  const auto after = surprisal({{"a", 0.1}, {"b", 0.95}, {"c", 0.9}});
  const auto rows = rank_delta(before, after);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].doc_id, "a");
  EXPECT_EQ(rows[1].delta, 1.0);
  EXPECT_EQ(rows[2].delta, -1.0);
  double sum = 0;
  for (const auto& r : rows) sum += r.delta;
  EXPECT_EQ(sum, 0.0);
}

TEST(RankDelta, RequiresSurprisalPositive) {
  const auto sp = surprisal({{"a", 1}, {"b", 2}});
  const ScoreVector orig("m", "d", ScoreSpec{}, {{"a", 1}, {"b", 2}});
  EXPECT_THROW(rank_delta(sp, orig), DataError);
  EXPECT_THROW(rank_delta(orig, orig), DataError);
}

TEST(RankDelta, Csv) {
  const auto v = surprisal({{"b", 2}, {"a", 1}});
  const std::string csv = format_rank_delta_csv(rank_delta(v, v));
  EXPECT_EQ(csv, "doc_id,score_before,rank_before,rank_after,delta\na,1,1,1,0\nb,2,2,2,0\n");
}
