#pragma once

// Non-membership test: bootstrap distribution of
//   delta = rho(reference, target) - rho(distilled, target)
// with a one-sided finite-sample-corrected p-value, plus a paired t-test baseline.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prism/ranks.hpp"
#include "prism/scores.hpp"

namespace prism {

struct TestConfig {
  std::size_t resamples = 10'000;
  double alpha = 0.05;
  std::uint64_t seed = 1234;
  RankMetric metric = RankMetric::Spearman;
  int max_redraws = 100;
  double ci_level = 0.95;
  // Worker threads for the bootstrap loop; results do not depend on it.
  unsigned threads = 1;

  void validate() const;
};

enum class Verdict { NonMemberEvidence, Inconclusive };
std::string_view to_string(Verdict v);

struct DeltaStatistic {
  double rho_rt;
  double rho_dt;
  double delta_hat;
};

struct TestReport {
  double rho_rt = 0;
  double rho_dt = 0;
  double delta_hat = 0;
  std::vector<double> deltas;
  std::size_t non_positive = 0;
  double p_value = 1;
  double ci_low = 0;
  double ci_high = 0;
  std::size_t n_docs = 0;
  TestConfig config;
  std::size_t redraw_count = 0;
  Verdict verdict = Verdict::Inconclusive;
  std::string rng = "splitmix64";
};

// Inputs are score arrays in the same document order.
DeltaStatistic delta_statistic(std::span<const double> ref, std::span<const double> target,
                               std::span<const double> distilled, RankMetric metric);
// Throws DataError unless the three vectors carry identical doc-id order.
DeltaStatistic delta_statistic(const ScoreVector& ref, const ScoreVector& target,
                               const ScoreVector& distilled, RankMetric metric);

// Document indices of bootstrap replicate `b` after `redraw` rejected draws.
// Replicate streams are independent, so replicates can run in any order.
std::vector<std::size_t> resample_indices(std::uint64_t seed, std::size_t b, std::size_t n,
                                          int redraw = 0);

// (1 + #{delta <= 0}) / (B + 1)
double bootstrap_p_value(std::span<const double> deltas);

// Type-7 (linear interpolation) percentile interval at `level`.
std::pair<double, double> percentile_ci(std::span<const double> deltas, double level);

TestReport bootstrap_test(std::span<const double> ref, std::span<const double> target,
                          std::span<const double> distilled, const TestConfig& config);
TestReport bootstrap_test(const ScoreVector& ref, const ScoreVector& target,
                          const ScoreVector& distilled, const TestConfig& config);

// Same test on an explicit list of resamples; bootstrap_test is this function
// applied to resample_indices(seed, 0..B-1, n) with degenerate draws redrawn.
TestReport bootstrap_test_on(std::span<const double> ref, std::span<const double> target,
                             std::span<const double> distilled,
                             std::span<const std::vector<std::size_t>> resamples,
                             const TestConfig& config);

enum class Alternative { Less, Greater, TwoSided };

struct PairedTResult {
  double t_stat;
  double df;
  double p_value;
};

// Paired t-test on d_i = target_i - distilled_i. Throws ZeroVarianceDifferences
// when every difference is identical.
PairedTResult paired_t_test(std::span<const double> target, std::span<const double> distilled,
                            Alternative alternative);
PairedTResult paired_t_test(const ScoreVector& target, const ScoreVector& distilled,
                            Alternative alternative);

}  // namespace prism
