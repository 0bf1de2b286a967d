#pragma once

// Tie-aware ranking and rank correlation.

#include <span>
#include <string>
#include <vector>

#include "prism/scores.hpp"

namespace prism {

struct RankVector {
  std::vector<std::string> doc_ids;
  std::vector<double> ranks;
};

// 1-based ascending ranks; ties share the mean of the positions they cover.
// Throws DataError when fewer than two values are given.
std::vector<double> average_ranks(std::span<const double> values);
RankVector average_ranks(const ScoreVector& scores);

// Plain Pearson correlation. Throws DegenerateVarianceError if either side is constant.
double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of average ranks. Requires n >= 3.
double spearman_rho(std::span<const double> x, std::span<const double> y);
// Kendall tau-b in O(n log n).
double kendall_tau(std::span<const double> x, std::span<const double> y);

// ScoreVector overloads require identical doc-id order (see align_scores).
double spearman_rho(const ScoreVector& a, const ScoreVector& b);
double kendall_tau(const ScoreVector& a, const ScoreVector& b);

enum class RankMetric { Spearman, KendallTau };
std::string_view to_string(RankMetric m);
RankMetric parse_rank_metric(std::string_view s);

double rank_correlation(RankMetric m, std::span<const double> x, std::span<const double> y);

struct RankDeltaRow {
  std::string doc_id;
  double score_before;
  double rank_before;
  double rank_after;
  double delta;  // rank_after - rank_before
};

// Per-document rank change between two surprisal-positive score vectors,
// sorted by score_before (ties by doc id). Throws DataError on a sign
// convention mismatch or misaligned inputs.
std::vector<RankDeltaRow> rank_delta(const ScoreVector& before, const ScoreVector& after);

// `doc_id,score_before,rank_before,rank_after,delta` with a header row.
std::string format_rank_delta_csv(std::span<const RankDeltaRow> rows);

}  // namespace prism
