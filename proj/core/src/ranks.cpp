#include "prism/ranks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "prism/codec.hpp"

namespace prism {
namespace {

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw DataError("correlation inputs differ in length");
}

void require_aligned(const ScoreVector& a, const ScoreVector& b) {
  require_same_length(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.entries()[i].doc_id != b.entries()[i].doc_id)
      throw DataError("score vectors are not aligned at position " + std::to_string(i) + " ('" +
                      a.entries()[i].doc_id + "' vs '" + b.entries()[i].doc_id + "')");
}

// Number of tied pairs among runs of equal values in sorted order.
std::int64_t tied_pairs(std::span<const double> sorted) {
  std::int64_t total = 0, run = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

// Sorts `v` ascending and returns the number of inversions removed.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                         std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw DataError("ranking needs at least two values");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i+1 .. j share their mean rank
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

RankVector average_ranks(const ScoreVector& scores) {
  const auto v = scores.values();
  return {scores.doc_ids(), average_ranks(v)};
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size());
  const std::size_t n = x.size();
  if (n < 2) throw DataError("correlation needs at least two points");
  const double inv_n = 1.0 / static_cast<double>(n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) * inv_n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) * inv_n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateVarianceError("correlation of a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size());
  if (x.size() < 3) throw DataError("rank correlation needs at least three documents");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size());
  const std::size_t n = x.size();
  if (n < 3) throw DataError("rank correlation needs at least three documents");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t n1 = tied_pairs(xs);

  std::int64_t n3 = 0, run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
      ++run;
    } else {
      n3 += run * (run - 1) / 2;
      run = 1;
    }
  }
  n3 += run * (run - 1) / 2;

  std::vector<double> buf(n);
  const std::int64_t swaps = merge_count(ys, buf, 0, n);
  const std::int64_t n2 = tied_pairs(ys);

  if (n0 == n1 || n0 == n2) throw DegenerateVarianceError("Kendall tau of a constant vector");
  const std::int64_t s = n0 - n1 - n2 + n3 - 2 * swaps;  // concordant - discordant
  const double denom = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  return std::clamp(static_cast<double>(s) / denom, -1.0, 1.0);
}

double spearman_rho(const ScoreVector& a, const ScoreVector& b) {
  require_aligned(a, b);
  return spearman_rho(a.values(), b.values());
}

double kendall_tau(const ScoreVector& a, const ScoreVector& b) {
  require_aligned(a, b);
  return kendall_tau(a.values(), b.values());
}

std::string_view to_string(RankMetric m) {
  return m == RankMetric::Spearman ? "spearman" : "kendall";
}

RankMetric parse_rank_metric(std::string_view s) {
  if (s == "spearman" || s == "Spearman") return RankMetric::Spearman;
  if (s == "kendall" || s == "KendallTau" || s == "kendall_tau") return RankMetric::KendallTau;
  throw UsageError("unknown rank metric '" + std::string(s) + "'");
}

double rank_correlation(RankMetric m, std::span<const double> x, std::span<const double> y) {
  return m == RankMetric::Spearman ? spearman_rho(x, y) : kendall_tau(x, y);
}

std::vector<RankDeltaRow> rank_delta(const ScoreVector& before, const ScoreVector& after) {
  if (before.spec().sign != SignConvention::SurprisalPositive ||
      after.spec().sign != SignConvention::SurprisalPositive)
    throw DataError("rank analysis needs surprisal-positive scores on both sides");
  require_aligned(before, after);
  const auto vb = before.values();
  const auto va = after.values();
  const auto rb = average_ranks(vb);
  const auto ra = average_ranks(va);
  std::vector<RankDeltaRow> rows;
  rows.reserve(vb.size());
  for (std::size_t i = 0; i < vb.size(); ++i)
    rows.push_back({before.entries()[i].doc_id, vb[i], rb[i], ra[i], ra[i] - rb[i]});
  std::sort(rows.begin(), rows.end(), [](const RankDeltaRow& a, const RankDeltaRow& b) {
    return a.score_before < b.score_before ||
           (a.score_before == b.score_before && a.doc_id < b.doc_id);
  });
  return rows;
}

std::string format_rank_delta_csv(std::span<const RankDeltaRow> rows) {
  std::string out = "doc_id,score_before,rank_before,rank_after,delta\n";
  for (const auto& r : rows)
    out += r.doc_id + ',' + codec::format_double(r.score_before) + ',' +
           codec::format_double(r.rank_before) + ',' + codec::format_double(r.rank_after) + ',' +
           codec::format_double(r.delta) + '\n';
  return out;
}

}  // namespace prism
