#include "prism/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "prism/rng.hpp"
#include "prism/special_functions.hpp"

namespace prism {
namespace {

void require_aligned(const ScoreVector& a, const ScoreVector& b) {
  if (a.size() != b.size()) throw DataError("score vectors differ in length");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.entries()[i].doc_id != b.entries()[i].doc_id)
      throw DataError("score vectors are not aligned on doc ids");
}

bool has_spread(std::span<const double> v) {
  return std::any_of(v.begin(), v.end(), [&](double x) { return x != v.front(); });
}

struct Gathered {
  std::vector<double> r, t, d;
  void fill(std::span<const double> ref, std::span<const double> target,
            std::span<const double> distilled, std::span<const std::size_t> idx) {
    r.resize(idx.size());
    t.resize(idx.size());
    d.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      r[i] = ref[idx[i]];
      t[i] = target[idx[i]];
      d[i] = distilled[idx[i]];
    }
  }
  bool degenerate() const { return !has_spread(r) || !has_spread(t) || !has_spread(d); }
};

void finish_report(TestReport& rep) {
  rep.non_positive = static_cast<std::size_t>(
      std::count_if(rep.deltas.begin(), rep.deltas.end(), [](double x) { return x <= 0.0; }));
  rep.p_value = bootstrap_p_value(rep.deltas);
  std::tie(rep.ci_low, rep.ci_high) = percentile_ci(rep.deltas, rep.config.ci_level);
  rep.verdict = rep.p_value < rep.config.alpha ? Verdict::NonMemberEvidence : Verdict::Inconclusive;
}

void check_inputs(std::span<const double> ref, std::span<const double> target,
                  std::span<const double> distilled) {
  if (ref.size() != target.size() || ref.size() != distilled.size())
    throw DataError("reference, target and distilled scores differ in length");
  if (ref.size() < 3) throw DataError("the test needs at least three documents");
}

}  // namespace

void TestConfig::validate() const {
  if (resamples < 1) throw UsageError("bootstrap resample count must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw UsageError("ci_level must lie in (0, 1)");
  if (max_redraws < 0) throw UsageError("max_redraws must be >= 0");
}

std::string_view to_string(Verdict v) {
  return v == Verdict::NonMemberEvidence ? "NonMemberEvidence" : "Inconclusive";
}

DeltaStatistic delta_statistic(std::span<const double> ref, std::span<const double> target,
                               std::span<const double> distilled, RankMetric metric) {
  check_inputs(ref, target, distilled);
  const double rt = rank_correlation(metric, ref, target);
  const double dt = rank_correlation(metric, distilled, target);
  return {rt, dt, rt - dt};
}

DeltaStatistic delta_statistic(const ScoreVector& ref, const ScoreVector& target,
                               const ScoreVector& distilled, RankMetric metric) {
  require_aligned(ref, target);
  require_aligned(ref, distilled);
  return delta_statistic(ref.values(), target.values(), distilled.values(), metric);
}

std::vector<std::size_t> resample_indices(std::uint64_t seed, std::size_t b, std::size_t n,
                                          int redraw) {
  SplitMix64 gen(derive_seed(derive_seed(seed, b), static_cast<std::uint64_t>(redraw)));
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(gen.below(n));
  return idx;
}

double bootstrap_p_value(std::span<const double> deltas) {
  const auto hits = std::count_if(deltas.begin(), deltas.end(), [](double x) { return x <= 0.0; });
  return (1.0 + static_cast<double>(hits)) / (static_cast<double>(deltas.size()) + 1.0);
}

std::pair<double, double> percentile_ci(std::span<const double> deltas, double level) {
  if (deltas.empty()) throw DataError("percentile interval of an empty sample");
  if (!(level > 0.0 && level < 1.0)) throw UsageError("ci level must lie in (0, 1)");
  std::vector<double> s(deltas.begin(), deltas.end());
  std::sort(s.begin(), s.end());
  const auto quantile = [&](double p) {
    const double h = (static_cast<double>(s.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
  };
  return {quantile((1.0 - level) / 2.0), quantile((1.0 + level) / 2.0)};
}

TestReport bootstrap_test(std::span<const double> ref, std::span<const double> target,
                          std::span<const double> distilled, const TestConfig& config) {
  config.validate();
  check_inputs(ref, target, distilled);
  const std::size_t n = ref.size();
  const std::size_t B = config.resamples;

  TestReport rep;
  rep.config = config;
  rep.n_docs = n;
  const auto full = delta_statistic(ref, target, distilled, config.metric);
  rep.rho_rt = full.rho_rt;
  rep.rho_dt = full.rho_dt;
  rep.delta_hat = full.delta_hat;
  rep.deltas.assign(B, 0.0);

  std::vector<std::size_t> redraws(B, 0);
  const auto run_range = [&](std::size_t begin, std::size_t end) {
    Gathered g;
    for (std::size_t b = begin; b < end; ++b) {
      int attempt = 0;
      for (;; ++attempt) {
        const auto idx = resample_indices(config.seed, b, n, attempt);
        g.fill(ref, target, distilled, idx);
        if (!g.degenerate()) break;
        if (attempt >= config.max_redraws)
          throw TooManyDegenerateResamples("bootstrap replicate " + std::to_string(b) +
                                           " stayed degenerate after " +
                                           std::to_string(config.max_redraws) + " redraws");
      }
      redraws[b] = static_cast<std::size_t>(attempt);
      rep.deltas[b] = rank_correlation(config.metric, g.r, g.t) -
                      rank_correlation(config.metric, g.d, g.t);
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(B)));
  if (workers == 1) {
    run_range(0, B);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    const std::size_t chunk = (B + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t lo = std::min(B, w * chunk), hi = std::min(B, lo + chunk);
      pool.emplace_back([&, w, lo, hi] {
        try {
          run_range(lo, hi);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (const auto r : redraws) rep.redraw_count += r;
  finish_report(rep);
  return rep;
}

TestReport bootstrap_test(const ScoreVector& ref, const ScoreVector& target,
                          const ScoreVector& distilled, const TestConfig& config) {
  require_aligned(ref, target);
  require_aligned(ref, distilled);
  return bootstrap_test(ref.values(), target.values(), distilled.values(), config);
}

TestReport bootstrap_test_on(std::span<const double> ref, std::span<const double> target,
                             std::span<const double> distilled,
                             std::span<const std::vector<std::size_t>> resamples,
                             const TestConfig& config) {
  check_inputs(ref, target, distilled);
  if (resamples.empty()) throw UsageError("no resamples given");
  TestReport rep;
  rep.config = config;
  rep.config.resamples = resamples.size();
  rep.config.validate();
  rep.n_docs = ref.size();
  const auto full = delta_statistic(ref, target, distilled, config.metric);
  rep.rho_rt = full.rho_rt;
  rep.rho_dt = full.rho_dt;
  rep.delta_hat = full.delta_hat;
  Gathered g;
  for (const auto& idx : resamples) {
    for (const auto i : idx)
      if (i >= ref.size()) throw DataError("resample index out of range");
    g.fill(ref, target, distilled, idx);
    rep.deltas.push_back(rank_correlation(config.metric, g.r, g.t) -
                         rank_correlation(config.metric, g.d, g.t));
  }
  finish_report(rep);
  return rep;
}

PairedTResult paired_t_test(std::span<const double> target, std::span<const double> distilled,
                            Alternative alternative) {
  if (target.size() != distilled.size()) throw DataError("paired samples differ in length");
  const std::size_t n = target.size();
  if (n < 2) throw DataError("paired t-test needs at least two pairs");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = target[i] - distilled[i];
  if (!has_spread(d)) throw ZeroVarianceDifferences("all paired differences are identical");
  const double nn = static_cast<double>(n);
  double mean = 0.0;
  for (const double x : d) mean += x;
  mean /= nn;
  double ss = 0.0;
  for (const double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (nn - 1.0));
  const double t = mean / (sd / std::sqrt(nn));
  const double df = nn - 1.0;
  double p = 0.0;
  switch (alternative) {
    case Alternative::Less: p = special::student_t_cdf(t, df); break;
    case Alternative::Greater: p = special::student_t_cdf(-t, df); break;
    case Alternative::TwoSided: p = special::student_t_two_sided(t, df); break;
  }
  return {t, df, p};
}

PairedTResult paired_t_test(const ScoreVector& target, const ScoreVector& distilled,
                            Alternative alternative) {
  require_aligned(target, distilled);
  return paired_t_test(target.values(), distilled.values(), alternative);
}

}  // namespace prism
