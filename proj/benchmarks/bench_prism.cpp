#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "prism/inference.hpp"
#include "prism/lm/tiny_lm.hpp"
#include "prism/lm/training.hpp"
#include "prism/ranks.hpp"
#include "prism/scores.hpp"

using namespace prism;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> e;
  std::vector<double> v(n);
  for (auto& x : v) x = e(gen);
  return v;
}

DocumentStats random_doc(std::size_t n) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::vector<TokenStat> t;
  for (std::size_t i = 0; i < n; ++i) t.emplace_back(-u(gen) * 3, -u(gen) * 2, u(gen));
  return DocumentStats("d", std::move(t));
}

}  // namespace

static void BM_Spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = gaussian(n, 1), y = gaussian(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(spearman_rho(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Spearman)->RangeMultiplier(10)->Range(100, 100'000)->Complexity();

static void BM_Kendall(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = gaussian(n, 1), y = gaussian(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Kendall)->RangeMultiplier(10)->Range(100, 100'000)->Complexity();

static void BM_MinKpp(benchmark::State& state) {
  const DocumentStats doc = random_doc(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(min_k_pp(doc, 20));
}
BENCHMARK(BM_MinKpp)->Arg(32)->Arg(512)->Arg(8192);

// Full 300-document test; the spec's default workload.
static void BM_Bootstrap(benchmark::State& state) {
  const auto r = gaussian(300, 1);
  auto t = r, d = r;
  const auto nt = gaussian(300, 2), nd = gaussian(300, 3);
  for (std::size_t i = 0; i < r.size(); ++i) {
    t[i] += 0.3 * nt[i];
    d[i] += 0.4 * nd[i];
  }
  TestConfig cfg;
  cfg.resamples = static_cast<std::size_t>(state.range(0));
  cfg.metric = state.range(1) ? RankMetric::KendallTau : RankMetric::Spearman;
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_test(r, t, d, cfg).p_value);
}
BENCHMARK(BM_Bootstrap)->Args({1000, 0})->Args({1000, 1})->Unit(benchmark::kMillisecond);

static void BM_CrossEntropyGrad(benchmark::State& state) {
  const lm::TinyLM model = lm::TinyLM::init(lm::Vocab::make_default(64), lm::ModelDims{}, 1);
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> tok(1, 63);
  std::vector<std::vector<int>> batch(16, std::vector<int>(24));
  for (auto& d : batch)
    for (auto& t : d) t = tok(gen);
  for (auto _ : state) benchmark::DoNotOptimize(lm::ce_loss_and_grad(model, batch).loss);
}
BENCHMARK(BM_CrossEntropyGrad)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
