#pragma once

// Run-directory stages behind the prism-audit subcommands.
//
//   corpus/{base,suspect,heldout}.tok
//   models/{reference,target-clean,target-member,distilled-clean,distilled-member}.ckpt
//   stats/<model>.<dataset>.pstats
//   scores/<model>.<dataset>.<score tag>.jsonl
//   reports/, sweeps/
//
// Every stage reads its inputs through the manifest (digest-checked) and
// records what it writes.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prism/audit/config.hpp"
#include "prism/audit/manifest.hpp"
#include "prism/inference.hpp"
#include "prism/lm/corpus.hpp"
#include "prism/lm/tiny_lm.hpp"
#include "prism/ranks.hpp"
#include "prism/scores.hpp"

namespace prism::audit {

enum class Target { Clean, Member };
std::string_view to_string(Target t);
Target parse_target(std::string_view s);

inline constexpr const char* kReference = "reference";
std::string target_model(Target t);     // "target-clean" / "target-member"
std::string distilled_model(Target t);  // "distilled-clean" / "distilled-member"

std::string corpus_path(std::string_view split);
std::string model_path(std::string_view model);
std::string stats_path(std::string_view model, std::string_view dataset);
std::string scores_path(std::string_view model, std::string_view dataset, const ScoreSpec& spec);

struct SimulationSummary {
  std::size_t base_docs = 0;
  std::size_t suspect_docs = 0;
  std::size_t heldout_docs = 0;
  std::size_t base_tokens = 0;
  std::size_t cpt_tokens = 0;
  std::size_t cpt_suspect_tokens = 0;
  // Mean per-token cross-entropy (nats).
  double ce_clean_suspect = 0;
  double ce_member_suspect = 0;
  double ce_member_heldout = 0;
};

// Corpus, reference, clean target and member target.
SimulationSummary simulate(const RunConfig& config, const std::filesystem::path& run);

// Trains the reference at `hidden` units on the run's base corpus (the RefCapacity sweep).
lm::TinyLM train_reference(const RunConfig& config, std::span<const std::vector<int>> base, int hidden);
lm::TinyLM continued_pretraining(const RunConfig& config, const lm::TinyLM& clean,
                                 std::span<const std::vector<int>> base,
                                 std::span<const std::vector<int>> suspect);

// Writes models/distilled-<target>.ckpt.
lm::TinyLM distill(const RunConfig& config, const std::filesystem::path& run, Target target);

lm::TinyLM load_model(const Manifest& m, std::string_view model);
std::vector<lm::Document> load_split(const Manifest& m, std::string_view split);

// Writes the model's .pstats and score file for `dataset` (a corpus split).
ScoreVector score(const RunConfig& config, const std::filesystem::path& run, std::string_view model,
                  std::string_view dataset);
// Scores an external .pstats dump; writes `out` when non-empty.
ScoreVector score_pstats(const std::filesystem::path& pstats, const ScoreSpec& spec,
                         const std::filesystem::path& out = {});

struct ScoreOverrides {
  std::optional<std::filesystem::path> reference;
  std::optional<std::filesystem::path> target;
  std::optional<std::filesystem::path> distilled;
};

struct TestOutcome {
  Target target = Target::Clean;
  std::string dataset;
  ScoreSpec spec;
  TestReport report;
  // Paired t-test of target against distilled scores (alternative: target lower).
  std::optional<PairedTResult> paired;
  std::string paired_note;
  Verdict paired_verdict = Verdict::Inconclusive;
};

TestOutcome run_test(const RunConfig& config, const std::filesystem::path& run, Target target,
                     const ScoreOverrides& overrides = {});
// Composes the test from three aligned score vectors.
TestOutcome test_scores(const ScoreVector& ref, const ScoreVector& target, const ScoreVector& distilled,
                        const TestConfig& config, Target which);

std::string format_test_text(const TestOutcome& t);
std::string format_test_json(const TestOutcome& t);
std::string format_deltas_csv(const TestReport& r);

enum class SweepAxis { K, Lambda, Tau, NDocs, RefCapacity };
std::string_view to_string(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view s);
std::vector<double> default_grid(SweepAxis a);

struct SweepRow {
  double value = 0;
  Target target = Target::Clean;
  std::size_t n_docs = 0;
  double rho_rt = 0;
  double rho_dt = 0;
  double delta_hat = 0;
  double p_value = 1;
  Verdict verdict = Verdict::Inconclusive;
};

std::vector<SweepRow> sweep(const RunConfig& config, const std::filesystem::path& run, SweepAxis axis,
                            std::vector<double> grid);
std::string format_sweep_csv(SweepAxis axis, std::span<const SweepRow> rows);

// Deterministic subsample of `n` suspect indices (sorted) for a seed.
std::vector<std::size_t> subsample_indices(std::uint64_t seed, std::size_t total, std::size_t n);

struct ScoreGapRow {
  ScoreSpec spec;
  double rho_clean = 0;   // rho(reference, clean target)
  double rho_member = 0;  // rho(reference, member target)
  double gap = 0;         // rho_clean - rho_member
};

std::vector<ScoreGapRow> compare_scores(const RunConfig& config, const std::filesystem::path& run);
std::string format_compare_csv(std::span<const ScoreGapRow> rows, RankMetric metric);
std::string format_compare_text(std::span<const ScoreGapRow> rows, RankMetric metric);

struct RankAnalysis {
  std::vector<RankDeltaRow> rows;
  // Mean rank change per decile of clean-target surprisal, lowest decile first.
  std::vector<double> decile_mean_delta;
};

RankAnalysis rank_analysis(const RunConfig& config, const std::filesystem::path& run);
std::string format_rank_text(const RankAnalysis& a);

}  // namespace prism::audit
