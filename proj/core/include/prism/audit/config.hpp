#pragma once

// Run configuration: one INI-style text file with a section per stage.
//
//   [run]       seed
//   [corpus]    CorpusSpec fields
//   [model]     context, embed, hidden, reference_hidden, reference_embed
//   [pretrain]  TrainConfig for the reference and the clean target
//   [cpt]       continued pretraining that turns the clean target into the member target
//   [distill]   lambda, tau and TrainConfig fields for the distilled reference
//   [score]     kind, k, sign, sigma_floor
//   [test]      resamples, alpha, metric, max_redraws, ci_level, threads
//
// Unknown sections or keys and malformed values are errors reported with file and line.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "prism/inference.hpp"
#include "prism/lm/corpus.hpp"
#include "prism/lm/training.hpp"
#include "prism/scores.hpp"

namespace prism::audit {

struct ContinuedPretraining {
  lm::TrainConfig train{.lr = 0.1, .batch_size = 16, .epochs = 3};
  // Passes over the suspect documents inside each CPT epoch.
  int suspect_repeats = 10;
  // Base documents mixed in alongside the suspect set.
  std::size_t base_docs = 1000;
};

struct RunConfig {
  std::uint64_t seed = 1234;
  lm::CorpusSpec corpus;
  lm::ModelDims dims;
  // The reference is wider than the targets, as a larger model of the same family would be.
  int reference_hidden = 256;
  int reference_embed = 32;
  // Reference and clean target see the base corpus in the same order (as a
  // model family trained on one data stream would).
  bool shared_data_order = true;
  lm::TrainConfig pretrain;
  ContinuedPretraining cpt;
  lm::DistillConfig distill;
  ScoreSpec score;
  TestConfig test;

  // Sub-seeds for every stage derive from `seed`.
  void apply_seed(std::uint64_t master);
  void validate() const;
};

RunConfig default_config();
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);
// Canonical text form; parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& c);
// (section, [(key, canonical value)]) in file order.
std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> config_entries(
    const RunConfig& c);

}  // namespace prism::audit
