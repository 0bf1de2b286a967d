#pragma once

// Synthetic corpora from a hidden first-order Markov source. Each document is
// sampled at its own temperature, which spreads documents over a range of
// difficulty the way real text does.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prism/lm/tiny_lm.hpp"

namespace prism::lm {

struct Document {
  std::string id;
  std::vector<int> tokens;
  friend bool operator==(const Document&, const Document&) = default;
};

struct CorpusSpec {
  std::uint64_t seed = 1234;
  int vocab = 64;
  std::size_t n_docs = 4000;
  std::size_t min_len = 40;
  std::size_t max_len = 80;
  // Scale of the source's transition logits; larger means a more predictable source.
  double source_sharpness = 2.5;
  double temp_min = 0.6;
  double temp_max = 1.6;
  double frac_base = 0.85;
  double frac_suspect = 0.075;
  double frac_heldout = 0.075;

  // Throws UsageError on an invalid spec. `context` is the model window C.
  void validate(int context = 4) const;
};

struct Corpus {
  std::vector<Document> base;
  std::vector<Document> suspect;
  std::vector<Document> heldout;
};

// Transition matrix of the hidden source: row i is P(next | current = i), row 0
// (BOS) is the start distribution. Column 0 is always zero.
Matrix markov_source(const CorpusSpec& spec);

Corpus generate_corpus(const CorpusSpec& spec);

// Split sizes for n documents: suspect and heldout are rounded, base takes the rest.
struct SplitSizes {
  std::size_t base, suspect, heldout;
};
SplitSizes split_sizes(const CorpusSpec& spec);

std::vector<std::vector<int>> token_lists(std::span<const Document> docs);

// Token-id line files: `<doc_id>\t<id> <id> ...` per line.
std::string format_documents(std::span<const Document> docs);
std::vector<Document> parse_documents(const std::string& text);
void write_documents(std::span<const Document> docs, const std::filesystem::path& path);
std::vector<Document> read_documents(const std::filesystem::path& path);

}  // namespace prism::lm
