#pragma once

// Document-level membership-inference scores computed from per-token stats.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prism/ingest.hpp"

namespace prism {

enum class ScoreKind { MinKpp, MinK, Loss, Compression };

// PaperOriginal keeps Min-K%++ / Min-K% as averages of (normalized) log
// probabilities: more negative means more surprising. SurprisalPositive negates
// them so that higher means more surprising. Loss and Compression are already
// surprisal-positive and ignore the convention.
enum class SignConvention { PaperOriginal, SurprisalPositive };

inline constexpr double kDefaultKPercent = 20.0;
inline constexpr double kDefaultSigmaFloor = 1e-6;

struct ScoreSpec {
  ScoreKind kind = ScoreKind::MinKpp;
  double k_percent = kDefaultKPercent;
  SignConvention sign = SignConvention::PaperOriginal;
  double sigma_floor = kDefaultSigmaFloor;

  // Throws UsageError unless 0 < k_percent <= 100 and sigma_floor > 0.
  void validate() const;
  // Short stable tag such as "minkpp-k20-orig", used in file names and headers.
  std::string tag() const;

  friend bool operator==(const ScoreSpec&, const ScoreSpec&) = default;
};

std::string_view to_string(ScoreKind kind);
std::string_view to_string(SignConvention sign);
ScoreKind parse_score_kind(std::string_view s);
SignConvention parse_sign_convention(std::string_view s);

struct ScoreEntry {
  std::string doc_id;
  double score;
  friend bool operator==(const ScoreEntry&, const ScoreEntry&) = default;
};

class ScoreVector {
 public:
  ScoreVector(std::string model_id, std::string dataset_id, ScoreSpec spec,
              std::vector<ScoreEntry> entries, int deflate_level = 6);

  const std::string& model_id() const noexcept { return model_id_; }
  const std::string& dataset_id() const noexcept { return dataset_id_; }
  const ScoreSpec& spec() const noexcept { return spec_; }
  int deflate_level() const noexcept { return deflate_level_; }
  std::span<const ScoreEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::vector<double> values() const;
  std::vector<std::string> doc_ids() const;

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

 private:
  std::string model_id_;
  std::string dataset_id_;
  ScoreSpec spec_;
  std::vector<ScoreEntry> entries_;
  int deflate_level_;
};

std::vector<double> z_scores(const DocumentStats& doc, double sigma_floor = kDefaultSigmaFloor);

// Positions (ascending) of the m = max(1, ceil(k/100 * n)) smallest values;
// ties at the boundary go to the earlier position.
std::vector<std::size_t> select_smallest(std::span<const double> values, double k_percent);

// Mean of the selected smallest z-scores (PaperOriginal convention).
double min_k_pp(const DocumentStats& doc, double k_percent = kDefaultKPercent,
                double sigma_floor = kDefaultSigmaFloor);
double min_k(const DocumentStats& doc, double k_percent = kDefaultKPercent);
// Mean negative log-likelihood in nats per token.
double loss_score(const DocumentStats& doc);
// Total NLL (nats) over DEFLATE size (bits) of the raw bytes. Throws DataError
// when raw bytes are missing or empty.
double compression_score(const DocumentStats& doc);

double score_document(const DocumentStats& doc, const ScoreSpec& spec);
ScoreVector score_dataset(const DatasetStats& stats, const ScoreSpec& spec);

// Restricts every vector to the doc ids common to all, in lexicographic order.
// Throws DataError when the intersection is empty.
std::vector<ScoreVector> align_scores(std::span<const ScoreVector> vectors);

// Score file: a JSON header line followed by one `{"doc_id":..,"score":..}` per line.
std::string format_score_vector(const ScoreVector& v);
ScoreVector parse_score_vector(const std::string& text);
void write_score_vector(const ScoreVector& v, const std::filesystem::path& path);
ScoreVector read_score_vector(const std::filesystem::path& path);

}  // namespace prism
