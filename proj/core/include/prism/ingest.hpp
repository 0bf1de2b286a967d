#pragma once

// Per-token grey-box statistics and the `.pstats` record format.
//
// A `.pstats` file is UTF-8, one JSON object per line. The first line is a
// header, every following line is one document:
//
//   {"format":"pstats","version":1,"model_id":"reference","dataset_id":"suspect"}
//   {"doc_id":"d0001","n_tokens":2,"tokens":[[-1.5,-2.25,0.75],[-0.5,-1,0.25]],"raw_text_b64":"YWI="}
//
// Each token triple is (log p of the realized token, mean log p, std of log p)
// in natural log under the model's next-token distribution. Numbers are written
// with 17 significant digits, so a read/write cycle is bit-exact.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prism/errors.hpp"

namespace prism {

class TokenStat {
 public:
  // Throws ValidationError (no line/doc context) naming the offending field.
  TokenStat(double logp_true, double mu, double sigma);

  double logp_true() const noexcept { return logp_true_; }
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }

  friend bool operator==(const TokenStat&, const TokenStat&) = default;

 private:
  double logp_true_;
  double mu_;
  double sigma_;
};

class DocumentStats {
 public:
  DocumentStats(std::string doc_id, std::vector<TokenStat> tokens,
                std::optional<std::string> raw_bytes = std::nullopt);

  const std::string& doc_id() const noexcept { return doc_id_; }
  std::span<const TokenStat> tokens() const noexcept { return tokens_; }
  std::size_t n_tokens() const noexcept { return tokens_.size(); }
  const std::optional<std::string>& raw_bytes() const noexcept { return raw_bytes_; }

  friend bool operator==(const DocumentStats&, const DocumentStats&) = default;

 private:
  std::string doc_id_;
  std::vector<TokenStat> tokens_;
  std::optional<std::string> raw_bytes_;
};

class DatasetStats {
 public:
  DatasetStats(std::string model_id, std::string dataset_id, std::vector<DocumentStats> docs);

  const std::string& model_id() const noexcept { return model_id_; }
  const std::string& dataset_id() const noexcept { return dataset_id_; }
  std::span<const DocumentStats> docs() const noexcept { return docs_; }
  std::size_t size() const noexcept { return docs_.size(); }
  std::vector<std::string> doc_ids() const;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;

 private:
  std::string model_id_;
  std::string dataset_id_;
  std::vector<DocumentStats> docs_;
};

DatasetStats read_dataset_stats(const std::filesystem::path& path);
void write_dataset_stats(const DatasetStats& stats, const std::filesystem::path& path);

// In-memory variants of the file functions; the file functions are thin wrappers.
DatasetStats parse_dataset_stats(const std::string& text);
std::string format_dataset_stats(const DatasetStats& stats);

// `ERROR <line> <doc_id> <field> <message>` as written to stderr by the CLI.
std::string format_validation_line(const ValidationError& e);

// Intersection of two id lists in lexicographic order, with the positions of
// each common id in both inputs and the ids present on one side only.
struct Alignment {
  std::vector<std::string> ids;
  std::vector<std::size_t> index_a;
  std::vector<std::size_t> index_b;
  std::vector<std::string> missing_in_a;
  std::vector<std::string> missing_in_b;
};

// Throws DataError on an empty intersection.
Alignment align_ids(std::span<const std::string> a, std::span<const std::string> b);
Alignment align_by_doc_id(const DatasetStats& a, const DatasetStats& b);

// Dataset restricted to the given documents, in the given order.
DatasetStats select_docs(const DatasetStats& stats, std::span<const std::size_t> indices);

}  // namespace prism
