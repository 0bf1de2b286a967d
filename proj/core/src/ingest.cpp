#include "prism/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "prism/codec.hpp"

namespace prism {
namespace {

using nlohmann::json;

void check_field(bool ok, const char* field, const char* message) {
  if (!ok) throw ValidationError(0, "", field, message);
}

std::string json_escape(const std::string& s) { return json(s).dump(); }

[[noreturn]] void rethrow_with(const ValidationError& e, int line, const std::string& doc_id) {
  throw ValidationError(line, doc_id.empty() ? e.doc_id() : doc_id, e.field(), e.detail());
}

DocumentStats parse_document(const json& rec, int line) {
  std::string doc_id = "-";
  try {
    if (!rec.is_object()) throw ValidationError(line, doc_id, "record", "not a JSON object");
    if (!rec.contains("doc_id") || !rec["doc_id"].is_string())
      throw ValidationError(line, doc_id, "doc_id", "missing or not a string");
    doc_id = rec["doc_id"].get<std::string>();
    if (!rec.contains("n_tokens") || !rec["n_tokens"].is_number_integer())
      throw ValidationError(line, doc_id, "n_tokens", "missing or not an integer");
    if (!rec.contains("tokens") || !rec["tokens"].is_array())
      throw ValidationError(line, doc_id, "tokens", "missing or not an array");
    const auto& arr = rec["tokens"];
    std::vector<TokenStat> tokens;
    tokens.reserve(arr.size());
    for (const auto& t : arr) {
      if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_number() ||
          !t[2].is_number())
        throw ValidationError(line, doc_id, "tokens", "each token must be [logp, mu, sigma]");
      tokens.emplace_back(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
    }
    if (rec["n_tokens"].get<long long>() != static_cast<long long>(tokens.size()))
      throw ValidationError(line, doc_id, "n_tokens", "does not match length of tokens");
    std::optional<std::string> raw;
    if (rec.contains("raw_text_b64") && !rec["raw_text_b64"].is_null()) {
      if (!rec["raw_text_b64"].is_string())
        throw ValidationError(line, doc_id, "raw_text_b64", "not a string");
      try {
        raw = codec::base64_decode(rec["raw_text_b64"].get<std::string>());
      } catch (const DataError& e) {
        throw ValidationError(line, doc_id, "raw_text_b64", e.what());
      }
    }
    return DocumentStats(doc_id, std::move(tokens), std::move(raw));
  } catch (const ValidationError& e) {
    rethrow_with(e, line, doc_id);
  }
}

}  // namespace

TokenStat::TokenStat(double logp_true, double mu, double sigma)
    : logp_true_(logp_true), mu_(mu), sigma_(sigma) {
  check_field(std::isfinite(logp_true), "logp_true", "must be finite");
  check_field(std::isfinite(mu), "mu", "must be finite");
  check_field(std::isfinite(sigma), "sigma", "must be finite");
  check_field(logp_true <= 0.0, "logp_true", "must be <= 0");
  check_field(mu <= 0.0, "mu", "must be <= 0");
  check_field(sigma >= 0.0, "sigma", "must be >= 0");
}

DocumentStats::DocumentStats(std::string doc_id, std::vector<TokenStat> tokens,
                             std::optional<std::string> raw_bytes)
    : doc_id_(std::move(doc_id)), tokens_(std::move(tokens)), raw_bytes_(std::move(raw_bytes)) {
  if (doc_id_.empty()) throw ValidationError(0, "", "doc_id", "must be non-empty");
  if (tokens_.empty()) throw ValidationError(0, doc_id_, "tokens", "document has no tokens");
}

DatasetStats::DatasetStats(std::string model_id, std::string dataset_id,
                           std::vector<DocumentStats> docs)
    : model_id_(std::move(model_id)), dataset_id_(std::move(dataset_id)), docs_(std::move(docs)) {
  if (docs_.empty()) throw ValidationError(0, "-", "docs", "dataset has no documents");
  std::unordered_set<std::string> seen;
  for (const auto& d : docs_)
    if (!seen.insert(d.doc_id()).second)
      throw ValidationError(0, d.doc_id(), "doc_id", "duplicate document id");
}

std::vector<std::string> DatasetStats::doc_ids() const {
  std::vector<std::string> ids;
  ids.reserve(docs_.size());
  for (const auto& d : docs_) ids.push_back(d.doc_id());
  return ids;
}

DatasetStats parse_dataset_stats(const std::string& text) {
  std::string model_id, dataset_id;
  bool have_header = false;
  std::vector<DocumentStats> docs;
  std::unordered_map<std::string, int> first_line;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(line_no, "-", "record", std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      if (!rec.is_object() || rec.value("format", "") != "pstats")
        throw ValidationError(line_no, "-", "format", "missing pstats header line");
      if (rec.value("version", 0) != 1)
        throw ValidationError(line_no, "-", "version", "unsupported pstats version");
      if (!rec.contains("model_id") || !rec["model_id"].is_string() ||
          !rec.contains("dataset_id") || !rec["dataset_id"].is_string())
        throw ValidationError(line_no, "-", "header", "model_id and dataset_id are required");
      model_id = rec["model_id"].get<std::string>();
      dataset_id = rec["dataset_id"].get<std::string>();
      have_header = true;
      continue;
    }
    docs.push_back(parse_document(rec, line_no));
    const auto [it, inserted] = first_line.emplace(docs.back().doc_id(), line_no);
    if (!inserted)
      throw ValidationError(line_no, docs.back().doc_id(), "doc_id",
                            "duplicate of line " + std::to_string(it->second));
  }
  if (!have_header) throw ValidationError(line_no, "-", "format", "empty pstats file");
  if (docs.empty()) throw ValidationError(line_no, "-", "docs", "dataset has no documents");
  return DatasetStats(std::move(model_id), std::move(dataset_id), std::move(docs));
}

std::string format_dataset_stats(const DatasetStats& stats) {
  std::string out;
  out += "{\"format\":\"pstats\",\"version\":1,\"model_id\":" + json_escape(stats.model_id()) +
         ",\"dataset_id\":" + json_escape(stats.dataset_id()) + "}\n";
  for (const auto& d : stats.docs()) {
    out += "{\"doc_id\":" + json_escape(d.doc_id()) +
           ",\"n_tokens\":" + std::to_string(d.n_tokens()) + ",\"tokens\":[";
    bool first = true;
    for (const auto& t : d.tokens()) {
      if (!first) out += ',';
      first = false;
      out += '[' + codec::format_double(t.logp_true()) + ',' + codec::format_double(t.mu()) + ',' +
             codec::format_double(t.sigma()) + ']';
    }
    out += ']';
    if (d.raw_bytes()) out += ",\"raw_text_b64\":\"" + codec::base64_encode(*d.raw_bytes()) + '"';
    out += "}\n";
  }
  return out;
}

DatasetStats read_dataset_stats(const std::filesystem::path& path) {
  return parse_dataset_stats(codec::read_file(path));
}

void write_dataset_stats(const DatasetStats& stats, const std::filesystem::path& path) {
  codec::write_file(path, format_dataset_stats(stats));
}

std::string format_validation_line(const ValidationError& e) {
  return "ERROR " + std::to_string(e.line()) + ' ' + (e.doc_id().empty() ? "-" : e.doc_id()) +
         ' ' + e.field() + ' ' + e.detail();
}

Alignment align_ids(std::span<const std::string> a, std::span<const std::string> b) {
  std::unordered_map<std::string_view, std::size_t> pos_b;
  pos_b.reserve(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) pos_b.emplace(b[i], i);

  std::vector<std::size_t> order_a;
  Alignment out;
  std::unordered_set<std::string_view> in_a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    in_a.insert(a[i]);
    if (pos_b.contains(a[i])) order_a.push_back(i);
    else out.missing_in_b.push_back(a[i]);
  }
  for (const auto& id : b)
    if (!in_a.contains(id)) out.missing_in_a.push_back(id);
  if (order_a.empty()) throw DataError("no document ids in common");

  std::sort(order_a.begin(), order_a.end(), [&](std::size_t x, std::size_t y) { return a[x] < a[y]; });
  for (const std::size_t i : order_a) {
    out.ids.push_back(a[i]);
    out.index_a.push_back(i);
    out.index_b.push_back(pos_b.at(a[i]));
  }
  std::sort(out.missing_in_a.begin(), out.missing_in_a.end());
  std::sort(out.missing_in_b.begin(), out.missing_in_b.end());
  return out;
}

Alignment align_by_doc_id(const DatasetStats& a, const DatasetStats& b) {
  const auto ia = a.doc_ids();
  const auto ib = b.doc_ids();
  return align_ids(ia, ib);
}

DatasetStats select_docs(const DatasetStats& stats, std::span<const std::size_t> indices) {
  std::vector<DocumentStats> docs;
  docs.reserve(indices.size());
  for (const auto i : indices) docs.push_back(stats.docs()[i]);
  return DatasetStats(stats.model_id(), stats.dataset_id(), std::move(docs));
}

}  // namespace prism
