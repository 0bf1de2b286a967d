#include "prism/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "prism/codec.hpp"

namespace prism {
namespace {

using nlohmann::json;

// Neumaier compensated sum.
double compensated_sum(std::span<const double> xs) {
  double sum = 0.0, c = 0.0;
  for (const double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) c += (sum - t) + x;
    else c += (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

double mean_of(std::span<const double> values, std::span<const std::size_t> idx) {
  std::vector<double> picked;
  picked.reserve(idx.size());
  for (const auto i : idx) picked.push_back(values[i]);
  return compensated_sum(picked) / static_cast<double>(picked.size());
}

std::vector<double> logps(const DocumentStats& doc) {
  std::vector<double> out;
  out.reserve(doc.n_tokens());
  for (const auto& t : doc.tokens()) out.push_back(t.logp_true());
  return out;
}

double total_nll(const DocumentStats& doc) {
  const auto lp = logps(doc);
  return -compensated_sum(lp);
}

std::string format_k(double k) {
  if (k == std::floor(k)) return std::to_string(static_cast<long long>(k));
  return codec::format_double(k);
}

}  // namespace

void ScoreSpec::validate() const {
  if (!(k_percent > 0.0 && k_percent <= 100.0))
    throw UsageError("k_percent must lie in (0, 100], got " + codec::format_double(k_percent));
  if (!(sigma_floor > 0.0) || !std::isfinite(sigma_floor))
    throw UsageError("sigma_floor must be positive");
}

std::string ScoreSpec::tag() const {
  std::string t(to_string(kind));
  if (kind == ScoreKind::MinKpp || kind == ScoreKind::MinK) {
    t += "-k" + format_k(k_percent);
    t += sign == SignConvention::PaperOriginal ? "-orig" : "-surp";
  }
  return t;
}

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::MinKpp: return "minkpp";
    case ScoreKind::MinK: return "mink";
    case ScoreKind::Loss: return "loss";
    case ScoreKind::Compression: return "compression";
  }
  return "?";
}

std::string_view to_string(SignConvention sign) {
  return sign == SignConvention::PaperOriginal ? "original" : "surprisal_positive";
}

ScoreKind parse_score_kind(std::string_view s) {
  if (s == "minkpp" || s == "min-k++" || s == "MinKpp") return ScoreKind::MinKpp;
  if (s == "mink" || s == "min-k" || s == "MinK") return ScoreKind::MinK;
  if (s == "loss" || s == "Loss") return ScoreKind::Loss;
  if (s == "compression" || s == "zlib" || s == "Compression") return ScoreKind::Compression;
  throw UsageError("unknown score kind '" + std::string(s) + "'");
}

SignConvention parse_sign_convention(std::string_view s) {
  if (s == "paper_original" || s == "original") return SignConvention::PaperOriginal;
  if (s == "surprisal_positive" || s == "surprisal") return SignConvention::SurprisalPositive;
  throw UsageError("unknown sign convention '" + std::string(s) + "'");
}

ScoreVector::ScoreVector(std::string model_id, std::string dataset_id, ScoreSpec spec,
                         std::vector<ScoreEntry> entries, int deflate_level)
    : model_id_(std::move(model_id)),
      dataset_id_(std::move(dataset_id)),
      spec_(spec),
      entries_(std::move(entries)),
      deflate_level_(deflate_level) {
  spec_.validate();
  std::unordered_set<std::string_view> seen;
  for (const auto& e : entries_) {
    if (e.doc_id.empty()) throw ValidationError(0, "-", "doc_id", "must be non-empty");
    if (!std::isfinite(e.score)) throw ValidationError(0, e.doc_id, "score", "must be finite");
    if (!seen.insert(e.doc_id).second)
      throw ValidationError(0, e.doc_id, "doc_id", "duplicate document id");
  }
}

std::vector<double> ScoreVector::values() const {
  std::vector<double> v;
  v.reserve(entries_.size());
  for (const auto& e : entries_) v.push_back(e.score);
  return v;
}

std::vector<std::string> ScoreVector::doc_ids() const {
  std::vector<std::string> v;
  v.reserve(entries_.size());
  for (const auto& e : entries_) v.push_back(e.doc_id);
  return v;
}

std::vector<double> z_scores(const DocumentStats& doc, double sigma_floor) {
  if (!(sigma_floor > 0.0)) throw UsageError("sigma_floor must be positive");
  std::vector<double> z;
  z.reserve(doc.n_tokens());
  for (const auto& t : doc.tokens())
    z.push_back((t.logp_true() - t.mu()) / std::max(t.sigma(), sigma_floor));
  return z;
}

std::vector<std::size_t> select_smallest(std::span<const double> values, double k_percent) {
  const std::size_t n = values.size();
  if (n == 0) return {};
  const auto want = static_cast<std::size_t>(std::ceil(k_percent / 100.0 * static_cast<double>(n)));
  const std::size_t m = std::clamp<std::size_t>(want, 1, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const auto less = [&](std::size_t a, std::size_t b) {
    return values[a] < values[b] || (values[a] == values[b] && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m - 1), idx.end(), less);
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double min_k_pp(const DocumentStats& doc, double k_percent, double sigma_floor) {
  const auto z = z_scores(doc, sigma_floor);
  return mean_of(z, select_smallest(z, k_percent));
}

double min_k(const DocumentStats& doc, double k_percent) {
  const auto lp = logps(doc);
  return mean_of(lp, select_smallest(lp, k_percent));
}

double loss_score(const DocumentStats& doc) {
  return total_nll(doc) / static_cast<double>(doc.n_tokens());
}

double compression_score(const DocumentStats& doc) {
  if (!doc.raw_bytes() || doc.raw_bytes()->empty())
    throw DataError("doc '" + doc.doc_id() + "': compression score needs raw bytes");
  const double bits = 8.0 * static_cast<double>(codec::deflate_size(*doc.raw_bytes()));
  return total_nll(doc) / bits;
}

double score_document(const DocumentStats& doc, const ScoreSpec& spec) {
  const double flip = spec.sign == SignConvention::SurprisalPositive ? -1.0 : 1.0;
  switch (spec.kind) {
    case ScoreKind::MinKpp: return flip * min_k_pp(doc, spec.k_percent, spec.sigma_floor);
    case ScoreKind::MinK: return flip * min_k(doc, spec.k_percent);
    case ScoreKind::Loss: return loss_score(doc);
    case ScoreKind::Compression: return compression_score(doc);
  }
  throw UsageError("unknown score kind");
}

ScoreVector score_dataset(const DatasetStats& stats, const ScoreSpec& spec) {
  spec.validate();
  std::vector<ScoreEntry> entries;
  entries.reserve(stats.size());
  for (const auto& doc : stats.docs()) {
    try {
      entries.push_back({doc.doc_id(), score_document(doc, spec)});
    } catch (const DataError& e) {
      throw DataError(std::string("scoring ") + stats.dataset_id() + ": " + e.what());
    }
  }
  return ScoreVector(stats.model_id(), stats.dataset_id(), spec, std::move(entries),
                     codec::kDeflateLevel);
}

std::vector<ScoreVector> align_scores(std::span<const ScoreVector> vectors) {
  if (vectors.empty()) return {};
  std::vector<std::string> common = vectors.front().doc_ids();
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    const auto ids = vectors[i].doc_ids();
    common = align_ids(common, ids).ids;
  }
  std::sort(common.begin(), common.end());
  std::vector<ScoreVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    const auto ids = v.doc_ids();
    const auto al = align_ids(common, ids);
    std::vector<ScoreEntry> entries;
    entries.reserve(al.ids.size());
    for (std::size_t j = 0; j < al.ids.size(); ++j) entries.push_back(v.entries()[al.index_b[j]]);
    out.emplace_back(v.model_id(), v.dataset_id(), v.spec(), std::move(entries), v.deflate_level());
  }
  return out;
}

std::string format_score_vector(const ScoreVector& v) {
  const auto& s = v.spec();
  std::string out = "{\"format\":\"scores\",\"version\":1,\"model_id\":" + json(v.model_id()).dump() +
                    ",\"dataset_id\":" + json(v.dataset_id()).dump() + ",\"kind\":\"" +
                    std::string(to_string(s.kind)) + "\",\"k_percent\":" +
                    codec::format_double(s.k_percent) + ",\"sign\":\"" +
                    std::string(to_string(s.sign)) + "\",\"sigma_floor\":" +
                    codec::format_double(s.sigma_floor) +
                    ",\"deflate_level\":" + std::to_string(v.deflate_level()) + "}\n";
  for (const auto& e : v.entries())
    out += "{\"doc_id\":" + json(e.doc_id).dump() + ",\"score\":" + codec::format_double(e.score) +
           "}\n";
  return out;
}

ScoreVector parse_score_vector(const std::string& text) {
  std::size_t pos = 0;
  int line_no = 0;
  bool have_header = false;
  std::string model_id, dataset_id;
  ScoreSpec spec;
  int level = codec::kDeflateLevel;
  std::vector<ScoreEntry> entries;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(line_no, "-", "record", std::string("malformed JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        if (rec.value("format", "") != "scores")
          throw ValidationError(line_no, "-", "format", "missing score-file header line");
        model_id = rec.at("model_id").get<std::string>();
        dataset_id = rec.at("dataset_id").get<std::string>();
        spec.kind = parse_score_kind(rec.at("kind").get<std::string>());
        spec.k_percent = rec.at("k_percent").get<double>();
        spec.sign = parse_sign_convention(rec.at("sign").get<std::string>());
        spec.sigma_floor = rec.value("sigma_floor", kDefaultSigmaFloor);
        level = rec.value("deflate_level", codec::kDeflateLevel);
        have_header = true;
        continue;
      }
      entries.push_back({rec.at("doc_id").get<std::string>(), rec.at("score").get<double>()});
    } catch (const json::exception& e) {
      throw ValidationError(line_no, "-", "record", e.what());
    } catch (const UsageError& e) {
      throw ValidationError(line_no, "-", "header", e.what());
    }
  }
  if (!have_header) throw ValidationError(line_no, "-", "format", "empty score file");
  return ScoreVector(model_id, dataset_id, spec, std::move(entries), level);
}

void write_score_vector(const ScoreVector& v, const std::filesystem::path& path) {
  codec::write_file(path, format_score_vector(v));
}

ScoreVector read_score_vector(const std::filesystem::path& path) {
  return parse_score_vector(codec::read_file(path));
}

}  // namespace prism
