#include "prism/lm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "prism/codec.hpp"
#include "prism/rng.hpp"

namespace prism::lm {
namespace {

std::string doc_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "d%05zu", i);
  return buf;
}

int sample_row(const Eigen::Ref<const Eigen::RowVectorXd>& logits, double temperature,
               SplitMix64& gen) {
  // Column 0 (BOS) is never emitted.
  const Eigen::Index V = logits.size();
  const double m = logits.tail(V - 1).maxCoeff();
  Eigen::RowVectorXd w = ((logits.tail(V - 1).array() - m) / temperature).exp();
  const double u = gen.uniform() * w.sum();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < V - 1; ++j) {
    acc += w[j];
    if (u < acc) return static_cast<int>(j + 1);
  }
  return static_cast<int>(V - 1);
}

Matrix source_logits(const CorpusSpec& spec) {
  SplitMix64 gen(derive_seed(spec.seed, stream_id("markov-source")));
  Matrix logits = Matrix::Zero(spec.vocab, spec.vocab);
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    for (Eigen::Index j = 1; j < logits.cols(); ++j) logits(i, j) = spec.source_sharpness * gen.normal();
  return logits;
}

}  // namespace

void CorpusSpec::validate(int context) const {
  if (vocab < 3) throw UsageError("corpus vocabulary must have at least 3 symbols");
  if (n_docs < 3) throw UsageError("corpus needs at least 3 documents");
  if (min_len < static_cast<std::size_t>(context) + 1)
    throw UsageError("document length must be at least context + 1");
  if (max_len < min_len) throw UsageError("max_len must be >= min_len");
  if (!(temp_min > 0.0) || temp_max < temp_min) throw UsageError("bad temperature range");
  if (!(source_sharpness >= 0.0)) throw UsageError("source_sharpness must be >= 0");
  if (frac_base < 0 || frac_suspect < 0 || frac_heldout < 0 ||
      std::abs(frac_base + frac_suspect + frac_heldout - 1.0) > 1e-9)
    throw UsageError("split fractions must be non-negative and sum to 1");
}

Matrix markov_source(const CorpusSpec& spec) {
  const Matrix logits = source_logits(spec);
  Matrix p = Matrix::Zero(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i).tail(logits.cols() - 1);
    const Eigen::RowVectorXd w = (row.array() - row.maxCoeff()).exp();
    p.row(i).tail(p.cols() - 1) = w / w.sum();
  }
  return p;
}

SplitSizes split_sizes(const CorpusSpec& spec) {
  const auto n = static_cast<double>(spec.n_docs);
  const auto suspect = static_cast<std::size_t>(std::llround(n * spec.frac_suspect));
  const auto heldout = static_cast<std::size_t>(std::llround(n * spec.frac_heldout));
  if (suspect + heldout > spec.n_docs) throw UsageError("split sizes exceed n_docs");
  return {spec.n_docs - suspect - heldout, suspect, heldout};
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  const Matrix logits = source_logits(spec);
  std::vector<Document> all(spec.n_docs);
  for (std::size_t i = 0; i < spec.n_docs; ++i) {
    SplitMix64 gen(derive_seed(derive_seed(spec.seed, stream_id("document")), i));
    const double temperature = gen.uniform(spec.temp_min, spec.temp_max);
    const std::size_t len = spec.min_len + gen.below(spec.max_len - spec.min_len + 1);
    Document& d = all[i];
    d.id = doc_name(i);
    d.tokens.reserve(len);
    int prev = kBos;
    for (std::size_t t = 0; t < len; ++t) {
      prev = sample_row(logits.row(prev), temperature, gen);
      d.tokens.push_back(prev);
    }
  }

  std::vector<std::size_t> order(spec.n_docs);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 shuffle(derive_seed(spec.seed, stream_id("split")));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

  const auto sizes = split_sizes(spec);
  const auto take = [&](std::size_t from, std::size_t count) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(from),
                                 order.begin() + static_cast<std::ptrdiff_t>(from + count));
    std::sort(idx.begin(), idx.end());
    std::vector<Document> out;
    out.reserve(count);
    for (const auto i : idx) out.push_back(all[i]);
    return out;
  };
  Corpus c;
  c.suspect = take(0, sizes.suspect);
  c.heldout = take(sizes.suspect, sizes.heldout);
  c.base = take(sizes.suspect + sizes.heldout, sizes.base);
  return c;
}

std::vector<std::vector<int>> token_lists(std::span<const Document> docs) {
  std::vector<std::vector<int>> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(d.tokens);
  return out;
}

std::string format_documents(std::span<const Document> docs) {
  std::string out;
  for (const auto& d : docs) {
    out += d.id;
    out += '\t';
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(d.tokens[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<Document> parse_documents(const std::string& text) {
  std::vector<Document> docs;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError("token file line " + std::to_string(line_no) + ": expected '<id>\\t<tokens>'");
    Document d;
    d.id = line.substr(0, tab);
    std::istringstream toks(line.substr(tab + 1));
    int t = 0;
    while (toks >> t) d.tokens.push_back(t);
    if (!toks.eof() || d.tokens.empty())
      throw DataError("token file line " + std::to_string(line_no) + ": bad token list");
    docs.push_back(std::move(d));
  }
  return docs;
}

void write_documents(std::span<const Document> docs, const std::filesystem::path& path) {
  codec::write_file(path, format_documents(docs));
}

std::vector<Document> read_documents(const std::filesystem::path& path) {
  return parse_documents(codec::read_file(path));
}

}  // namespace prism::lm
