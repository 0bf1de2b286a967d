#include "prism/lm/tiny_lm.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "prism/rng.hpp"

namespace prism::lm {
namespace {

constexpr std::string_view kAlphabet =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,;:!?-'\"()[]{}<>/\\|@#$%^&*+=_~`";

template <typename F>
void for_each_block(Parameters& p, F&& f) {
  f(p.embed.data(), static_cast<std::size_t>(p.embed.size()));
  f(p.w1.data(), static_cast<std::size_t>(p.w1.size()));
  f(p.b1.data(), static_cast<std::size_t>(p.b1.size()));
  f(p.w2.data(), static_cast<std::size_t>(p.w2.size()));
  f(p.b2.data(), static_cast<std::size_t>(p.b2.size()));
}

bool same_shape(const Parameters& a, const Parameters& b) {
  return a.embed.rows() == b.embed.rows() && a.embed.cols() == b.embed.cols() &&
         a.w1.rows() == b.w1.rows() && a.w1.cols() == b.w1.cols() && a.b1.size() == b.b1.size() &&
         a.w2.rows() == b.w2.rows() && a.w2.cols() == b.w2.cols() && a.b2.size() == b.b2.size();
}

}  // namespace

Vocab::Vocab(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() < 2) throw UsageError("vocabulary needs at least two symbols");
  std::unordered_set<std::string> seen;
  for (const auto& s : symbols_)
    if (!seen.insert(s).second) throw UsageError("duplicate vocabulary symbol '" + s + "'");
}

Vocab Vocab::make_default(int size) {
  if (size < 2) throw UsageError("vocabulary size must be >= 2");
  std::vector<std::string> symbols{"<bos>"};
  for (int i = 1; i < size; ++i) {
    if (static_cast<std::size_t>(i - 1) < kAlphabet.size())
      symbols.emplace_back(1, kAlphabet[static_cast<std::size_t>(i - 1)]);
    else
      symbols.push_back("<t" + std::to_string(i) + ">");
  }
  return Vocab(std::move(symbols));
}

std::string Vocab::render(std::span<const int> tokens) const {
  std::string out;
  for (const int t : tokens)
    if (t != kBos) out += symbol(t);
  return out;
}

Parameters Parameters::zeros_like(const Parameters& p) {
  return {Matrix::Zero(p.embed.rows(), p.embed.cols()), Matrix::Zero(p.w1.rows(), p.w1.cols()),
          Vector::Zero(p.b1.size()), Matrix::Zero(p.w2.rows(), p.w2.cols()),
          Vector::Zero(p.b2.size())};
}

std::size_t Parameters::size() const noexcept {
  return static_cast<std::size_t>(embed.size() + w1.size() + b1.size() + w2.size() + b2.size());
}

double& Parameters::at(std::size_t i) {
  double* found = nullptr;
  for_each_block(*this, [&](double* data, std::size_t n) {
    if (found) return;
    if (i < n) found = data + i;
    else i -= n;
  });
  if (!found) throw std::out_of_range("parameter index out of range");
  return *found;
}

double Parameters::at(std::size_t i) const { return const_cast<Parameters&>(*this).at(i); }

void Parameters::axpy(double a, const Parameters& x) {
  embed.noalias() += a * x.embed;
  w1.noalias() += a * x.w1;
  b1.noalias() += a * x.b1;
  w2.noalias() += a * x.w2;
  b2.noalias() += a * x.b2;
}

void Parameters::scale(double a) {
  embed *= a;
  w1 *= a;
  b1 *= a;
  w2 *= a;
  b2 *= a;
}

double Parameters::squared_norm() const {
  return embed.squaredNorm() + w1.squaredNorm() + b1.squaredNorm() + w2.squaredNorm() +
         b2.squaredNorm();
}

bool Parameters::all_finite() const {
  return embed.allFinite() && w1.allFinite() && b1.allFinite() && w2.allFinite() &&
         b2.allFinite();
}

bool operator==(const Parameters& a, const Parameters& b) {
  return same_shape(a, b) && a.embed == b.embed && a.w1 == b.w1 && a.b1 == b.b1 &&
         a.w2 == b.w2 && a.b2 == b.b2;
}

Windows make_windows(std::span<const std::vector<int>> docs, int context) {
  std::size_t total = 0;
  for (const auto& d : docs) total += d.size();
  Windows w;
  w.context.resize(static_cast<Eigen::Index>(total), context);
  w.target.reserve(total);
  Eigen::Index row = 0;
  for (const auto& d : docs) {
    for (std::size_t t = 0; t < d.size(); ++t, ++row) {
      for (int c = 0; c < context; ++c) {
        // column C-1 is the token immediately before position t
        const auto back = static_cast<std::ptrdiff_t>(context - c);
        const auto src = static_cast<std::ptrdiff_t>(t) - back;
        w.context(row, c) = src >= 0 ? d[static_cast<std::size_t>(src)] : kBos;
      }
      w.target.push_back(d[t]);
    }
  }
  return w;
}

TinyLM::TinyLM(Vocab vocab, ModelDims dims, Parameters params)
    : vocab_(std::move(vocab)), dims_(dims), params_(std::move(params)) {
  const Eigen::Index V = vocab_.size();
  if (dims_.context < 1 || dims_.embed < 1 || dims_.hidden < 1)
    throw UsageError("model dimensions must be positive");
  const Eigen::Index cd = static_cast<Eigen::Index>(dims_.context) * dims_.embed;
  if (params_.embed.rows() != V || params_.embed.cols() != dims_.embed ||
      params_.w1.rows() != dims_.hidden || params_.w1.cols() != cd ||
      params_.b1.size() != dims_.hidden || params_.w2.rows() != V ||
      params_.w2.cols() != dims_.hidden || params_.b2.size() != V)
    throw DataError("parameter shapes do not match model dimensions");
  if (!params_.all_finite()) throw DataError("model parameters must be finite");
}

TinyLM TinyLM::init(Vocab vocab, ModelDims dims, std::uint64_t seed) {
  const Eigen::Index V = vocab.size();
  const Eigen::Index cd = static_cast<Eigen::Index>(dims.context) * dims.embed;
  SplitMix64 gen(seed);
  const auto fill = [&](auto& m, double scale) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * gen.normal();
  };
  Parameters p{Matrix(V, dims.embed), Matrix(dims.hidden, cd), Vector::Zero(dims.hidden),
               Matrix(V, dims.hidden), Vector::Zero(V)};
  fill(p.embed, 0.5);
  fill(p.w1, 1.0 / std::sqrt(static_cast<double>(cd)));
  fill(p.w2, 1.0 / std::sqrt(static_cast<double>(dims.hidden)));
  return TinyLM(std::move(vocab), dims, std::move(p));
}

TinyLM::Forward TinyLM::forward(const Windows& w) const {
  const Eigen::Index n = static_cast<Eigen::Index>(w.rows());
  const int C = dims_.context, d = dims_.embed;
  Forward f;
  f.input.resize(n, static_cast<Eigen::Index>(C) * d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < C; ++c) {
      const int tok = w.context(i, c);
      if (tok < 0 || tok >= vocab_size()) throw DataError("token id outside vocabulary");
      f.input.block(i, static_cast<Eigen::Index>(c) * d, 1, d) = params_.embed.row(tok);
    }
  f.hidden = ((f.input * params_.w1.transpose()).rowwise() + params_.b1.transpose()).array().tanh();
  f.logits = (f.hidden * params_.w2.transpose()).rowwise() + params_.b2.transpose();
  return f;
}

Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

std::pair<double, double> log_prob_moments(const Eigen::Ref<const Eigen::RowVectorXd>& logp) {
  const Eigen::RowVectorXd p = logp.array().exp();
  const double mu = (p.array() * logp.array()).sum();
  const double var = (p.array() * (logp.array() - mu).square()).sum();
  return {std::min(mu, 0.0), std::sqrt(std::max(var, 0.0))};
}

NextTokenStats TinyLM::next_token_stats(std::span<const int> context) const {
  if (static_cast<int>(context.size()) != dims_.context)
    throw UsageError("context must hold exactly " + std::to_string(dims_.context) + " tokens");
  Windows w;
  w.context.resize(1, dims_.context);
  for (int c = 0; c < dims_.context; ++c) w.context(0, c) = context[static_cast<std::size_t>(c)];
  w.target.push_back(kBos);
  const Matrix lp = log_softmax(logits(w));
  const auto [mu, sigma] = log_prob_moments(lp.row(0));
  return {std::vector<double>(lp.data(), lp.data() + lp.cols()), mu, sigma};
}

DocumentStats score_document(const TinyLM& model, std::string doc_id, std::span<const int> tokens) {
  if (tokens.empty()) throw DataError("doc '" + doc_id + "' has no tokens");
  for (const int t : tokens)
    if (t <= kBos || t >= model.vocab_size())
      throw DataError("doc '" + doc_id + "' has symbol id " + std::to_string(t) +
                      " outside the vocabulary");
  const std::vector<int> doc(tokens.begin(), tokens.end());
  const auto w = make_windows(std::span(&doc, 1), model.dims().context);
  const Matrix lp = log_softmax(model.logits(w));
  std::vector<TokenStat> stats;
  stats.reserve(doc.size());
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    const auto [mu, sigma] = log_prob_moments(lp.row(i));
    stats.emplace_back(std::min(lp(i, doc[static_cast<std::size_t>(i)]), 0.0), mu, sigma);
  }
  return DocumentStats(std::move(doc_id), std::move(stats), model.vocab().render(doc));
}

}  // namespace prism::lm
