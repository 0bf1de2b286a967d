#pragma once

// Miniature exact-softmax autoregressive model:
//   C-token window -> embeddings (concatenated) -> tanh hidden layer -> softmax over V.
// Small enough that the full next-token distribution, its mean log-probability
// and its spread are computed exactly at every position.

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prism/ingest.hpp"

namespace prism::lm {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr int kBos = 0;

class Vocab {
 public:
  explicit Vocab(std::vector<std::string> symbols);
  // BOS plus V-1 printable single-character symbols (multi-character names past 95).
  static Vocab make_default(int size);

  int size() const noexcept { return static_cast<int>(symbols_.size()); }
  const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  std::span<const std::string> symbols() const noexcept { return symbols_; }
  // Concatenated symbol text of a token sequence (BOS renders as nothing).
  std::string render(std::span<const int> tokens) const;

  friend bool operator==(const Vocab&, const Vocab&) = default;

 private:
  std::vector<std::string> symbols_;
};

struct ModelDims {
  int context = 4;
  int embed = 16;
  int hidden = 64;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// All trainable tensors. Also used as the gradient and optimizer-state container.
struct Parameters {
  Matrix embed;  // V x d
  Matrix w1;     // h x (C*d)
  Vector b1;     // h
  Matrix w2;     // V x h
  Vector b2;     // V

  static Parameters zeros_like(const Parameters& p);
  std::size_t size() const noexcept;
  // Flat view by index, in the order embed, w1, b1, w2, b2.
  double& at(std::size_t i);
  double at(std::size_t i) const;
  void axpy(double a, const Parameters& x);  // this += a * x
  void scale(double a);
  double squared_norm() const;
  bool all_finite() const;

  friend bool operator==(const Parameters& a, const Parameters& b);
};

// Windows of C preceding tokens (left-padded with BOS) and the token to predict.
struct Windows {
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> context;  // N x C
  std::vector<int> target;
  std::size_t rows() const noexcept { return target.size(); }
};

Windows make_windows(std::span<const std::vector<int>> docs, int context);

struct NextTokenStats {
  std::vector<double> logp;  // log-softmax over V
  double mu;                 // sum_z p(z) logp(z)
  double sigma;              // sqrt(sum_z p(z) (logp(z) - mu)^2)
};

class TinyLM {
 public:
  TinyLM(Vocab vocab, ModelDims dims, Parameters params);
  // Seeded random initialisation.
  static TinyLM init(Vocab vocab, ModelDims dims, std::uint64_t seed);

  const Vocab& vocab() const noexcept { return vocab_; }
  const ModelDims& dims() const noexcept { return dims_; }
  const Parameters& params() const noexcept { return params_; }
  Parameters& params() noexcept { return params_; }
  int vocab_size() const noexcept { return vocab_.size(); }

  struct Forward {
    Matrix input;   // N x C*d concatenated embeddings
    Matrix hidden;  // N x h, post-tanh
    Matrix logits;  // N x V
  };
  Forward forward(const Windows& w) const;
  Matrix logits(const Windows& w) const { return forward(w).logits; }

  // Context must hold exactly C token ids.
  NextTokenStats next_token_stats(std::span<const int> context) const;

  friend bool operator==(const TinyLM&, const TinyLM&) = default;

 private:
  Vocab vocab_;
  ModelDims dims_;
  Parameters params_;
};

// Row-wise log-softmax.
Matrix log_softmax(const Matrix& logits);
// Mean and standard deviation of log-probabilities under their own distribution.
std::pair<double, double> log_prob_moments(const Eigen::Ref<const Eigen::RowVectorXd>& logp);

// One TokenStat per position; position 1 conditions on BOS padding. Throws
// DataError for tokens outside 1..V-1.
DocumentStats score_document(const TinyLM& model, std::string doc_id, std::span<const int> tokens);

void save_checkpoint(const TinyLM& model, const std::filesystem::path& path);
TinyLM load_checkpoint(const std::filesystem::path& path);
std::string format_checkpoint(const TinyLM& model);
TinyLM parse_checkpoint(const std::string& text);

}  // namespace prism::lm
