#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "prism/lm/corpus.hpp"
#include "prism/lm/tiny_lm.hpp"

namespace prism::lm {

enum class Optimizer { SGD, SGDMomentum };

struct TrainConfig {
  double lr = 0.1;
  std::size_t batch_size = 16;  // documents per step
  int epochs = 1;
  std::uint64_t seed = 1234;
  Optimizer optimizer = Optimizer::SGDMomentum;
  double momentum = 0.9;
  double grad_clip = 1.0;          // global-norm clip, 0 disables
  double warmup_fraction = 0.05;   // linear warmup, then cosine decay to zero
  bool cosine_decay = true;
  // Stops after this many updates; the schedule is laid out over the capped total.
  std::optional<std::size_t> max_steps;

  void validate() const;
};

struct DistillConfig {
  double lambda = 0.7;
  double tau = 2.0;
  TrainConfig train{.lr = 0.05, .batch_size = 4, .epochs = 1};

  void validate() const;
};

struct LossGrad {
  double loss;
  Parameters grad;
};

// Mean token-level cross-entropy over all positions of all documents.
LossGrad ce_loss_and_grad(const TinyLM& model, std::span<const std::vector<int>> batch);
double ce_loss(const TinyLM& model, std::span<const std::vector<int>> batch);

// (1 - lambda) * CE(student, truth) + lambda * tau^2 * KL(teacher_tau || student_tau),
// averaged over tokens; the gradient is with respect to the student only. The
// teacher enters through its logits alone. Throws DataError on a vocabulary mismatch.
LossGrad distill_loss_and_grad(const TinyLM& student, const TinyLM& teacher,
                               std::span<const std::vector<int>> batch, double lambda, double tau);

// Mean KL(teacher || student) at temperature 1 over every position.
double mean_kl(const TinyLM& teacher, const TinyLM& student, std::span<const std::vector<int>> docs);

using LossFn = std::function<LossGrad(const TinyLM&, std::span<const std::vector<int>>)>;

struct TrainResult {
  TinyLM model;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  std::size_t steps = 0;
};

// Minibatch optimisation of an arbitrary loss. Documents are reshuffled every
// epoch from the config seed. Throws DivergenceError on a non-finite loss.
TrainResult train_with(TinyLM model, std::span<const std::vector<int>> corpus,
                       const TrainConfig& config, const LossFn& loss);

TrainResult train(TinyLM model, std::span<const std::vector<int>> corpus, const TrainConfig& config);

// Fine-tunes `reference` on the suspect documents while distilling `target`'s logits.
TrainResult distill_reference(const TinyLM& reference, const TinyLM& target,
                              std::span<const std::vector<int>> suspect, const DistillConfig& config);

}  // namespace prism::lm
