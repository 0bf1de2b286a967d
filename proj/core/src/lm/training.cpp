#include "prism/lm/training.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "prism/rng.hpp"

namespace prism::lm {
namespace {

// Backpropagates d(loss)/d(logits) through the network.
Parameters backward(const TinyLM& model, const Windows& w, const TinyLM::Forward& f,
                    const Matrix& dlogits) {
  const auto& p = model.params();
  Parameters g = Parameters::zeros_like(p);
  g.w2.noalias() = dlogits.transpose() * f.hidden;
  g.b2 = dlogits.colwise().sum().transpose();
  const Matrix dhidden = dlogits * p.w2;
  const Matrix dpre = dhidden.array() * (1.0 - f.hidden.array().square());
  g.w1.noalias() = dpre.transpose() * f.input;
  g.b1 = dpre.colwise().sum().transpose();
  const Matrix dinput = dpre * p.w1;
  const int C = model.dims().context, d = model.dims().embed;
  for (Eigen::Index i = 0; i < dinput.rows(); ++i)
    for (int c = 0; c < C; ++c)
      g.embed.row(w.context(i, c)) += dinput.block(i, static_cast<Eigen::Index>(c) * d, 1, d);
  return g;
}

void require_batch(std::span<const std::vector<int>> batch) {
  if (batch.empty()) throw UsageError("empty batch");
  std::size_t tokens = 0;
  for (const auto& d : batch) tokens += d.size();
  if (tokens == 0) throw UsageError("batch has no tokens");
}

double lr_at(const TrainConfig& c, std::size_t step, std::size_t total) {
  const auto warmup = static_cast<std::size_t>(std::ceil(c.warmup_fraction * static_cast<double>(total)));
  if (step < warmup) return c.lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (!c.cosine_decay || total <= warmup) return c.lr;
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return c.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0) throw UsageError("momentum must lie in [0, 1)");
  if (grad_clip < 0.0) throw UsageError("grad_clip must be >= 0");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0)
    throw UsageError("warmup_fraction must lie in [0, 1]");
}

void DistillConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must lie in [0, 1]");
  if (!(tau > 0.0)) throw UsageError("tau must be positive");
  train.validate();
}

LossGrad ce_loss_and_grad(const TinyLM& model, std::span<const std::vector<int>> batch) {
  require_batch(batch);
  const auto w = make_windows(batch, model.dims().context);
  const auto f = model.forward(w);
  const Matrix lp = log_softmax(f.logits);
  const double inv_n = 1.0 / static_cast<double>(w.rows());
  Matrix dlogits = lp.array().exp();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    const int y = w.target[static_cast<std::size_t>(i)];
    loss -= lp(i, y);
    dlogits(i, y) -= 1.0;
  }
  dlogits *= inv_n;
  return {loss * inv_n, backward(model, w, f, dlogits)};
}

double ce_loss(const TinyLM& model, std::span<const std::vector<int>> batch) {
  require_batch(batch);
  const auto w = make_windows(batch, model.dims().context);
  const Matrix lp = log_softmax(model.logits(w));
  double loss = 0.0;
  for (Eigen::Index i = 0; i < lp.rows(); ++i) loss -= lp(i, w.target[static_cast<std::size_t>(i)]);
  return loss / static_cast<double>(w.rows());
}

LossGrad distill_loss_and_grad(const TinyLM& student, const TinyLM& teacher,
                               std::span<const std::vector<int>> batch, double lambda, double tau) {
  if (!(student.vocab() == teacher.vocab()))
    throw DataError("student and teacher vocabularies differ");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must lie in [0, 1]");
  if (!(tau > 0.0)) throw UsageError("tau must be positive");
  require_batch(batch);

  const auto ws = make_windows(batch, student.dims().context);
  const auto f = student.forward(ws);
  const auto wt = teacher.dims().context == student.dims().context
                      ? ws
                      : make_windows(batch, teacher.dims().context);
  const Matrix teacher_logits = teacher.logits(wt);

  const Matrix lp = log_softmax(f.logits);
  const Matrix lps = log_softmax(f.logits / tau);
  const Matrix lqt = log_softmax(teacher_logits / tau);
  const Matrix qt = lqt.array().exp();

  const double inv_n = 1.0 / static_cast<double>(ws.rows());
  double ce = 0.0;
  Matrix dce = lp.array().exp();
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    const int y = ws.target[static_cast<std::size_t>(i)];
    ce -= lp(i, y);
    dce(i, y) -= 1.0;
  }
  const double kl = (qt.array() * (lqt.array() - lps.array())).sum();
  // d/dz [tau^2 KL(q || softmax(z / tau))] = tau (softmax(z / tau) - q)
  const Matrix dkl = tau * (lps.array().exp() - qt.array());

  const double loss = ((1.0 - lambda) * ce + lambda * tau * tau * kl) * inv_n;
  const Matrix dlogits = ((1.0 - lambda) * dce + lambda * dkl) * inv_n;
  return {loss, backward(student, ws, f, dlogits)};
}

double mean_kl(const TinyLM& teacher, const TinyLM& student, std::span<const std::vector<int>> docs) {
  if (!(student.vocab() == teacher.vocab()))
    throw DataError("student and teacher vocabularies differ");
  require_batch(docs);
  const Matrix lq = log_softmax(teacher.logits(make_windows(docs, teacher.dims().context)));
  const Matrix lp = log_softmax(student.logits(make_windows(docs, student.dims().context)));
  return (lq.array().exp() * (lq.array() - lp.array())).sum() / static_cast<double>(lq.rows());
}

TrainResult train_with(TinyLM model, std::span<const std::vector<int>> corpus,
                       const TrainConfig& config, const LossFn& loss) {
  config.validate();
  if (corpus.empty()) throw UsageError("training corpus is empty");
  const std::size_t n = corpus.size();
  const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  std::size_t total = per_epoch * static_cast<std::size_t>(config.epochs);
  if (config.max_steps) total = std::min(total, *config.max_steps);

  TrainResult result{std::move(model), {}, 0};
  Parameters velocity = Parameters::zeros_like(result.model.params());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<int>> batch;

  for (int epoch = 0; epoch < config.epochs && result.steps < total; ++epoch) {
    SplitMix64 gen(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[gen.below(i)]);
    double epoch_sum = 0.0;
    std::size_t taken = 0;
    for (std::size_t s = 0; s < per_epoch && result.steps < total; ++s) {
      batch.clear();
      for (std::size_t k = s * config.batch_size; k < std::min(n, (s + 1) * config.batch_size); ++k)
        batch.push_back(corpus[order[k]]);
      auto [value, grad] = loss(result.model, batch);
      if (!std::isfinite(value) || !grad.all_finite())
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch + 1) + " step " +
                              std::to_string(result.steps + 1));
      if (config.grad_clip > 0.0) {
        const double norm = std::sqrt(grad.squared_norm());
        if (norm > config.grad_clip) grad.scale(config.grad_clip / norm);
      }
      const double lr = lr_at(config, result.steps, total);
      if (config.optimizer == Optimizer::SGDMomentum) {
        velocity.scale(config.momentum);
        velocity.axpy(1.0, grad);
        result.model.params().axpy(-lr, velocity);
      } else {
        result.model.params().axpy(-lr, grad);
      }
      epoch_sum += value;
      ++result.steps;
      ++taken;
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(taken));
  }
  if (!result.model.params().all_finite()) throw DivergenceError("parameters became non-finite");
  return result;
}

TrainResult train(TinyLM model, std::span<const std::vector<int>> corpus, const TrainConfig& config) {
  return train_with(std::move(model), corpus, config, [](const TinyLM& m, auto batch) {
    return ce_loss_and_grad(m, batch);
  });
}

TrainResult distill_reference(const TinyLM& reference, const TinyLM& target,
                              std::span<const std::vector<int>> suspect, const DistillConfig& config) {
  config.validate();
  if (!(reference.vocab() == target.vocab()))
    throw DataError("reference and target vocabularies differ");
  return train_with(reference, suspect, config.train,
                    [&target, lambda = config.lambda, tau = config.tau](const TinyLM& m, auto batch) {
                      return distill_loss_and_grad(m, target, batch, lambda, tau);
                    });
}

}  // namespace prism::lm
