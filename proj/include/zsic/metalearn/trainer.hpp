#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsic/ablations.hpp"
#include "zsic/data/corpus.hpp"
#include "zsic/data/split.hpp"
#include "zsic/metalearn/model.hpp"
#include "zsic/numerics/adam.hpp"
#include "zsic/numerics/tape.hpp"

namespace zsic {

/// Prototypes the meta-adapting softmax ranges over.
///  - MetaUnseen: only the episode's meta-unseen classes.
///  - Episode: every class of the episode, meta-seen and meta-unseen.
enum class AdaptCandidates { MetaUnseen, Episode };

inline std::string to_string(AdaptCandidates a) { return a == AdaptCandidates::Episode ? "episode" : "meta-unseen"; }

inline AdaptCandidates parse_adapt_candidates(std::string_view s) {
  if (s == "episode") return AdaptCandidates::Episode;
  if (s == "meta-unseen") return AdaptCandidates::MetaUnseen;
  throw UsageError("unknown adapt candidate set '" + std::string(s) + "' (expected episode or meta-unseen)");
}

struct TrainConfig {
  std::size_t episodes = 200;
  std::size_t n_meta_seen = 0;  // 0: |seen| minus max(1, round(|seen| / 8))
  double lr_train = 0.006;
  double lr_adapt = 0.002;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double threshold = 0.6;
  double holdout = 0.1;       // fraction of each seen class kept for early stopping
  std::size_t patience = 20;  // episodes without validation improvement
  AdaptCandidates adapt_candidates = AdaptCandidates::Episode;
  Ablations ablations;

  /// Learning rates, episode split and threshold used for SNIPS-sized corpora.
  static TrainConfig snips() {
    TrainConfig c;
    c.lr_train = 0.006;
    c.lr_adapt = 0.002;
    c.n_meta_seen = 4;
    c.threshold = 0.6;
    return c;
  }

  /// Same for SMP-sized corpora.
  static TrainConfig smp() {
    TrainConfig c;
    c.lr_train = 0.008;
    c.lr_adapt = 0.004;
    c.n_meta_seen = 21;
    c.threshold = 0.8;
    return c;
  }

  void validate() const {
    if (episodes == 0) throw UsageError("TrainConfig: episodes must be positive");
    if (!(lr_train > 0.0) || !(lr_adapt > 0.0)) throw UsageError("TrainConfig: learning rates must be positive");
    if (batch_size == 0) throw UsageError("TrainConfig: batch_size must be positive");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw UsageError("TrainConfig: threshold must lie in [0, 1]");
    if (!(holdout >= 0.0 && holdout < 1.0)) throw UsageError("TrainConfig: holdout must lie in [0, 1)");
    ablations.validate();
  }

  std::size_t meta_seen_count(std::size_t seen_classes) const {
    if (seen_classes < 2) throw DataError("training needs at least two seen classes to form episodes");
    std::size_t n = n_meta_seen;
    if (n == 0) {
      const auto unseen = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(seen_classes / 8.0)));
      n = seen_classes - std::min(unseen, seen_classes - 1);
    }
    if (n < 1 || n >= seen_classes) throw UsageError("TrainConfig: need 1 <= n_meta_seen < |seen classes|");
    return n;
  }
};

namespace detail {

inline void require_labels_in(std::span<const Utterance> batch, std::span<const ClassId> ids, const char* what) {
  for (const auto& u : batch)
    if (std::find(ids.begin(), ids.end(), u.label) == ids.end())
      throw UsageError(std::string(what) + ": utterance label " + std::to_string(u.label) + " is outside the phase's classes");
}

}  // namespace detail

/// One Adam step on every trainable group, softmax over the meta-seen prototypes.
inline double meta_train_step(std::span<const Utterance> batch, std::span<const ClassId> meta_seen_ids, Model& model,
                              AdamState& adam, double lr) {
  detail::require_labels_in(batch, meta_seen_ids, "meta_train_step");
  Tape tape;
  const Var loss = model.batch_loss(tape, batch, meta_seen_ids);
  tape.backward(loss);
  tape.accumulate_param_grads(model.params());
  adam_step(model.params(), adam, lr);
  return loss.value()(0, 0);
}

/// One Adam step on the projection network only. The softmax ranges over
/// `candidates`, which must contain every batch label.
inline double meta_adapt_step(std::span<const Utterance> batch, std::span<const ClassId> candidates, Model& model,
                              AdamState& adam, double lr) {
  detail::require_labels_in(batch, candidates, "meta_adapt_step");
  if (model.ablations().no_meta_adapt) return 0.0;
  TrainableScope only_projection(model.params(), [](const std::string& n) { return is_projection_param(n); });
  Tape tape;
  const Var loss = model.batch_loss(tape, batch, candidates);
  tape.backward(loss);
  tape.accumulate_param_grads(model.params());
  adam_step(model.params(), adam, lr);
  return loss.value()(0, 0);
}

struct TrainLog {
  std::size_t episodes_run = 0;
  std::size_t best_episode = 0;
  std::vector<double> train_loss;       // mean meta-training loss per episode
  std::vector<double> adapt_loss;       // mean meta-adapting loss per episode
  std::vector<double> validation_loss;  // empty when no holdout was available
};

/// Episodic meta-learning. Each episode splits the seen classes into
/// meta-seen / meta-unseen, makes one mini-batched pass of meta-training over
/// the meta-seen utterances, then one pass of meta-adapting over the
/// meta-unseen ones. With a holdout, the parameters from the episode with the
/// lowest validation loss are kept and training stops after `patience`
/// episodes without improvement.
inline TrainLog train(Model& model, std::span<const Utterance> train_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw DataError("train: no training utterances");
  if (model.ablations() != cfg.ablations) throw UsageError("train: model and config disagree on ablations");

  std::vector<ClassId> seen;
  for (const auto& u : train_set) seen.push_back(u.label);
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  const std::size_t n_meta_seen = cfg.meta_seen_count(seen.size());

  std::mt19937_64 rng(cfg.seed ^ 0x5bd1e995ull);

  // Stratified holdout for early stopping.
  std::vector<std::vector<Utterance>> by_class(model.labels().size());
  for (const auto& u : train_set) by_class[u.label].push_back(u);
  std::vector<std::vector<Utterance>> fit_by_class(model.labels().size());
  std::vector<Utterance> validation;
  for (ClassId c : seen) {
    auto& v = by_class[c];
    std::shuffle(v.begin(), v.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::floor(cfg.holdout * static_cast<double>(v.size())));
    const std::size_t keep = v.size() - std::min(n_val, v.size() - 1);
    fit_by_class[c].assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(keep));
    validation.insert(validation.end(), v.begin() + static_cast<std::ptrdiff_t>(keep), v.end());
  }

  auto validation_loss = [&]() {
    double total = 0.0;
    for (std::size_t i = 0; i < validation.size(); i += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, validation.size() - i);
      Tape tape{Tape::NoGrad{}};
      total += model.batch_loss(tape, std::span(validation).subspan(i, n), seen).value()(0, 0) * static_cast<double>(n);
    }
    return total / static_cast<double>(validation.size());
  };

  AdamState adam_train;
  AdamState adam_adapt;
  TrainLog log;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_params;
  std::size_t since_best = 0;

  auto run_phase = [&](std::span<const ClassId> ids, std::span<const ClassId> candidates, bool adapt) {
    std::vector<Utterance> pool;
    for (ClassId c : ids) pool.insert(pool.end(), fit_by_class[c].begin(), fit_by_class[c].end());
    std::shuffle(pool.begin(), pool.end(), rng);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t i = 0; i < pool.size(); i += cfg.batch_size) {
      const auto batch = std::span(pool).subspan(i, std::min(cfg.batch_size, pool.size() - i));
      sum += adapt ? meta_adapt_step(batch, candidates, model, adam_adapt, cfg.lr_adapt)
                   : meta_train_step(batch, candidates, model, adam_train, cfg.lr_train);
      ++batches;
    }
    return batches ? sum / static_cast<double>(batches) : 0.0;
  };

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    const Episode episode = sample_episode(seen, n_meta_seen, rng);
    log.train_loss.push_back(run_phase(episode.meta_seen_ids, episode.meta_seen_ids, false));
    const auto& adapt_over = cfg.adapt_candidates == AdaptCandidates::Episode ? seen : episode.meta_unseen_ids;
    log.adapt_loss.push_back(model.ablations().no_meta_adapt ? 0.0
                                                             : run_phase(episode.meta_unseen_ids, adapt_over, true));
    log.episodes_run = ep + 1;
    if (validation.empty()) {
      log.best_episode = ep + 1;
      continue;
    }
    const double v = validation_loss();
    log.validation_loss.push_back(v);
    if (v < best) {
      best = v;
      best_params = model.params().snapshot();
      log.best_episode = ep + 1;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  if (!best_params.empty()) model.params().restore(best_params);
  return log;
}

}  // namespace zsic
