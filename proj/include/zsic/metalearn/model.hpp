#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "zsic/ablations.hpp"
#include "zsic/attention/encoder.hpp"
#include "zsic/attention/importance.hpp"
#include "zsic/data/corpus.hpp"
#include "zsic/data/embeddings.hpp"
#include "zsic/data/unigram.hpp"
#include "zsic/metalearn/projection.hpp"
#include "zsic/numerics/param_store.hpp"
#include "zsic/numerics/tape.hpp"

namespace zsic {

struct ModelDims : EncoderDims {
  std::size_t d_s = 128;  // projection hidden size
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Every trainable group plus the frozen pieces they are evaluated against:
/// the ridge classifier, embeddings, unigram statistics and label set.
class Model {
 public:
  static Model create(std::vector<IntentLabel> labels, std::shared_ptr<const EmbeddingTable> table,
                      std::shared_ptr<const UnigramStats> stats, ModelDims dims, Ablations ablations,
                      std::uint64_t seed, double ridge_reg = kDefaultRidgeReg) {
    ablations.validate();
    if (!table || !stats) throw UsageError("Model: embeddings and unigram statistics are required");
    dims.d_w = table->dim();
    if (dims.d_s == 0) throw UsageError("ModelDims: d_s must be positive");
    Model m;
    m.labels_ = std::move(labels);
    m.table_ = std::move(table);
    m.stats_ = std::move(stats);
    m.dims_ = dims;
    m.ablations_ = ablations;
    m.ridge_reg_ = ridge_reg;
    m.ridge_ = RidgeClassifier::fit(m.labels_, *m.table_, ridge_reg);
    m.label_embeddings_ = Matrix(dims.d_w, m.labels_.size());
    for (std::size_t c = 0; c < m.labels_.size(); ++c) {
      const auto e = label_embedding(m.labels_[c], *m.table_);
      for (std::size_t r = 0; r < e.size(); ++r) m.label_embeddings_(r, c) = e[r];
    }
    std::mt19937_64 rng(seed);
    register_attention_params(m.params_, dims, ablations, rng);
    m.params_.add(names::kProjM1, fan_in_uniform(dims.d_s, dims.d_w, rng));
    m.params_.add(names::kProjM2, fan_in_uniform(2 * dims.d_h, dims.d_s, rng));
    return m;
  }

  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  const ModelDims& dims() const noexcept { return dims_; }
  const Ablations& ablations() const noexcept { return ablations_; }
  const RidgeClassifier& ridge() const noexcept { return ridge_; }
  double ridge_reg() const noexcept { return ridge_reg_; }
  const std::vector<IntentLabel>& labels() const noexcept { return labels_; }
  const EmbeddingTable& table() const noexcept { return *table_; }
  const UnigramStats& stats() const noexcept { return *stats_; }

  EncoderContext context() const { return {table_.get(), stats_.get(), &ridge_, ablations_}; }

  /// Label description embeddings for `ids`, one column each (d_w x K).
  Matrix label_columns(std::span<const ClassId> ids) const {
    Matrix m(dims_.d_w, ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (ids[k] >= labels_.size()) throw UsageError("Model: class id out of range");
      for (std::size_t r = 0; r < dims_.d_w; ++r) m(r, k) = label_embeddings_(r, ids[k]);
    }
    return m;
  }

  std::vector<double> encode(std::span<const Token> tokens) const { return zsic::encode(tokens, params_, context()); }

  PrototypeSet prototypes(std::span<const ClassId> ids) const {
    if (ids.empty()) throw UsageError("Model: empty candidate set");
    PrototypeSet ps;
    ps.ids.assign(ids.begin(), ids.end());
    std::sort(ps.ids.begin(), ps.ids.end());
    Tape tape{Tape::NoGrad{}};
    const Var P = ad::project_labels(tape.constant(label_columns(ps.ids)), tape.param(params_, names::kProjM1),
                                     tape.param(params_, names::kProjM2));
    ps.P = P.value();
    return ps;
  }

  /// Mean -log p(true class) over `batch`, with the softmax ranging over `candidates`.
  /// Every utterance label must be a candidate.
  Var batch_loss(Tape& tape, std::span<const Utterance> batch, std::span<const ClassId> candidates) const {
    if (batch.empty()) throw UsageError("batch_loss: empty batch");
    std::vector<ClassId> ids(candidates.begin(), candidates.end());
    std::sort(ids.begin(), ids.end());
    const auto vars = ad::AttentionVars::bind(tape, params_, ablations_);
    const Var P = ad::project_labels(tape.constant(label_columns(ids)), tape.param(params_, names::kProjM1),
                                     tape.param(params_, names::kProjM2));
    const auto ctx = context();
    std::vector<Var> losses;
    losses.reserve(batch.size());
    for (const auto& u : batch) {
      const auto it = std::lower_bound(ids.begin(), ids.end(), u.label);
      if (it == ids.end() || *it != u.label)
        throw UsageError("batch_loss: utterance label " + std::to_string(u.label) + " is not among the candidates");
      const Var x = ad::encode(tape, vars, u.tokens, ctx).x;
      losses.push_back(ad::prototype_nll(x, P, static_cast<std::size_t>(it - ids.begin())));
    }
    return ad::mean(losses);
  }

 private:
  Model() = default;

  std::vector<IntentLabel> labels_;
  std::shared_ptr<const EmbeddingTable> table_;
  std::shared_ptr<const UnigramStats> stats_;
  ModelDims dims_;
  Ablations ablations_;
  double ridge_reg_ = kDefaultRidgeReg;
  RidgeClassifier ridge_;
  Matrix label_embeddings_;
  ParamStore params_;
};

}  // namespace zsic
