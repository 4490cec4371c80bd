#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "zsic/data/unigram.hpp"
#include "zsic/harness/synth.hpp"
#include "zsic/metalearn/model.hpp"
#include "zsic/numerics/tape.hpp"

namespace zsic {

struct GradcheckEntry {
  std::string name;
  std::string group;
  std::size_t entries = 0;
  std::size_t skipped = 0;  // perturbation crossed a ReLU kink
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  double max_abs_grad = 0.0;
};

struct GradcheckGroup {
  std::string group;
  std::size_t entries = 0;
  std::size_t skipped = 0;
  double max_rel_error = 0.0;
};

struct GradcheckResult {
  std::vector<GradcheckEntry> params;
  std::vector<GradcheckGroup> groups;

  double worst() const {
    double w = 0.0;
    for (const auto& g : groups) w = std::max(w, g.max_rel_error);
    return w;
  }
  std::size_t entries() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.entries;
    return n;
  }
  std::size_t skipped() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.skipped;
    return n;
  }
  /// Every group under `tolerance`, each group actually compared, and at most
  /// 5% of all entries skipped at kinks.
  bool passed(double tolerance) const {
    if (groups.empty() || worst() >= tolerance || 20 * skipped() > entries()) return false;
    for (const auto& g : groups)
      if (g.skipped == g.entries) return false;
    return true;
  }
};

/// Parameter group a tensor reports under.
inline std::string gradcheck_group(const std::string& name) {
  if (name.rfind("enc.", 0) == 0) return "utterance BiLSTM";
  if (name.rfind("sig.fwd", 0) == 0 || name.rfind("sig.bwd", 0) == 0) return "signature BiLSTM";
  if (name == names::kSigF) return "F";
  if (name == names::kMlpW1) return "W1";
  if (name == names::kMlpW2) return "W2";
  if (name == names::kMixB) return "b";
  if (name == names::kProjM1) return "M1";
  if (name == names::kProjM2) return "M2";
  return name;
}

inline constexpr double kGradcheckStep = 1e-5;
/// Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradcheckFloor = 1e-6;

/// Compares tape gradients of the batch loss with central finite differences
/// for every trainable parameter entry. Entries whose perturbation moves any
/// ReLU input across zero are counted as skipped instead of compared.
inline GradcheckResult gradcheck(Model& model, std::span<const Utterance> batch, std::span<const ClassId> candidates,
                                 double step = kGradcheckStep, double floor = kGradcheckFloor) {
  ParamStore& store = model.params();
  store.zero_grad();
  {
    Tape tape;
    const Var loss = model.batch_loss(tape, batch, candidates);
    tape.backward(loss);
    tape.accumulate_param_grads(store);
  }
  struct Probe {
    double loss;
    std::vector<bool> branches;
  };
  auto loss_at = [&]() {
    Tape tape{Tape::NoGrad{}};
    tape.track_branches();
    const double loss = model.batch_loss(tape, batch, candidates).value()(0, 0);
    return Probe{loss, tape.branches()};
  };
  const std::vector<bool> base = loss_at().branches;

  GradcheckResult result;
  for (auto& e : store.entries()) {
    if (!e.trainable) continue;
    GradcheckEntry out{e.name, gradcheck_group(e.name), e.value.size()};
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double orig = e.value[i];
      e.value[i] = orig + step;
      const Probe up = loss_at();
      e.value[i] = orig - step;
      const Probe down = loss_at();
      e.value[i] = orig;
      if (up.branches != base || down.branches != base) {
        ++out.skipped;
        continue;
      }
      const double numeric = (up.loss - down.loss) / (2.0 * step);
      const double analytic = e.grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      out.max_abs_error = std::max(out.max_abs_error, abs_err);
      out.max_rel_error = std::max(out.max_rel_error, abs_err / denom);
      out.max_abs_grad = std::max(out.max_abs_grad, std::abs(analytic));
    }
    result.params.push_back(out);
    auto it = std::find_if(result.groups.begin(), result.groups.end(),
                           [&](const GradcheckGroup& g) { return g.group == out.group; });
    if (it == result.groups.end()) {
      result.groups.push_back({out.group, out.entries, out.skipped, out.max_rel_error});
    } else {
      it->entries += out.entries;
      it->skipped += out.skipped;
      it->max_rel_error = std::max(it->max_rel_error, out.max_rel_error);
    }
  }
  store.zero_grad();
  return result;
}

/// The standard micro-problem: 3 utterances, d_w = 8, d_h = 8, d_b = 4, d_a = 8, d_s = 8.
inline GradcheckResult gradcheck_micro(std::uint64_t seed = 0) {
  SynthConfig sc;
  sc.n_classes = 4;
  sc.n_seen = 3;
  sc.samples_per_class = 4;
  sc.dim = 8;
  sc.seed = seed;
  sc.min_length = 3;
  sc.max_length = 5;
  SynthData data = synth_corpus(sc);
  std::vector<Utterance> batch;
  for (const auto& u : data.corpus.utterances)
    if (data.corpus.is_seen(u.label) && (batch.empty() || batch.back().label != u.label)) batch.push_back(u);
  batch.resize(3);
  std::vector<Utterance> seen_utts;
  for (const auto& u : data.corpus.utterances)
    if (data.corpus.is_seen(u.label)) seen_utts.push_back(u);
  auto stats = std::make_shared<const UnigramStats>(UnigramStats::from(seen_utts));
  auto table = std::make_shared<const EmbeddingTable>(std::move(data.table));
  ModelDims dims;
  dims.d_h = 8;
  dims.d_b = 4;
  dims.d_a = 8;
  dims.d_s = 8;
  Model model = Model::create(data.corpus.labels, table, stats, dims, {}, seed);
  std::vector<ClassId> candidates(data.corpus.labels.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
  return gradcheck(model, batch, candidates);
}

}  // namespace zsic
