#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "zsic/data/corpus.hpp"
#include "zsic/errors.hpp"
#include "zsic/metalearn/projection.hpp"
#include "zsic/numerics/functions.hpp"

namespace zsic {

/// Nearest prototype among the unseen classes; ties go to the lowest class id.
inline ClassId predict_standard(std::span<const double> x, const PrototypeSet& unseen) {
  if (unseen.size() == 0) throw UsageError("predict_standard: no unseen classes");
  return unseen.ids[argmin(unseen.distances(x))];
}

/// Threshold rule for the generalized task: keep the overall argmax when its
/// probability reaches `lambda`, otherwise fall back to the best unseen class.
inline ClassId predict_generalized(std::span<const double> x, const PrototypeSet& all,
                                   std::span<const ClassId> unseen_ids, double lambda) {
  if (unseen_ids.empty()) throw UsageError("predict_generalized: no unseen classes");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("predict_generalized: threshold must lie in [0, 1]");
  const auto p = class_probabilities(x, all);
  const std::size_t top = argmax(p);
  if (p[top] >= lambda) return all.ids[top];
  std::size_t best = all.size();
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (std::find(unseen_ids.begin(), unseen_ids.end(), all.ids[k]) == unseen_ids.end()) continue;
    if (best == all.size() || p[k] > p[best]) best = k;
  }
  if (best == all.size()) throw UsageError("predict_generalized: unseen classes are not among the candidates");
  return all.ids[best];
}

}  // namespace zsic
