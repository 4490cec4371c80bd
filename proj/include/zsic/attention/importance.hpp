#pragma once

#include <algorithm>
#include <span>
#include <string_view>
#include <vector>

#include "zsic/data/corpus.hpp"
#include "zsic/data/embeddings.hpp"
#include "zsic/data/unigram.hpp"
#include "zsic/errors.hpp"
#include "zsic/numerics/functions.hpp"
#include "zsic/numerics/linalg.hpp"
#include "zsic/numerics/matrix.hpp"

namespace zsic {

inline constexpr double kUnigramSmoothing = 1e-5;  // epsilon in s(w)
inline constexpr double kEntropyFloor = 1e-3;      // clamp for 1 / H in t(w)
inline constexpr double kDefaultRidgeReg = 1.0;

/// Ridge regression from word vectors to one-hot class targets, fit on the
/// description embeddings of every class (seen and unseen).
struct RidgeClassifier {
  Matrix W;  // d_w x C

  std::size_t class_count() const noexcept { return W.cols(); }
  std::size_t dim() const noexcept { return W.rows(); }

  static RidgeClassifier fit(std::span<const IntentLabel> labels, const EmbeddingTable& table,
                             double reg = kDefaultRidgeReg) {
    if (labels.size() < 2) throw UsageError("RidgeClassifier: need at least two classes");
    Matrix e(labels.size(), table.dim());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto v = label_embedding(labels[i], table);
      std::copy(v.begin(), v.end(), e.row(i).begin());
    }
    return {ridge_solve(e, Matrix::identity(labels.size()), reg)};
  }

  /// P(y | w) = softmax(w^T W).
  std::vector<double> predict(std::span<const double> w) const {
    if (w.size() != dim()) throw UsageError("RidgeClassifier: word vector has wrong dimension");
    std::vector<double> logits(class_count(), 0.0);
    for (std::size_t r = 0; r < dim(); ++r) {
      const double x = w[r];
      const auto row = W.row(r);
      for (std::size_t c = 0; c < logits.size(); ++c) logits[c] += x * row[c];
    }
    return softmax(logits);
  }
};

/// s(w) = eps / (eps + P(w)).
inline double general_word_importance(double unigram_probability) {
  return kUnigramSmoothing / (kUnigramSmoothing + unigram_probability);
}

inline double general_word_importance(std::string_view token, const UnigramStats& stats) {
  return general_word_importance(stats.probability(token));
}

/// 1 / H(p) with H clamped below at kEntropyFloor.
inline double inverse_entropy(std::span<const double> p) { return 1.0 / std::max(entropy(p), kEntropyFloor); }

/// t(w) = 1 / H(P(y | w)).
inline double class_specific_importance(std::string_view token, const EmbeddingTable& table,
                                        const RidgeClassifier& clf) {
  return inverse_entropy(clf.predict(table.vector(token)));
}

}  // namespace zsic
