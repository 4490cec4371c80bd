#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "zsic/data/corpus.hpp"
#include "zsic/errors.hpp"

namespace zsic {

struct ClassMetrics {
  ClassId id = 0;
  std::size_t support = 0;    // gold count
  std::size_t predicted = 0;  // prediction count
  std::size_t correct = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-class table and support-weighted averages over a fixed class set.
/// Predictions outside the class set count as errors for recall and are not
/// credited to any class.
struct ClassificationMetrics {
  std::size_t total = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::vector<ClassMetrics> classes;  // ordered as the class set
};

inline ClassificationMetrics classification_metrics(std::span<const ClassId> predictions, std::span<const ClassId> gold,
                                                    std::span<const ClassId> class_set) {
  if (predictions.size() != gold.size()) throw UsageError("metrics: prediction and gold lengths differ");
  if (gold.empty()) throw UsageError("metrics: empty input");
  if (class_set.empty()) throw UsageError("metrics: empty class set");
  ClassificationMetrics m;
  m.total = gold.size();
  m.classes.resize(class_set.size());
  auto slot = [&](ClassId c) -> std::ptrdiff_t {
    auto it = std::find(class_set.begin(), class_set.end(), c);
    return it == class_set.end() ? -1 : it - class_set.begin();
  };
  for (std::size_t k = 0; k < class_set.size(); ++k) m.classes[k].id = class_set[k];
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = slot(gold[i]);
    if (g < 0) throw UsageError("metrics: gold label " + std::to_string(gold[i]) + " is outside the class set");
    ++m.classes[static_cast<std::size_t>(g)].support;
    if (const auto p = slot(predictions[i]); p >= 0) ++m.classes[static_cast<std::size_t>(p)].predicted;
    if (predictions[i] == gold[i]) ++m.classes[static_cast<std::size_t>(g)].correct;
  }
  std::size_t correct = 0;
  double weighted_f1 = 0.0;
  for (auto& c : m.classes) {
    c.recall = c.support ? static_cast<double>(c.correct) / static_cast<double>(c.support) : 0.0;
    c.precision = c.predicted ? static_cast<double>(c.correct) / static_cast<double>(c.predicted) : 0.0;
    c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    // support * recall == correct, so the support-weighted recall sum is the correct count.
    correct += c.correct;
    weighted_f1 += static_cast<double>(c.support) * c.f1;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
  m.f1 = weighted_f1 / static_cast<double>(m.total);
  return m;
}

/// Support-weighted mean of per-class recall.
inline double weighted_accuracy(std::span<const ClassId> predictions, std::span<const ClassId> gold,
                                std::span<const ClassId> class_set) {
  return classification_metrics(predictions, gold, class_set).accuracy;
}

/// Support-weighted mean of per-class F1 (0 where precision and recall are both 0).
inline double weighted_f1(std::span<const ClassId> predictions, std::span<const ClassId> gold,
                          std::span<const ClassId> class_set) {
  return classification_metrics(predictions, gold, class_set).f1;
}

}  // namespace zsic
