#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "zsic/data/corpus.hpp"
#include "zsic/errors.hpp"

namespace zsic {

enum class Task { Standard, Generalized };

struct DataSplit {
  Task task = Task::Standard;
  std::vector<Utterance> train;
  std::vector<Utterance> test;
  std::vector<ClassId> candidate_ids;  // sorted
  friend bool operator==(const DataSplit&, const DataSplit&) = default;
};

/// Train on every seen-class utterance, test on every unseen-class utterance.
inline DataSplit split_standard(const Corpus& corpus) {
  if (corpus.seen_ids.empty() || corpus.unseen_ids.empty())
    throw DataError("split_standard: corpus needs both seen and unseen classes");
  DataSplit s;
  s.task = Task::Standard;
  for (const auto& u : corpus.utterances) (corpus.is_seen(u.label) ? s.train : s.test).push_back(u);
  if (s.train.empty() || s.test.empty()) throw DataError("split_standard: an empty side (no utterances)");
  s.candidate_ids = corpus.unseen_ids;
  return s;
}

/// Per seen class, floor(ratio * n) utterances (seeded, without replacement)
/// go to train; the rest of the seen utterances and all unseen ones form test.
inline DataSplit split_generalized(const Corpus& corpus, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("split_generalized: ratio must lie in (0, 1)");
  if (corpus.seen_ids.empty() || corpus.unseen_ids.empty())
    throw DataError("split_generalized: corpus needs both seen and unseen classes");
  std::vector<std::vector<std::size_t>> by_class(corpus.class_count());
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) by_class[corpus.utterances[i].label].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<bool> to_train(corpus.utterances.size(), false);
  for (ClassId c : corpus.seen_ids) {
    auto& idx = by_class[c];
    if (idx.size() < 2)
      throw DataError("split_generalized: seen class '" + corpus.labels[c].name + "' has fewer than 2 samples");
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < n_train; ++k) to_train[idx[k]] = true;
  }
  DataSplit s;
  s.task = Task::Generalized;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i)
    (to_train[i] ? s.train : s.test).push_back(corpus.utterances[i]);
  s.candidate_ids = corpus.seen_ids;
  s.candidate_ids.insert(s.candidate_ids.end(), corpus.unseen_ids.begin(), corpus.unseen_ids.end());
  std::sort(s.candidate_ids.begin(), s.candidate_ids.end());
  return s;
}

/// A simulated zero-shot task carved out of the seen classes.
struct Episode {
  std::vector<ClassId> meta_seen_ids;    // sorted
  std::vector<ClassId> meta_unseen_ids;  // sorted
};

template <class Rng>
Episode sample_episode(std::span<const ClassId> seen_ids, std::size_t n_meta_seen, Rng& rng) {
  if (n_meta_seen < 1 || n_meta_seen >= seen_ids.size())
    throw UsageError("sample_episode: need 1 <= n_meta_seen < |seen classes|");
  std::vector<ClassId> ids(seen_ids.begin(), seen_ids.end());
  std::shuffle(ids.begin(), ids.end(), rng);
  Episode e;
  e.meta_seen_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_meta_seen));
  e.meta_unseen_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_meta_seen), ids.end());
  std::sort(e.meta_seen_ids.begin(), e.meta_seen_ids.end());
  std::sort(e.meta_unseen_ids.begin(), e.meta_unseen_ids.end());
  return e;
}

}  // namespace zsic
