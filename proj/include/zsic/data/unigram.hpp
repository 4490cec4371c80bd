#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "zsic/data/corpus.hpp"
#include "zsic/errors.hpp"

namespace zsic {

/// Unigram counts over the (seen) training utterances.
class UnigramStats {
 public:
  static UnigramStats from(std::span<const Utterance> train) {
    if (train.empty()) throw UsageError("unigram_stats: no training utterances");
    UnigramStats s;
    for (const auto& u : train)
      for (const auto& t : u.tokens) {
        ++s.counts_[t];
        ++s.total_;
      }
    return s;
  }

  std::size_t count(std::string_view t) const {
    auto it = counts_.find(t);
    return it == counts_.end() ? 0 : it->second;
  }

  /// Unigram likelihood; 0 for tokens never observed.
  double probability(std::string_view t) const {
    return static_cast<double>(count(t)) / static_cast<double>(total_);
  }

  std::size_t total() const noexcept { return total_; }
  const std::map<Token, std::size_t, std::less<>>& counts() const noexcept { return counts_; }

 private:
  std::map<Token, std::size_t, std::less<>> counts_;
  std::size_t total_ = 0;
};

inline UnigramStats unigram_stats(std::span<const Utterance> train) { return UnigramStats::from(train); }

}  // namespace zsic
