#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zsic/data/corpus.hpp"
#include "zsic/errors.hpp"

namespace zsic {

/// Dense token -> index map in first-insertion order.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::span<const Token> tokens) {
    for (const auto& t : tokens) add(t);
  }

  std::size_t add(const Token& t) {
    auto [it, inserted] = index_.try_emplace(t, tokens_.size());
    if (inserted) tokens_.push_back(t);
    return it->second;
  }

  void add_all(std::span<const Token> tokens) {
    for (const auto& t : tokens) add(t);
  }

  bool contains(std::string_view t) const { return index_.contains(std::string(t)); }

  std::size_t index(std::string_view t) const {
    auto it = index_.find(std::string(t));
    if (it == index_.end()) throw ReferenceError("Vocab: unknown token '" + std::string(t) + "'");
    return it->second;
  }

  const Token& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<Token>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }

 private:
  std::vector<Token> tokens_;
  std::unordered_map<Token, std::size_t> index_;
};

/// All tokens from utterances and label descriptions.
inline Vocab build_vocab(std::span<const Utterance> utterances, std::span<const IntentLabel> labels = {}) {
  Vocab v;
  for (const auto& u : utterances) v.add_all(u.tokens);
  for (const auto& l : labels) v.add_all(l.description);
  return v;
}

enum class OovPolicy { Zero, SeededUniform };

/// Frozen word vectors. Lookups of tokens outside the table yield the zero
/// vector, which is how words first met at test time are represented.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim), zero_(dim, 0.0) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vocab_.size(); }
  const Vocab& vocab() const noexcept { return vocab_; }
  bool contains(std::string_view t) const { return vocab_.contains(t); }

  /// Number of tokens that were missing from the file and got filled by policy.
  std::size_t oov_filled() const noexcept { return oov_filled_; }
  /// Number of repeated tokens skipped while reading the file.
  std::size_t duplicates() const noexcept { return duplicates_; }

  std::span<const double> vector(std::string_view t) const {
    if (auto it = lookup_.find(std::string(t)); it != lookup_.end())
      return {data_.data() + it->second * dim_, dim_};
    return zero_;
  }

  void set(const Token& t, std::span<const double> v) {
    if (v.size() != dim_) throw FormatError("EmbeddingTable: vector for '" + t + "' has dimension " +
                                            std::to_string(v.size()) + ", expected " + std::to_string(dim_));
    const std::size_t i = vocab_.add(t);
    if (i == data_.size() / dim_) data_.insert(data_.end(), v.begin(), v.end());
    else std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
    lookup_[t] = i;
  }

  /// Adds entries of `other` for tokens this table lacks.
  void merge(const EmbeddingTable& other) {
    if (other.dim_ != dim_) throw FormatError("EmbeddingTable::merge: dimension mismatch");
    for (const auto& t : other.vocab_.tokens())
      if (!contains(t)) set(t, other.vector(t));
    oov_filled_ += other.oov_filled_;
  }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.dim_ == b.dim_ && a.vocab_.tokens() == b.vocab_.tokens() && a.data_ == b.data_;
  }

  /// Deterministic per-token fill: the RNG is seeded from (seed, token), so
  /// the vector a token receives does not depend on vocabulary order.
  static std::vector<double> seeded_uniform(std::string_view token, std::size_t dim, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : token) {
      h ^= c;
      h *= 1099511628211ull;
    }
    std::mt19937_64 rng(seed ^ (h + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2)));
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    std::vector<double> v(dim);
    for (double& x : v) x = u(rng);
    return v;
  }

  /// Reads a word2vec-style text file (optional "V d" header line), keeping
  /// only tokens in `vocab`; vocab tokens absent from the file are filled per policy.
  static EmbeddingTable read(std::istream& in, const Vocab& vocab, OovPolicy policy, std::uint64_t seed,
                             const std::string& source = "embeddings") {
    EmbeddingTable table;
    std::unordered_map<Token, std::vector<double>> found;
    std::size_t dim = 0;
    std::size_t duplicates = 0;
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> values;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::istringstream ls(line);
      Token token;
      if (!(ls >> token)) continue;
      values.clear();
      std::string field;
      while (ls >> field) {
        char* end = nullptr;
        const double v = std::strtod(field.c_str(), &end);
        if (end == field.c_str() || *end != '\0') throw ParseError(source, lineno, "non-numeric value '" + field + "'");
        values.push_back(v);
      }
      if (lineno == 1 && values.size() == 1 && is_integer(token) && is_integer(field)) {
        dim = static_cast<std::size_t>(std::stoull(field));
        continue;
      }
      if (values.empty()) throw ParseError(source, lineno, "token without vector");
      if (dim == 0) dim = values.size();
      if (values.size() != dim)
        throw FormatError(source + ":" + std::to_string(lineno) + ": vector has dimension " +
                          std::to_string(values.size()) + ", expected " + std::to_string(dim));
      if (found.contains(token)) {
        ++duplicates;
        continue;
      }
      if (vocab.contains(token)) found.emplace(token, values);
      else found.emplace(token, std::vector<double>{});  // remembered for duplicate counting only
    }
    if (dim == 0) throw FormatError(source + ": no vectors found");
    table = EmbeddingTable(dim);
    table.duplicates_ = duplicates;
    for (const auto& t : vocab.tokens()) {
      auto it = found.find(t);
      if (it != found.end() && !it->second.empty()) {
        table.set(t, it->second);
      } else {
        table.set(t, policy == OovPolicy::Zero ? std::vector<double>(dim, 0.0) : seeded_uniform(t, dim, seed));
        ++table.oov_filled_;
      }
    }
    return table;
  }

  void write(std::ostream& os) const {
    os << vocab_.size() << ' ' << dim_ << '\n';
    os << std::setprecision(17);
    for (const auto& t : vocab_.tokens()) {
      os << t;
      for (double v : vector(t)) os << ' ' << v;
      os << '\n';
    }
  }

 private:
  static bool is_integer(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  }

  std::size_t dim_ = 0;
  Vocab vocab_;
  std::unordered_map<Token, std::size_t> lookup_;
  std::vector<double> data_;
  std::vector<double> zero_;
  std::size_t oov_filled_ = 0;
  std::size_t duplicates_ = 0;
};

inline EmbeddingTable load_embeddings(const std::string& path, const Vocab& vocab, OovPolicy policy,
                                      std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file '" + path + "'");
  return EmbeddingTable::read(in, vocab, policy, seed, path);
}

/// Mean of the description tokens' vectors.
inline std::vector<double> label_embedding(const IntentLabel& label, const EmbeddingTable& table) {
  if (label.description.empty()) throw UsageError("label_embedding: empty description for '" + label.name + "'");
  std::vector<double> e(table.dim(), 0.0);
  for (const auto& t : label.description) {
    const auto v = table.vector(t);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += v[i];
  }
  for (double& x : e) x /= static_cast<double>(label.description.size());
  return e;
}

}  // namespace zsic
