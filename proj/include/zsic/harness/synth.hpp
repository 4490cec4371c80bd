#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "zsic/data/corpus.hpp"
#include "zsic/data/embeddings.hpp"
#include "zsic/errors.hpp"

namespace zsic {

/// How class directions are laid out in embedding space.
///  - Orthogonal: one random orthonormal direction per class.
///  - Compositional: a small orthonormal attribute basis; each class direction
///    is the normalized sum of a distinct attribute pair, so unseen classes
///    recombine attributes the seen classes already cover.
enum class VocabDesign { Orthogonal, Compositional };

inline std::string to_string(VocabDesign d) { return d == VocabDesign::Orthogonal ? "orthogonal" : "compositional"; }

inline VocabDesign parse_vocab_design(std::string_view s) {
  if (s == "orthogonal") return VocabDesign::Orthogonal;
  if (s == "compositional") return VocabDesign::Compositional;
  throw UsageError("unknown vocab design '" + std::string(s) + "'");
}

struct SynthConfig {
  std::size_t n_classes = 8;
  std::size_t n_seen = 6;
  std::size_t samples_per_class = 50;
  VocabDesign design = VocabDesign::Compositional;
  std::uint64_t seed = 0;
  std::size_t dim = 16;
  std::size_t signature_tokens = 4;  // per class
  std::size_t filler_tokens = 24;    // shared by all classes
  std::size_t min_length = 4;
  std::size_t max_length = 9;
  double signature_scale = 3.0;
  double signature_noise = 0.3;
  double filler_scale = 0.5;

  void validate() const {
    if (n_seen < 1 || n_seen >= n_classes) throw UsageError("synth: need 1 <= n_seen < n_classes");
    if (samples_per_class < 4) throw UsageError("synth: samples_per_class must be at least 4");
    if (signature_tokens == 0 || filler_tokens == 0) throw UsageError("synth: token counts must be positive");
    if (min_length < 2 || max_length < min_length) throw UsageError("synth: bad utterance length range");
    if (dim == 0) throw UsageError("synth: dim must be positive");
    if (design == VocabDesign::Orthogonal && n_classes > dim)
      throw UsageError("synth: orthogonal design needs n_classes <= dim");
  }
};

struct SynthData {
  Corpus corpus;
  EmbeddingTable table;
  std::vector<std::vector<double>> class_directions;  // unit vectors, one per class
};

namespace detail {

/// Gram-Schmidt over Gaussian draws.
template <class Rng>
std::vector<std::vector<double>> random_orthonormal(std::size_t count, std::size_t dim, Rng& rng) {
  if (count > dim) throw UsageError("random_orthonormal: more vectors than dimensions");
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<std::vector<double>> out;
  while (out.size() < count) {
    std::vector<double> v(dim);
    for (double& x : v) x = n01(rng);
    for (const auto& b : out) {
      double dot = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dot += v[i] * b[i];
      for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * b[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace detail

inline SynthData synth_corpus(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  SynthData out;

  if (cfg.design == VocabDesign::Orthogonal) {
    out.class_directions = detail::random_orthonormal(cfg.n_classes, cfg.dim, rng);
  } else {
    std::size_t k = 2;
    while (k * (k - 1) / 2 < cfg.n_classes) ++k;
    if (k > cfg.dim) throw UsageError("synth: too many classes for the compositional design at this dim");
    const auto attrs = detail::random_orthonormal(k, cfg.dim, rng);
    for (std::size_t a = 0; a < k && out.class_directions.size() < cfg.n_classes; ++a)
      for (std::size_t b = a + 1; b < k && out.class_directions.size() < cfg.n_classes; ++b) {
        std::vector<double> v(cfg.dim);
        for (std::size_t i = 0; i < cfg.dim; ++i) v[i] = (attrs[a][i] + attrs[b][i]) / std::sqrt(2.0);
        out.class_directions.push_back(std::move(v));
      }
  }

  out.table = EmbeddingTable(cfg.dim);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<std::vector<Token>> signature(cfg.n_classes);
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    for (std::size_t j = 0; j < cfg.signature_tokens; ++j) {
      Token t = "sig" + std::to_string(c) + "_" + std::to_string(j);
      std::vector<double> v(cfg.dim);
      for (std::size_t i = 0; i < cfg.dim; ++i)
        v[i] = cfg.signature_scale * out.class_directions[c][i] + cfg.signature_noise * n01(rng);
      out.table.set(t, v);
      signature[c].push_back(std::move(t));
    }
  }
  std::vector<Token> filler;
  for (std::size_t j = 0; j < cfg.filler_tokens; ++j) {
    Token t = "fill" + std::to_string(j);
    std::vector<double> v(cfg.dim);
    for (double& x : v) x = cfg.filler_scale * n01(rng);
    out.table.set(t, v);
    filler.push_back(std::move(t));
  }

  Corpus& corpus = out.corpus;
  for (std::size_t c = 0; c < cfg.n_classes; ++c)
    corpus.labels.push_back({c, "intent" + std::to_string(c), signature[c], c < cfg.n_seen});

  std::uniform_int_distribution<std::size_t> len_dist(cfg.min_length, cfg.max_length);
  std::uniform_int_distribution<std::size_t> sig_pick(0, cfg.signature_tokens - 1);
  std::uniform_int_distribution<std::size_t> fill_pick(0, cfg.filler_tokens - 1);
  std::uniform_int_distribution<std::size_t> sig_count(1, 2);
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    for (std::size_t s = 0; s < cfg.samples_per_class; ++s) {
      const std::size_t len = len_dist(rng);
      std::vector<Token> tokens(len);
      for (auto& t : tokens) t = filler[fill_pick(rng)];
      const std::size_t n_sig = std::min(sig_count(rng), len);
      std::vector<std::size_t> pos(len);
      for (std::size_t i = 0; i < len; ++i) pos[i] = i;
      std::shuffle(pos.begin(), pos.end(), rng);
      for (std::size_t i = 0; i < n_sig; ++i) tokens[pos[i]] = signature[c][sig_pick(rng)];
      corpus.utterances.push_back({std::move(tokens), c});
    }
  }
  corpus.finalize();
  return out;
}

}  // namespace zsic
