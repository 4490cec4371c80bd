#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "zsic/ablations.hpp"
#include "zsic/attention/importance.hpp"
#include "zsic/data/corpus.hpp"
#include "zsic/data/embeddings.hpp"
#include "zsic/data/unigram.hpp"
#include "zsic/numerics/lstm.hpp"
#include "zsic/numerics/param_store.hpp"
#include "zsic/numerics/tape.hpp"

namespace zsic {

struct EncoderDims {
  std::size_t d_w = 0;   // word embedding size
  std::size_t d_h = 64;  // utterance BiLSTM hidden size per direction
  std::size_t d_b = 16;  // signature BiLSTM hidden size per direction
  std::size_t d_a = 64;  // MLP attention hidden size
  friend bool operator==(const EncoderDims&, const EncoderDims&) = default;
};

namespace names {
inline const std::string kEncFwd = "enc.fwd";
inline const std::string kEncBwd = "enc.bwd";
inline const std::string kSigFwd = "sig.fwd";
inline const std::string kSigBwd = "sig.bwd";
inline const std::string kSigF = "sig.F";
inline const std::string kMlpW1 = "mlp.W1";
inline const std::string kMlpW2 = "mlp.W2";
inline const std::string kMixB = "mix.b";
}  // namespace names

/// uniform(-sqrt(1/fan_in), sqrt(1/fan_in)).
template <class Rng>
Matrix fan_in_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = u(rng);
  return m;
}

/// Registers the encoder, signature, MLP-attention and mixture groups.
/// Groups an ablation makes unreachable are registered frozen.
template <class Rng>
void register_attention_params(ParamStore& store, const EncoderDims& d, const Ablations& ab, Rng& rng) {
  if (d.d_w == 0 || d.d_h == 0 || d.d_b == 0 || d.d_a == 0) throw UsageError("EncoderDims: all sizes must be positive");
  LstmParams::random(d.d_w, d.d_h, rng).register_in(store, names::kEncFwd);
  LstmParams::random(d.d_w, d.d_h, rng).register_in(store, names::kEncBwd);
  const bool ds = !ab.no_ds;
  const bool mlp = !ab.no_mlp;
  LstmParams::random(2, d.d_b, rng).register_in(store, names::kSigFwd, ds);
  LstmParams::random(2, d.d_b, rng).register_in(store, names::kSigBwd, ds);
  store.add(names::kSigF, fan_in_uniform(1, 2 * d.d_b, rng), ds);
  store.add(names::kMlpW1, fan_in_uniform(d.d_a, 2 * d.d_h, rng), mlp);
  store.add(names::kMlpW2, fan_in_uniform(1, d.d_a, rng), mlp);
  store.add(names::kMixB, Matrix{{0.5, 0.5}}, ds && mlp);
}

/// (s(w), t(w)) per token, with ablated channels pinned to 1.
struct SignaturePair {
  double s = 1.0;
  double t = 1.0;
};

struct EncoderContext {
  const EmbeddingTable* table = nullptr;
  const UnigramStats* stats = nullptr;
  const RidgeClassifier* ridge = nullptr;
  Ablations ablations;
};

inline std::vector<SignaturePair> signature_pairs(std::span<const Token> tokens, const EncoderContext& ctx) {
  std::vector<SignaturePair> out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!ctx.ablations.no_gw) out[i].s = general_word_importance(tokens[i], *ctx.stats);
    if (!ctx.ablations.no_cw) out[i].t = class_specific_importance(tokens[i], *ctx.table, *ctx.ridge);
  }
  return out;
}

inline Matrix signature_matrix(std::span<const SignaturePair> pairs) {
  Matrix m(2, pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    m(0, i) = pairs[i].s;
    m(1, i) = pairs[i].t;
  }
  return m;
}

inline Matrix embedding_matrix(std::span<const Token> tokens, const EmbeddingTable& table) {
  Matrix m(table.dim(), tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto v = table.vector(tokens[t]);
    for (std::size_t r = 0; r < v.size(); ++r) m(r, t) = v[r];
  }
  return m;
}

namespace ad {

/// Attention parameters bound to a tape; groups removed by an ablation stay unbound.
struct AttentionVars {
  LstmVars enc_fwd, enc_bwd;
  std::optional<LstmVars> sig_fwd, sig_bwd;
  std::optional<Var> F, W1, W2, b;

  static AttentionVars bind(Tape& tape, const ParamStore& store, const Ablations& ab) {
    AttentionVars v;
    v.enc_fwd = LstmVars::bind(tape, store, names::kEncFwd);
    v.enc_bwd = LstmVars::bind(tape, store, names::kEncBwd);
    if (!ab.no_ds) {
      v.sig_fwd = LstmVars::bind(tape, store, names::kSigFwd);
      v.sig_bwd = LstmVars::bind(tape, store, names::kSigBwd);
      v.F = tape.param(store, names::kSigF);
    }
    if (!ab.no_mlp) {
      v.W1 = tape.param(store, names::kMlpW1);
      v.W2 = tape.param(store, names::kMlpW2);
    }
    if (!ab.no_ds && !ab.no_mlp) v.b = tape.param(store, names::kMixB);
    return v;
  }
};

/// p = softmax(F Z), Z = BiLSTM over the 2 x N signature sequence.
inline Var ds_attention(Var signatures, const LstmVars& fwd, const LstmVars& bwd, Var F) {
  return softmax_rows(matmul(F, bilstm(signatures, fwd, bwd)));
}

/// q = softmax(W2 ReLU(W1 H)).
inline Var mlp_attention(Var H, Var W1, Var W2) { return softmax_rows(matmul(W2, relu(matmul(W1, H)))); }

/// a = b [p; q], left unnormalized.
inline Var mixture(Var p, Var q, Var b) {
  if (p.value().cols() != q.value().cols()) throw UsageError("mixture: p and q lengths differ");
  return matmul(b, vstack(p, q));
}

struct Encoding {
  Var H;                  // 2d_h x N
  std::optional<Var> p;   // 1 x N
  std::optional<Var> q;   // 1 x N
  Var a;                  // 1 x N
  Var x;                  // 2d_h x 1
};

inline Encoding encode(Tape& tape, const AttentionVars& vars, std::span<const Token> tokens, const EncoderContext& ctx) {
  if (tokens.empty()) throw UsageError("encode: empty utterance");
  Encoding e;
  e.H = bilstm(tape.constant(embedding_matrix(tokens, *ctx.table)), vars.enc_fwd, vars.enc_bwd);
  if (vars.F) {
    Var sig = tape.constant(signature_matrix(signature_pairs(tokens, ctx)));
    e.p = ds_attention(sig, *vars.sig_fwd, *vars.sig_bwd, *vars.F);
  }
  if (vars.W1) e.q = mlp_attention(e.H, *vars.W1, *vars.W2);
  if (e.p && e.q) e.a = mixture(*e.p, *e.q, *vars.b);
  else e.a = e.p ? *e.p : *e.q;
  e.x = matmul(e.H, transpose(e.a));
  return e;
}

}  // namespace ad

// Tape-free conveniences over a parameter store.

inline std::vector<double> ds_attention(std::span<const SignaturePair> pairs, const ParamStore& store) {
  if (pairs.empty()) throw UsageError("ds_attention: empty sequence");
  Tape tape{Tape::NoGrad{}};
  const auto fwd = ad::LstmVars::bind(tape, store, names::kSigFwd);
  const auto bwd = ad::LstmVars::bind(tape, store, names::kSigBwd);
  const Var p = ad::ds_attention(tape.constant(signature_matrix(pairs)), fwd, bwd, tape.param(store, names::kSigF));
  return std::vector<double>(p.value().values().begin(), p.value().values().end());
}

inline std::vector<double> mlp_attention(const Matrix& H, const ParamStore& store) {
  Tape tape{Tape::NoGrad{}};
  const Var q = ad::mlp_attention(tape.constant(H), tape.param(store, names::kMlpW1), tape.param(store, names::kMlpW2));
  return std::vector<double>(q.value().values().begin(), q.value().values().end());
}

inline std::vector<double> mixture(std::span<const double> p, std::span<const double> q, std::span<const double> b) {
  if (p.size() != q.size()) throw UsageError("mixture: p and q lengths differ");
  if (b.size() != 2) throw UsageError("mixture: weight vector must have two entries");
  std::vector<double> a(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) a[i] = b[0] * p[i] + b[1] * q[i];
  return a;
}

/// Final utterance feature x = H a^T (length 2 d_h).
inline std::vector<double> encode(std::span<const Token> tokens, const ParamStore& store, const EncoderContext& ctx) {
  Tape tape{Tape::NoGrad{}};
  const auto vars = ad::AttentionVars::bind(tape, store, ctx.ablations);
  const Var x = ad::encode(tape, vars, tokens, ctx).x;
  return std::vector<double>(x.value().values().begin(), x.value().values().end());
}

}  // namespace zsic
