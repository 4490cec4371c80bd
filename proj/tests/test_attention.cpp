#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "zsic/attention/encoder.hpp"
#include "zsic/attention/importance.hpp"

using namespace zsic;

namespace {

struct Fixture {
  std::vector<IntentLabel> labels;
  EmbeddingTable table{4};
  UnigramStats stats;
  RidgeClassifier ridge;
  ParamStore store;

  explicit Fixture(const Ablations& ab = {}, std::uint64_t seed = 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (const char* t : {"play", "music", "weather", "rain", "the", "a", "book", "table"}) {
      std::vector<double> v(4);
      for (double& x : v) x = n(rng);
      table.set(t, v);
    }
    labels = {{0, "play_music", {"play", "music"}, true},
              {1, "get_weather", {"weather", "rain"}, true},
              {2, "book_table", {"book", "table"}, false}};
    const std::vector<Utterance> train{{{"play", "the", "music"}, 0}, {{"the", "rain", "a"}, 1}};
    stats = UnigramStats::from(train);
    ridge = RidgeClassifier::fit(labels, table);
    EncoderDims d;
    d.d_w = 4;
    d.d_h = 3;
    d.d_b = 2;
    d.d_a = 5;
    register_attention_params(store, d, ab, rng);
  }

  EncoderContext context(const Ablations& ab = {}) const { return {&table, &stats, &ridge, ab}; }
};

}  // namespace

TEST(GeneralImportance, Examples) {
  EXPECT_EQ(general_word_importance(0.0), 1.0);
  EXPECT_EQ(general_word_importance(1e-5), 0.5);
  EXPECT_NEAR(general_word_importance(0.01), 1e-5 / 0.01001, 1e-15);
  EXPECT_NEAR(general_word_importance(0.01), 9.990e-4, 1e-7);
}

TEST(ClassImportance, Examples) {
  const std::vector<double> u4{0.25, 0.25, 0.25, 0.25};
  EXPECT_NEAR(inverse_entropy(u4), 1.0 / std::log(4.0), 1e-12);
  EXPECT_NEAR(inverse_entropy(u4), 0.7213, 1e-4);
  const std::vector<double> one_hot{0.0, 1.0, 0.0};
  EXPECT_EQ(inverse_entropy(one_hot), 1000.0);
  const std::vector<double> half{0.5, 0.5};
  EXPECT_NEAR(inverse_entropy(half), 1.4427, 1e-4);
}

TEST(Ridge, OrthonormalLabelsPeakOnOwnClass) {
  EmbeddingTable t(2);
  t.set("x", std::vector<double>{1, 0});
  t.set("y", std::vector<double>{0, 1});
  const std::vector<IntentLabel> labels{{0, "x", {"x"}, true}, {1, "y", {"y"}, false}};
  const auto clf = RidgeClassifier::fit(labels, t, 1e-9);
  const auto px = clf.predict(t.vector("x"));
  const auto py = clf.predict(t.vector("y"));
  EXPECT_GT(px[0], px[1]);
  EXPECT_GT(py[1], py[0]);
  EXPECT_EQ(clf.class_count(), 2u);
}

TEST(Ridge, CoversEveryLabelAndToleratesDuplicates) {
  Fixture f;
  EXPECT_EQ(f.ridge.class_count(), 3u);
  EXPECT_EQ(f.ridge.dim(), 4u);
  std::vector<IntentLabel> dup = f.labels;
  dup[2].description = dup[0].description;
  EXPECT_NO_THROW(RidgeClassifier::fit(dup, f.table));
  EXPECT_THROW(RidgeClassifier::fit(std::span(f.labels).first(1), f.table), UsageError);
  const std::vector<double> wrong(3, 0.0);
  EXPECT_THROW(f.ridge.predict(wrong), UsageError);
}

TEST(SignaturePairs, AblationsPinChannelsToOne) {
  Fixture f;
  const std::vector<Token> toks{"the", "unseen_word"};
  const auto full = signature_pairs(toks, f.context());
  EXPECT_LT(full[0].s, 1.0);
  EXPECT_EQ(full[1].s, 1.0);
  EXPECT_NE(full[0].t, 1.0);
  Ablations no_gw;
  no_gw.no_gw = true;
  for (const auto& p : signature_pairs(toks, f.context(no_gw))) EXPECT_EQ(p.s, 1.0);
  Ablations no_cw;
  no_cw.no_cw = true;
  for (const auto& p : signature_pairs(toks, f.context(no_cw))) EXPECT_EQ(p.t, 1.0);
}

TEST(DsAttention, SingleTokenAndUniformCases) {
  Fixture f;
  const std::vector<SignaturePair> one{{0.3, 2.0}};
  EXPECT_EQ(ds_attention(one, f.store), (std::vector<double>{1.0}));

  ParamStore zero;
  LstmParams::zeros(2, 2).register_in(zero, names::kSigFwd);
  LstmParams::zeros(2, 2).register_in(zero, names::kSigBwd);
  zero.add(names::kSigF, Matrix(1, 4, 0.7));
  const std::vector<SignaturePair> same(4, {0.5, 1.5});
  for (double p : ds_attention(same, zero)) EXPECT_NEAR(p, 0.25, 1e-15);

  const std::vector<SignaturePair> five{{0.1, 3}, {1, 1}, {0.5, 2}, {0.9, 0.4}, {0.2, 7}};
  double s = 0.0;
  for (double p : ds_attention(five, f.store)) s += p;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(MlpAttention, ZeroOutputWeightsGiveUniform) {
  Fixture f;
  f.store.value(names::kMlpW2).fill(0.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Matrix H(6, 5);
  for (double& v : H.values()) v = n(rng);
  for (double q : mlp_attention(H, f.store)) EXPECT_NEAR(q, 0.2, 1e-15);
}

TEST(MlpAttention, SingleColumnAndDuplicates) {
  Fixture f;
  EXPECT_EQ(mlp_attention(Matrix(6, 1, 0.3), f.store), (std::vector<double>{1.0}));
  Matrix H(6, 3);
  for (std::size_t r = 0; r < 6; ++r) {
    H(r, 0) = 0.1 * static_cast<double>(r);
    H(r, 1) = -0.4;
    H(r, 2) = H(r, 0);
  }
  const auto q = mlp_attention(H, f.store);
  EXPECT_EQ(q[0], q[2]);
}

TEST(Mixture, Examples) {
  const std::vector<double> p{0.2, 0.5, 0.3};
  const std::vector<double> q{0.6, 0.1, 0.3};
  const std::vector<double> only_p{1.0, 0.0};
  EXPECT_EQ(mixture(p, q, only_p), p);
  const std::vector<double> half{0.5, 0.5};
  const auto a = mixture(p, q, half);
  EXPECT_NEAR(a[0] + a[1] + a[2], 1.0, 1e-15);
  const std::vector<double> extrapolate{2.0, -1.0};
  const auto same = mixture(p, p, extrapolate);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(same[i], p[i], 1e-15);
  const std::vector<double> short_q{0.5, 0.5};
  EXPECT_THROW(mixture(p, short_q, half), UsageError);
  const std::vector<double> three{1, 0, 0};
  EXPECT_THROW(mixture(p, q, three), UsageError);
}

TEST(Encode, FeatureEqualsWeightedColumnSum) {
  Fixture f;
  const std::vector<Token> toks{"play", "the", "rain", "music", "zzz"};
  Tape tape{Tape::NoGrad{}};
  const auto vars = ad::AttentionVars::bind(tape, f.store, {});
  const auto enc = ad::encode(tape, vars, toks, f.context());
  const Matrix& H = enc.H.value();
  const Matrix& a = enc.a.value();
  for (std::size_t r = 0; r < H.rows(); ++r) {
    double s = 0.0;
    for (std::size_t t = 0; t < toks.size(); ++t) s += a(0, t) * H(r, t);
    EXPECT_NEAR(enc.x.value()(r, 0), s, 1e-12);
  }
  const auto x = encode(toks, f.store, f.context());
  for (std::size_t r = 0; r < x.size(); ++r) EXPECT_EQ(x[r], enc.x.value()(r, 0));
}

TEST(Encode, SingleTokenScalesTheOnlyColumn) {
  Fixture f;
  const std::vector<Token> toks{"music"};
  Tape tape{Tape::NoGrad{}};
  const auto enc = ad::encode(tape, ad::AttentionVars::bind(tape, f.store, {}), toks, f.context());
  const double a1 = enc.a.value()(0, 0);
  EXPECT_NEAR(a1, 1.0, 1e-15);  // both attentions are 1 and b sums to 1
  for (std::size_t r = 0; r < enc.H.value().rows(); ++r) EXPECT_EQ(enc.x.value()(r, 0), a1 * enc.H.value()(r, 0));
}

TEST(Encode, OneHotAttentionSelectsColumn) {
  Tape tape;
  const Var H = tape.constant(Matrix{{1, 2, 3}, {4, 5, 6}});
  const Var a = tape.constant(Matrix{{0, 1, 0}});
  const Matrix x = ad::matmul(H, ad::transpose(a)).value();
  EXPECT_EQ(x, (Matrix{{2}, {5}}));
}

TEST(Encode, ZeroSignatureWeightsAverageColumns) {
  Ablations no_mlp;
  no_mlp.no_mlp = true;
  Fixture f(no_mlp);
  f.store.value(names::kSigF).fill(0.0);
  const std::vector<Token> toks{"the", "book", "the"};
  Tape tape{Tape::NoGrad{}};
  const auto enc = ad::encode(tape, ad::AttentionVars::bind(tape, f.store, no_mlp), toks, f.context(no_mlp));
  EXPECT_FALSE(enc.q.has_value());
  for (std::size_t r = 0; r < enc.H.value().rows(); ++r) {
    const Matrix& H = enc.H.value();
    EXPECT_NEAR(enc.x.value()(r, 0), (H(r, 0) + H(r, 1) + H(r, 2)) / 3.0, 1e-15);
  }
}

TEST(Encode, AblatedGroupsAreFrozenAndUnbound) {
  Ablations no_ds;
  no_ds.no_ds = true;
  Fixture f(no_ds);
  EXPECT_FALSE(f.store.trainable(names::kSigF));
  EXPECT_FALSE(f.store.trainable("sig.fwd.W_i"));
  EXPECT_FALSE(f.store.trainable(names::kMixB));
  EXPECT_TRUE(f.store.trainable(names::kMlpW1));
  Tape tape;
  const auto vars = ad::AttentionVars::bind(tape, f.store, no_ds);
  EXPECT_FALSE(vars.F.has_value());
  EXPECT_FALSE(vars.b.has_value());
  const std::vector<Token> toks{"play", "music"};
  const auto enc = ad::encode(tape, vars, toks, f.context(no_ds));
  EXPECT_FALSE(enc.p.has_value());
  EXPECT_TRUE(enc.q.has_value());
}

TEST(Encode, EmptyUtteranceIsRejected) {
  Fixture f;
  EXPECT_THROW(encode(std::vector<Token>{}, f.store, f.context()), UsageError);
}

TEST(AblationsTest, ParseAndValidate) {
  const auto a = Ablations::parse("gw,meta-adapt");
  EXPECT_TRUE(a.no_gw);
  EXPECT_TRUE(a.no_meta_adapt);
  EXPECT_FALSE(a.no_cw);
  EXPECT_EQ(Ablations::parse("none"), Ablations{});
  EXPECT_EQ(Ablations::parse(a.to_string()), a);
  EXPECT_THROW(Ablations::parse("ds,mlp"), UsageError);
  EXPECT_THROW(Ablations::parse("attention"), UsageError);
}
