#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "zsic/harness/synth.hpp"
#include "zsic/metalearn/model.hpp"
#include "zsic/metalearn/predict.hpp"
#include "zsic/metalearn/projection.hpp"
#include "zsic/metalearn/trainer.hpp"

using namespace zsic;

namespace {

struct Toy {
  SynthData data;
  std::vector<Utterance> seen_utts;
  std::shared_ptr<const EmbeddingTable> table;
  std::shared_ptr<const UnigramStats> stats;

  explicit Toy(std::uint64_t seed = 0) {
    SynthConfig sc;
    sc.n_classes = 6;
    sc.n_seen = 5;
    sc.samples_per_class = 8;
    sc.dim = 8;
    sc.seed = seed;
    data = synth_corpus(sc);
    for (const auto& u : data.corpus.utterances)
      if (data.corpus.is_seen(u.label)) seen_utts.push_back(u);
    table = std::make_shared<const EmbeddingTable>(data.table);
    stats = std::make_shared<const UnigramStats>(UnigramStats::from(seen_utts));
  }

  Model model(const Ablations& ab = {}, std::uint64_t seed = 0) const {
    ModelDims d;
    d.d_h = 6;
    d.d_b = 3;
    d.d_a = 6;
    d.d_s = 10;
    return Model::create(data.corpus.labels, table, stats, d, ab, seed);
  }

  std::vector<Utterance> batch_of(std::span<const ClassId> ids) const {
    std::vector<Utterance> out;
    for (const auto& u : seen_utts)
      if (std::find(ids.begin(), ids.end(), u.label) != ids.end()) out.push_back(u);
    return out;
  }
};

PrototypeSet protos(std::vector<ClassId> ids, Matrix P) {
  PrototypeSet ps;
  ps.ids = std::move(ids);
  ps.P = std::move(P);
  return ps;
}

bool same_values(const ParamStore& a, const ParamStore& b, bool (*select)(const std::string&)) {
  for (const auto& e : a.entries())
    if (select(e.name) && !(e.value == b.value(e.name))) return false;
  return true;
}

}  // namespace

TEST(Projection, ZeroInputMapsToZero) {
  std::mt19937_64 rng(0);
  const Matrix M1 = fan_in_uniform(5, 3, rng);
  const Matrix M2 = fan_in_uniform(4, 5, rng);
  const std::vector<double> zero(3, 0.0);
  for (double v : project_label(zero, M1, M2)) EXPECT_EQ(v, 0.0);
}

TEST(Projection, ScalarCaseAndRange) {
  const std::vector<double> one{1.0};
  EXPECT_NEAR(project_label(one, Matrix{{1.0}}, Matrix{{1.0}})[0], std::tanh(std::tanh(1.0)), 1e-15);
  EXPECT_NEAR(project_label(one, Matrix{{1.0}}, Matrix{{1.0}})[0], 0.64201, 1e-5);
  std::mt19937_64 rng(1);
  const Matrix M1 = 10.0 * fan_in_uniform(5, 3, rng);
  const Matrix M2 = 10.0 * fan_in_uniform(4, 5, rng);
  const std::vector<double> e{30.0, -50.0, 7.0};
  for (double v : project_label(e, M1, M2)) EXPECT_LE(std::abs(v), 1.0);
}

TEST(ClassProbabilities, Examples) {
  const std::vector<double> x{0.0, 0.0};
  const auto eq = class_probabilities(x, protos({0, 1}, Matrix{{1.0, -1.0}, {0.0, 0.0}}));
  EXPECT_NEAR(eq[0], 0.5, 1e-15);
  const auto p = class_probabilities(x, protos({0, 1}, Matrix{{0.0, 2.0}, {0.0, 0.0}}));
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(p[0], 0.8808, 1e-4);
  EXPECT_NEAR(p[1], 0.1192, 1e-4);
  EXPECT_EQ(class_probabilities(x, protos({3}, Matrix{{5.0}, {1.0}})), (std::vector<double>{1.0}));
  EXPECT_THROW(class_probabilities(x, protos({}, Matrix(2, 0))), UsageError);
}

TEST(PredictStandard, NearestUnseenPrototype) {
  const auto ps = protos({4, 7}, Matrix{{0.0, 1.0}, {0.0, 1.0}});
  const std::vector<double> on_first{0.0, 0.0};
  EXPECT_EQ(predict_standard(on_first, ps), 4u);
  const std::vector<double> near_second{0.8, 0.9};
  EXPECT_EQ(predict_standard(near_second, ps), 7u);
  const std::vector<double> midway{0.5, 0.5};
  EXPECT_EQ(predict_standard(midway, ps), 4u);
}

TEST(PredictStandard, ArgminDistanceIsArgmaxProbability) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 500; ++trial) {
    Matrix P(3, 4);
    for (double& v : P.values()) v = n(rng);
    std::vector<double> x(3);
    for (double& v : x) v = n(rng);
    const auto ps = protos({0, 1, 2, 3}, P);
    EXPECT_EQ(predict_standard(x, ps), argmax(class_probabilities(x, ps)));
  }
}

TEST(PredictGeneralized, ThresholdRule) {
  // Seen ids 0,1; unseen 2,3.
  const auto ps = protos({0, 1, 2, 3}, Matrix{{0.0, 3.0, 0.5, 4.0}});
  const std::vector<ClassId> unseen{2, 3};
  const std::vector<double> x{0.0};
  const auto p = class_probabilities(x, ps);
  EXPECT_EQ(predict_generalized(x, ps, unseen, 0.0), ps.ids[argmax(p)]);
  EXPECT_EQ(predict_generalized(x, ps, unseen, 0.0), 0u);
  EXPECT_EQ(predict_generalized(x, ps, unseen, 1.0), 2u);
  EXPECT_EQ(predict_generalized(x, ps, unseen, p[0]), 0u);
  EXPECT_THROW(predict_generalized(x, ps, unseen, 1.5), UsageError);
  EXPECT_THROW(predict_generalized(x, ps, {}, 0.5), UsageError);
}

TEST(ModelTest, CreatesEveryGroup) {
  const Toy toy;
  const Model m = toy.model();
  EXPECT_EQ(m.dims().d_w, 8u);
  EXPECT_EQ(m.ridge().class_count(), 6u);
  EXPECT_EQ(m.params().value(names::kProjM1).rows(), 10u);
  EXPECT_EQ(m.params().value(names::kProjM2).rows(), 12u);
  EXPECT_EQ(m.params().value(names::kMixB), (Matrix{{0.5, 0.5}}));
  EXPECT_THROW(toy.model(Ablations::parse("ds"), 0).prototypes({}), UsageError);
}

TEST(ModelTest, EqualPrototypesGiveLogKLoss) {
  const Toy toy;
  Model m = toy.model();
  m.params().value(names::kProjM2).fill(0.0);
  const std::vector<ClassId> ids{0, 1, 2, 3};
  const auto batch = toy.batch_of(ids);
  Tape tape;
  EXPECT_NEAR(m.batch_loss(tape, batch, ids).value()(0, 0), std::log(4.0), 1e-12);
}

TEST(ModelTest, LabelsOutsideCandidatesAreRejected) {
  const Toy toy;
  const Model m = toy.model();
  const std::vector<ClassId> ids{0, 1};
  const std::vector<ClassId> other{2};
  Tape tape;
  EXPECT_THROW(m.batch_loss(tape, toy.batch_of(other), ids), UsageError);
}

TEST(MetaTrain, DescendsOnSeparableData) {
  const Toy toy;
  Model m = toy.model();
  const std::vector<ClassId> ids{0, 1, 2};
  const auto batch = toy.batch_of(ids);
  AdamState adam;
  const double first = meta_train_step(batch, ids, m, adam, 0.01);
  double last = first;
  for (int i = 0; i < 50; ++i) last = meta_train_step(batch, ids, m, adam, 0.01);
  EXPECT_LT(last, first);
  EXPECT_THROW(meta_train_step(toy.batch_of(std::vector<ClassId>{4}), ids, m, adam, 0.01), UsageError);
}

TEST(MetaAdapt, OnlyProjectionMoves) {
  const Toy toy;
  Model m = toy.model();
  const ParamStore before = m.params();
  const std::vector<ClassId> ids{3, 4};
  AdamState adam;
  meta_adapt_step(toy.batch_of(ids), ids, m, adam, 0.01);
  EXPECT_TRUE(same_values(before, m.params(), [](const std::string& n) { return !is_projection_param(n); }));
  EXPECT_NE(before.value(names::kProjM1), m.params().value(names::kProjM1));
  EXPECT_NE(before.value(names::kProjM2), m.params().value(names::kProjM2));
  for (const auto& e : m.params().entries()) EXPECT_EQ(e.trainable, before.trainable(e.name)) << e.name;
}

TEST(MetaAdapt, AblatedStepIsNoOp) {
  const Toy toy;
  Model m = toy.model(Ablations::parse("meta-adapt"));
  const ParamStore before = m.params();
  const std::vector<ClassId> ids{3, 4};
  AdamState adam;
  EXPECT_EQ(meta_adapt_step(toy.batch_of(ids), ids, m, adam, 0.01), 0.0);
  EXPECT_TRUE(same_values(before, m.params(), [](const std::string&) { return true; }));
}

TEST(MetaAdapt, SingleCandidateHasZeroLoss) {
  const Toy toy;
  Model m = toy.model();
  const ParamStore before = m.params();
  const std::vector<ClassId> one{4};
  AdamState adam;
  EXPECT_EQ(meta_adapt_step(toy.batch_of(one), one, m, adam, 0.01), 0.0);
  EXPECT_TRUE(same_values(before, m.params(), [](const std::string&) { return true; }));
}

TEST(MetaTrain, AblatedGroupsStayFixed) {
  const Toy toy;
  const std::vector<ClassId> ids{0, 1, 2};
  {
    Model m = toy.model(Ablations::parse("ds"));
    const ParamStore before = m.params();
    AdamState adam;
    meta_train_step(toy.batch_of(ids), ids, m, adam, 0.01);
    EXPECT_TRUE(same_values(before, m.params(), [](const std::string& n) { return n.rfind("sig.", 0) == 0; }));
    EXPECT_NE(before.value(names::kMlpW1), m.params().value(names::kMlpW1));
  }
  {
    Model m = toy.model(Ablations::parse("mlp"));
    const ParamStore before = m.params();
    AdamState adam;
    meta_train_step(toy.batch_of(ids), ids, m, adam, 0.01);
    EXPECT_TRUE(same_values(before, m.params(), [](const std::string& n) { return n.rfind("mlp.", 0) == 0; }));
    EXPECT_NE(before.value(names::kSigF), m.params().value(names::kSigF));
  }
}

TEST(TrainConfigTest, PresetsAndEpisodeSizes) {
  const auto s = TrainConfig::snips();
  EXPECT_EQ(s.lr_train, 0.006);
  EXPECT_EQ(s.lr_adapt, 0.002);
  EXPECT_EQ(s.n_meta_seen, 4u);
  EXPECT_EQ(s.threshold, 0.6);
  EXPECT_EQ(s.meta_seen_count(5), 4u);
  const auto m = TrainConfig::smp();
  EXPECT_EQ(m.lr_train, 0.008);
  EXPECT_EQ(m.lr_adapt, 0.004);
  EXPECT_EQ(m.n_meta_seen, 21u);
  EXPECT_EQ(m.threshold, 0.8);
  EXPECT_EQ(m.meta_seen_count(24), 21u);

  TrainConfig automatic;
  EXPECT_EQ(automatic.meta_seen_count(6), 5u);
  EXPECT_EQ(automatic.meta_seen_count(24), 21u);
  EXPECT_THROW(automatic.meta_seen_count(1), DataError);
  TrainConfig bad;
  bad.n_meta_seen = 6;
  EXPECT_THROW(bad.meta_seen_count(6), UsageError);
  bad = {};
  bad.threshold = 1.5;
  EXPECT_THROW(bad.validate(), UsageError);
}

TEST(Train, SameSeedSameParameters) {
  const Toy toy;
  TrainConfig cfg;
  cfg.episodes = 3;
  cfg.holdout = 0.25;
  cfg.seed = 5;
  Model a = toy.model({}, 5);
  Model b = toy.model({}, 5);
  const auto la = train(a, toy.seen_utts, cfg);
  const auto lb = train(b, toy.seen_utts, cfg);
  EXPECT_EQ(la.train_loss, lb.train_loss);
  for (const auto& e : a.params().entries()) EXPECT_EQ(e.value, b.params().value(e.name)) << e.name;
  EXPECT_EQ(la.episodes_run, 3u);
  EXPECT_EQ(la.validation_loss.size(), 3u);
}

TEST(Train, EarlyStoppingRestoresBestEpisode) {
  const Toy toy;
  TrainConfig cfg;
  cfg.episodes = 12;
  cfg.holdout = 0.25;
  cfg.patience = 2;
  cfg.lr_train = 0.5;  // large enough to overshoot
  Model m = toy.model();
  const auto log = train(m, toy.seen_utts, cfg);
  ASSERT_FALSE(log.validation_loss.empty());
  const auto best = std::min_element(log.validation_loss.begin(), log.validation_loss.end());
  EXPECT_EQ(log.best_episode, static_cast<std::size_t>(best - log.validation_loss.begin()) + 1);
  EXPECT_LE(log.episodes_run - log.best_episode, cfg.patience);
}

TEST(Train, ConfigMustMatchModelAblations) {
  const Toy toy;
  Model m = toy.model();
  TrainConfig cfg;
  cfg.ablations = Ablations::parse("gw");
  EXPECT_THROW(train(m, toy.seen_utts, cfg), UsageError);
}
