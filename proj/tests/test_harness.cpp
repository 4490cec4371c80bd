#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "zsic/zsic.hpp"

using namespace zsic;

namespace {

ExperimentConfig small_config(Task task) {
  ExperimentConfig cfg;
  cfg.task = task;
  cfg.synth.n_classes = 5;
  cfg.synth.n_seen = 4;
  cfg.synth.samples_per_class = 10;
  cfg.synth.dim = 8;
  cfg.dims.d_h = 4;
  cfg.dims.d_b = 2;
  cfg.dims.d_a = 4;
  cfg.dims.d_s = 6;
  cfg.train.episodes = 3;
  return cfg;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("zsic_harness_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Metrics, HandExamples) {
  const std::vector<ClassId> classes{0, 1};
  const std::vector<ClassId> gold{0, 0, 1, 1};
  const std::vector<ClassId> pred{0, 1, 0, 1};
  const auto m = classification_metrics(pred, gold, classes);
  EXPECT_EQ(m.accuracy, 0.5);
  EXPECT_NEAR(m.f1, 0.5, 1e-15);

  const std::vector<ClassId> gold3{0, 1, 2};
  const std::vector<ClassId> all_zero{0, 0, 0};
  const std::vector<ClassId> classes3{0, 1, 2};
  const auto z = classification_metrics(all_zero, gold3, classes3);
  EXPECT_NEAR(z.accuracy, 1.0 / 3.0, 1e-15);
  // Class 0: precision 1/3, recall 1, F1 0.5; others 0.
  EXPECT_NEAR(z.f1, 0.5 / 3.0, 1e-15);
}

TEST(Metrics, PermutationInvariantAndAccuracyIsCorrectOverTotal) {
  const std::vector<ClassId> classes{0, 1, 2};
  std::vector<ClassId> gold{0, 1, 2, 2, 1, 0, 0, 2, 1, 1};
  std::vector<ClassId> pred{0, 2, 2, 1, 1, 0, 1, 2, 1, 0};
  const auto a = classification_metrics(pred, gold, classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += gold[i] == pred[i];
  EXPECT_EQ(a.accuracy, static_cast<double>(correct) / static_cast<double>(gold.size()));
  std::reverse(gold.begin(), gold.end());
  std::reverse(pred.begin(), pred.end());
  const auto b = classification_metrics(pred, gold, classes);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_NEAR(a.f1, b.f1, 1e-15);
  const std::vector<ClassId> short_pred{0};
  EXPECT_THROW(classification_metrics(short_pred, gold, classes), UsageError);
}

TEST(Report, CsvRoundTripIsExact) {
  MetricsReport r;
  r.task = "generalized";
  r.method = "Ours (w/o gw, cw)";
  r.partitions.push_back({"seen", 10, 0.1 + 0.2, 1.0 / 3.0, {{"a,b \"q\"", 10, 0.7, 2.0 / 7.0}}});
  r.partitions.push_back({"unseen", 4, 0.25, 0.125, {{"c", 4, 0.25, 0.125}}});
  const std::string csv = to_csv(r);
  EXPECT_EQ(parse_csv(csv), r);
  EXPECT_NE(csv.find(kF1Definition), std::string::npos);
  EXPECT_NE(to_table(r).find("unseen"), std::string::npos);
}

TEST(Report, MethodNames) {
  EXPECT_EQ(method_name({}), "Ours");
  EXPECT_EQ(method_name(Ablations::parse("gw")), "Ours (w/o gw)");
  EXPECT_EQ(method_name(Ablations::parse("meta-adapt")), "Ours (w/o meta-adapting)");
  EXPECT_EQ(method_name(Ablations::parse("mlp")), "Ours (w/o MLP attention)");
}

TEST(Synth, DeterministicPerSeed) {
  SynthConfig sc;
  const auto a = synth_corpus(sc);
  const auto b = synth_corpus(sc);
  ASSERT_EQ(a.corpus.utterances.size(), b.corpus.utterances.size());
  for (std::size_t i = 0; i < a.corpus.utterances.size(); ++i) {
    EXPECT_EQ(a.corpus.utterances[i].tokens, b.corpus.utterances[i].tokens);
    EXPECT_EQ(a.corpus.utterances[i].label, b.corpus.utterances[i].label);
  }
  sc.seed = 1;
  const auto c = synth_corpus(sc);
  EXPECT_NE(a.class_directions, c.class_directions);
  EXPECT_EQ(a.corpus.utterances.size(), sc.n_classes * sc.samples_per_class);
  EXPECT_EQ(a.corpus.seen_ids.size(), sc.n_seen);
}

TEST(Synth, OrthogonalDirections) {
  SynthConfig sc;
  sc.design = VocabDesign::Orthogonal;
  sc.n_classes = 8;
  sc.dim = 8;
  const auto d = synth_corpus(sc);
  for (std::size_t i = 0; i < d.class_directions.size(); ++i)
    for (std::size_t j = 0; j < d.class_directions.size(); ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < sc.dim; ++k) dot += d.class_directions[i][k] * d.class_directions[j][k];
      EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-12);
    }
  sc.n_classes = 9;
  EXPECT_THROW(synth_corpus(sc), UsageError);
}

TEST(Synth, CompositionalDirectionsAreUnitPairs) {
  const auto d = synth_corpus({});
  for (const auto& v : d.class_directions) {
    double n = 0.0;
    for (double x : v) n += x * x;
    EXPECT_NEAR(n, 1.0, 1e-12);
  }
  double dot = 0.0;
  for (std::size_t k = 0; k < d.class_directions[0].size(); ++k)
    dot += d.class_directions[0][k] * d.class_directions[1][k];
  EXPECT_NEAR(dot, 0.5, 1e-12);  // share one attribute
}

TEST(Config, ParsesKeyValues) {
  std::istringstream is("# comment\n task = generalized\nseed=7\n\nablate = gw,cw\n");
  ExperimentConfig cfg;
  apply_settings(cfg, parse_key_values(is));
  EXPECT_EQ(cfg.task, Task::Generalized);
  EXPECT_EQ(cfg.train.seed, 7u);
  EXPECT_TRUE(cfg.train.ablations.no_gw && cfg.train.ablations.no_cw);

  std::istringstream bad("no equals here\n");
  EXPECT_THROW(parse_key_values(bad), ParseError);
  EXPECT_THROW(apply_setting(cfg, "learning_rate", "0.1"), UsageError);
  EXPECT_THROW(apply_setting(cfg, "seed", "seven"), UsageError);
  EXPECT_THROW(load_config_file("/nonexistent/zsic.cfg"), UsageError);
}

TEST(Config, PresetKeepsSeedAndAblations) {
  ExperimentConfig cfg;
  cfg.train.seed = 3;
  cfg.train.ablations = Ablations::parse("cw");
  cfg.train.lr_train = 0.5;
  apply_settings(cfg, {{"preset", "smp"}});
  EXPECT_EQ(cfg.train.lr_train, 0.008);
  EXPECT_EQ(cfg.train.threshold, 0.8);
  EXPECT_EQ(cfg.train.seed, 3u);
  EXPECT_TRUE(cfg.train.ablations.no_cw);
  EXPECT_THROW(apply_settings(cfg, {{"preset", "atis"}}), UsageError);
}

TEST(Config, KeyValueRoundTrip) {
  ExperimentConfig cfg = small_config(Task::Generalized);
  cfg.train.ablations = Ablations::parse("meta-adapt");
  cfg.train.lr_adapt = 1.0 / 3.0;
  cfg.train.adapt_candidates = AdaptCandidates::MetaUnseen;
  cfg.synth.design = VocabDesign::Orthogonal;
  std::istringstream is(to_key_values(cfg));
  ExperimentConfig back;
  apply_settings(back, parse_key_values(is));
  EXPECT_EQ(to_key_values(back), to_key_values(cfg));
  EXPECT_EQ(back.train.lr_adapt, cfg.train.lr_adapt);
  EXPECT_EQ(back.train.ablations, cfg.train.ablations);
  EXPECT_EQ(back.synth.design, VocabDesign::Orthogonal);
}

TEST(Experiment, StandardTaskReportsUnseenOnly) {
  const auto res = run_experiment(small_config(Task::Standard));
  EXPECT_EQ(res.report.task, "standard");
  ASSERT_EQ(res.report.partitions.size(), 1u);
  const auto& p = res.report.partitions[0];
  EXPECT_EQ(p.name, "unseen");
  ASSERT_EQ(p.classes.size(), 1u);
  EXPECT_EQ(p.accuracy, 1.0);  // a single unseen class
  EXPECT_EQ(p.support, 10u);
}

TEST(Experiment, GeneralizedPartitionsAndCheckpoint) {
  ExperimentConfig cfg = small_config(Task::Generalized);
  cfg.train.ablations = Ablations::parse("gw");
  const auto dir = scratch("gen");
  cfg.out_dir = dir.string();
  const auto res = run_experiment(cfg);
  const auto* seen = res.report.find("seen");
  const auto* unseen = res.report.find("unseen");
  const auto* overall = res.report.find("overall");
  ASSERT_TRUE(seen && unseen && overall);
  EXPECT_EQ(seen->support + unseen->support, overall->support);
  EXPECT_EQ(unseen->support, 10u);
  EXPECT_EQ(seen->support, 4u * 3u);
  for (const auto* p : {seen, unseen, overall}) {
    std::size_t s = 0;
    for (const auto& c : p->classes) s += c.support;
    EXPECT_EQ(s, p->support) << p->name;
  }
  EXPECT_EQ(res.report.method, "Ours (w/o gw)");

  const auto ck = Checkpoint::load((dir / "model.ckpt").string());
  EXPECT_NE(ck.header.find("ablate = gw"), std::string::npos);
  EXPECT_EQ(config_from_checkpoint(ck).train.ablations, cfg.train.ablations);
  EXPECT_EQ(evaluate_checkpoint((dir / "model.ckpt").string()), res.report);

  std::ifstream csv(dir / "report.csv", std::ios::binary);
  std::stringstream text;
  text << csv.rdbuf();
  EXPECT_EQ(parse_csv(text.str()), res.report);
  std::filesystem::remove_all(dir);
}

TEST(Experiment, RepeatRunsAreIdentical) {
  const auto cfg = small_config(Task::Generalized);
  EXPECT_EQ(to_csv(run_experiment(cfg).report), to_csv(run_experiment(cfg).report));
}

TEST(Gradcheck, MicroModelPasses) {
  const auto r = gradcheck_micro(0);
  EXPECT_TRUE(r.passed(1e-4)) << "worst " << r.worst();
  EXPECT_GT(r.entries(), 0u);
  EXPECT_LE(20 * r.skipped(), r.entries());
}
