#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "zsic/data/corpus.hpp"
#include "zsic/data/embeddings.hpp"
#include "zsic/data/split.hpp"
#include "zsic/data/unigram.hpp"
#include "zsic/errors.hpp"
#include "zsic/harness/config.hpp"
#include "zsic/harness/metrics.hpp"
#include "zsic/harness/report.hpp"
#include "zsic/harness/synth.hpp"
#include "zsic/metalearn/model.hpp"
#include "zsic/metalearn/predict.hpp"
#include "zsic/metalearn/trainer.hpp"
#include "zsic/numerics/checkpoint.hpp"

namespace zsic {

struct PreparedData {
  Corpus corpus;
  DataSplit split;
  std::shared_ptr<const EmbeddingTable> table;
  std::shared_ptr<const UnigramStats> stats;
};

/// Loads or synthesizes the corpus, splits it and resolves embeddings.
/// Tokens reachable from training data or label descriptions that the
/// embedding file lacks get seeded random vectors; test-only misses get zeros.
inline PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  PreparedData d;
  EmbeddingTable table;
  if (cfg.synthetic()) {
    SynthData s = synth_corpus(cfg.synth);
    d.corpus = std::move(s.corpus);
    table = std::move(s.table);
  } else {
    d.corpus = load_corpus(cfg.corpus_path, cfg.labels_path, CorpusFormat::Tsv).corpus;
  }
  d.split = cfg.task == Task::Standard ? split_standard(d.corpus)
                                       : split_generalized(d.corpus, cfg.split_ratio, cfg.train.seed);
  if (!cfg.synthetic()) {
    table = load_embeddings(cfg.embeddings_path, build_vocab(d.split.train, d.corpus.labels), OovPolicy::SeededUniform,
                            cfg.train.seed);
    table.merge(load_embeddings(cfg.embeddings_path, build_vocab(d.split.test), OovPolicy::Zero, cfg.train.seed));
  }
  d.table = std::make_shared<const EmbeddingTable>(std::move(table));
  d.stats = std::make_shared<const UnigramStats>(UnigramStats::from(d.split.train));
  return d;
}

inline Model build_model(const ExperimentConfig& cfg, const PreparedData& d) {
  return Model::create(d.corpus.labels, d.table, d.stats, cfg.dims, cfg.train.ablations, cfg.train.seed, cfg.ridge_reg);
}

/// Predictions for the test side of the split under the task's decision rule.
inline std::vector<ClassId> predict_split(const Model& model, const PreparedData& d, double threshold) {
  std::vector<ClassId> out;
  out.reserve(d.split.test.size());
  if (d.split.task == Task::Standard) {
    const PrototypeSet unseen = model.prototypes(d.corpus.unseen_ids);
    for (const auto& u : d.split.test) out.push_back(predict_standard(model.encode(u.tokens), unseen));
  } else {
    const PrototypeSet all = model.prototypes(d.split.candidate_ids);
    for (const auto& u : d.split.test)
      out.push_back(predict_generalized(model.encode(u.tokens), all, d.corpus.unseen_ids, threshold));
  }
  return out;
}

inline MetricsReport evaluate(const Model& model, const PreparedData& d, double threshold) {
  const auto pred = predict_split(model, d, threshold);
  std::vector<ClassId> gold;
  gold.reserve(d.split.test.size());
  for (const auto& u : d.split.test) gold.push_back(u.label);

  MetricsReport r;
  r.task = to_string(d.split.task);
  r.method = method_name(model.ablations());
  const auto& labels = d.corpus.labels;
  if (d.split.task == Task::Standard) {
    r.partitions.push_back(make_partition("unseen", classification_metrics(pred, gold, d.corpus.unseen_ids), labels));
    return r;
  }
  auto part = [&](const char* name, const std::vector<ClassId>& classes) {
    std::vector<ClassId> p;
    std::vector<ClassId> g;
    for (std::size_t i = 0; i < gold.size(); ++i)
      if (std::binary_search(classes.begin(), classes.end(), gold[i])) {
        p.push_back(pred[i]);
        g.push_back(gold[i]);
      }
    if (g.empty()) throw DataError(std::string("evaluation: no test utterances in the ") + name + " partition");
    r.partitions.push_back(make_partition(name, classification_metrics(p, g, classes), labels));
  };
  part("seen", d.corpus.seen_ids);
  part("unseen", d.corpus.unseen_ids);
  part("overall", d.split.candidate_ids);
  return r;
}

struct ExperimentResult {
  MetricsReport report;
  TrainLog log;
  Model model;
};

inline std::string checkpoint_header(const ExperimentConfig& cfg) { return to_key_values(cfg); }

inline void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res) {
  if (cfg.out_dir.empty()) return;
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path out(cfg.out_dir);
  Checkpoint ck = Checkpoint::from_store(res.model.params(), checkpoint_header(cfg));
  ck.tensors.push_back({"ridge.W", res.model.ridge().W});
  ck.save((out / "model.ckpt").string());
  auto write_text = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw DataError("cannot write '" + p.string() + "'");
    os << text;
  };
  write_text(out / "report.csv", to_csv(res.report));
  write_text(out / "report.txt", to_table(res.report));
}

/// Split, train, evaluate and, with an output directory, write the
/// checkpoint and both report files.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const PreparedData d = prepare_data(cfg);
  Model model = build_model(cfg, d);
  TrainLog log = train(model, d.split.train, cfg.train);
  MetricsReport report = evaluate(model, d, cfg.train.threshold);
  ExperimentResult res{std::move(report), std::move(log), std::move(model)};
  write_outputs(cfg, res);
  return res;
}

/// Config recorded in a checkpoint header.
inline ExperimentConfig config_from_checkpoint(const Checkpoint& ck) {
  std::istringstream is(ck.header);
  ExperimentConfig cfg;
  apply_settings(cfg, parse_key_values(is, "checkpoint header"));
  return cfg;
}

/// Rebuilds the data and model from a checkpoint and evaluates it. A
/// threshold below zero keeps the recorded one.
inline MetricsReport evaluate_checkpoint(const std::string& path, double threshold = -1.0) {
  const Checkpoint ck = Checkpoint::load(path);
  ExperimentConfig cfg = config_from_checkpoint(ck);
  if (threshold >= 0.0) cfg.train.threshold = threshold;
  const PreparedData d = prepare_data(cfg);
  Model model = build_model(cfg, d);
  ck.load_into(model.params());
  return evaluate(model, d, cfg.train.threshold);
}

}  // namespace zsic
