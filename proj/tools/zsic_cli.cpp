// Command-line front end: train, eval, experiment, synth, gradcheck.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "zsic/zsic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitGradcheck = 3;

struct Overrides {
  std::string config;
  std::optional<std::string> task;
  std::optional<std::string> ablate;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::optional<std::string> out;
  std::optional<std::string> corpus;
  std::optional<std::string> labels;
  std::optional<std::string> embeddings;
  std::optional<std::size_t> episodes;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "flat key = value config file");
  cmd->add_option("--task", o.task, "standard | generalized");
  cmd->add_option("--ablate", o.ablate, "comma list of gw,cw,ds,mlp,meta-adapt");
  cmd->add_option("--seed", o.seed, "training seed");
  cmd->add_option("--threshold", o.threshold, "generalized-task threshold in [0, 1]");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--corpus", o.corpus, "utterance TSV (text<TAB>label)");
  cmd->add_option("--labels", o.labels, "label TSV (name<TAB>seen|unseen[<TAB>description])");
  cmd->add_option("--embeddings", o.embeddings, "word vectors in text format");
  cmd->add_option("--episodes", o.episodes, "maximum training episodes");
}

zsic::ExperimentConfig resolve(const Overrides& o) {
  zsic::ExperimentConfig cfg;
  if (!o.config.empty()) cfg = zsic::load_config_file(o.config);
  if (o.task) cfg.task = zsic::parse_task(*o.task);
  if (o.ablate) cfg.train.ablations = zsic::Ablations::parse(*o.ablate);
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.threshold) cfg.train.threshold = *o.threshold;
  if (o.out) cfg.out_dir = *o.out;
  if (o.corpus) cfg.corpus_path = *o.corpus;
  if (o.labels) cfg.labels_path = *o.labels;
  if (o.embeddings) cfg.embeddings_path = *o.embeddings;
  if (o.episodes) cfg.train.episodes = *o.episodes;
  cfg.validate();
  return cfg;
}

void print_log(const zsic::TrainLog& log) {
  std::cerr << "episodes run: " << log.episodes_run << ", best episode: " << log.best_episode << '\n';
}

int run_synth(const std::string& out_dir, const zsic::SynthConfig& sc) {
  const auto data = zsic::synth_corpus(sc);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out(out_dir);
  std::ofstream corpus(out / "corpus.tsv");
  std::ofstream labels(out / "labels.tsv");
  std::ofstream emb(out / "embeddings.txt");
  if (!corpus || !labels || !emb) throw zsic::DataError("cannot write into '" + out_dir + "'");
  zsic::write_corpus(corpus, data.corpus);
  zsic::write_labels(labels, data.corpus);
  data.table.write(emb);
  std::cout << "wrote " << data.corpus.utterances.size() << " utterances over " << data.corpus.labels.size()
            << " classes to " << out_dir << '\n';
  return kExitOk;
}

int run_gradcheck(std::uint64_t seed, double tolerance) {
  const auto res = zsic::gradcheck_micro(seed);
  for (const auto& g : res.groups) {
    std::printf("%-18s max rel err %.3e  entries %4zu  skipped %zu  %s\n", g.group.c_str(), g.max_rel_error,
                g.entries, g.skipped, g.max_rel_error < tolerance ? "ok" : "FAIL");
  }
  std::printf("worst %.3e (tolerance %.0e), %zu of %zu entries skipped at kinks\n", res.worst(), tolerance,
              res.skipped(), res.entries());
  return res.passed(tolerance) ? kExitOk : kExitGradcheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot intent classification with meta-learned prototypes"};
  app.require_subcommand(1);

  Overrides train_o, exp_o, eval_o;
  auto* train_cmd = app.add_subcommand("train", "train a model and write <out>/model.ckpt");
  add_common(train_cmd, train_o);
  auto* exp_cmd = app.add_subcommand("experiment", "train, evaluate and write checkpoint plus reports");
  add_common(exp_cmd, exp_o);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ckpt;
  eval_cmd->add_option("checkpoint", ckpt, "path to model.ckpt")->required();
  eval_cmd->add_option("--threshold", eval_o.threshold, "override the recorded threshold");
  eval_cmd->add_option("--out", eval_o.out, "write report.csv and report.txt here");

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus, labels and embeddings");
  zsic::SynthConfig sc;
  std::string synth_out = "synth";
  std::string design = zsic::to_string(sc.design);
  synth_cmd->add_option("--out", synth_out, "output directory");
  synth_cmd->add_option("--classes", sc.n_classes, "number of classes");
  synth_cmd->add_option("--seen", sc.n_seen, "number of seen classes");
  synth_cmd->add_option("--samples", sc.samples_per_class, "utterances per class");
  synth_cmd->add_option("--design", design, "compositional | orthogonal");
  synth_cmd->add_option("--seed", sc.seed, "generator seed");

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every parameter group");
  std::uint64_t grad_seed = 0;
  double grad_tol = 1e-4;
  grad_cmd->add_option("--seed", grad_seed, "micro-problem seed");
  grad_cmd->add_option("--tolerance", grad_tol, "maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train_cmd) {
      auto cfg = resolve(train_o);
      if (cfg.out_dir.empty()) throw zsic::UsageError("train: --out is required");
      const auto d = zsic::prepare_data(cfg);
      auto model = zsic::build_model(cfg, d);
      print_log(zsic::train(model, d.split.train, cfg.train));
      std::filesystem::create_directories(cfg.out_dir);
      auto ck = zsic::Checkpoint::from_store(model.params(), zsic::checkpoint_header(cfg));
      ck.tensors.push_back({"ridge.W", model.ridge().W});
      ck.save((std::filesystem::path(cfg.out_dir) / "model.ckpt").string());
      return kExitOk;
    }
    if (*exp_cmd) {
      const auto cfg = resolve(exp_o);
      const auto res = zsic::run_experiment(cfg);
      print_log(res.log);
      std::cout << zsic::to_table(res.report);
      return kExitOk;
    }
    if (*eval_cmd) {
      const auto report = zsic::evaluate_checkpoint(ckpt, eval_o.threshold.value_or(-1.0));
      if (eval_o.out) {
        std::filesystem::create_directories(*eval_o.out);
        std::ofstream(std::filesystem::path(*eval_o.out) / "report.csv", std::ios::binary) << zsic::to_csv(report);
        std::ofstream(std::filesystem::path(*eval_o.out) / "report.txt", std::ios::binary) << zsic::to_table(report);
      }
      std::cout << zsic::to_table(report);
      return kExitOk;
    }
    if (*synth_cmd) {
      sc.design = zsic::parse_vocab_design(design);
      return run_synth(synth_out, sc);
    }
    if (*grad_cmd) return run_gradcheck(grad_seed, grad_tol);
  } catch (const zsic::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const zsic::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const zsic::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
