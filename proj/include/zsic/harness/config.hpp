#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "zsic/data/split.hpp"
#include "zsic/errors.hpp"
#include "zsic/harness/synth.hpp"
#include "zsic/metalearn/model.hpp"
#include "zsic/metalearn/trainer.hpp"

namespace zsic {

/// Everything a run needs. With no corpus paths the synthetic corpus is used.
struct ExperimentConfig {
  Task task = Task::Standard;
  std::string corpus_path;
  std::string labels_path;
  std::string embeddings_path;
  SynthConfig synth;
  ModelDims dims;
  TrainConfig train;
  double split_ratio = 0.7;
  double ridge_reg = 1.0;
  std::string out_dir;

  bool synthetic() const { return corpus_path.empty() && labels_path.empty() && embeddings_path.empty(); }

  void validate() const {
    train.validate();
    if (!synthetic() && (corpus_path.empty() || labels_path.empty() || embeddings_path.empty()))
      throw UsageError("corpus, labels and embeddings must be given together");
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw UsageError("split ratio must lie in (0, 1)");
    if (!(ridge_reg > 0.0)) throw UsageError("ridge regularizer must be positive");
  }
};

inline std::string to_string(Task t) { return t == Task::Standard ? "standard" : "generalized"; }

inline Task parse_task(std::string_view s) {
  if (s == "standard") return Task::Standard;
  if (s == "generalized") return Task::Generalized;
  throw UsageError("unknown task '" + std::string(s) + "' (expected standard or generalized)");
}

/// Flat "key = value" lines; '#' starts a comment.
inline std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& source = "config") {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(source, lineno, "empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t used = 0;
      out = static_cast<T>(std::stod(v, &used));
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw UsageError("config key '" + key + "': not a number: '" + v + "'");
    }
  } else {
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw UsageError("config key '" + key + "': not an integer: '" + v + "'");
  }
  return out;
}

}  // namespace detail

/// Applies one key to the config; unknown keys are usage errors.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& v) {
  using detail::parse_number;
  if (key == "task") c.task = parse_task(v);
  else if (key == "corpus") c.corpus_path = v;
  else if (key == "labels") c.labels_path = v;
  else if (key == "embeddings") c.embeddings_path = v;
  else if (key == "out") c.out_dir = v;
  else if (key == "seed") c.train.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "threshold") c.train.threshold = parse_number<double>(key, v);
  else if (key == "ablate") c.train.ablations = Ablations::parse(v);
  else if (key == "episodes") c.train.episodes = parse_number<std::size_t>(key, v);
  else if (key == "n_meta_seen") c.train.n_meta_seen = parse_number<std::size_t>(key, v);
  else if (key == "lr_train") c.train.lr_train = parse_number<double>(key, v);
  else if (key == "lr_adapt") c.train.lr_adapt = parse_number<double>(key, v);
  else if (key == "batch_size") c.train.batch_size = parse_number<std::size_t>(key, v);
  else if (key == "holdout") c.train.holdout = parse_number<double>(key, v);
  else if (key == "adapt_candidates") c.train.adapt_candidates = parse_adapt_candidates(v);
  else if (key == "patience") c.train.patience = parse_number<std::size_t>(key, v);
  else if (key == "d_h") c.dims.d_h = parse_number<std::size_t>(key, v);
  else if (key == "d_b") c.dims.d_b = parse_number<std::size_t>(key, v);
  else if (key == "d_a") c.dims.d_a = parse_number<std::size_t>(key, v);
  else if (key == "d_s") c.dims.d_s = parse_number<std::size_t>(key, v);
  else if (key == "split_ratio") c.split_ratio = parse_number<double>(key, v);
  else if (key == "ridge_reg") c.ridge_reg = parse_number<double>(key, v);
  else if (key == "synth_classes") c.synth.n_classes = parse_number<std::size_t>(key, v);
  else if (key == "synth_seen") c.synth.n_seen = parse_number<std::size_t>(key, v);
  else if (key == "synth_samples") c.synth.samples_per_class = parse_number<std::size_t>(key, v);
  else if (key == "synth_design") c.synth.design = parse_vocab_design(v);
  else if (key == "synth_seed") c.synth.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "synth_dim") c.synth.dim = parse_number<std::size_t>(key, v);
  else throw UsageError("unknown config key '" + key + "'");
}

/// "preset = snips|smp" resets the training config first; other keys then
/// override it regardless of their order in the file.
inline void apply_settings(ExperimentConfig& c, const std::map<std::string, std::string>& kv) {
  if (auto it = kv.find("preset"); it != kv.end()) {
    const Ablations keep = c.train.ablations;
    const std::uint64_t seed = c.train.seed;
    if (it->second == "snips") c.train = TrainConfig::snips();
    else if (it->second == "smp") c.train = TrainConfig::smp();
    else throw UsageError("unknown preset '" + it->second + "' (expected snips or smp)");
    c.train.ablations = keep;
    c.train.seed = seed;
  }
  for (const auto& [k, v] : kv)
    if (k != "preset") apply_setting(c, k, v);
}

inline ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  apply_settings(base, parse_key_values(in, path));
  return base;
}

/// Key-value echo of every setting; feeding it back through apply_settings
/// reproduces the config.
inline std::string to_key_values(const ExperimentConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "task = " << to_string(c.task) << '\n';
  if (!c.synthetic()) {
    os << "corpus = " << c.corpus_path << '\n';
    os << "labels = " << c.labels_path << '\n';
    os << "embeddings = " << c.embeddings_path << '\n';
  } else {
    os << "synth_classes = " << c.synth.n_classes << '\n';
    os << "synth_seen = " << c.synth.n_seen << '\n';
    os << "synth_samples = " << c.synth.samples_per_class << '\n';
    os << "synth_design = " << to_string(c.synth.design) << '\n';
    os << "synth_seed = " << c.synth.seed << '\n';
    os << "synth_dim = " << c.synth.dim << '\n';
  }
  os << "seed = " << c.train.seed << '\n';
  os << "threshold = " << c.train.threshold << '\n';
  os << "ablate = " << c.train.ablations.to_string() << '\n';
  os << "episodes = " << c.train.episodes << '\n';
  os << "n_meta_seen = " << c.train.n_meta_seen << '\n';
  os << "lr_train = " << c.train.lr_train << '\n';
  os << "lr_adapt = " << c.train.lr_adapt << '\n';
  os << "batch_size = " << c.train.batch_size << '\n';
  os << "holdout = " << c.train.holdout << '\n';
  os << "patience = " << c.train.patience << '\n';
  os << "adapt_candidates = " << to_string(c.train.adapt_candidates) << '\n';
  os << "d_h = " << c.dims.d_h << '\n';
  os << "d_b = " << c.dims.d_b << '\n';
  os << "d_a = " << c.dims.d_a << '\n';
  os << "d_s = " << c.dims.d_s << '\n';
  os << "split_ratio = " << c.split_ratio << '\n';
  os << "ridge_reg = " << c.ridge_reg << '\n';
  return os.str();
}

}  // namespace zsic
