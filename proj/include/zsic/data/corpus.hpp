#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "zsic/errors.hpp"

namespace zsic {

using ClassId = std::size_t;
using Token = std::string;

/// Lowercases ASCII letters and splits on whitespace. Non-ASCII bytes pass
/// through untouched, so pre-segmented UTF-8 text keeps its tokens.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  Token cur;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80 && std::isspace(u)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct Utterance {
  std::vector<Token> tokens;
  ClassId label = 0;
  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct IntentLabel {
  ClassId id = 0;
  std::string name;
  std::vector<Token> description;
  bool seen = true;
  friend bool operator==(const IntentLabel&, const IntentLabel&) = default;
};

struct Corpus {
  std::vector<Utterance> utterances;
  std::vector<IntentLabel> labels;  // labels[i].id == i
  std::vector<ClassId> seen_ids;
  std::vector<ClassId> unseen_ids;

  friend bool operator==(const Corpus&, const Corpus&) = default;

  std::size_t class_count() const noexcept { return labels.size(); }

  bool is_seen(ClassId id) const { return std::binary_search(seen_ids.begin(), seen_ids.end(), id); }
  bool is_unseen(ClassId id) const { return std::binary_search(unseen_ids.begin(), unseen_ids.end(), id); }

  ClassId label_id(std::string_view name) const {
    for (const auto& l : labels)
      if (l.name == name) return l.id;
    throw ReferenceError("unknown label '" + std::string(name) + "'");
  }

  /// Rebuilds seen_ids / unseen_ids from the label flags and checks invariants.
  void finalize() {
    seen_ids.clear();
    unseen_ids.clear();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].id != i) throw UsageError("Corpus: label ids must be dense and ordered");
      if (labels[i].description.empty()) throw UsageError("Corpus: label '" + labels[i].name + "' has no description");
      (labels[i].seen ? seen_ids : unseen_ids).push_back(i);
    }
    for (const auto& u : utterances) {
      if (u.tokens.empty()) throw UsageError("Corpus: empty utterance");
      if (u.label >= labels.size()) throw ReferenceError("Corpus: utterance label out of range");
    }
  }
};

enum class CorpusFormat { Tsv };

struct CorpusLoad {
  Corpus corpus;
  std::size_t rejected_empty = 0;  // records whose text tokenized to nothing
};

/// Labels file: "name<TAB>seen|unseen[<TAB>description]" per line. A missing
/// or blank description falls back to the label name.
inline std::vector<IntentLabel> parse_labels(std::istream& in, const std::string& source = "labels") {
  std::vector<IntentLabel> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    if (t1 == std::string::npos) throw ParseError(source, lineno, "expected 'label<TAB>seen|unseen<TAB>description'");
    const auto t2 = line.find('\t', t1 + 1);
    IntentLabel l;
    l.name = line.substr(0, t1);
    const std::string flag = line.substr(t1 + 1, t2 == std::string::npos ? std::string::npos : t2 - t1 - 1);
    if (flag == "seen") l.seen = true;
    else if (flag == "unseen") l.seen = false;
    else throw ParseError(source, lineno, "seen flag must be 'seen' or 'unseen', got '" + flag + "'");
    if (l.name.empty()) throw ParseError(source, lineno, "empty label name");
    if (t2 != std::string::npos) l.description = tokenize(std::string_view(line).substr(t2 + 1));
    if (l.description.empty()) l.description = tokenize(l.name);
    for (const auto& other : labels)
      if (other.name == l.name) throw ParseError(source, lineno, "duplicate label '" + l.name + "'");
    l.id = labels.size();
    labels.push_back(std::move(l));
  }
  return labels;
}

/// Corpus file: "text<TAB>label" per line.
inline CorpusLoad parse_corpus(std::istream& in, std::vector<IntentLabel> labels, const std::string& source = "corpus") {
  CorpusLoad out;
  out.corpus.labels = std::move(labels);
  std::map<std::string, ClassId, std::less<>> by_name;
  for (const auto& l : out.corpus.labels) by_name.emplace(l.name, l.id);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw ParseError(source, lineno, "missing tab between text and label");
    const std::string label = line.substr(tab + 1);
    auto it = by_name.find(label);
    if (it == by_name.end())
      throw ReferenceError(source + ":" + std::to_string(lineno) + ": unknown label '" + label + "'");
    Utterance u;
    u.tokens = tokenize(std::string_view(line).substr(0, tab));
    u.label = it->second;
    if (u.tokens.empty()) {
      ++out.rejected_empty;
      continue;
    }
    out.corpus.utterances.push_back(std::move(u));
  }
  out.corpus.finalize();
  return out;
}

inline CorpusLoad load_corpus(const std::string& corpus_path, const std::string& labels_path,
                              CorpusFormat format = CorpusFormat::Tsv) {
  if (format != CorpusFormat::Tsv) throw UsageError("load_corpus: unsupported format");
  std::ifstream lf(labels_path);
  if (!lf) throw DataError("cannot open labels file '" + labels_path + "'");
  auto labels = parse_labels(lf, labels_path);
  std::ifstream cf(corpus_path);
  if (!cf) throw DataError("cannot open corpus file '" + corpus_path + "'");
  return parse_corpus(cf, std::move(labels), corpus_path);
}

inline std::string join_tokens(const std::vector<Token>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

inline void write_labels(std::ostream& os, const Corpus& c) {
  for (const auto& l : c.labels) os << l.name << '\t' << (l.seen ? "seen" : "unseen") << '\t' << join_tokens(l.description) << '\n';
}

inline void write_corpus(std::ostream& os, const Corpus& c) {
  for (const auto& u : c.utterances) os << join_tokens(u.tokens) << '\t' << c.labels[u.label].name << '\n';
}

}  // namespace zsic
