#pragma once

#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "zsic/ablations.hpp"
#include "zsic/data/corpus.hpp"
#include "zsic/errors.hpp"
#include "zsic/harness/metrics.hpp"

namespace zsic {

struct ClassReport {
  std::string label;
  std::size_t support = 0;
  double recall = 0.0;
  double f1 = 0.0;
  friend bool operator==(const ClassReport&, const ClassReport&) = default;
};

struct PartitionReport {
  std::string name;  // "seen", "unseen" or "overall"
  std::size_t support = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::vector<ClassReport> classes;
  friend bool operator==(const PartitionReport&, const PartitionReport&) = default;

  const ClassReport* find(std::string_view label) const {
    for (const auto& c : classes)
      if (c.label == label) return &c;
    return nullptr;
  }
};

struct MetricsReport {
  std::string task;    // "standard" or "generalized"
  std::string method;  // e.g. "Ours (w/o gw)"
  std::vector<PartitionReport> partitions;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;

  const PartitionReport* find(std::string_view name) const {
    for (const auto& p : partitions)
      if (p.name == name) return &p;
    return nullptr;
  }
};

inline constexpr std::string_view kF1Definition = "support-weighted mean of per-class F1";

inline PartitionReport make_partition(std::string name, const ClassificationMetrics& m,
                                      const std::vector<IntentLabel>& labels) {
  PartitionReport p;
  p.name = std::move(name);
  p.support = m.total;
  p.accuracy = m.accuracy;
  p.f1 = m.f1;
  for (const auto& c : m.classes) p.classes.push_back({labels.at(c.id).name, c.support, c.recall, c.f1});
  return p;
}

inline std::string method_name(const Ablations& a) {
  if (!a.any()) return "Ours";
  std::string s = "Ours (w/o ";
  bool first = true;
  auto add = [&](bool on, const char* what) {
    if (!on) return;
    if (!first) s += ", ";
    s += what;
    first = false;
  };
  add(a.no_gw, "gw");
  add(a.no_cw, "cw");
  add(a.no_ds, "DS attention");
  add(a.no_mlp, "MLP attention");
  add(a.no_meta_adapt, "meta-adapting");
  return s + ")";
}

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

inline std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// CSV with columns partition, metric, value, support. Two comment lines carry
/// the task, method and F1 definition.
inline std::string to_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << "# task=" << r.task << "\n# method=" << r.method << "\n# f1=" << kF1Definition << "\n";
  os << "partition,metric,value,support\n";
  for (const auto& p : r.partitions) {
    os << detail::csv_field(p.name) << ",accuracy," << detail::exact(p.accuracy) << ',' << p.support << '\n';
    os << detail::csv_field(p.name) << ",f1," << detail::exact(p.f1) << ',' << p.support << '\n';
    for (const auto& c : p.classes) {
      os << detail::csv_field(p.name) << ',' << detail::csv_field("recall:" + c.label) << ','
         << detail::exact(c.recall) << ',' << c.support << '\n';
      os << detail::csv_field(p.name) << ',' << detail::csv_field("f1:" + c.label) << ',' << detail::exact(c.f1)
         << ',' << c.support << '\n';
    }
  }
  return os.str();
}

inline MetricsReport parse_csv(std::string_view text) {
  MetricsReport r;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  auto partition = [&](const std::string& name) -> PartitionReport& {
    for (auto& p : r.partitions)
      if (p.name == name) return p;
    r.partitions.push_back({});
    r.partitions.back().name = name;
    return r.partitions.back();
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      if (key == "task") r.task = line.substr(eq + 1);
      else if (key == "method") r.method = line.substr(eq + 1);
      continue;
    }
    if (!saw_header) {
      if (line != "partition,metric,value,support") throw ParseError("report", lineno, "unexpected column header");
      saw_header = true;
      continue;
    }
    const auto f = detail::csv_split(line);
    if (f.size() != 4) throw ParseError("report", lineno, "expected 4 fields");
    double value = 0.0;
    std::size_t support = 0;
    try {
      value = std::stod(f[2]);
      support = static_cast<std::size_t>(std::stoull(f[3]));
    } catch (const std::exception&) {
      throw ParseError("report", lineno, "bad number");
    }
    PartitionReport& p = partition(f[0]);
    auto class_row = [&](const std::string& label) -> ClassReport& {
      for (auto& c : p.classes)
        if (c.label == label) return c;
      p.classes.push_back({label, support, 0.0, 0.0});
      return p.classes.back();
    };
    if (f[1] == "accuracy") {
      p.accuracy = value;
      p.support = support;
    } else if (f[1] == "f1") {
      p.f1 = value;
      p.support = support;
    } else if (f[1].rfind("recall:", 0) == 0) {
      class_row(f[1].substr(7)).recall = value;
    } else if (f[1].rfind("f1:", 0) == 0) {
      class_row(f[1].substr(3)).f1 = value;
    } else {
      throw ParseError("report", lineno, "unknown metric '" + f[1] + "'");
    }
  }
  return r;
}

/// Human-readable table with Seen / Unseen / Overall column pairs.
inline std::string to_table(const MetricsReport& r) {
  std::ostringstream os;
  os << "Task: " << r.task << "  (F1: " << kF1Definition << ")\n";
  const std::size_t width = std::max<std::size_t>(r.method.size(), 6) + 2;
  os << std::left << std::setw(static_cast<int>(width)) << "Method";
  for (const auto& p : r.partitions) os << "| " << std::setw(16) << p.name;
  os << '\n' << std::setw(static_cast<int>(width)) << "";
  for (std::size_t i = 0; i < r.partitions.size(); ++i) os << "| " << std::setw(8) << "Acc" << std::setw(8) << "F1";
  os << '\n' << std::setw(static_cast<int>(width)) << r.method << std::fixed << std::setprecision(4);
  for (const auto& p : r.partitions) os << "| " << std::setw(8) << p.accuracy << std::setw(8) << p.f1;
  os << "\n\nPer-class recall / F1 (support):\n";
  for (const auto& p : r.partitions) {
    os << "  [" << p.name << "]\n";
    for (const auto& c : p.classes)
      os << "    " << std::setw(24) << c.label << ' ' << c.recall << " / " << c.f1 << "  (" << c.support << ")\n";
  }
  return os.str();
}

}  // namespace zsic
