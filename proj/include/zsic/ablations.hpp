#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "zsic/errors.hpp"

namespace zsic {

/// Components switched off for ablation runs. All false is the full model.
struct Ablations {
  bool no_gw = false;           // general word importance s(w) replaced by 1
  bool no_cw = false;           // class-specific importance t(w) replaced by 1
  bool no_ds = false;           // mixture collapses to the MLP attention
  bool no_mlp = false;          // mixture collapses to the signature attention
  bool no_meta_adapt = false;   // episodes skip the projection fine-tuning phase

  friend bool operator==(const Ablations&, const Ablations&) = default;

  bool any() const { return no_gw || no_cw || no_ds || no_mlp || no_meta_adapt; }

  void validate() const {
    if (no_ds && no_mlp) throw UsageError("ablating both ds and mlp attention leaves no attention");
  }

  /// Comma list drawn from gw, cw, ds, mlp, meta-adapt. Empty string means none.
  static Ablations parse(std::string_view list) {
    Ablations a;
    std::size_t pos = 0;
    while (pos <= list.size()) {
      const auto comma = list.find(',', pos);
      std::string item(list.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      while (!item.empty() && item.front() == ' ') item.erase(item.begin());
      while (!item.empty() && item.back() == ' ') item.pop_back();
      if (item == "gw") a.no_gw = true;
      else if (item == "cw") a.no_cw = true;
      else if (item == "ds") a.no_ds = true;
      else if (item == "mlp") a.no_mlp = true;
      else if (item == "meta-adapt" || item == "meta_adapt") a.no_meta_adapt = true;
      else if (!item.empty() && item != "none") throw UsageError("unknown ablation '" + item + "'");
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    a.validate();
    return a;
  }

  std::string to_string() const {
    std::vector<std::string> parts;
    if (no_gw) parts.emplace_back("gw");
    if (no_cw) parts.emplace_back("cw");
    if (no_ds) parts.emplace_back("ds");
    if (no_mlp) parts.emplace_back("mlp");
    if (no_meta_adapt) parts.emplace_back("meta-adapt");
    if (parts.empty()) return "none";
    std::string s = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) s += "," + parts[i];
    return s;
  }
};

}  // namespace zsic
