#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "zsic/errors.hpp"
#include "zsic/numerics/matrix.hpp"

namespace zsic {

/// Named trainable tensors with gradient accumulators. Insertion order is
/// preserved so iteration (and therefore serialization) is deterministic.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Matrix value;
    Matrix grad;
    bool trainable = true;
  };

  Matrix& add(std::string name, Matrix value, bool trainable = true) {
    if (index_.contains(name)) throw UsageError("ParamStore: duplicate parameter '" + name + "'");
    index_.emplace(name, entries_.size());
    Matrix grad(value.rows(), value.cols());
    entries_.push_back({std::move(name), std::move(value), std::move(grad), trainable});
    return entries_.back().value;
  }

  bool contains(std::string_view name) const { return index_.contains(std::string(name)); }

  Entry& entry(std::string_view name) { return entries_[find(name)]; }
  const Entry& entry(std::string_view name) const { return entries_[find(name)]; }

  Matrix& value(std::string_view name) { return entry(name).value; }
  const Matrix& value(std::string_view name) const { return entry(name).value; }
  Matrix& grad(std::string_view name) { return entry(name).grad; }
  const Matrix& grad(std::string_view name) const { return entry(name).grad; }

  bool trainable(std::string_view name) const { return entry(name).trainable; }
  void set_trainable(std::string_view name, bool on) { entry(name).trainable = on; }

  std::vector<Entry>& entries() noexcept { return entries_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  void zero_grad() {
    for (auto& e : entries_) e.grad.fill(0.0);
  }

  /// Parameter values only; used for best-so-far snapshots.
  std::vector<Matrix> snapshot() const {
    std::vector<Matrix> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.value);
    return out;
  }

  void restore(const std::vector<Matrix>& values) {
    if (values.size() != entries_.size()) throw UsageError("ParamStore: snapshot size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!values[i].same_shape(entries_[i].value)) throw UsageError("ParamStore: snapshot shape mismatch");
      entries_[i].value = values[i];
    }
  }

 private:
  std::size_t find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw UsageError("ParamStore: unknown parameter '" + std::string(name) + "'");
    return it->second;
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Temporarily restricts training to parameters accepted by `keep`; the
/// previous trainable flags come back on destruction.
class TrainableScope {
 public:
  TrainableScope(ParamStore& store, const std::function<bool(const std::string&)>& keep) : store_(store) {
    saved_.reserve(store.size());
    for (auto& e : store.entries()) {
      saved_.push_back(e.trainable);
      e.trainable = e.trainable && keep(e.name);
    }
  }
  ~TrainableScope() {
    auto& entries = store_.entries();
    for (std::size_t i = 0; i < saved_.size() && i < entries.size(); ++i) entries[i].trainable = saved_[i];
  }
  TrainableScope(const TrainableScope&) = delete;
  TrainableScope& operator=(const TrainableScope&) = delete;

 private:
  ParamStore& store_;
  std::vector<bool> saved_;
};

}  // namespace zsic
