#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>

#include "zsic/numerics/param_store.hpp"

namespace zsic {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::unordered_map<std::string, Matrix> m;
  std::unordered_map<std::string, Matrix> v;
};

/// One bias-corrected Adam update over the trainable entries of `store`,
/// then zeroes every gradient accumulator.
inline void adam_step(ParamStore& store, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw UsageError("adam_step: learning rate must be positive");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (auto& e : store.entries()) {
    if (!e.trainable) continue;
    auto [mit, m_new] = state.m.try_emplace(e.name, e.value.rows(), e.value.cols());
    auto [vit, v_new] = state.v.try_emplace(e.name, e.value.rows(), e.value.cols());
    Matrix& m = mit->second;
    Matrix& v = vit->second;
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double g = e.grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      e.value[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
  store.zero_grad();
}

}  // namespace zsic
