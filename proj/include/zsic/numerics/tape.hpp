#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zsic/errors.hpp"
#include "zsic/numerics/functions.hpp"
#include "zsic/numerics/matrix.hpp"
#include "zsic/numerics/param_store.hpp"

namespace zsic {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  bool requires_grad() const;
};

/// Reverse-mode differentiation tape over matrix-valued nodes.
///
/// Nodes are evaluated eagerly when recorded. A node requires a gradient iff
/// one of its parents does; leaves decide for themselves (parameters follow
/// the store's trainable flag). Backward closures are only kept for nodes
/// that require a gradient, so inference through a tape of constants costs
/// nothing extra.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  struct NoGrad {};

  Tape() = default;
  /// Inference tape: every leaf is a constant, nothing is kept for backward.
  explicit Tape(NoGrad) : grad_enabled_(false) {}

  Var constant(Matrix value) { return push(std::move(value), false, {}); }
  Var variable(Matrix value) { return push(std::move(value), grad_enabled_, {}); }

  Var param(const ParamStore& store, const std::string& name) {
    const auto& e = store.entry(name);
    const bool needs = grad_enabled_ && e.trainable;
    Var v = push(e.value, needs, {});
    if (needs) bindings_.emplace_back(v.id, name);
    return v;
  }

  Var record(Matrix value, std::initializer_list<Var> parents, Backward fn) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(fn));
  }

  Var record(Matrix value, std::span<const Var> parents, Backward fn) {
    bool needs = false;
    for (const Var& p : parents) {
      if (p.tape != this) throw UsageError("Tape: operand belongs to another tape");
      needs = needs || nodes_[p.id].requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(fn) : Backward{});
  }

  /// Non-smooth ops log which side of each kink they evaluated on, so a
  /// finite-difference probe can tell when a perturbation crossed one.
  void track_branches(bool on = true) { track_branches_ = on; }
  void note_branch(bool side) {
    if (track_branches_) branches_.push_back(side);
  }
  const std::vector<bool>& branches() const noexcept { return branches_; }

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Gradient accumulator for node `id`, allocated on first use, or nullptr
  /// when the node does not take part in differentiation.
  Matrix* grad_target(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return nullptr;
    if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
    return &n.grad;
  }

  /// Gradient of the last backward root with respect to `v` (zeros if none flowed).
  Matrix grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void backward(Var root) {
    if (nodes_.empty() || root.tape != this || root.id >= nodes_.size())
      throw UsageError("Tape::backward: nothing has been recorded for this root");
    const Node& r = nodes_[root.id];
    if (r.value.rows() != 1 || r.value.cols() != 1) throw UsageError("Tape::backward: root must be a scalar");
    for (auto& n : nodes_) n.grad = Matrix();
    if (!r.requires_grad) return;
    grad_target(root.id)->fill(1.0);
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
      n.backward(*this, n.grad);
    }
    ran_backward_ = true;
  }

  /// Adds the gradients of every bound parameter into the store's accumulators.
  void accumulate_param_grads(ParamStore& store) const {
    if (!ran_backward_) throw UsageError("Tape: backward has not been run");
    for (const auto& [id, name] : bindings_) {
      const Matrix& g = nodes_[id].grad;
      if (!g.empty()) store.grad(name) += g;
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Matrix value, bool requires_grad, Backward fn) {
    nodes_.push_back({std::move(value), Matrix(), requires_grad, std::move(fn)});
    return Var{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<std::size_t, std::string>> bindings_;
  std::vector<bool> branches_;
  bool grad_enabled_ = true;
  bool ran_backward_ = false;
  bool track_branches_ = false;
};

inline const Matrix& Var::value() const { return tape->value(*this); }
inline bool Var::requires_grad() const { return tape->requires_grad(id); }

namespace ad {

inline Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  return a.tape->record(zsic::matmul(av, bv), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a.id)) matmul_nt_acc(g, t.value(b), *ga);
    if (Matrix* gb = t.grad_target(b.id)) matmul_tn_acc(t.value(a), g, *gb);
  });
}

inline Var add(Var a, Var b) {
  return a.tape->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a.id)) *ga += g;
    if (Matrix* gb = t.grad_target(b.id)) *gb += g;
  });
}

inline Var scale(Var a, double s) {
  return a.tape->record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a.id))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += s * g[i];
  });
}

inline Var hadamard(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!av.same_shape(bv)) throw UsageError("hadamard: shape mismatch");
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a.id)) {
      const Matrix& bv = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Matrix* gb = t.grad_target(b.id)) {
      const Matrix& av = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

inline Var tanh(Var a) {
  Matrix out = a.value();
  for (double& v : out.values()) v = std::tanh(v);
  const std::size_t self = a.tape->size();
  return a.tape->record(std::move(out), {a}, [a, self](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a.id)) {
      const Matrix& y = t.value(Var{&t, self});
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * (1.0 - y[i] * y[i]);
    }
  });
}

inline Var relu(Var a) {
  Matrix out = a.value();
  for (double& v : out.values()) {
    a.tape->note_branch(v > 0.0);
    v = v > 0.0 ? v : 0.0;
  }
  return a.tape->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a.id)) {
      const Matrix& x = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (x[i] > 0.0) (*ga)[i] += g[i];
    }
  });
}

inline Var transpose(Var a) {
  return a.tape->record(a.value().transposed(), {a}, [a](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a.id)) *ga += g.transposed();
  });
}

/// Stacks a on top of b (column counts must agree).
inline Var vstack(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.cols()) throw UsageError("vstack: column count mismatch");
  Matrix out(av.rows() + bv.rows(), av.cols());
  std::copy(av.values().begin(), av.values().end(), out.values().begin());
  std::copy(bv.values().begin(), bv.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(av.size()));
  const std::size_t split = av.size();
  return a.tape->record(std::move(out), {a, b}, [a, b, split](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a.id))
      for (std::size_t i = 0; i < split; ++i) (*ga)[i] += g[i];
    if (Matrix* gb = t.grad_target(b.id))
      for (std::size_t i = split; i < g.size(); ++i) (*gb)[i - split] += g[i];
  });
}

inline Matrix reverse_columns(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, m.cols() - 1 - c) = m(r, c);
  return out;
}

inline Var reverse_columns(Var a) {
  return a.tape->record(reverse_columns(a.value()), {a}, [a](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a.id)) *ga += reverse_columns(g);
  });
}

/// Row-wise softmax.
inline Var softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto p = zsic::softmax(x.row(r));
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  const std::size_t self = a.tape->size();
  return a.tape->record(std::move(out), {a}, [a, self](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a.id)) {
      const Matrix& y = t.value(Var{&t, self});
      for (std::size_t r = 0; r < y.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
        for (std::size_t c = 0; c < y.cols(); ++c) (*ga)(r, c) += y(r, c) * (g(r, c) - dot);
      }
    }
  });
}

/// Euclidean distance from column vector x (D x 1) to each column of P (D x K); returns 1 x K.
inline Var column_distances(Var x, Var p) {
  const Matrix& xv = x.value();
  const Matrix& pv = p.value();
  if (xv.cols() != 1 || xv.rows() != pv.rows()) throw UsageError("column_distances: shape mismatch");
  Matrix out(1, pv.cols());
  for (std::size_t k = 0; k < pv.cols(); ++k) {
    double s = 0.0;
    for (std::size_t r = 0; r < pv.rows(); ++r) {
      const double d = xv(r, 0) - pv(r, k);
      s += d * d;
    }
    out(0, k) = std::sqrt(s);
  }
  const std::size_t self = x.tape->size();
  return x.tape->record(std::move(out), {x, p}, [x, p, self](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    const Matrix& pv = t.value(p);
    const Matrix& dist = t.value(Var{&t, self});
    Matrix* gx = t.grad_target(x.id);
    Matrix* gp = t.grad_target(p.id);
    for (std::size_t k = 0; k < pv.cols(); ++k) {
      const double d = dist(0, k);
      if (d == 0.0) continue;  // subgradient 0 at the cusp
      const double w = g(0, k) / d;
      for (std::size_t r = 0; r < pv.rows(); ++r) {
        const double diff = xv(r, 0) - pv(r, k);
        if (gx) (*gx)(r, 0) += w * diff;
        if (gp) (*gp)(r, k) -= w * diff;
      }
    }
  });
}

/// -log softmax(logits)[target] for a 1 x K logit row; returns 1 x 1.
inline Var cross_entropy(Var logits, std::size_t target) {
  const Matrix& z = logits.value();
  if (z.rows() != 1 || target >= z.cols()) throw UsageError("cross_entropy: bad logits or target");
  const auto p = zsic::softmax(z.row(0));
  const double m = *std::max_element(z.values().begin(), z.values().end());
  double sum = 0.0;
  for (double v : z.values()) sum += std::exp(v - m);
  const double loss = m + std::log(sum) - z(0, target);
  return logits.tape->record(Matrix(1, 1, loss), {logits}, [logits, target, p](Tape& t, const Matrix& g) {
    if (Matrix* gz = t.grad_target(logits.id))
      for (std::size_t k = 0; k < p.size(); ++k) (*gz)(0, k) += g(0, 0) * (p[k] - (k == target ? 1.0 : 0.0));
  });
}

/// Mean of a list of 1 x 1 nodes.
inline Var mean(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw UsageError("mean: empty input");
  Tape& tape = *scalars.front().tape;
  double s = 0.0;
  for (const Var& v : scalars) s += v.value()(0, 0);
  const double inv = 1.0 / static_cast<double>(scalars.size());
  return tape.record(Matrix(1, 1, s * inv), std::span<const Var>(scalars), [scalars, inv](Tape& t, const Matrix& g) {
    for (const Var& v : scalars)
      if (Matrix* gv = t.grad_target(v.id)) (*gv)(0, 0) += inv * g(0, 0);
  });
}

inline Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape->record(Matrix(1, 1, s), {a}, [a](Tape& t, const Matrix& g) {
    if (Matrix* ga = t.grad_target(a.id))
      for (double& v : ga->values()) v += g(0, 0);
  });
}

}  // namespace ad
}  // namespace zsic
