#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "zsic/errors.hpp"
#include "zsic/numerics/functions.hpp"
#include "zsic/numerics/matrix.hpp"
#include "zsic/numerics/param_store.hpp"
#include "zsic/numerics/tape.hpp"

namespace zsic {

// Gate order used throughout: input, forget, output, candidate.
enum LstmGate : std::size_t { kGateInput = 0, kGateForget = 1, kGateOutput = 2, kGateCell = 3 };
inline constexpr std::array<const char*, 4> kGateSuffix = {"i", "f", "o", "c"};

/// Single-direction LSTM weights. Each W is hidden x (input + hidden) acting on
/// the stacked [x_t; h_{t-1}]; each b is hidden x 1.
struct LstmParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::array<Matrix, 4> W;
  std::array<Matrix, 4> b;

  static LstmParams zeros(std::size_t input_dim, std::size_t hidden_dim) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    for (std::size_t g = 0; g < 4; ++g) {
      p.W[g] = Matrix(hidden_dim, input_dim + hidden_dim);
      p.b[g] = Matrix(hidden_dim, 1);
    }
    return p;
  }

  /// uniform(-0.1, 0.1) weights and biases, forget bias 1.
  template <class Rng>
  static LstmParams random(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    LstmParams p = zeros(input_dim, hidden_dim);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (std::size_t g = 0; g < 4; ++g) {
      for (double& v : p.W[g].values()) v = u(rng);
      for (double& v : p.b[g].values()) v = u(rng);
    }
    p.b[kGateForget].fill(1.0);
    return p;
  }

  void validate() const {
    for (std::size_t g = 0; g < 4; ++g) {
      if (W[g].rows() != hidden_dim || W[g].cols() != input_dim + hidden_dim)
        throw UsageError("LstmParams: gate weight has wrong shape");
      if (b[g].rows() != hidden_dim || b[g].cols() != 1) throw UsageError("LstmParams: gate bias has wrong shape");
    }
  }

  static std::string weight_name(const std::string& prefix, std::size_t g) {
    return prefix + ".W_" + kGateSuffix[g];
  }
  static std::string bias_name(const std::string& prefix, std::size_t g) { return prefix + ".b_" + kGateSuffix[g]; }

  void register_in(ParamStore& store, const std::string& prefix, bool trainable = true) const {
    for (std::size_t g = 0; g < 4; ++g) store.add(weight_name(prefix, g), W[g], trainable);
    for (std::size_t g = 0; g < 4; ++g) store.add(bias_name(prefix, g), b[g], trainable);
  }

  static LstmParams from_store(const ParamStore& store, const std::string& prefix) {
    LstmParams p;
    for (std::size_t g = 0; g < 4; ++g) {
      p.W[g] = store.value(weight_name(prefix, g));
      p.b[g] = store.value(bias_name(prefix, g));
    }
    p.hidden_dim = p.W[0].rows();
    p.input_dim = p.W[0].cols() - p.hidden_dim;
    p.validate();
    return p;
  }
};

namespace detail {

/// Per-step activations kept for backpropagation through time.
struct LstmTrace {
  Matrix xh;                     // (in + hidden) x N, stacked inputs
  std::array<Matrix, 4> gate;    // hidden x N, post-activation
  Matrix cell;                   // hidden x N
  Matrix tanh_cell;              // hidden x N
  Matrix hidden;                 // hidden x N
};

inline LstmTrace lstm_run(const Matrix& x, const std::array<const Matrix*, 4>& W,
                          const std::array<const Matrix*, 4>& b) {
  const std::size_t hd = W[0]->rows();
  const std::size_t in = W[0]->cols() - hd;
  const std::size_t n = x.cols();
  if (x.rows() != in) throw UsageError("lstm: input dimension mismatch");
  if (n == 0) throw UsageError("lstm: empty sequence");
  LstmTrace tr;
  tr.xh = Matrix(in + hd, n);
  for (auto& g : tr.gate) g = Matrix(hd, n);
  tr.cell = Matrix(hd, n);
  tr.tanh_cell = Matrix(hd, n);
  tr.hidden = Matrix(hd, n);
  std::vector<double> xh(in + hd, 0.0);
  std::vector<double> c_prev(hd, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t r = 0; r < in; ++r) xh[r] = x(r, t);
    for (std::size_t r = 0; r < hd; ++r) xh[in + r] = t == 0 ? 0.0 : tr.hidden(r, t - 1);
    for (std::size_t r = 0; r < in + hd; ++r) tr.xh(r, t) = xh[r];
    for (std::size_t g = 0; g < 4; ++g) {
      const Matrix& w = *W[g];
      for (std::size_t r = 0; r < hd; ++r) {
        const double* wr = w.row(r).data();
        double s = (*b[g])(r, 0);
        for (std::size_t k = 0; k < in + hd; ++k) s += wr[k] * xh[k];
        tr.gate[g](r, t) = g == kGateCell ? std::tanh(s) : sigmoid(s);
      }
    }
    for (std::size_t r = 0; r < hd; ++r) {
      const double c = tr.gate[kGateForget](r, t) * c_prev[r] + tr.gate[kGateInput](r, t) * tr.gate[kGateCell](r, t);
      const double tc = std::tanh(c);
      tr.cell(r, t) = c;
      tr.tanh_cell(r, t) = tc;
      tr.hidden(r, t) = tr.gate[kGateOutput](r, t) * tc;
      c_prev[r] = c;
    }
  }
  return tr;
}

/// Backpropagation through time. Any output pointer may be null.
inline void lstm_backprop(const LstmTrace& tr, const Matrix& d_hidden, const std::array<const Matrix*, 4>& W,
                          Matrix* d_x, const std::array<Matrix*, 4>& d_W, const std::array<Matrix*, 4>& d_b) {
  const std::size_t hd = tr.hidden.rows();
  const std::size_t n = tr.hidden.cols();
  const std::size_t in = tr.xh.rows() - hd;
  std::vector<double> dh_next(hd, 0.0), dc_next(hd, 0.0), dxh(in + hd);
  std::array<std::vector<double>, 4> dpre;
  for (auto& v : dpre) v.assign(hd, 0.0);
  for (std::size_t t = n; t-- > 0;) {
    for (std::size_t r = 0; r < hd; ++r) {
      const double dh = d_hidden(r, t) + dh_next[r];
      const double o = tr.gate[kGateOutput](r, t);
      const double tc = tr.tanh_cell(r, t);
      const double dc = dh * o * (1.0 - tc * tc) + dc_next[r];
      const double i = tr.gate[kGateInput](r, t);
      const double f = tr.gate[kGateForget](r, t);
      const double g = tr.gate[kGateCell](r, t);
      const double c_prev = t == 0 ? 0.0 : tr.cell(r, t - 1);
      dpre[kGateOutput][r] = dh * tc * o * (1.0 - o);
      dpre[kGateInput][r] = dc * g * i * (1.0 - i);
      dpre[kGateForget][r] = dc * c_prev * f * (1.0 - f);
      dpre[kGateCell][r] = dc * i * (1.0 - g * g);
      dc_next[r] = dc * f;
    }
    std::fill(dxh.begin(), dxh.end(), 0.0);
    for (std::size_t gi = 0; gi < 4; ++gi) {
      const Matrix& w = *W[gi];
      const auto& dp = dpre[gi];
      for (std::size_t r = 0; r < hd; ++r) {
        const double d = dp[r];
        if (d == 0.0) continue;
        const double* wr = w.row(r).data();
        for (std::size_t k = 0; k < in + hd; ++k) dxh[k] += wr[k] * d;
        if (d_W[gi]) {
          double* gw = d_W[gi]->row(r).data();
          for (std::size_t k = 0; k < in + hd; ++k) gw[k] += d * tr.xh(k, t);
        }
        if (d_b[gi]) (*d_b[gi])(r, 0) += d;
      }
    }
    if (d_x)
      for (std::size_t r = 0; r < in; ++r) (*d_x)(r, t) += dxh[r];
    for (std::size_t r = 0; r < hd; ++r) dh_next[r] = dxh[in + r];
  }
}

}  // namespace detail

/// Hidden states (hidden x N) of a single-direction LSTM from zero initial state.
inline Matrix lstm_forward(const Matrix& x, const LstmParams& p) {
  p.validate();
  return detail::lstm_run(x, {&p.W[0], &p.W[1], &p.W[2], &p.W[3]}, {&p.b[0], &p.b[1], &p.b[2], &p.b[3]}).hidden;
}

/// Bidirectional encoding: column t stacks the forward state after step t
/// over the backward state for the same position.
inline Matrix bilstm_forward(std::span<const std::vector<double>> seq, const LstmParams& fwd, const LstmParams& bwd) {
  if (seq.empty()) throw UsageError("bilstm_forward: empty sequence");
  if (fwd.input_dim != bwd.input_dim) throw UsageError("bilstm_forward: direction input sizes differ");
  Matrix x(fwd.input_dim, seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (seq[t].size() != fwd.input_dim) throw UsageError("bilstm_forward: input vector has wrong dimension");
    for (std::size_t r = 0; r < fwd.input_dim; ++r) x(r, t) = seq[t][r];
  }
  const Matrix hf = lstm_forward(x, fwd);
  const Matrix hb = ad::reverse_columns(lstm_forward(ad::reverse_columns(x), bwd));
  Matrix out(fwd.hidden_dim + bwd.hidden_dim, seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    for (std::size_t r = 0; r < fwd.hidden_dim; ++r) out(r, t) = hf(r, t);
    for (std::size_t r = 0; r < bwd.hidden_dim; ++r) out(fwd.hidden_dim + r, t) = hb(r, t);
  }
  return out;
}

namespace ad {

/// Tape-bound LSTM weights for one direction.
struct LstmVars {
  std::array<Var, 4> W;
  std::array<Var, 4> b;

  static LstmVars bind(Tape& tape, const ParamStore& store, const std::string& prefix) {
    LstmVars v;
    for (std::size_t g = 0; g < 4; ++g) {
      v.W[g] = tape.param(store, LstmParams::weight_name(prefix, g));
      v.b[g] = tape.param(store, LstmParams::bias_name(prefix, g));
    }
    return v;
  }
};

inline Var lstm(Var x, const LstmVars& p) {
  Tape& tape = *x.tape;
  std::array<const Matrix*, 4> W{}, b{};
  for (std::size_t g = 0; g < 4; ++g) {
    W[g] = &p.W[g].value();
    b[g] = &p.b[g].value();
  }
  auto trace = std::make_shared<detail::LstmTrace>(detail::lstm_run(x.value(), W, b));
  Matrix hidden = trace->hidden;
  std::array<Var, 9> parents{x, p.W[0], p.W[1], p.W[2], p.W[3], p.b[0], p.b[1], p.b[2], p.b[3]};
  return tape.record(std::move(hidden), std::span<const Var>(parents), [x, p, trace](Tape& t, const Matrix& g) {
    std::array<const Matrix*, 4> W{};
    std::array<Matrix*, 4> dW{}, db{};
    for (std::size_t gi = 0; gi < 4; ++gi) {
      W[gi] = &t.value(p.W[gi]);
      dW[gi] = t.grad_target(p.W[gi].id);
      db[gi] = t.grad_target(p.b[gi].id);
    }
    detail::lstm_backprop(*trace, g, W, t.grad_target(x.id), dW, db);
  });
}

/// Bidirectional LSTM over the columns of x; returns (h_f + h_b) x N.
inline Var bilstm(Var x, const LstmVars& fwd, const LstmVars& bwd) {
  Var hf = lstm(x, fwd);
  Var hb = reverse_columns(lstm(reverse_columns(x), bwd));
  return vstack(hf, hb);
}

}  // namespace ad
}  // namespace zsic
