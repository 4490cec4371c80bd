#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "zsic/data/corpus.hpp"
#include "zsic/errors.hpp"
#include "zsic/numerics/functions.hpp"
#include "zsic/numerics/matrix.hpp"
#include "zsic/numerics/tape.hpp"

namespace zsic {

namespace names {
inline const std::string kProjM1 = "proj.M1";
inline const std::string kProjM2 = "proj.M2";
}  // namespace names

inline bool is_projection_param(const std::string& name) { return name.rfind("proj.", 0) == 0; }

/// G(e) = tanh(M2 tanh(M1 e)); M1 is d_s x d_w, M2 is 2d_h x d_s.
inline std::vector<double> project_label(std::span<const double> e, const Matrix& M1, const Matrix& M2) {
  if (e.size() != M1.cols() || M2.cols() != M1.rows()) throw UsageError("project_label: shape mismatch");
  const Matrix hidden = matmul(M1, Matrix::column(e));
  Matrix h = hidden;
  for (double& v : h.values()) v = std::tanh(v);
  Matrix out = matmul(M2, h);
  std::vector<double> g(out.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::tanh(out[i]);
  return g;
}

/// Class prototypes for a candidate set, one column per class, ids sorted ascending.
struct PrototypeSet {
  std::vector<ClassId> ids;
  Matrix P;  // 2d_h x K

  std::size_t size() const noexcept { return ids.size(); }

  std::size_t position(ClassId id) const {
    for (std::size_t k = 0; k < ids.size(); ++k)
      if (ids[k] == id) return k;
    throw UsageError("PrototypeSet: class " + std::to_string(id) + " is not a candidate");
  }

  std::vector<double> distances(std::span<const double> x) const {
    if (ids.empty()) throw UsageError("PrototypeSet: no prototypes");
    if (x.size() != P.rows()) throw UsageError("PrototypeSet: feature dimension mismatch");
    std::vector<double> d(ids.size());
    std::vector<double> col(P.rows());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      for (std::size_t r = 0; r < P.rows(); ++r) col[r] = P(r, k);
      d[k] = euclidean(x, col);
    }
    return d;
  }
};

/// p_i(x) = softmax_i(-d(x, G(e_i))) over exactly the supplied prototypes.
inline std::vector<double> class_probabilities(std::span<const double> x, const PrototypeSet& protos) {
  auto d = protos.distances(x);
  for (double& v : d) v = -v;
  return softmax(d);
}

namespace ad {

/// Prototypes for label embedding columns E (d_w x K).
inline Var project_labels(Var E, Var M1, Var M2) { return tanh(matmul(M2, tanh(matmul(M1, E)))); }

/// -log p_target(x) under the distance softmax.
inline Var prototype_nll(Var x, Var prototypes, std::size_t target) {
  return cross_entropy(scale(column_distances(x, prototypes), -1.0), target);
}

}  // namespace ad
}  // namespace zsic
