#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "crom/error.hpp"

namespace crom {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Eigen::Ref<const DenseMatrix>& m) { return m.allFinite(); }

inline bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Result of a (possibly regularized) normal-equation solve.
struct NormalSolve {
  Vector x;
  double lambda = 0.0;     // regularization actually applied
  bool regularized = false;
};

/// Solves (A^T A + lambda I) x = A^T b.
///
/// When A^T A is singular or badly conditioned the diagonal shift escalates to
/// max(lambda, 1e-10 * trace(A^T A) / cols) and the result is flagged. This also
/// covers underdetermined systems (rows < cols), giving a near minimum-norm x.
inline NormalSolve solve_normal_equations(const Eigen::Ref<const DenseMatrix>& a,
                                          const Eigen::Ref<const Vector>& b, double lambda = 0.0) {
  CROM_EXPECT(a.rows() == b.size(), "solve_normal_equations: row mismatch");
  const Index n = a.cols();
  DenseMatrix ata = a.transpose() * a;
  Vector atb = a.transpose() * b;

  NormalSolve out;
  out.lambda = lambda;
  auto attempt = [&](double lam) -> bool {
    DenseMatrix shifted = ata;
    shifted.diagonal().array() += lam;
    Eigen::LLT<DenseMatrix> llt(shifted);
    if (llt.info() != Eigen::Success) return false;
    if (llt.rcond() < 1e-13) return false;
    out.x = llt.solve(atb);
    return out.x.allFinite();
  };

  if (a.rows() >= n && attempt(lambda)) return out;

  const double trace = ata.trace();
  double lam = std::max(lambda, 1e-10 * std::max(trace, 1e-300) / static_cast<double>(n));
  out.regularized = true;
  for (int k = 0; k < 8; ++k, lam *= 100.0) {
    DenseMatrix shifted = ata;
    shifted.diagonal().array() += lam;
    Eigen::LDLT<DenseMatrix> ldlt(shifted);
    out.x = ldlt.solve(atb);
    if (ldlt.info() == Eigen::Success && out.x.allFinite()) {
      out.lambda = lam;
      return out;
    }
  }
  out.x = Vector::Zero(n);
  out.lambda = lam;
  return out;
}

}  // namespace crom
