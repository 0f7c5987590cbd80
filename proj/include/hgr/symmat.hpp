#pragma once

// Dense symmetric linear algebra: Jacobi eigensolver, spectral maps on SPD
// matrices, symmetric half-vectorization and the eigendecomposition backward
// map used by the ReEig and LogEig layers.

#include <Eigen/Dense>
#include <memory>

#include "hgr/error.hpp"

namespace hgr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Square matrix that is exactly symmetric; the constructor replaces A by (A + A^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& a);

  static SymMatrix identity(int n);
  static SymMatrix diagonal(const Vector& d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Eigendecomposition A = U diag(V) U^T with V sorted in descending order.
/// Each eigenvector's first component that is not numerically zero is positive.
struct EigPair {
  Matrix U;
  Vector V;
};

/// Symmetric matrix whose smallest eigenvalue passed the SPD threshold. May
/// carry its eigendecomposition so spectral maps do not recompute it.
class SPDMatrix {
 public:
  SPDMatrix() = default;

  /// Wraps a matrix that is positive definite by construction (no check).
  static SPDMatrix trusted(SymMatrix a);
  /// Wraps a matrix together with an already known eigendecomposition.
  static SPDMatrix with_eig(SymMatrix a, EigPair eig);

  int dim() const { return a_.dim(); }
  const SymMatrix& sym() const { return a_; }
  const Matrix& matrix() const { return a_.matrix(); }
  const EigPair* cached_eig() const { return eig_.get(); }

 private:
  SymMatrix a_;
  std::shared_ptr<const EigPair> eig_;
};

/// Upper-triangle half-vectorization; off-diagonals scaled by sqrt(2).
struct SymVec {
  int dim_src = 0;
  Vector values;
};

inline int sym_vec_length(int n) { return n * (n + 1) / 2; }

/// Minimum eigenvalue required to accept a matrix as SPD given its largest eigenvalue.
double spd_threshold(double max_eig);

EigPair eigh(const SymMatrix& a);

/// Eigendecomposes and validates; throws NotSPD when the smallest eigenvalue
/// does not exceed spd_threshold(max eigenvalue).
SPDMatrix assert_spd(const SymMatrix& a);

SymMatrix spd_log(const SPDMatrix& a);
SPDMatrix spd_exp(const SymMatrix& a);

/// U max(eps I, V) U^T.
SPDMatrix rectify_eigs(const SymMatrix& a, double eps);

SymVec sym_vectorize(const SymMatrix& a);
SymMatrix sym_unvectorize(const SymVec& v);

/// Backward map of sym_vectorize in the upper-triangle convention: diagonal
/// entries receive g directly, off-diagonal entries sqrt(2) times the matching
/// component, mirrored. Pairing the result with a symmetric perturbation over
/// the upper triangle (i <= j) reproduces <g, d sym_vectorize>.
SymMatrix sym_unvectorize_grad(const SymVec& g);

/// Eigenvalue gap below which a pair is treated as degenerate by eig_backprop.
double degenerate_gap(const Vector& eigenvalues);

/// dL/dA = U { (Kt^T o (U^T dL_dU))_sym + diag(dL_dV) } U^T with
/// Kt_ij = 1 / (s_i - s_j). Pairs closer than degenerate_gap contribute zero;
/// their count is added to *degenerate_pairs when given.
SymMatrix eig_backprop(const EigPair& eig, const Matrix& dL_dU, const Vector& dL_dV,
                       int* degenerate_pairs = nullptr);

/// Row-orthonormalizes M (rows <= cols) with Householder QR of M^T, choosing
/// the positive-diagonal triangular factor. Throws RankDeficient.
Matrix qr_orthonormalize(const Matrix& m);

inline Matrix sym_part(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace hgr
