#pragma once

#include "hgr/symmat.hpp"

namespace hgr {

// ReEig, LogEig and VecMat as layers with cached forward state.

struct ReEigContext {
  EigPair eig;  // of the input
  double eps = 0;
};

/// Reuses the input's cached eigendecomposition when present. The output
/// carries its own eigendecomposition (U, max(eps, V)).
SPDMatrix reeig_forward(const SPDMatrix& x, double eps, ReEigContext* ctx = nullptr);
SPDMatrix reeig_forward(const SymMatrix& x, double eps, ReEigContext* ctx = nullptr);

/// dL/dU = 2 G U max(eps I, V), dL/dV = Q U^T G U with Q the 0/1 derivative
/// of the clamp, composed with eig_backprop. G = (dL/dY)_sym.
SymMatrix reeig_backward(const ReEigContext& ctx, const Matrix& dL_dY);

struct LogEigContext {
  EigPair eig;
};

SymMatrix logeig_forward(const SPDMatrix& x, LogEigContext* ctx = nullptr);

/// dL/dU = 2 G U log(V), dL/dV = V^-1 U^T G U, composed with eig_backprop.
SymMatrix logeig_backward(const LogEigContext& ctx, const Matrix& dL_dY);

Vector vecmat_forward(const SymMatrix& x);
/// Gradient with respect to the full symmetric input: diagonal entries take
/// g directly, off-diagonal entries g / sqrt(2).
SymMatrix vecmat_backward(int dim, const Vector& dL_dy);

}  // namespace hgr
