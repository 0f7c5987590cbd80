#pragma once

#include <vector>

#include "hgr/symmat.hpp"

namespace hgr {

struct SpdAggContext {
  std::vector<SPDMatrix> inputs;
  Matrix w_hat;  // d_out x (N * d_in); block i holds W_i
};

struct SpdAggGrads {
  std::vector<SymMatrix> d_inputs;
  Matrix d_w_hat;  // Euclidean gradient, before any tangent projection
};

/// Y = sum_i W_i X_i W_i^T, where W_i is the i-th d_in-wide column block of
/// w_hat. Throws NumericalFailure when Y fails the SPD check.
SPDMatrix spd_agg_forward(const std::vector<SPDMatrix>& inputs, const Matrix& w_hat,
                          SpdAggContext* ctx = nullptr);

/// w_hat * blockdiag(X_1..X_N) * w_hat^T, formed explicitly.
SymMatrix spd_agg_blockdiag(const std::vector<SPDMatrix>& inputs, const Matrix& w_hat);

/// dL/dX_i = W_i^T G W_i and dL/dW_i = 2 G W_i X_i with G = (dL/dY)_sym.
SpdAggGrads spd_agg_backward(const SpdAggContext& ctx, const Matrix& dL_dY);

}  // namespace hgr
