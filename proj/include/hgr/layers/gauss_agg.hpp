#pragma once

#include "hgr/symmat.hpp"

namespace hgr {

struct GaussAggContext {
  Matrix samples;  // N x d, one sample per row
  Vector mu;
  Matrix sigma;    // population covariance, ridge included
};

/// Embeds the Gaussian of the rows of `samples` as [[S + mu mu^T, mu], [mu^T, 1]]
/// with S = population covariance + ridge * I. Positive definite when ridge > 0.
SPDMatrix gauss_agg_forward(const Matrix& samples, double ridge, GaussAggContext* ctx = nullptr);

/// [[sigma + mu mu^T, mu], [mu^T, 1]] for given moments.
SymMatrix gauss_embed(const Vector& mu, const Matrix& sigma);

/// Closed form (1/N) B X^T X B^T + (2/N) (B X^T 1 b^T)_sym + C, plus the ridge
/// on the top-left block.
SymMatrix gauss_agg_analytic(const Matrix& samples, double ridge);

/// dL/dX = (2/N) (X B^T + 1 b^T) (dL/dY)_sym B.
Matrix gauss_agg_backward(const GaussAggContext& ctx, const Matrix& dL_dY);

namespace testing {
/// Fault injection for the gradient checker: gauss_agg_backward multiplies its
/// result by `scale` (1 restores normal behaviour). Process-wide.
void set_gauss_agg_backward_fault(double scale);
}  // namespace testing

}  // namespace hgr
