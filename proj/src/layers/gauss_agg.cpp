#include "hgr/layers/gauss_agg.hpp"

#include <atomic>
#include <string>

namespace hgr {

namespace {
std::atomic<double> g_backward_fault{1.0};
}  // namespace

void testing::set_gauss_agg_backward_fault(double scale) { g_backward_fault.store(scale); }

SymMatrix gauss_embed(const Vector& mu, const Matrix& sigma) {
  const auto d = mu.size();
  require(sigma.rows() == d && sigma.cols() == d, ErrorKind::InvalidInput,
          "gauss_embed: sigma must be d x d");
  Matrix y(d + 1, d + 1);
  y.topLeftCorner(d, d) = sigma + mu * mu.transpose();
  y.topRightCorner(d, 1) = mu;
  y.bottomLeftCorner(1, d) = mu.transpose();
  y(d, d) = 1.0;
  return SymMatrix(y);
}

SPDMatrix gauss_agg_forward(const Matrix& samples, double ridge, GaussAggContext* ctx) {
  const auto n = samples.rows();
  const auto d = samples.cols();
  require(n >= 1 && d >= 1, ErrorKind::InvalidInput,
          "gauss_agg_forward: need N >= 1 samples of dim >= 1, got " + std::to_string(n) + "x" +
              std::to_string(d));
  require(ridge >= 0, ErrorKind::InvalidInput, "gauss_agg_forward: ridge must be >= 0");
  const Vector mu = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - mu.transpose();
  Matrix sigma = (centered.transpose() * centered) / static_cast<double>(n);
  sigma.diagonal().array() += ridge;
  SymMatrix y = gauss_embed(mu, sigma);
  if (ctx != nullptr) {
    ctx->samples = samples;
    ctx->mu = mu;
    ctx->sigma = std::move(sigma);
  }
  return SPDMatrix::trusted(std::move(y));
}

SymMatrix gauss_agg_analytic(const Matrix& x, double ridge) {
  const auto n = x.rows();
  const auto d = x.cols();
  require(n >= 1 && d >= 1, ErrorKind::InvalidInput, "gauss_agg_analytic: empty sample matrix");
  Matrix b = Matrix::Zero(d + 1, d);
  b.topRows(d).setIdentity();
  Vector e = Vector::Zero(d + 1);
  e(d) = 1.0;
  const Vector ones = Vector::Ones(n);
  Matrix c = Matrix::Zero(d + 1, d + 1);
  c(d, d) = 1.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix y = inv_n * b * x.transpose() * x * b.transpose() +
             2.0 * inv_n * sym_part(b * x.transpose() * ones * e.transpose()) + c;
  y.topLeftCorner(d, d).diagonal().array() += ridge;
  return SymMatrix(y);
}

Matrix gauss_agg_backward(const GaussAggContext& ctx, const Matrix& dL_dY) {
  const auto n = ctx.samples.rows();
  const auto d = ctx.samples.cols();
  require(dL_dY.rows() == d + 1 && dL_dY.cols() == d + 1, ErrorKind::InvalidInput,
          "gauss_agg_backward: gradient must be (d+1) x (d+1)");
  // (X B^T + 1 b^T) is X with a column of ones appended; right-multiplying by
  // B keeps the first d columns.
  Matrix xa(n, d + 1);
  xa.leftCols(d) = ctx.samples;
  xa.col(d).setOnes();
  const Matrix g = sym_part(dL_dY);
  return (2.0 * g_backward_fault.load() / static_cast<double>(n)) * xa * g.leftCols(d);
}

}  // namespace hgr
