#include "hgr/layers/spectral.hpp"

namespace hgr {

namespace {

SPDMatrix rectify_with(EigPair eig, double eps, ReEigContext* ctx) {
  require(eps > 0, ErrorKind::InvalidInput, "ReEig threshold must be positive");
  if (ctx != nullptr) {
    ctx->eig = eig;
    ctx->eps = eps;
  }
  eig.V = eig.V.cwiseMax(eps);
  SymMatrix y(eig.U * eig.V.asDiagonal() * eig.U.transpose());
  return SPDMatrix::with_eig(std::move(y), std::move(eig));
}

}  // namespace

SPDMatrix reeig_forward(const SPDMatrix& x, double eps, ReEigContext* ctx) {
  if (const EigPair* eig = x.cached_eig()) return rectify_with(*eig, eps, ctx);
  return rectify_with(eigh(x.sym()), eps, ctx);
}

SPDMatrix reeig_forward(const SymMatrix& x, double eps, ReEigContext* ctx) {
  return rectify_with(eigh(x), eps, ctx);
}

SymMatrix reeig_backward(const ReEigContext& ctx, const Matrix& dL_dY) {
  const EigPair& e = ctx.eig;
  const Matrix g = sym_part(dL_dY);
  const Vector clamped = e.V.cwiseMax(ctx.eps);
  const Matrix dU = 2.0 * g * e.U * clamped.asDiagonal();
  const Vector ut_g_u = (e.U.transpose() * g * e.U).diagonal();
  Vector dV(e.V.size());
  for (Eigen::Index i = 0; i < e.V.size(); ++i) dV(i) = e.V(i) > ctx.eps ? ut_g_u(i) : 0.0;
  return eig_backprop(e, dU, dV);
}

SymMatrix logeig_forward(const SPDMatrix& x, LogEigContext* ctx) {
  EigPair eig = x.cached_eig() != nullptr ? *x.cached_eig() : eigh(x.sym());
  const double min_eig = eig.V(eig.V.size() - 1);
  require(min_eig > spd_threshold(eig.V(0)), ErrorKind::NotSPD,
          "LogEig input is not positive definite");
  SymMatrix y(eig.U * eig.V.array().log().matrix().asDiagonal() * eig.U.transpose());
  if (ctx != nullptr) ctx->eig = std::move(eig);
  return y;
}

SymMatrix logeig_backward(const LogEigContext& ctx, const Matrix& dL_dY) {
  const EigPair& e = ctx.eig;
  const Matrix g = sym_part(dL_dY);
  const Vector log_v = e.V.array().log().matrix();
  const Matrix dU = 2.0 * g * e.U * log_v.asDiagonal();
  const Vector dV = (e.U.transpose() * g * e.U).diagonal().cwiseQuotient(e.V);
  return eig_backprop(e, dU, dV);
}

Vector vecmat_forward(const SymMatrix& x) { return sym_vectorize(x).values; }

SymMatrix vecmat_backward(int dim, const Vector& dL_dy) {
  // sym_unvectorize_grad pairs with the upper triangle only; the rest of the
  // chain pairs gradients with every entry, so each off-diagonal is halved.
  Matrix g = sym_unvectorize_grad(SymVec{dim, dL_dy}).matrix();
  const Vector diag = g.diagonal();
  g *= 0.5;
  g.diagonal() = diag;
  return SymMatrix(g);
}

}  // namespace hgr
