#include "hgr/layers/head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hgr {

FcWeights FcWeights::zeros(int n_classes, int d_out) {
  require(n_classes >= 1 && d_out >= 1, ErrorKind::InvalidInput, "bad FC dimensions");
  return {Matrix::Zero(n_classes, static_cast<Eigen::Index>(d_out) * d_out), Vector::Zero(n_classes)};
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

double cross_entropy(const Vector& probs, int label) {
  require(label >= 0 && label < probs.size(), ErrorKind::InvalidInput,
          "label " + std::to_string(label) + " out of range");
  return -std::log(std::max(probs(label), std::numeric_limits<double>::min()));
}

namespace {

Vector flatten_row_major(const Matrix& m) {
  Vector out(m.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(k++) = m(i, j);
  }
  return out;
}

}  // namespace

HeadOutput head_forward(const SPDMatrix& y, const FcWeights& fc, HeadContext* ctx) {
  const auto d = y.dim();
  require(fc.F.cols() == static_cast<Eigen::Index>(d) * d && fc.c.size() == fc.F.rows() &&
              fc.F.rows() >= 1,
          ErrorKind::InvalidInput, "FC weights do not match the SPD output dimension");
  LogEigContext local;
  LogEigContext& lc = ctx != nullptr ? ctx->logeig : local;
  const SymMatrix lg = logeig_forward(y, &lc);
  Vector flat = flatten_row_major(lg.matrix());
  HeadOutput out;
  out.logits = fc.F * flat + fc.c;
  out.probs = softmax(out.logits);
  if (ctx != nullptr) {
    ctx->flat = std::move(flat);
    ctx->probs = out.probs;
    ctx->F = fc.F;
  }
  return out;
}

HeadGrads head_backward(const HeadContext& ctx, int label) {
  require(ctx.probs.size() > 0, ErrorKind::InvalidInput,
          "head_backward: context was not filled by a forward pass");
  require(label >= 0 && label < ctx.probs.size(), ErrorKind::InvalidInput,
          "label " + std::to_string(label) + " out of range");
  Vector dz = ctx.probs;
  dz(label) -= 1.0;
  HeadGrads g;
  g.d_F = dz * ctx.flat.transpose();
  g.d_c = dz;
  const Vector d_flat = ctx.F.transpose() * dz;
  const auto d = ctx.logeig.eig.V.size();
  Matrix d_log(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) d_log(i, j) = d_flat(i * d + j);
  }
  g.d_y = logeig_backward(ctx.logeig, d_log);
  return g;
}

Vector extract_representation(const SPDMatrix& y) {
  return sym_vectorize(spd_log(y)).values;
}

}  // namespace hgr
