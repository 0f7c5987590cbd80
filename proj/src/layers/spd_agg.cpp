#include "hgr/layers/spd_agg.hpp"

#include <string>

namespace hgr {

namespace {

int check_shapes(const std::vector<SPDMatrix>& inputs, const Matrix& w_hat) {
  require(!inputs.empty(), ErrorKind::InvalidInput, "SPDAgg needs at least one input");
  const int d_in = inputs[0].dim();
  for (const auto& x : inputs) {
    require(x.dim() == d_in, ErrorKind::InvalidInput, "SPDAgg inputs must share one dimension");
  }
  const auto n = static_cast<Eigen::Index>(inputs.size());
  require(w_hat.cols() == n * d_in, ErrorKind::InvalidInput,
          "SPDAgg weight has " + std::to_string(w_hat.cols()) + " columns, expected " +
              std::to_string(n * d_in));
  require(w_hat.rows() >= 1 && w_hat.rows() <= w_hat.cols(), ErrorKind::InvalidInput,
          "SPDAgg output dimension must be in 1..N*d_in");
  return d_in;
}

}  // namespace

SPDMatrix spd_agg_forward(const std::vector<SPDMatrix>& inputs, const Matrix& w_hat,
                          SpdAggContext* ctx) {
  const int d_in = check_shapes(inputs, w_hat);
  const auto d_out = w_hat.rows();
  Matrix y = Matrix::Zero(d_out, d_out);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto w = w_hat.middleCols(static_cast<Eigen::Index>(i) * d_in, d_in);
    y.noalias() += w * inputs[i].matrix() * w.transpose();
  }
  SPDMatrix out;
  try {
    out = assert_spd(SymMatrix(y));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotSPD) throw;
    fail(ErrorKind::NumericalFailure, std::string("SPDAgg output is not SPD: ") + e.what());
  }
  if (ctx != nullptr) {
    ctx->inputs = inputs;
    ctx->w_hat = w_hat;
  }
  return out;
}

SymMatrix spd_agg_blockdiag(const std::vector<SPDMatrix>& inputs, const Matrix& w_hat) {
  const int d_in = check_shapes(inputs, w_hat);
  const auto total = static_cast<Eigen::Index>(inputs.size()) * d_in;
  Matrix block = Matrix::Zero(total, total);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto off = static_cast<Eigen::Index>(i) * d_in;
    block.block(off, off, d_in, d_in) = inputs[i].matrix();
  }
  return SymMatrix(w_hat * block * w_hat.transpose());
}

SpdAggGrads spd_agg_backward(const SpdAggContext& ctx, const Matrix& dL_dY) {
  require(!ctx.inputs.empty(), ErrorKind::InvalidInput,
          "spd_agg_backward: context was not filled by a forward pass");
  const auto d_out = ctx.w_hat.rows();
  require(dL_dY.rows() == d_out && dL_dY.cols() == d_out, ErrorKind::InvalidInput,
          "spd_agg_backward: gradient must be d_out x d_out");
  const int d_in = ctx.inputs[0].dim();
  const Matrix g = sym_part(dL_dY);
  SpdAggGrads out;
  out.d_w_hat.resize(d_out, ctx.w_hat.cols());
  out.d_inputs.reserve(ctx.inputs.size());
  for (std::size_t i = 0; i < ctx.inputs.size(); ++i) {
    const auto off = static_cast<Eigen::Index>(i) * d_in;
    const auto w = ctx.w_hat.middleCols(off, d_in);
    const Matrix gw = g * w;
    out.d_w_hat.middleCols(off, d_in).noalias() = 2.0 * gw * ctx.inputs[i].matrix();
    out.d_inputs.emplace_back(w.transpose() * gw);
  }
  return out;
}

}  // namespace hgr
