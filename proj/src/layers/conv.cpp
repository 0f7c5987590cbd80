#include "hgr/layers/conv.hpp"

#include <string>

namespace hgr {

ConvWeights ConvWeights::zeros(int out_dim) {
  require(out_dim >= 1, ErrorKind::InvalidInput, "conv output dimension must be >= 1");
  ConvWeights w;
  for (auto& m : w.W) m = Matrix::Zero(out_dim, 3);
  return w;
}

namespace {

void check_weights(const ConvWeights& weights) {
  const auto d = weights.W[0].rows();
  require(d >= 1, ErrorKind::InvalidInput, "conv weights are empty");
  for (const auto& m : weights.W) {
    require(m.rows() == d && m.cols() == 3, ErrorKind::InvalidInput,
            "conv filters must all be out_dim x 3");
    require(m.allFinite(), ErrorKind::InvalidInput, "conv filters must be finite");
  }
}

}  // namespace

FeatureSequence conv_forward(const FeatureSequence& coords, const ConvWeights& weights,
                             const JointGrid& grid, ConvContext* ctx) {
  check_weights(weights);
  const int d = weights.out_dim();
  FeatureSequence out;
  out.reserve(coords.size());
  for (std::size_t t = 0; t < coords.size(); ++t) {
    const Matrix& p0 = coords[t];
    require(p0.rows() == kGridNodes && p0.cols() == 3, ErrorKind::InvalidInput,
            "conv input frame " + std::to_string(t) + " must be 20 x 3");
    require(p0.allFinite(), ErrorKind::InvalidInput, "conv input must be finite");
    Matrix p = Matrix::Zero(kGridNodes, d);
    for (int i = 0; i < kGridNodes; ++i) {
      for (const auto& nb : grid.neighbors(kFirstNodeId + i)) {
        p.row(i).noalias() +=
            (weights.W[nb.label - 1] * p0.row(JointGrid::index_of(nb.node)).transpose()).transpose();
      }
    }
    out.push_back(std::move(p));
  }
  if (ctx != nullptr) {
    ctx->input = coords;
    ctx->weights = weights;
    ctx->grid = grid;
  }
  return out;
}

ConvGrads conv_backward(const ConvContext& ctx, const FeatureSequence& d_out) {
  const int d = ctx.weights.out_dim();
  require(d_out.size() == ctx.input.size(), ErrorKind::InvalidInput,
          "conv_backward: frame count mismatch");
  ConvGrads g;
  g.d_weights = ConvWeights::zeros(d);
  g.d_input.reserve(d_out.size());
  for (std::size_t t = 0; t < d_out.size(); ++t) {
    const Matrix& gp = d_out[t];
    require(gp.rows() == kGridNodes && gp.cols() == d, ErrorKind::InvalidInput,
            "conv_backward: gradient frame must be 20 x out_dim");
    const Matrix& p0 = ctx.input[t];
    Matrix gin = Matrix::Zero(kGridNodes, 3);
    for (int i = 0; i < kGridNodes; ++i) {
      for (const auto& nb : ctx.grid.neighbors(kFirstNodeId + i)) {
        const int j = JointGrid::index_of(nb.node);
        g.d_weights.W[nb.label - 1].noalias() += gp.row(i).transpose() * p0.row(j);
        gin.row(j).noalias() += gp.row(i) * ctx.weights.W[nb.label - 1];
      }
    }
    g.d_input.push_back(std::move(gin));
  }
  return g;
}

}  // namespace hgr
