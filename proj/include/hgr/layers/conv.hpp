#pragma once

#include <array>
#include <vector>

#include "hgr/skeleton.hpp"
#include "hgr/symmat.hpp"

namespace hgr {

/// Per-frame node features: one (20 x dim) matrix per frame, rows in grid order.
using FeatureSequence = std::vector<Matrix>;

/// Nine filter matrices (out_dim x 3), indexed by filter label - 1.
struct ConvWeights {
  std::array<Matrix, kFilters> W;

  static ConvWeights zeros(int out_dim);
  int out_dim() const { return static_cast<int>(W[0].rows()); }
};

struct ConvContext {
  FeatureSequence input;
  ConvWeights weights;
  JointGrid grid;
};

struct ConvGrads {
  FeatureSequence d_input;
  ConvWeights d_weights;
};

/// p_i^t = sum over neighbors j of W_{l(j,i)} p0_j^t, weights shared by all frames.
FeatureSequence conv_forward(const FeatureSequence& coords, const ConvWeights& weights,
                             const JointGrid& grid, ConvContext* ctx = nullptr);

ConvGrads conv_backward(const ConvContext& ctx, const FeatureSequence& d_out);

}  // namespace hgr
