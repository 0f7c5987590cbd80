#pragma once

// One (sub-sequence, finger) branch of the two Gaussian-aggregation
// sub-networks: first GaussAgg -> ReEig -> LogEig -> VecMat -> second GaussAgg.
//
//   spatial-temporal: a window of 2*t0+1 frames around every frame, all four
//     finger joints pooled; the second stage pools the per-frame vectors.
//   temporal-spatial: the branch is cut into n_chunks pieces and every
//     (joint, chunk) pair gets its own Gaussian; the second stage pools all
//     n_chunks * 4 vectors.

#include <utility>
#include <vector>

#include "hgr/layers/gauss_agg.hpp"
#include "hgr/layers/spectral.hpp"

namespace hgr {

/// Features of one branch: one (joints x dim) matrix per frame of the branch.
using BranchFeatures = std::vector<Matrix>;

struct SpdSettings {
  double epsilon = 1e-4;  // ReEig threshold
  double ridge = 1e-6;    // added to every covariance
};

enum class BranchKind { SpatialTemporal, TemporalSpatial };

struct BranchStage {
  std::vector<std::pair<int, int>> sources;  // (frame, joint) feeding each sample row
  GaussAggContext gauss;
  ReEigContext reeig;
  LogEigContext logeig;
};

struct BranchContext {
  BranchKind kind = BranchKind::SpatialTemporal;
  int frames = 0;
  int joints = 0;
  int dim = 0;
  std::vector<BranchStage> stages;
  GaussAggContext second;
};

SPDMatrix st_branch_forward(const BranchFeatures& features, int t0, const SpdSettings& settings,
                            BranchContext* ctx = nullptr);

SPDMatrix ts_branch_forward(const BranchFeatures& features, int n_chunks,
                            const SpdSettings& settings, BranchContext* ctx = nullptr);

/// Gradient with respect to the branch features; overlapping windows add up.
BranchFeatures branch_backward(const BranchContext& ctx, const Matrix& dL_dY);

}  // namespace hgr
