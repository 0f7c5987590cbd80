#include "hgr/layers/branch.hpp"

#include <algorithm>
#include <string>

#include "hgr/skeleton.hpp"

namespace hgr {

namespace {

void check_features(const BranchFeatures& features) {
  require(!features.empty(), ErrorKind::InvalidInput, "branch has no frames");
  const auto joints = features[0].rows();
  const auto dim = features[0].cols();
  require(joints >= 1 && dim >= 1, ErrorKind::InvalidInput, "branch features are empty");
  for (const auto& f : features) {
    require(f.rows() == joints && f.cols() == dim, ErrorKind::InvalidInput,
            "branch frames must share one shape");
  }
}

// Runs the first-stage pipeline on the listed (frame, joint) samples and
// returns the vectorized log matrix.
Vector run_stage(const BranchFeatures& features, std::vector<std::pair<int, int>> sources,
                 const SpdSettings& settings, BranchStage* stage) {
  const auto dim = features[0].cols();
  Matrix samples(static_cast<Eigen::Index>(sources.size()), dim);
  for (std::size_t r = 0; r < sources.size(); ++r) {
    samples.row(static_cast<Eigen::Index>(r)) = features[sources[r].first].row(sources[r].second);
  }
  BranchStage local;
  BranchStage& s = stage != nullptr ? *stage : local;
  const SPDMatrix y = gauss_agg_forward(samples, settings.ridge, &s.gauss);
  const SPDMatrix rect = reeig_forward(y, settings.epsilon, &s.reeig);
  const SymMatrix lg = logeig_forward(rect, &s.logeig);
  s.sources = std::move(sources);
  return vecmat_forward(lg);
}

SPDMatrix second_stage(const Matrix& vectors, const SpdSettings& settings, BranchContext* ctx) {
  GaussAggContext local;
  return gauss_agg_forward(vectors, settings.ridge, ctx != nullptr ? &ctx->second : &local);
}

}  // namespace

SPDMatrix st_branch_forward(const BranchFeatures& features, int t0, const SpdSettings& settings,
                            BranchContext* ctx) {
  check_features(features);
  require(t0 >= 0, ErrorKind::InvalidInput, "t0 must be non-negative");
  const int frames = static_cast<int>(features.size());
  const int joints = static_cast<int>(features[0].rows());
  const int dim = static_cast<int>(features[0].cols());
  require(frames >= 2 * t0 + 1, ErrorKind::InvalidInput,
          "branch of " + std::to_string(frames) + " frames is shorter than the window " +
              std::to_string(2 * t0 + 1));
  if (ctx != nullptr) {
    *ctx = BranchContext{};
    ctx->kind = BranchKind::SpatialTemporal;
    ctx->frames = frames;
    ctx->joints = joints;
    ctx->dim = dim;
    ctx->stages.resize(frames);
  }
  Matrix vectors(frames, sym_vec_length(dim + 1));
  for (int t = 0; t < frames; ++t) {
    const int lo = std::max(0, t - t0);
    const int hi = std::min(frames - 1, t + t0);
    std::vector<std::pair<int, int>> sources;
    for (int j = 0; j < joints; ++j) {
      for (int i = lo; i <= hi; ++i) sources.emplace_back(i, j);
    }
    vectors.row(t) = run_stage(features, std::move(sources), settings,
                               ctx != nullptr ? &ctx->stages[t] : nullptr)
                         .transpose();
  }
  return second_stage(vectors, settings, ctx);
}

SPDMatrix ts_branch_forward(const BranchFeatures& features, int n_chunks,
                            const SpdSettings& settings, BranchContext* ctx) {
  check_features(features);
  const int frames = static_cast<int>(features.size());
  const int joints = static_cast<int>(features[0].rows());
  const int dim = static_cast<int>(features[0].cols());
  require(n_chunks >= 1 && frames >= 2 * n_chunks, ErrorKind::InvalidInput,
          "branch of " + std::to_string(frames) + " frames cannot hold " +
              std::to_string(n_chunks) + " chunks of at least 2 frames");
  const auto chunks = split_range({1, frames}, n_chunks);
  if (ctx != nullptr) {
    *ctx = BranchContext{};
    ctx->kind = BranchKind::TemporalSpatial;
    ctx->frames = frames;
    ctx->joints = joints;
    ctx->dim = dim;
    ctx->stages.resize(static_cast<std::size_t>(joints) * n_chunks);
  }
  Matrix vectors(joints * n_chunks, sym_vec_length(dim + 1));
  int row = 0;
  for (int j = 0; j < joints; ++j) {
    for (const auto& chunk : chunks) {
      std::vector<std::pair<int, int>> sources;
      for (int t = chunk.begin; t <= chunk.end; ++t) sources.emplace_back(t - 1, j);
      vectors.row(row) = run_stage(features, std::move(sources), settings,
                                   ctx != nullptr ? &ctx->stages[row] : nullptr)
                             .transpose();
      ++row;
    }
  }
  return second_stage(vectors, settings, ctx);
}

BranchFeatures branch_backward(const BranchContext& ctx, const Matrix& dL_dY) {
  require(!ctx.stages.empty() && ctx.second.samples.rows() == static_cast<Eigen::Index>(ctx.stages.size()),
          ErrorKind::InvalidInput, "branch_backward: context was not filled by a forward pass");
  const Matrix d_vectors = gauss_agg_backward(ctx.second, dL_dY);
  BranchFeatures grad(ctx.frames, Matrix::Zero(ctx.joints, ctx.dim));
  for (std::size_t r = 0; r < ctx.stages.size(); ++r) {
    const BranchStage& s = ctx.stages[r];
    const SymMatrix d_log = vecmat_backward(ctx.dim + 1, d_vectors.row(static_cast<Eigen::Index>(r)).transpose());
    const SymMatrix d_rect = logeig_backward(s.logeig, d_log.matrix());
    const SymMatrix d_gauss = reeig_backward(s.reeig, d_rect.matrix());
    const Matrix d_samples = gauss_agg_backward(s.gauss, d_gauss.matrix());
    for (std::size_t k = 0; k < s.sources.size(); ++k) {
      grad[s.sources[k].first].row(s.sources[k].second) += d_samples.row(static_cast<Eigen::Index>(k));
    }
  }
  return grad;
}

}  // namespace hgr
