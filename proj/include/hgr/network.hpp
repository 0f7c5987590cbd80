#pragma once

// The full network: grid convolution, 30 spatial-temporal and 30
// temporal-spatial branches, SPD aggregation and the LogEig/FC/softmax head.
//
// SPDAgg column blocks follow the branch declaration order: ST branches
// (sub-sequence 1..6 x finger 1..5) first, then TS branches in the same order.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hgr/layers/branch.hpp"
#include "hgr/layers/conv.hpp"
#include "hgr/layers/head.hpp"
#include "hgr/layers/spd_agg.hpp"
#include "hgr/manifold.hpp"
#include "hgr/skeleton.hpp"
#include "hgr/tensor_archive.hpp"

namespace hgr {

enum class Variant { StTs, StOnly, TsOnly };

std::string to_string(Variant v);
std::string to_string(GridMode m);
/// "st_ts", "st_only", "ts_only"; throws ConfigError otherwise.
Variant parse_variant(const std::string& text);
/// "full" or "physical"; throws ConfigError otherwise.
GridMode parse_grid_mode(const std::string& text);

struct NetworkConfig {
  int conv_dim = 9;       // d_out^c
  int spd_out_dim = 200;  // d_out^s
  int n_frames = 500;     // N_F
  int t0 = 1;
  int n_chunks = 15;      // N_S
  double epsilon = 1e-4;
  int n_classes = 14;
  Variant variant = Variant::StTs;
  GridMode grid_mode = GridMode::Full;
  double ridge = 1e-6;

  /// d_in^s = (d_out^c + 1)(d_out^c + 2)/2 + 1.
  int spd_in_dim() const;
  /// Number of SPDAgg inputs: 60 for st_ts, 30 otherwise.
  int n_branches() const;
  bool uses_st() const { return variant != Variant::TsOnly; }
  bool uses_ts() const { return variant != Variant::StOnly; }
  int feature_length() const { return sym_vec_length(spd_out_dim); }
  SpdSettings spd_settings() const { return {epsilon, ridge}; }

  /// Throws ConfigError on any inconsistency.
  void validate() const;

  /// key=value lines; '#' starts a comment. Unknown keys and bad values
  /// throw ConfigError. The result is validated.
  static NetworkConfig parse(const std::string& text, const std::string& origin = "<config>");
  static NetworkConfig load(const std::filesystem::path& file);
  /// Canonical key=value form accepted by parse().
  std::string to_text() const;

  bool operator==(const NetworkConfig&) const = default;
};

/// d_out^c=2, N_F=12, d_out^s=4, N_S=2, two classes.
NetworkConfig tiny_config();

struct NetworkParams {
  ConvWeights conv;
  Matrix w_hat;  // d_out^s x (N * d_in^s), orthonormal rows
  FcWeights fc;

  /// Conv filters uniform in [-1/3, 1/3], w_hat from stiefel_init, FC zero.
  static NetworkParams init(const NetworkConfig& config, std::uint64_t seed);

  /// Throws ConfigError when a shape disagrees with the config.
  void check(const NetworkConfig& config) const;

  TensorArchive to_archive(const NetworkConfig& config) const;
  /// Reads the parameters and checks them against `config`.
  static NetworkParams from_archive(const TensorArchive& archive, const NetworkConfig& config);
  /// The config stored alongside the parameters.
  static NetworkConfig config_from_archive(const TensorArchive& archive);
};

struct GradientSet {
  ConvWeights conv;
  Matrix w_hat;  // Euclidean gradient
  Matrix fc_F;
  Vector fc_c;

  static GradientSet zeros(const NetworkConfig& config);
  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double s);
  bool all_finite() const;
  /// Largest absolute entry over every tensor.
  double max_abs() const;
};

struct ForwardContext {
  NetworkConfig config;
  BranchPlan plan;
  ConvContext conv;
  std::vector<BranchContext> branches;  // declaration order
  SpdAggContext agg;
  HeadContext head;
};

struct ForwardResult {
  Vector probs;
  SPDMatrix y_final;
};

/// Grid-ordered 20 x 3 coordinates per frame. 22-joint sequences drop the
/// wrist and palm; 20-joint sequences are taken as already in grid order.
FeatureSequence grid_coordinates(const SkeletonSequence& seq);

/// Resamples to config.n_frames and validates the joint count.
SkeletonSequence prepare_sequence(const SkeletonSequence& seq, const NetworkConfig& config);

/// `seq` must already have config.n_frames frames.
ForwardResult network_forward(const SkeletonSequence& seq, const NetworkParams& params,
                              const NetworkConfig& config, ForwardContext* ctx = nullptr);

/// Gradients of the cross-entropy against `label` (0-based).
GradientSet network_backward(const ForwardContext& ctx, int label);

/// Log-Euclidean representation of Y_final, length d_out^s(d_out^s+1)/2.
Vector extract_features(const SkeletonSequence& seq, const NetworkParams& params,
                        const NetworkConfig& config);

}  // namespace hgr
