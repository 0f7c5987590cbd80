#pragma once

// Mini-batch training of the network and feature extraction.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hgr/network.hpp"
#include "hgr/svm.hpp"

namespace hgr {

struct TrainOptions {
  int epochs = 15;
  int batch_size = 30;
  double lr = 0.01;
  std::uint64_t seed = 1;
  // Per-sequence gradients are summed in index order; otherwise each worker
  // keeps its own running sum and the sums are combined afterwards.
  bool deterministic = true;
  int workers = 1;
  std::filesystem::path out_dir;  // empty: no checkpoints or manifest
  std::string dataset_id = "unnamed";
  std::function<void(int epoch, double loss, double accuracy)> on_epoch;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0;
  double accuracy = 0;  // running training accuracy over the epoch
  double seconds = 0;
};

struct TrainResult {
  NetworkParams params;
  std::vector<EpochRecord> epochs;
};

/// Resamples every sequence to config.n_frames and trains from
/// NetworkParams::init(config, seed). Labels must lie in [0, n_classes)
/// (ConfigError otherwise). A non-finite batch loss throws NumericalFailure
/// naming the sequence indices of the batch. When out_dir is set, writes
/// epoch_NN.ckpt after every epoch, manifest.txt and timings.txt.
TrainResult train_network(const std::vector<SkeletonSequence>& sequences,
                          const NetworkConfig& config, const TrainOptions& options);

/// Same, continuing from given parameters.
TrainResult train_network(const std::vector<SkeletonSequence>& sequences,
                          const NetworkConfig& config, const TrainOptions& options,
                          NetworkParams params);

/// Mean cross-entropy and accuracy of the softmax head over `sequences`.
std::pair<double, double> evaluate_loss(const std::vector<SkeletonSequence>& sequences,
                                        const NetworkParams& params, const NetworkConfig& config,
                                        int workers = 1);

/// One feature row per sequence, in input order.
FeatureSet extract_feature_set(const std::vector<SkeletonSequence>& sequences,
                               const NetworkParams& params, const NetworkConfig& config,
                               int workers = 1);

/// Deterministic run description: config, seed, dataset and per-epoch records.
std::string format_manifest(const NetworkConfig& config, const TrainOptions& options,
                            const std::vector<EpochRecord>& epochs);

void save_checkpoint(const std::filesystem::path& file, const NetworkParams& params,
                     const NetworkConfig& config);
/// Returns the stored config and parameters.
std::pair<NetworkConfig, NetworkParams> load_checkpoint(const std::filesystem::path& file);

}  // namespace hgr
