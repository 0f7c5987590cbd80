#include "hgr/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "hgr/parallel.hpp"

namespace hgr {

namespace {

int argmax(const Vector& v) {
  int best = 0;
  for (int k = 1; k < v.size(); ++k) {
    if (v(k) > v(best)) best = k;
  }
  return best;
}

std::vector<SkeletonSequence> prepare_all(const std::vector<SkeletonSequence>& sequences,
                                          const NetworkConfig& config, int workers) {
  std::vector<SkeletonSequence> out(sequences.size());
  parallel_for(static_cast<int>(sequences.size()), workers, [&](int i, int) {
    out[static_cast<std::size_t>(i)] = prepare_sequence(sequences[static_cast<std::size_t>(i)], config);
  });
  return out;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::ConfigError, "cannot write " + file.string());
  out << text;
}

struct ItemResult {
  double loss = 0;
  bool correct = false;
};

}  // namespace

TrainResult train_network(const std::vector<SkeletonSequence>& sequences,
                          const NetworkConfig& config, const TrainOptions& options) {
  return train_network(sequences, config, options, NetworkParams::init(config, options.seed));
}

TrainResult train_network(const std::vector<SkeletonSequence>& sequences,
                          const NetworkConfig& config, const TrainOptions& options,
                          NetworkParams params) {
  config.validate();
  params.check(config);
  require(options.epochs >= 0, ErrorKind::ConfigError, "epochs must be >= 0");
  require(options.batch_size >= 1, ErrorKind::ConfigError, "batch size must be >= 1");
  require(std::isfinite(options.lr) && options.lr > 0, ErrorKind::ConfigError,
          "learning rate must be positive");
  require(!sequences.empty(), ErrorKind::ConfigError, "training set is empty");
  for (const auto& s : sequences) {
    require(s.label >= 0 && s.label < config.n_classes, ErrorKind::ConfigError,
            "label " + std::to_string(s.label) + " of " + (s.source.empty() ? "a sequence" : s.source) +
                " is outside [0, n_classes = " + std::to_string(config.n_classes) + ")");
  }
  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);

  const std::vector<SkeletonSequence> data = prepare_all(sequences, config, options.workers);
  const int n = static_cast<int>(data.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // Separate stream from the one used for initialization.
  std::mt19937_64 shuffle_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainResult result;
  std::string timings;
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0;
    int correct = 0;
    for (int b0 = 0; b0 < n; b0 += options.batch_size) {
      const int bn = std::min(options.batch_size, n - b0);
      std::vector<ItemResult> items(static_cast<std::size_t>(bn));
      const int workers = std::min(options.workers, bn);
      std::vector<GradientSet> slots(static_cast<std::size_t>(options.deterministic ? bn : std::max(workers, 1)),
                                     GradientSet::zeros(config));
      parallel_for(bn, workers, [&](int k, int w) {
        const SkeletonSequence& seq = data[static_cast<std::size_t>(order[static_cast<std::size_t>(b0 + k)])];
        ForwardContext ctx;
        const ForwardResult fr = network_forward(seq, params, config, &ctx);
        ItemResult& it = items[static_cast<std::size_t>(k)];
        it.loss = cross_entropy(fr.probs, seq.label);
        it.correct = argmax(fr.probs) == seq.label;
        GradientSet g = network_backward(ctx, seq.label);
        if (options.deterministic) {
          slots[static_cast<std::size_t>(k)] = std::move(g);
        } else {
          slots[static_cast<std::size_t>(w)] += g;
        }
      });
      double batch_loss = 0;
      for (const auto& it : items) batch_loss += it.loss;
      if (!std::isfinite(batch_loss)) {
        std::string ids;
        for (int k = 0; k < bn; ++k) {
          ids += (k > 0 ? "," : "") + std::to_string(order[static_cast<std::size_t>(b0 + k)]);
        }
        fail(ErrorKind::NumericalFailure, "non-finite loss in epoch " + std::to_string(epoch) +
                                              ", batch of sequences [" + ids + "]");
      }
      GradientSet total = std::move(slots[0]);
      for (std::size_t s = 1; s < slots.size(); ++s) total += slots[s];
      total *= 1.0 / bn;
      for (int l = 0; l < kFilters; ++l) {
        params.conv.W[l] = euclid_sgd_step(params.conv.W[l], total.conv.W[l], options.lr);
      }
      params.fc.F = euclid_sgd_step(params.fc.F, total.fc_F, options.lr);
      params.fc.c = euclid_sgd_step(params.fc.c, total.fc_c, options.lr);
      params.w_hat = stiefel_step(StiefelPoint::checked(params.w_hat), total.w_hat, options.lr).matrix();
      loss_sum += batch_loss;
      for (const auto& it : items) correct += it.correct ? 1 : 0;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_sum / n;
    rec.accuracy = static_cast<double>(correct) / n;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.epochs.push_back(rec);
    if (!options.out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%02d.ckpt", epoch);
      save_checkpoint(options.out_dir / name, params, config);
      char line[96];
      std::snprintf(line, sizeof line, "epoch=%d seconds=%.3f\n", epoch, rec.seconds);
      timings += line;
      write_text(options.out_dir / "manifest.txt", format_manifest(config, options, result.epochs));
      write_text(options.out_dir / "timings.txt", timings);
    }
    if (options.on_epoch) options.on_epoch(epoch, rec.mean_loss, rec.accuracy);
  }
  result.params = std::move(params);
  return result;
}

std::pair<double, double> evaluate_loss(const std::vector<SkeletonSequence>& sequences,
                                        const NetworkParams& params, const NetworkConfig& config,
                                        int workers) {
  std::vector<ItemResult> items(sequences.size());
  parallel_for(static_cast<int>(sequences.size()), workers, [&](int i, int) {
    const SkeletonSequence seq = prepare_sequence(sequences[static_cast<std::size_t>(i)], config);
    const ForwardResult fr = network_forward(seq, params, config);
    items[static_cast<std::size_t>(i)] = {cross_entropy(fr.probs, seq.label), argmax(fr.probs) == seq.label};
  });
  double loss = 0;
  int correct = 0;
  for (const auto& it : items) {
    loss += it.loss;
    correct += it.correct ? 1 : 0;
  }
  const double n = std::max<double>(1.0, static_cast<double>(items.size()));
  return {loss / n, correct / n};
}

FeatureSet extract_feature_set(const std::vector<SkeletonSequence>& sequences,
                               const NetworkParams& params, const NetworkConfig& config,
                               int workers) {
  config.validate();
  params.check(config);
  FeatureSet set;
  set.labels.resize(sequences.size());
  set.X.resize(static_cast<Eigen::Index>(sequences.size()), config.feature_length());
  parallel_for(static_cast<int>(sequences.size()), workers, [&](int i, int) {
    const auto& s = sequences[static_cast<std::size_t>(i)];
    set.labels[static_cast<std::size_t>(i)] = s.label;
    set.X.row(i) = extract_features(prepare_sequence(s, config), params, config).transpose();
  });
  return set;
}

std::string format_manifest(const NetworkConfig& config, const TrainOptions& options,
                            const std::vector<EpochRecord>& epochs) {
  std::ostringstream out;
  out << "format=hgrnet-manifest-1\n"
      << "dataset=" << options.dataset_id << "\n"
      << "seed=" << options.seed << "\n"
      << "epochs=" << options.epochs << "\n"
      << "batch_size=" << options.batch_size << "\n"
      << "lr=" << g17(options.lr) << "\n"
      << "deterministic=" << (options.deterministic ? 1 : 0) << "\n";
  std::istringstream cfg(config.to_text());
  std::string line;
  while (std::getline(cfg, line)) out << "config." << line << "\n";
  for (const auto& e : epochs) {
    out << "epoch=" << e.epoch << " loss=" << g17(e.mean_loss) << " accuracy=" << g17(e.accuracy) << "\n";
  }
  return out.str();
}

void save_checkpoint(const std::filesystem::path& file, const NetworkParams& params,
                     const NetworkConfig& config) {
  params.to_archive(config).save(file, kCheckpointMagic);
}

std::pair<NetworkConfig, NetworkParams> load_checkpoint(const std::filesystem::path& file) {
  const TensorArchive a = TensorArchive::load(file, kCheckpointMagic);
  NetworkConfig config = NetworkParams::config_from_archive(a);
  NetworkParams params = NetworkParams::from_archive(a, config);
  return {config, std::move(params)};
}

}  // namespace hgr
