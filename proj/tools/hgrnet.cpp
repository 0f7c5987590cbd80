// hgrnet: train the network, extract features, fit/evaluate the SVM, run the
// gradient checks and ablation sweeps.
//
// Exit codes: 0 success, 1 numerical or check failure, 2 usage/config/data error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hgr/dataset.hpp"
#include "hgr/evaluation.hpp"
#include "hgr/gradcheck.hpp"
#include "hgr/layers/gauss_agg.hpp"
#include "hgr/training.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct DataOptions {
  std::string root;
  std::string dataset = "dhg14";
  std::string split = "train";
};

struct NetOverrides {
  std::string config_path;
  std::optional<std::string> variant;
  std::optional<std::string> grid_mode;
};

struct TrainFlags {
  std::uint64_t seed = 1;
  bool deterministic = false;
  int workers = 1;
  int epochs = 15;
  int batch_size = 30;
  double lr = 0.01;
};

void add_data_options(CLI::App* cmd, DataOptions& d, bool with_split) {
  cmd->add_option("--data-root", d.root, "dataset root holding train.txt / test.txt")
      ->required()
      ->envname("HGRNET_DATA_ROOT");
  cmd->add_option("--dataset", d.dataset, "dhg14, dhg28 or fpha")
      ->check(CLI::IsMember({"dhg14", "dhg28", "fpha"}))
      ->envname("HGRNET_DATASET");
  if (with_split) {
    cmd->add_option("--split", d.split, "train, test, loso-train:<s> or loso-test:<s>");
  }
}

void add_net_options(CLI::App* cmd, NetOverrides& n) {
  cmd->add_option("--config", n.config_path, "key=value network config file")->envname("HGRNET_CONFIG");
  cmd->add_option("--variant", n.variant, "st_ts, st_only or ts_only");
  cmd->add_option("--grid-mode", n.grid_mode, "full or physical");
}

void add_train_flags(CLI::App* cmd, TrainFlags& t) {
  cmd->add_option("--seed", t.seed, "random seed")->envname("HGRNET_SEED");
  cmd->add_flag("--deterministic", t.deterministic, "sum per-sequence gradients in a fixed order")
      ->envname("HGRNET_DETERMINISTIC");
  cmd->add_option("--workers", t.workers, "worker threads")->check(CLI::PositiveNumber)->envname("HGRNET_WORKERS");
  cmd->add_option("--epochs", t.epochs, "training epochs")->check(CLI::NonNegativeNumber)->envname("HGRNET_EPOCHS");
  cmd->add_option("--batch-size", t.batch_size, "mini-batch size")->check(CLI::PositiveNumber)->envname("HGRNET_BATCH_SIZE");
  cmd->add_option("--lr", t.lr, "learning rate")->check(CLI::PositiveNumber)->envname("HGRNET_LR");
}

hgr::NetworkConfig resolve_config(const NetOverrides& n) {
  hgr::NetworkConfig c = n.config_path.empty() ? hgr::NetworkConfig{} : hgr::NetworkConfig::load(n.config_path);
  if (n.variant) c.variant = hgr::parse_variant(*n.variant);
  if (n.grid_mode) c.grid_mode = hgr::parse_grid_mode(*n.grid_mode);
  c.validate();
  return c;
}

std::vector<hgr::SkeletonSequence> load_split(const DataOptions& d, const std::string& split_text) {
  const hgr::Split split = hgr::Split::parse(split_text);
  if (d.dataset == "fpha") return hgr::load_fpha(d.root, split);
  return hgr::load_dhg(d.root, split,
                       d.dataset == "dhg28" ? hgr::DhgLabels::Gestures28 : hgr::DhgLabels::Gestures14);
}

hgr::TrainOptions to_train_options(const TrainFlags& t) {
  hgr::TrainOptions o;
  o.seed = t.seed;
  o.deterministic = t.deterministic;
  o.workers = t.workers;
  o.epochs = t.epochs;
  o.batch_size = t.batch_size;
  o.lr = t.lr;
  return o;
}

void write_file(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) hgr::fail(hgr::ErrorKind::ConfigError, "cannot write " + file.string());
  out << text;
}

void print_epoch(int epoch, double loss, double accuracy) {
  std::printf("epoch %2d  loss %.6f  train_acc %.4f\n", epoch, loss, accuracy);
  std::fflush(stdout);
}

int exit_code_for(hgr::ErrorKind kind) {
  switch (kind) {
    case hgr::ErrorKind::NumericalFailure:
    case hgr::ErrorKind::NotSPD:
    case hgr::ErrorKind::RankDeficient:
      return kExitFailure;
    default:
      return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPD-manifold hand gesture network"};
  app.require_subcommand(1);

  // train
  DataOptions train_data;
  NetOverrides train_net;
  TrainFlags train_flags;
  std::string train_out;
  auto* train = app.add_subcommand("train", "train the network and write per-epoch checkpoints");
  add_data_options(train, train_data, true);
  add_net_options(train, train_net);
  add_train_flags(train, train_flags);
  train->add_option("--out", train_out, "output directory")->required();

  // extract
  DataOptions ex_data;
  NetOverrides ex_net;
  std::string ex_checkpoint, ex_out;
  int ex_workers = 1;
  auto* extract = app.add_subcommand("extract", "write log-Euclidean features for a split");
  add_data_options(extract, ex_data, true);
  extract->add_option("--checkpoint", ex_checkpoint, "checkpoint file")->required();
  extract->add_option("--config", ex_net.config_path, "config the checkpoint must match")->envname("HGRNET_CONFIG");
  extract->add_option("--out", ex_out, "feature file")->required();
  extract->add_option("--workers", ex_workers, "worker threads")->check(CLI::PositiveNumber)->envname("HGRNET_WORKERS");

  // classify
  std::string cl_train, cl_test, cl_report, cl_model;
  hgr::SvmOptions svm;
  std::string multiclass = "ovr";
  auto* classify = app.add_subcommand("classify", "fit the linear SVM and score a test feature file");
  classify->add_option("--train-features", cl_train, "training feature file")->required();
  classify->add_option("--test-features", cl_test, "test feature file")->required();
  classify->add_option("--C", svm.C, "SVM cost")->check(CLI::PositiveNumber);
  classify->add_option("--tol", svm.tol, "stopping tolerance")->check(CLI::PositiveNumber);
  classify->add_option("--seed", svm.seed, "coordinate order seed")->envname("HGRNET_SEED");
  classify->add_option("--multiclass", multiclass, "multiclass scheme")->check(CLI::IsMember({"ovr"}));
  classify->add_option("--out", cl_report, "machine-readable report file");
  classify->add_option("--model", cl_model, "write the fitted model here");

  // gradcheck
  hgr::GradcheckOptions gc;
  std::string gc_fault;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
  gradcheck->add_option("--seed", gc.seed, "random seed")->envname("HGRNET_SEED");
  gradcheck->add_option("--instances", gc.layer_instances, "random instances per layer")->check(CLI::PositiveNumber);
  gradcheck->add_option("--network-instances", gc.network_instances, "end-to-end instances")
      ->check(CLI::NonNegativeNumber);
  gradcheck->add_option("--inject-fault", gc_fault, "corrupt a backward pass (testing aid)")
      ->check(CLI::IsMember({"gauss_agg"}));

  // ablate
  DataOptions ab_data;
  NetOverrides ab_net;
  TrainFlags ab_flags;
  std::string ab_knob, ab_out;
  std::vector<std::string> ab_values;
  hgr::SvmOptions ab_svm;
  auto* ablate = app.add_subcommand("ablate", "train/extract/classify once per knob value");
  add_data_options(ablate, ab_data, false);
  add_net_options(ablate, ab_net);
  add_train_flags(ablate, ab_flags);
  ablate->add_option("--knob", ab_knob, "t0, N_S, grid_mode or variant")->required();
  ablate->add_option("--values", ab_values, "knob values, in table order")->required()->expected(1, -1);
  ablate->add_option("--out", ab_out, "directory for per-value runs");
  ablate->add_option("--C", ab_svm.C, "SVM cost")->check(CLI::PositiveNumber);
  ablate->add_option("--tol", ab_svm.tol, "SVM stopping tolerance")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) {
      const hgr::NetworkConfig config = resolve_config(train_net);
      const auto sequences = load_split(train_data, train_data.split);
      hgr::TrainOptions opts = to_train_options(train_flags);
      opts.out_dir = train_out;
      opts.dataset_id = train_data.dataset + ":" + train_data.root + ":" + train_data.split;
      opts.on_epoch = print_epoch;
      const auto result = hgr::train_network(sequences, config, opts);
      std::printf("wrote %zu checkpoints and manifest.txt to %s\n", result.epochs.size(), train_out.c_str());
      return 0;
    }
    if (*extract) {
      auto [config, params] = hgr::load_checkpoint(ex_checkpoint);
      if (!ex_net.config_path.empty()) {
        const hgr::NetworkConfig wanted = hgr::NetworkConfig::load(ex_net.config_path);
        params.check(wanted);
        config = wanted;
      }
      const auto sequences = load_split(ex_data, ex_data.split);
      const hgr::FeatureSet features = hgr::extract_feature_set(sequences, params, config, ex_workers);
      hgr::write_features(ex_out, features);
      std::printf("wrote %d feature rows of dimension %d to %s\n", features.size(), config.feature_length(),
                  ex_out.c_str());
      return 0;
    }
    if (*classify) {
      const hgr::FeatureSet train_set = hgr::read_features(cl_train);
      const hgr::FeatureSet test_set = hgr::read_features(cl_test);
      const hgr::SvmModel model = hgr::svm_train(train_set.X, train_set.labels, svm);
      if (!cl_model.empty()) model.save(cl_model);
      const hgr::ClassifyReport report = hgr::evaluate_svm(model, test_set);
      std::fputs(report.to_text().c_str(), stdout);
      if (!cl_report.empty()) write_file(cl_report, report.to_records());
      return 0;
    }
    if (*gradcheck) {
      if (gc_fault == "gauss_agg") hgr::testing::set_gauss_agg_backward_fault(1.5);
      gc.include_network = gc.network_instances > 0;
      const hgr::GradcheckReport report = hgr::run_gradcheck(gc);
      std::fputs(report.to_text().c_str(), stdout);
      if (!report.passed()) {
        for (const auto& l : report.layers) {
          if (!l.passed()) std::fprintf(stderr, "gradient check failed: layer %s\n", l.layer.c_str());
        }
        return kExitFailure;
      }
      return 0;
    }
    if (*ablate) {
      const hgr::AblationKnob knob = hgr::parse_knob(ab_knob);
      const hgr::NetworkConfig base = resolve_config(ab_net);
      const auto train_set = load_split(ab_data, "train");
      const auto test_set = load_split(ab_data, "test");
      hgr::TrainOptions opts = to_train_options(ab_flags);
      if (!ab_out.empty()) opts.out_dir = ab_out;
      opts.dataset_id = ab_data.dataset + ":" + ab_data.root;
      const auto rows = hgr::run_ablation(base, knob, ab_values, train_set, test_set, opts, ab_svm);
      const std::string table = hgr::format_ablation_table(knob, rows);
      std::fputs(table.c_str(), stdout);
      if (!ab_out.empty()) write_file(fs::path(ab_out) / "ablation.txt", table);
      return 0;
    }
  } catch (const hgr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
