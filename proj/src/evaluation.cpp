#include "hgr/evaluation.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace hgr {

std::string ClassifyReport::to_text() const {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "accuracy: %.4f (%d samples)\n", accuracy, n_samples);
  out << buf << "confusion matrix (rows: true class, columns: predicted class)\n";
  out << "     ";
  for (int j = 0; j < n_classes; ++j) {
    std::snprintf(buf, sizeof buf, " %5d", j);
    out << buf;
  }
  out << "\n";
  for (int i = 0; i < n_classes; ++i) {
    std::snprintf(buf, sizeof buf, "%5d", i);
    out << buf;
    for (int j = 0; j < n_classes; ++j) {
      std::snprintf(buf, sizeof buf, " %5d", confusion(i, j));
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

std::string ClassifyReport::to_records() const {
  std::ostringstream out;
  char buf[64];
  out << "format hgrnet-report-1\n";
  out << "n_samples " << n_samples << "\n";
  out << "n_classes " << n_classes << "\n";
  std::snprintf(buf, sizeof buf, "accuracy %.4f\n", accuracy);
  out << buf;
  for (int i = 0; i < n_classes; ++i) {
    for (int j = 0; j < n_classes; ++j) out << "confusion " << i << " " << j << " " << confusion(i, j) << "\n";
  }
  for (std::size_t k = 0; k < predictions.size(); ++k) out << "prediction " << k << " " << predictions[k] << "\n";
  return out.str();
}

ClassifyReport evaluate_svm(const SvmModel& model, const FeatureSet& test) {
  require(test.size() == 0 || test.X.cols() == model.dim(), ErrorKind::InvalidInput,
          "test features have dimension " + std::to_string(test.X.cols()) + ", model expects " +
              std::to_string(model.dim()));
  ClassifyReport r;
  int max_label = model.n_classes() - 1;
  for (int l : test.labels) max_label = std::max(max_label, l);
  r.n_classes = max_label + 1;
  r.n_samples = test.size();
  r.confusion = Eigen::MatrixXi::Zero(r.n_classes, r.n_classes);
  int correct = 0;
  for (int i = 0; i < test.size(); ++i) {
    const int pred = svm_predict(model, test.X.row(i).transpose());
    const int truth = test.labels[static_cast<std::size_t>(i)];
    r.predictions.push_back(pred);
    r.confusion(truth, pred) += 1;
    correct += pred == truth ? 1 : 0;
  }
  r.accuracy = r.n_samples > 0 ? static_cast<double>(correct) / r.n_samples : 0.0;
  return r;
}

AblationKnob parse_knob(const std::string& text) {
  if (text == "t0") return AblationKnob::T0;
  if (text == "N_S" || text == "n_chunks") return AblationKnob::NChunks;
  if (text == "grid_mode") return AblationKnob::GridMode;
  if (text == "variant") return AblationKnob::Variant;
  fail(ErrorKind::ConfigError, "unknown ablation knob '" + text + "' (expected t0, N_S, grid_mode or variant)");
}

std::string to_string(AblationKnob knob) {
  switch (knob) {
    case AblationKnob::T0: return "t0";
    case AblationKnob::NChunks: return "N_S";
    case AblationKnob::GridMode: return "grid_mode";
    case AblationKnob::Variant: return "variant";
  }
  return "?";
}

NetworkConfig apply_knob(const NetworkConfig& base, AblationKnob knob, const std::string& value) {
  NetworkConfig c = base;
  auto as_int = [&]() {
    int v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size()) {
      fail(ErrorKind::ConfigError, "ablation value '" + value + "' is not an integer");
    }
    return v;
  };
  switch (knob) {
    case AblationKnob::T0: c.t0 = as_int(); break;
    case AblationKnob::NChunks: c.n_chunks = as_int(); break;
    case AblationKnob::GridMode: c.grid_mode = parse_grid_mode(value); break;
    case AblationKnob::Variant: c.variant = parse_variant(value); break;
  }
  c.validate();
  return c;
}

std::vector<AblationRow> run_ablation(const NetworkConfig& base, AblationKnob knob,
                                      const std::vector<std::string>& values,
                                      const std::vector<SkeletonSequence>& train_set,
                                      const std::vector<SkeletonSequence>& test_set,
                                      const TrainOptions& train, const SvmOptions& svm) {
  // Validate every value before spending time on training.
  std::vector<NetworkConfig> configs;
  for (const auto& v : values) configs.push_back(apply_knob(base, knob, v));
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    TrainOptions opts = train;
    if (!train.out_dir.empty()) opts.out_dir = train.out_dir / (to_string(knob) + "_" + values[i]);
    const TrainResult tr = train_network(train_set, configs[i], opts);
    const FeatureSet train_features = extract_feature_set(train_set, tr.params, configs[i], train.workers);
    const FeatureSet test_features = extract_feature_set(test_set, tr.params, configs[i], train.workers);
    const SvmModel model = svm_train(train_features.X, train_features.labels, svm);
    AblationRow row;
    row.value = values[i];
    row.final_loss = tr.epochs.empty() ? 0.0 : tr.epochs.back().mean_loss;
    row.accuracy = evaluate_svm(model, test_features).accuracy;
    rows.push_back(row);
  }
  return rows;
}

std::string format_ablation_table(AblationKnob knob, const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-12s %12s %12s\n", to_string(knob).c_str(), "accuracy(%)", "train_loss");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %12.2f %12.4f\n", r.value.c_str(), 100.0 * r.accuracy, r.final_loss);
    out << buf;
  }
  return out.str();
}

}  // namespace hgr
