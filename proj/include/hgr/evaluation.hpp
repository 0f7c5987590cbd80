#pragma once

// SVM evaluation reports and ablation sweeps.

#include <string>
#include <vector>

#include "hgr/svm.hpp"
#include "hgr/training.hpp"

namespace hgr {

struct ClassifyReport {
  int n_classes = 0;
  int n_samples = 0;
  double accuracy = 0;
  Eigen::MatrixXi confusion;  // rows: true class, cols: predicted class
  std::vector<int> predictions;

  /// Accuracy with four decimals followed by the confusion matrix.
  std::string to_text() const;
  /// Line-oriented records; see docs/formats.md.
  std::string to_records() const;
};

/// Predicts every row of `test`. Throws InvalidInput when dimensions differ.
ClassifyReport evaluate_svm(const SvmModel& model, const FeatureSet& test);

enum class AblationKnob { T0, NChunks, GridMode, Variant };

/// "t0", "N_S" (or "n_chunks"), "grid_mode", "variant"; throws ConfigError.
AblationKnob parse_knob(const std::string& text);
std::string to_string(AblationKnob knob);
/// Copy of `base` with the knob set from `value`; validated.
NetworkConfig apply_knob(const NetworkConfig& base, AblationKnob knob, const std::string& value);

struct AblationRow {
  std::string value;
  double final_loss = 0;
  double accuracy = 0;  // SVM test accuracy
};

/// For each value in order: train, extract train/test features, fit the SVM
/// and score the test split. out_dir in `train` (if set) gets one
/// subdirectory per value.
std::vector<AblationRow> run_ablation(const NetworkConfig& base, AblationKnob knob,
                                      const std::vector<std::string>& values,
                                      const std::vector<SkeletonSequence>& train_set,
                                      const std::vector<SkeletonSequence>& test_set,
                                      const TrainOptions& train, const SvmOptions& svm);

/// Two-column table: knob value and accuracy (%).
std::string format_ablation_table(AblationKnob knob, const std::vector<AblationRow>& rows);

}  // namespace hgr
