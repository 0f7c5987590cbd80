#pragma once

// L2-regularized L2-loss linear SVM, one-vs-rest, solved in the dual by
// coordinate descent. No bias term.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hgr/symmat.hpp"

namespace hgr {

enum class Multiclass { OneVsRest };

struct SvmOptions {
  double C = 1.0;
  double tol = 0.1;
  int max_passes = 1000;
  std::uint64_t seed = 1;
  Multiclass multiclass = Multiclass::OneVsRest;
};

struct SvmModel {
  Matrix W;  // n_classes x d, row k is w_k
  double C = 1.0;
  double tol = 0.1;

  int n_classes() const { return static_cast<int>(W.rows()); }
  int dim() const { return static_cast<int>(W.cols()); }

  void save(const std::filesystem::path& file) const;
  static SvmModel load(const std::filesystem::path& file);
};

/// Per-class solver statistics.
struct SvmTrace {
  std::vector<std::vector<double>> dual_objective;  // [class][pass], after each pass
  std::vector<int> passes;
  std::vector<double> final_violation;              // max |projected gradient|
};

/// Rows of X are samples; labels are 0-based. Classes are 0..max(y).
/// Throws InvalidInput for fewer than two samples, a single class or
/// non-finite features.
SvmModel svm_train(const Matrix& X, const std::vector<int>& y, const SvmOptions& options = {},
                   SvmTrace* trace = nullptr);

/// argmax_k w_k^T x with ties going to the smallest class id.
int svm_predict(const SvmModel& model, const Vector& x);

/// Binary dual objective 1/2 a^T (Q + D) a - sum(a) for labels in {-1, +1}.
double svm_dual_objective(const Matrix& X, const Vector& signs, const Vector& alpha, double C);
/// Binary primal objective 1/2 |w|^2 + C sum max(0, 1 - s_i w^T x_i)^2.
double svm_primal_objective(const Matrix& X, const Vector& signs, const Vector& w, double C);

// ---------------------------------------------------------------------------
// Feature files: one sample per line, "label v1 ... vd", labels 0-based.

struct FeatureSet {
  std::vector<int> labels;
  Matrix X;  // n x d

  int size() const { return static_cast<int>(labels.size()); }
};

void write_features(const std::filesystem::path& file, const FeatureSet& set);
/// Throws ParseError naming file:line on malformed lines or ragged rows.
FeatureSet read_features(const std::filesystem::path& file);

}  // namespace hgr
