#include "hgr/svm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "hgr/tensor_archive.hpp"

namespace hgr {

namespace {

struct BinaryResult {
  Vector w;
  std::vector<double> objective;
  int passes = 0;
  double violation = 0;
};

BinaryResult solve_binary(const Matrix& X, const Vector& s, const Vector& sq_norms,
                          const SvmOptions& opt, std::uint64_t seed) {
  const auto n = X.rows();
  const double diag = 0.5 / opt.C;
  Vector alpha = Vector::Zero(n);
  BinaryResult r;
  r.w = Vector::Zero(X.cols());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Running objective: 1/2 |w|^2 + 1/2 diag |a|^2 - sum(a).
  double objective = 0;
  for (int pass = 0; pass < opt.max_passes; ++pass) {
    std::shuffle(order.begin(), order.end(), rng);
    double max_pg = 0;
    for (const auto i : order) {
      const double g = s(i) * X.row(i).dot(r.w) - 1.0 + diag * alpha(i);
      const double pg = alpha(i) == 0.0 ? std::min(g, 0.0) : g;
      max_pg = std::max(max_pg, std::abs(pg));
      if (pg == 0.0) continue;
      const double q = sq_norms(i) + diag;
      const double old = alpha(i);
      alpha(i) = std::max(old - g / q, 0.0);
      const double delta = alpha(i) - old;
      if (delta == 0.0) continue;
      r.w.noalias() += (delta * s(i)) * X.row(i).transpose();
      objective += delta * g + 0.5 * q * delta * delta;
    }
    r.objective.push_back(objective);
    r.passes = pass + 1;
    r.violation = max_pg;
    if (max_pg <= opt.tol) break;
  }
  return r;
}

}  // namespace

SvmModel svm_train(const Matrix& X, const std::vector<int>& y, const SvmOptions& options,
                   SvmTrace* trace) {
  require(options.C > 0 && options.tol > 0 && options.max_passes >= 1, ErrorKind::InvalidInput,
          "SVM needs C > 0, tol > 0 and max_passes >= 1");
  require(X.rows() >= 2, ErrorKind::InvalidInput, "SVM needs at least two samples");
  require(static_cast<std::size_t>(X.rows()) == y.size(), ErrorKind::InvalidInput,
          "SVM label count does not match the sample count");
  require(X.allFinite(), ErrorKind::InvalidInput, "SVM features must be finite");
  for (int label : y) require(label >= 0, ErrorKind::InvalidInput, "SVM labels must be >= 0");
  const int n_classes = *std::max_element(y.begin(), y.end()) + 1;
  const bool multi = std::any_of(y.begin(), y.end(), [&](int l) { return l != y[0]; });
  require(multi, ErrorKind::InvalidInput, "SVM training data contains a single class");

  const Vector sq_norms = X.rowwise().squaredNorm();
  SvmModel model;
  model.C = options.C;
  model.tol = options.tol;
  model.W = Matrix::Zero(n_classes, X.cols());
  if (trace != nullptr) *trace = SvmTrace{};
  std::mt19937_64 seeder(options.seed);
  for (int k = 0; k < n_classes; ++k) {
    Vector s(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) s(i) = y[static_cast<std::size_t>(i)] == k ? 1.0 : -1.0;
    BinaryResult r = solve_binary(X, s, sq_norms, options, seeder());
    model.W.row(k) = r.w.transpose();
    if (trace != nullptr) {
      trace->dual_objective.push_back(std::move(r.objective));
      trace->passes.push_back(r.passes);
      trace->final_violation.push_back(r.violation);
    }
  }
  return model;
}

int svm_predict(const SvmModel& model, const Vector& x) {
  require(x.size() == model.W.cols(), ErrorKind::InvalidInput,
          "feature dimension " + std::to_string(x.size()) + " does not match the model's " +
              std::to_string(model.W.cols()));
  const Vector scores = model.W * x;
  int best = 0;
  for (int k = 1; k < scores.size(); ++k) {
    if (scores(k) > scores(best)) best = k;
  }
  return best;
}

double svm_dual_objective(const Matrix& X, const Vector& signs, const Vector& alpha, double C) {
  const Vector w = X.transpose() * signs.cwiseProduct(alpha);
  return 0.5 * w.squaredNorm() + 0.25 / C * alpha.squaredNorm() - alpha.sum();
}

double svm_primal_objective(const Matrix& X, const Vector& signs, const Vector& w, double C) {
  const Vector margins = signs.cwiseProduct(X * w);
  const double loss = (1.0 - margins.array()).max(0.0).square().sum();
  return 0.5 * w.squaredNorm() + C * loss;
}

void SvmModel::save(const std::filesystem::path& file) const {
  TensorArchive a;
  a.add(Tensor::scalar("C", C));
  a.add(Tensor::scalar("tol", tol));
  a.add(Tensor::from_matrix("W", W));
  a.save(file, kSvmModelMagic);
}

SvmModel SvmModel::load(const std::filesystem::path& file) {
  const TensorArchive a = TensorArchive::load(file, kSvmModelMagic);
  SvmModel m;
  m.C = a.get("C").to_scalar();
  m.tol = a.get("tol").to_scalar();
  m.W = a.get("W").to_matrix();
  return m;
}

// ---------------------------------------------------------------------------

void write_features(const std::filesystem::path& file, const FeatureSet& set) {
  require(static_cast<std::size_t>(set.X.rows()) == set.labels.size(), ErrorKind::InvalidInput,
          "feature set label count does not match its rows");
  std::FILE* f = std::fopen(file.string().c_str(), "wb");
  if (f == nullptr) fail(ErrorKind::ConfigError, "cannot write " + file.string());
  for (Eigen::Index i = 0; i < set.X.rows(); ++i) {
    std::fprintf(f, "%d", set.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < set.X.cols(); ++j) std::fprintf(f, " %.17g", set.X(i, j));
    std::fputc('\n', f);
  }
  const bool ok = std::ferror(f) == 0;
  std::fclose(f);
  if (!ok) fail(ErrorKind::ConfigError, "failed writing " + file.string());
}

FeatureSet read_features(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::ConfigError, "cannot open feature file " + file.string());
  std::vector<int> labels;
  std::vector<double> values;
  long long dim = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = file.string() + ":" + std::to_string(lineno);
    const char* p = line.data();
    const char* end = line.data() + line.size();
    auto skip = [&]() {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
    };
    skip();
    int label = 0;
    auto [lp, lec] = std::from_chars(p, end, label);
    if (lec != std::errc() || label < 0) fail(ErrorKind::ParseError, where + ": bad label");
    p = lp;
    long long count = 0;
    while (true) {
      skip();
      if (p >= end) break;
      double v = 0;
      auto [vp, vec] = std::from_chars(p, end, v);
      if (vec != std::errc()) fail(ErrorKind::ParseError, where + ": bad feature value");
      p = vp;
      values.push_back(v);
      ++count;
    }
    if (dim < 0) dim = count;
    if (count != dim) {
      fail(ErrorKind::ParseError, where + ": expected " + std::to_string(dim) + " values, got " +
                                      std::to_string(count));
    }
    labels.push_back(label);
  }
  FeatureSet set;
  set.labels = std::move(labels);
  const auto rows = static_cast<Eigen::Index>(set.labels.size());
  const auto cols = static_cast<Eigen::Index>(std::max<long long>(dim, 0));
  set.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, cols);
  return set;
}

}  // namespace hgr
