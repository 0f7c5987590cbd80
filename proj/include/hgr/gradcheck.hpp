#pragma once

// Central finite-difference checks of every backward pass, per layer and
// through the whole network at a small configuration.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hgr/symmat.hpp"

namespace hgr {

/// |a - n| / max(|a|, |n|) over one gradient tensor; 0 when both vanish.
double relative_error(const Vector& analytic, const Vector& numeric);

/// Central differences of f with respect to every entry of `x` (restored afterwards).
Vector numeric_gradient(const std::function<double()>& f, double* x, Eigen::Index n, double h);

/// Central differences of f with respect to a symmetric matrix: entry (i, j)
/// and (j, i) move together. Returns the upper triangle row by row.
Vector numeric_sym_gradient(const std::function<double()>& f, Matrix& x, double h);
/// The analytic counterpart of numeric_sym_gradient: g_ii and g_ij + g_ji.
Vector sym_gradient_entries(const Matrix& g);

struct LayerCheck {
  std::string layer;
  int instances = 0;
  double worst_rel_error = 0;
  double threshold = 0;
  bool passed() const { return worst_rel_error <= threshold; }
};

struct GradcheckOptions {
  std::uint64_t seed = 1;
  int layer_instances = 20;
  int network_instances = 2;
  double layer_tol = 1e-5;
  double network_tol = 1e-4;
  bool include_network = true;
};

struct GradcheckReport {
  std::vector<LayerCheck> layers;
  bool passed() const;
  /// One line per layer: "<layer> <PASS|FAIL> worst_rel_err=<e> threshold=<t> instances=<n>".
  std::string to_text() const;
};

/// Layers: gauss_agg, reeig, logeig, vecmat, spd_agg, conv, head, st_branch,
/// ts_branch and (optionally) network.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

/// Worst relative error of the end-to-end gradient at the tiny configuration
/// with parameters and input drawn from `seed`.
double network_gradcheck(std::uint64_t seed);

}  // namespace hgr
