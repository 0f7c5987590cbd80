#pragma once

// Optimizers: plain SGD for Euclidean parameters and SGD on the compact
// Stiefel manifold (orthonormal rows) for the SPDAgg weight.

#include <cstdint>

#include "hgr/symmat.hpp"

namespace hgr {

/// rows x cols matrix with orthonormal rows.
class StiefelPoint {
 public:
  StiefelPoint() = default;

  /// Validates orthonormality to `tol` in Frobenius norm; throws InvalidInput.
  static StiefelPoint checked(Matrix m, double tol = 1e-8);

  int rows() const { return static_cast<int>(m_.rows()); }
  int cols() const { return static_cast<int>(m_.cols()); }
  const Matrix& matrix() const { return m_; }

  /// || M M^T - I ||_F
  double orthonormality_error() const;

 private:
  explicit StiefelPoint(Matrix m) : m_(std::move(m)) {}
  friend StiefelPoint stiefel_retract(const Matrix& m);
  Matrix m_;
};

struct OptimizerState {
  double learning_rate = 0.01;
  std::int64_t step_count = 0;
  std::uint64_t rng_seed = 0;
};

/// QR orthonormalization of a seeded standard-normal rows x cols matrix.
StiefelPoint stiefel_init(int rows, int cols, std::uint64_t seed);

/// Removes the component of `euclid_grad` lying in the row space of W:
/// grad - grad W^T W.
Matrix stiefel_tangent(const StiefelPoint& w, const Matrix& euclid_grad);

/// Retraction onto the manifold (QR with positive-diagonal triangular factor).
StiefelPoint stiefel_retract(const Matrix& m);

/// W <- retract(W - lr * tangent(grad)).
StiefelPoint stiefel_step(const StiefelPoint& w, const Matrix& euclid_grad, double lr);

/// param - lr * grad.
Matrix euclid_sgd_step(const Matrix& param, const Matrix& grad, double lr);

}  // namespace hgr
