#include "hgr/manifold.hpp"

#include <random>
#include <string>

namespace hgr {

StiefelPoint StiefelPoint::checked(Matrix m, double tol) {
  StiefelPoint p(std::move(m));
  require(p.rows() >= 1 && p.rows() <= p.cols(), ErrorKind::InvalidInput,
          "Stiefel point needs 1 <= rows <= cols");
  const double err = p.orthonormality_error();
  require(err <= tol, ErrorKind::InvalidInput,
          "matrix rows are not orthonormal (error " + std::to_string(err) + ")");
  return p;
}

double StiefelPoint::orthonormality_error() const {
  return (m_ * m_.transpose() - Matrix::Identity(m_.rows(), m_.rows())).norm();
}

StiefelPoint stiefel_init(int rows, int cols, std::uint64_t seed) {
  require(rows >= 1 && rows <= cols, ErrorKind::InvalidInput,
          "stiefel_init: need 1 <= rows <= cols, got " + std::to_string(rows) + "x" +
              std::to_string(cols));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  }
  return stiefel_retract(m);
}

Matrix stiefel_tangent(const StiefelPoint& w, const Matrix& euclid_grad) {
  const Matrix& m = w.matrix();
  require(euclid_grad.rows() == m.rows() && euclid_grad.cols() == m.cols(),
          ErrorKind::InvalidInput, "Stiefel gradient shape mismatch");
  return euclid_grad - (euclid_grad * m.transpose()) * m;
}

StiefelPoint stiefel_retract(const Matrix& m) { return StiefelPoint(qr_orthonormalize(m)); }

StiefelPoint stiefel_step(const StiefelPoint& w, const Matrix& euclid_grad, double lr) {
  require(euclid_grad.allFinite(), ErrorKind::NumericalFailure,
          "stiefel_step: non-finite gradient");
  require(lr > 0, ErrorKind::InvalidInput, "learning rate must be positive");
  return stiefel_retract(w.matrix() - lr * stiefel_tangent(w, euclid_grad));
}

Matrix euclid_sgd_step(const Matrix& param, const Matrix& grad, double lr) {
  require(param.rows() == grad.rows() && param.cols() == grad.cols(), ErrorKind::InvalidInput,
          "SGD gradient shape mismatch");
  require(grad.allFinite(), ErrorKind::NumericalFailure, "SGD step: non-finite gradient");
  return param - lr * grad;
}

}  // namespace hgr
