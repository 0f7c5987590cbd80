#include "hgr/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hgr {

namespace {

constexpr int kMaxJacobiSweeps = 100;

bool all_finite(const Matrix& a) { return a.allFinite(); }

// One cyclic-by-row Jacobi sweep. Returns the number of rotations applied.
int jacobi_sweep(Matrix& a, Matrix& v) {
  const int n = static_cast<int>(a.rows());
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  int rotations = 0;
  for (int p = 0; p < n - 1; ++p) {
    for (int q = p + 1; q < n; ++q) {
      const double apq = a(p, q);
      if (apq == 0.0) continue;
      const double app = a(p, p);
      const double aqq = a(q, q);
      // Relative-accuracy skip test: the rotation would not change the
      // diagonal at working precision.
      if (std::abs(apq) <= 0.5 * kEps * std::sqrt(std::abs(app) * std::abs(aqq))) {
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        continue;
      }
      const double theta = (aqq - app) / (2.0 * apq);
      double t;
      if (std::abs(theta) > 1e150) {
        t = 0.5 / theta;
      } else {
        t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
      }
      const double c = 1.0 / std::sqrt(t * t + 1.0);
      const double s = t * c;

      for (int r = 0; r < n; ++r) {
        if (r == p || r == q) continue;
        const double g = a(r, p);
        const double h = a(r, q);
        const double rp = c * g - s * h;
        const double rq = s * g + c * h;
        a(r, p) = rp;
        a(p, r) = rp;
        a(r, q) = rq;
        a(q, r) = rq;
      }
      a(p, p) = app - t * apq;
      a(q, q) = aqq + t * apq;
      a(p, q) = 0.0;
      a(q, p) = 0.0;

      for (int r = 0; r < n; ++r) {
        const double g = v(r, p);
        const double h = v(r, q);
        v(r, p) = c * g - s * h;
        v(r, q) = s * g + c * h;
      }
      ++rotations;
    }
  }
  return rotations;
}

SymMatrix reconstruct(const Matrix& u, const Vector& d) {
  return SymMatrix(u * d.asDiagonal() * u.transpose());
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& a) {
  require(a.rows() >= 1 && a.rows() == a.cols(), ErrorKind::InvalidInput,
          "symmetric matrix must be square with dim >= 1, got " + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()));
  m_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

SPDMatrix SPDMatrix::trusted(SymMatrix a) {
  SPDMatrix out;
  out.a_ = std::move(a);
  return out;
}

SPDMatrix SPDMatrix::with_eig(SymMatrix a, EigPair eig) {
  SPDMatrix out;
  out.a_ = std::move(a);
  out.eig_ = std::make_shared<const EigPair>(std::move(eig));
  return out;
}

double spd_threshold(double max_eig) { return 1e-12 * std::max(1.0, max_eig); }

EigPair eigh(const SymMatrix& sym) {
  const Matrix& src = sym.matrix();
  require(all_finite(src), ErrorKind::InvalidInput, "eigh: non-finite input");
  const int n = sym.dim();
  Matrix a = src;
  Matrix v = Matrix::Identity(n, n);

  int sweep = 0;
  while (jacobi_sweep(a, v) > 0) {
    if (++sweep >= kMaxJacobiSweeps) {
      fail(ErrorKind::NumericalFailure,
           "eigh: Jacobi iteration did not converge in " + std::to_string(kMaxJacobiSweeps) +
               " sweeps (n=" + std::to_string(n) + ")");
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) > a(j, j); });

  EigPair out;
  out.U.resize(n, n);
  out.V.resize(n);
  for (int k = 0; k < n; ++k) {
    out.V(k) = a(order[k], order[k]);
    Vector col = v.col(order[k]);
    for (int i = 0; i < n; ++i) {
      if (std::abs(col(i)) > 1e-12) {
        if (col(i) < 0) col = -col;
        break;
      }
    }
    out.U.col(k) = col;
  }
  return out;
}

SPDMatrix assert_spd(const SymMatrix& a) {
  EigPair eig = eigh(a);
  const double max_eig = eig.V(0);
  const double min_eig = eig.V(eig.V.size() - 1);
  if (!(min_eig > spd_threshold(max_eig))) {
    fail(ErrorKind::NotSPD, "smallest eigenvalue " + std::to_string(min_eig) +
                                " is below the SPD threshold (largest " +
                                std::to_string(max_eig) + ")");
  }
  return SPDMatrix::with_eig(a, std::move(eig));
}

SymMatrix spd_log(const SPDMatrix& a) {
  EigPair local;
  const EigPair* eig = a.cached_eig();
  if (eig == nullptr) {
    local = eigh(a.sym());
    eig = &local;
  }
  const double max_eig = eig->V(0);
  const double min_eig = eig->V(eig->V.size() - 1);
  if (!(min_eig > spd_threshold(max_eig))) {
    fail(ErrorKind::NotSPD, "spd_log: smallest eigenvalue " + std::to_string(min_eig) +
                                " is not positive enough");
  }
  return reconstruct(eig->U, eig->V.array().log().matrix());
}

SPDMatrix spd_exp(const SymMatrix& a) {
  EigPair eig = eigh(a);
  eig.V = eig.V.array().exp().matrix();
  SymMatrix out = reconstruct(eig.U, eig.V);
  return SPDMatrix::with_eig(std::move(out), std::move(eig));
}

SPDMatrix rectify_eigs(const SymMatrix& a, double eps) {
  require(eps > 0 && std::isfinite(eps), ErrorKind::InvalidInput,
          "rectify_eigs: eps must be positive");
  EigPair eig = eigh(a);
  eig.V = eig.V.cwiseMax(eps);
  SymMatrix out = reconstruct(eig.U, eig.V);
  return SPDMatrix::with_eig(std::move(out), std::move(eig));
}

SymVec sym_vectorize(const SymMatrix& a) {
  const int n = a.dim();
  SymVec out;
  out.dim_src = n;
  out.values.resize(sym_vec_length(n));
  const double r2 = std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    out.values(k++) = a(i, i);
    for (int j = i + 1; j < n; ++j) out.values(k++) = r2 * a(i, j);
  }
  return out;
}

namespace {

void check_symvec(const SymVec& v, const char* who) {
  require(v.dim_src >= 1 && v.values.size() == sym_vec_length(v.dim_src),
          ErrorKind::InvalidInput,
          std::string(who) + ": length " + std::to_string(v.values.size()) +
              " is not dim*(dim+1)/2 for dim " + std::to_string(v.dim_src));
}

SymMatrix unpack(const SymVec& v, double off_diag_scale) {
  const int n = v.dim_src;
  Matrix m(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    m(i, i) = v.values(k++);
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = off_diag_scale * v.values(k++);
      m(j, i) = m(i, j);
    }
  }
  return SymMatrix(m);
}

}  // namespace

SymMatrix sym_unvectorize(const SymVec& v) {
  check_symvec(v, "sym_unvectorize");
  return unpack(v, 1.0 / std::sqrt(2.0));
}

SymMatrix sym_unvectorize_grad(const SymVec& g) {
  check_symvec(g, "sym_unvectorize_grad");
  return unpack(g, std::sqrt(2.0));
}

double degenerate_gap(const Vector& eigenvalues) {
  return 1e-10 * (eigenvalues.maxCoeff() - eigenvalues.minCoeff() + 1.0);
}

SymMatrix eig_backprop(const EigPair& eig, const Matrix& dL_dU, const Vector& dL_dV,
                       int* degenerate_pairs) {
  const int n = static_cast<int>(eig.V.size());
  require(eig.U.rows() == n && eig.U.cols() == n && dL_dU.rows() == n && dL_dU.cols() == n &&
              dL_dV.size() == n,
          ErrorKind::InvalidInput, "eig_backprop: shape mismatch");
  const double gap = degenerate_gap(eig.V);
  const Matrix ut_du = eig.U.transpose() * dL_dU;

  // inner = Kt^T o (U^T dL/dU), with Kt^T_ij = 1 / (s_j - s_i).
  Matrix inner = Matrix::Zero(n, n);
  int degenerate = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double diff = eig.V(j) - eig.V(i);
      if (std::abs(diff) < gap) {
        if (i < j) ++degenerate;
        continue;
      }
      inner(i, j) = ut_du(i, j) / diff;
    }
  }
  Matrix middle = sym_part(inner);
  middle.diagonal() += dL_dV;
  if (degenerate_pairs != nullptr) *degenerate_pairs += degenerate;
  return SymMatrix(eig.U * middle * eig.U.transpose());
}

Matrix qr_orthonormalize(const Matrix& m) {
  const auto rows = m.rows();
  const auto cols = m.cols();
  require(rows >= 1 && rows <= cols, ErrorKind::InvalidInput,
          "qr_orthonormalize: need 1 <= rows <= cols, got " + std::to_string(rows) + "x" +
              std::to_string(cols));
  require(m.allFinite(), ErrorKind::NumericalFailure, "qr_orthonormalize: non-finite input");
  const Matrix mt = m.transpose();
  Eigen::HouseholderQR<Matrix> qr(mt);
  const Matrix& packed = qr.matrixQR();
  const double scale = m.norm();
  Matrix q = qr.householderQ() * Matrix::Identity(cols, rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double rii = packed(i, i);
    if (!(std::abs(rii) > 1e-12 * scale)) {
      fail(ErrorKind::RankDeficient,
           "qr_orthonormalize: matrix is rank deficient at row " + std::to_string(i));
    }
    if (rii < 0) q.col(i) = -q.col(i);
  }
  return q.transpose();
}

}  // namespace hgr
