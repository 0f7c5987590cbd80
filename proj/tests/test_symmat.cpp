#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <unsupported/Eigen/MatrixFunctions>

#include "hgr/symmat.hpp"
#include "test_util.hpp"

using namespace hgr;
using hgr::test::random_matrix;
using hgr::test::random_spd;
using hgr::test::random_sym;
using hgr::test::with_spectrum;

namespace {

template <class F>
void expect_error(ErrorKind kind, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

// Central differences over a symmetric argument, entries (i,j) and (j,i)
// moved together. Returned as an n x n matrix holding the upper triangle.
Matrix fd_sym(const std::function<double(const Matrix&)>& f, const Matrix& x, double h) {
  const int n = static_cast<int>(x.rows());
  Matrix g = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      Matrix p = x, m = x;
      p(i, j) += h;
      m(i, j) -= h;
      if (i != j) {
        p(j, i) += h;
        m(j, i) -= h;
      }
      g(i, j) = (f(p) - f(m)) / (2 * h);
    }
  }
  return g;
}

// Analytic counterpart of fd_sym for a symmetric gradient G.
Matrix pair_upper(const Matrix& g) {
  const int n = static_cast<int>(g.rows());
  Matrix out = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out(i, j) = i == j ? g(i, i) : g(i, j) + g(j, i);
  return out;
}

double rel(const Matrix& a, const Matrix& b) {
  const double s = std::max(a.norm(), b.norm());
  return s == 0 ? 0.0 : (a - b).norm() / s;
}

}  // namespace

TEST(SymMatrix, SymmetrizesOnConstruction) {
  Matrix a(2, 2);
  a << 1, 2, 4, 3;
  SymMatrix s(a);
  EXPECT_EQ(s(0, 1), 3.0);
  EXPECT_EQ(s(1, 0), 3.0);
  expect_error(ErrorKind::InvalidInput, [] { SymMatrix(Matrix(2, 3)); });
}

TEST(Eigh, Identity) {
  const EigPair e = eigh(SymMatrix::identity(3));
  EXPECT_TRUE(e.V.isApprox(Vector::Ones(3)));
  EXPECT_TRUE((e.U.cwiseAbs() - Matrix::Identity(3, 3)).isZero(1e-14));
}

TEST(Eigh, AlreadyDiagonal) {
  const EigPair e = eigh(SymMatrix::diagonal(Eigen::Vector2d(1, 3)));
  EXPECT_DOUBLE_EQ(e.V(0), 3);
  EXPECT_DOUBLE_EQ(e.V(1), 1);
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  EXPECT_TRUE(e.U.isApprox(swap));
}

TEST(Eigh, MatchesReferenceSolver) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 9;
    const SymMatrix a = random_sym(rng, n);
    const EigPair e = eigh(a);
    Eigen::SelfAdjointEigenSolver<Matrix> ref(a.matrix());
    const Vector ref_desc = ref.eigenvalues().reverse();
    EXPECT_LT((e.V - ref_desc).norm(), 1e-12 * std::max(1.0, ref_desc.norm()));
    EXPECT_LT((e.U * e.V.asDiagonal() * e.U.transpose() - a.matrix()).norm(), 1e-10 * a.matrix().norm());
    EXPECT_LT((e.U * e.U.transpose() - Matrix::Identity(n, n)).norm(), 1e-10 * n);
    for (int k = 0; k + 1 < n; ++k) EXPECT_GE(e.V(k), e.V(k + 1));
    for (int k = 0; k < n; ++k) {
      int first = 0;
      while (first < n && std::abs(e.U(first, k)) < 1e-12) ++first;
      ASSERT_LT(first, n);
      EXPECT_GT(e.U(first, k), 0.0);
    }
  }
}

TEST(Eigh, RejectsNonFinite) {
  Matrix a = Matrix::Identity(3, 3);
  a(1, 1) = std::numeric_limits<double>::quiet_NaN();
  expect_error(ErrorKind::InvalidInput, [&] { eigh(SymMatrix(a)); });
}

TEST(AssertSpd, Threshold) {
  EXPECT_NO_THROW(assert_spd(SymMatrix::diagonal(Eigen::Vector2d(1, 1e-11))));
  expect_error(ErrorKind::NotSPD, [] { assert_spd(SymMatrix::diagonal(Eigen::Vector2d(1, 1e-13))); });
  expect_error(ErrorKind::NotSPD, [] { assert_spd(SymMatrix::diagonal(Eigen::Vector2d(1, -1))); });
  // Scale-relative above 1.
  expect_error(ErrorKind::NotSPD, [] { assert_spd(SymMatrix::diagonal(Eigen::Vector2d(1e6, 1e-7))); });
}

TEST(SpdLog, IdentityIsZero) {
  EXPECT_TRUE(spd_log(assert_spd(SymMatrix::identity(4))).matrix().isZero(0));
}

TEST(SpdLog, Diagonal) {
  const SymMatrix l = spd_log(assert_spd(SymMatrix::diagonal(Eigen::Vector2d(std::exp(1.0), std::exp(2.0)))));
  EXPECT_NEAR(l(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(l(1, 1), 2.0, 1e-14);
  EXPECT_EQ(l(0, 1), 0.0);
}

TEST(SpdLog, MatchesSchurParlettLog) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const SymMatrix a = random_spd(rng, 5, 0.1, 10.0);
    const Matrix ref = a.matrix().log();
    EXPECT_LT(rel(spd_log(assert_spd(a)).matrix(), ref), 1e-8);
  }
}

TEST(SpdLog, ExpRoundTrip) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 10; ++trial) {
    Vector v(6);
    for (int i = 0; i < 6; ++i) v(i) = u(rng);
    const SymMatrix s = with_spectrum(rng, v);
    EXPECT_LT(rel(spd_log(spd_exp(s)).matrix(), s.matrix()), 1e-8);
    EXPECT_LT(rel(spd_exp(s).matrix(), s.matrix().exp()), 1e-10);
  }
}

TEST(RectifyEigs, ClampsOneEigenvalue) {
  const SPDMatrix r = rectify_eigs(SymMatrix::diagonal(Eigen::Vector2d(5, 1e-9)), 1e-4);
  EXPECT_NEAR(r.matrix()(0, 0), 5, 1e-14);
  EXPECT_NEAR(r.matrix()(1, 1), 1e-4, 1e-16);
  EXPECT_NEAR(r.matrix()(0, 1), 0, 1e-16);
}

TEST(RectifyEigs, NoOpAboveThreshold) {
  std::mt19937_64 rng(7);
  const SymMatrix a = random_spd(rng, 6, 2.0, 5.0);
  EXPECT_LT((rectify_eigs(a, 1e-4).matrix() - a.matrix()).norm(), 1e-10);
}

TEST(RectifyEigs, NegativeEigenvalueBecomesEps) {
  std::mt19937_64 rng(8);
  Vector v(4);
  v << 3, 1, 0.5, -2;
  const double eps = 1e-4;
  const SPDMatrix r = rectify_eigs(with_spectrum(rng, v), eps);
  Eigen::SelfAdjointEigenSolver<Matrix> ref(r.matrix());
  EXPECT_NEAR(ref.eigenvalues().minCoeff(), eps, 1e-12);
  EXPECT_NO_THROW(assert_spd(SymMatrix(r.matrix() - 0.5 * eps * Matrix::Identity(4, 4))));
  expect_error(ErrorKind::InvalidInput, [] { rectify_eigs(SymMatrix::identity(2), 0.0); });
}

TEST(SymVectorize, TwoByTwo) {
  Matrix a(2, 2);
  a << 1.5, -2, -2, 4;
  const SymVec v = sym_vectorize(SymMatrix(a));
  ASSERT_EQ(v.values.size(), 3);
  EXPECT_EQ(v.values(0), 1.5);
  EXPECT_DOUBLE_EQ(v.values(1), -2 * std::sqrt(2.0));
  EXPECT_EQ(v.values(2), 4);
}

TEST(SymVectorize, Identity3) {
  Vector expected(6);
  expected << 1, 0, 0, 1, 0, 1;
  EXPECT_EQ(sym_vectorize(SymMatrix::identity(3)).values, expected);
}

TEST(SymVectorize, Isometry) {
  std::mt19937_64 rng(9);
  const SymMatrix a = random_sym(rng, 10), b = random_sym(rng, 10);
  const Vector va = sym_vectorize(a).values, vb = sym_vectorize(b).values;
  ASSERT_EQ(va.size(), 55);
  EXPECT_NEAR(va.norm(), a.matrix().norm(), 1e-12 * a.matrix().norm());
  EXPECT_NEAR(va.dot(vb), (a.matrix().array() * b.matrix().array()).sum(), 1e-12 * va.norm() * vb.norm());
  EXPECT_TRUE(sym_unvectorize(sym_vectorize(a)).matrix().isApprox(a.matrix(), 1e-14));
}

TEST(SymUnvectorizeGrad, Examples) {
  SymVec g{2, Eigen::Vector3d(1, 0, 1)};
  EXPECT_EQ(sym_unvectorize_grad(g).matrix(), Matrix::Identity(2, 2));
  g.values = Eigen::Vector3d(0, 1, 0);
  Matrix expected(2, 2);
  expected << 0, std::sqrt(2.0), std::sqrt(2.0), 0;
  EXPECT_TRUE(sym_unvectorize_grad(g).matrix().isApprox(expected, 1e-15));
  expect_error(ErrorKind::InvalidInput, [] { sym_unvectorize_grad(SymVec{3, Vector::Zero(5)}); });
}

TEST(SymUnvectorizeGrad, AdjointOverUpperTriangle) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial;
    const SymVec g{n, random_matrix(rng, sym_vec_length(n), 1)};
    const SymMatrix da = random_sym(rng, n);
    const Matrix G = sym_unvectorize_grad(g).matrix();
    double lhs = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) lhs += G(i, j) * da(i, j);
    // sym_vectorize is linear, so its differential is itself.
    const double rhs = g.values.dot(sym_vectorize(da).values);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1 + std::abs(rhs)));
  }
}

TEST(EigBackprop, DiagonalOnlyPath) {
  std::mt19937_64 rng(12);
  const EigPair e = eigh(random_spd(rng, 5));
  const SymMatrix out = eig_backprop(e, Matrix::Zero(5, 5), Vector::Ones(5));
  EXPECT_TRUE(out.matrix().isApprox(Matrix::Identity(5, 5), 1e-12));
}

TEST(EigBackprop, SmoothSpectralFunction) {
  // f(A) = sum_k w_k (sigma_k + u_k^T M u_k): sign-invariant in the eigenvectors.
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Vector spectrum(3);
    spectrum << 3.0, 1.5, 0.4;
    const SymMatrix a = with_spectrum(rng, spectrum + 0.1 * Vector::Random(3));
    const Matrix M = random_sym(rng, 3).matrix();
    const Vector w = random_matrix(rng, 3, 1);
    auto f = [&](const Matrix& x) {
      const EigPair e = eigh(SymMatrix(x));
      double s = 0;
      for (int k = 0; k < 3; ++k) s += w(k) * (e.V(k) + e.U.col(k).dot(M * e.U.col(k)));
      return s;
    };
    const EigPair e = eigh(a);
    Matrix dU(3, 3);
    for (int k = 0; k < 3; ++k) dU.col(k) = 2 * w(k) * M * e.U.col(k);
    const Matrix analytic = eig_backprop(e, dU, w).matrix();
    EXPECT_LT(rel(pair_upper(analytic), fd_sym(f, a.matrix(), 1e-6)), 1e-6);
  }
}

TEST(EigBackprop, LogCompositeMatchesFiniteDifferences) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const SymMatrix a = random_spd(rng, 4, 0.5, 4.0);
    const Matrix C = random_sym(rng, 4).matrix();
    auto f = [&](const Matrix& x) { return (C.array() * spd_log(assert_spd(SymMatrix(x))).matrix().array()).sum(); };
    // L = <C, U log(V) U^T>: dL/dU = 2 C U log V, dL/dV = diag(U^T C U) / V.
    const EigPair e = eigh(a);
    const Vector logv = e.V.array().log();
    const Matrix dU = 2 * C * e.U * logv.asDiagonal();
    const Vector dV = (e.U.transpose() * C * e.U).diagonal().cwiseQuotient(e.V);
    EXPECT_LT(rel(pair_upper(eig_backprop(e, dU, dV).matrix()), fd_sym(f, a.matrix(), 1e-6)), 1e-6);
  }
}

TEST(EigBackprop, DegeneratePairsAreCountedNotDivided) {
  const EigPair e = eigh(SymMatrix::identity(3));
  int degenerate = 0;
  std::mt19937_64 rng(15);
  const SymMatrix out = eig_backprop(e, random_matrix(rng, 3, 3), Vector::Zero(3), &degenerate);
  EXPECT_TRUE(out.matrix().allFinite());
  EXPECT_EQ(degenerate, 3);
}

TEST(QrOrthonormalize, FixedPoint) {
  std::mt19937_64 rng(16);
  const Matrix q = qr_orthonormalize(random_matrix(rng, 4, 9));
  EXPECT_LT((qr_orthonormalize(q) - q).norm(), 1e-12);
}

TEST(QrOrthonormalize, RemovesScaling) {
  Matrix m(2, 3);
  m << 2, 0, 0, 0, 3, 0;
  Matrix expected(2, 3);
  expected << 1, 0, 0, 0, 1, 0;
  EXPECT_LT((qr_orthonormalize(m) - expected).norm(), 1e-15);
}

TEST(QrOrthonormalize, RandomWideMatrix) {
  std::mt19937_64 rng(17);
  const Matrix m = random_matrix(rng, 5, 20);
  const Matrix q = qr_orthonormalize(m);
  EXPECT_LT((q * q.transpose() - Matrix::Identity(5, 5)).norm(), 1e-10);
  // Same row span: projecting M's rows onto span(Q) loses nothing.
  EXPECT_LT((m - m * q.transpose() * q).norm(), 1e-10 * m.norm());
}

TEST(QrOrthonormalize, RankDeficient) {
  Matrix m(2, 3);
  m << 1, 2, 3, 2, 4, 6;
  expect_error(ErrorKind::RankDeficient, [&] { qr_orthonormalize(m); });
}
