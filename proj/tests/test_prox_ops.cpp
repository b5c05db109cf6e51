#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "sdr/prox_ops.hpp"

using namespace sdr;

namespace {

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

Matrix diag2(double a, double b) { return Vector{{a, b}}.asDiagonal(); }

using Prox = std::function<Matrix(const Matrix&)>;

// ||P(A)-P(B)||^2 <= <P(A)-P(B), A-B>
void expect_firmly_nonexpansive(const Prox& prox, const std::function<Matrix()>& draw, int pairs) {
  for (int i = 0; i < pairs; ++i) {
    const Matrix a = draw(), b = draw();
    const Matrix d = prox(a) - prox(b);
    EXPECT_LE(d.squaredNorm(), d.cwiseProduct(a - b).sum() + 1e-9);
  }
}

}  // namespace

TEST(SoftThreshold, ScalarCases) {
  EXPECT_EQ(soft_threshold(m1(3), 1.0)(0, 0), 2.0);
  EXPECT_EQ(soft_threshold(m1(-0.5), 1.0)(0, 0), 0.0);
  EXPECT_EQ(soft_threshold(m1(-3), 1.0)(0, 0), -2.0);
}

TEST(SoftThreshold, DiagonalExemption) {
  EXPECT_EQ(soft_threshold(diag2(5, 5), 1.0, false), diag2(5, 5));
  EXPECT_EQ(soft_threshold(diag2(5, 5), 1.0, true), diag2(4, 4));
}

TEST(SoftThreshold, PreservesSymmetryAndCountsZeros) {
  std::mt19937_64 rng(21);
  const Matrix m = oracle::random_symmetric(6, rng);
  ProxReport rep;
  const Matrix x = soft_threshold(m, 0.5, true, &rep);
  EXPECT_EQ(x, x.transpose());
  EXPECT_EQ(rep.zeros, (x.array() == 0.0).count());
  EXPECT_LE(oracle::soft_residual(m, x, 0.5, true), 1e-12);
}

TEST(SoftThreshold, OptimalityResidual) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 100; ++i) {
    const Matrix m = oracle::random_symmetric(5, rng);
    for (bool diag : {true, false}) {
      const Matrix x = soft_threshold(m, 0.4, diag);
      EXPECT_LE(oracle::soft_residual(m, x, 0.4, diag), 1e-8);
    }
  }
}

TEST(Svt, DiagonalInput) {
  EXPECT_LE((svt(diag2(3, 1), 2.0) - diag2(1, 0)).norm(), 1e-14);
}

TEST(Svt, RankOneSymmetric) {
  EXPECT_LE((svt(Matrix::Ones(2, 2), 1.0) - 0.5 * Matrix::Ones(2, 2)).norm(), 1e-14);
}

TEST(Svt, MatchesIndependentSvd) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) {
    const Matrix m = oracle::random_matrix(4, 3, rng);
    ProxReport rep;
    const Matrix x = svt(m, 0.7, &rep);
    EXPECT_LE((x - oracle::svt_ref(m, 0.7)).norm(), 1e-10);
    EXPECT_LE(oracle::svt_residual(m, x, 0.7), 1e-8);
    EXPECT_EQ(rep.kept, numerical_rank(x));
  }
}

TEST(Svt, ExactZerosBelowThreshold) {
  const Matrix x = svt(diag2(3, 1), 1.0);
  EXPECT_EQ(numerical_rank(x, 0.0), 1);
}

TEST(PsdTraceProx, EigenvalueShrinkage) {
  EXPECT_LE((psd_trace_prox(diag2(2, -1), 0.5) - diag2(1.5, 0)).norm(), 1e-14);
}

TEST(PsdTraceProx, NegativeSemidefiniteMapsToZero) {
  std::mt19937_64 rng(24);
  const Matrix f = oracle::random_matrix(4, 2, rng);
  EXPECT_EQ(psd_trace_prox(-f * f.transpose(), 0.1), Matrix::Zero(4, 4));
}

TEST(PsdTraceProx, OptimalityResidual) {
  std::mt19937_64 rng(25);
  for (int i = 0; i < 100; ++i) {
    const Matrix m = oracle::random_symmetric(5, rng);
    const Matrix x = psd_trace_prox(m, 0.3);
    EXPECT_LE(oracle::psd_trace_residual(m, x, 0.3), 1e-8);
    EXPECT_LE((x - oracle::psd_trace_prox_ref(m, 0.3)).norm(), 1e-10);
  }
}

TEST(SymmetricNuclearProx, ShrinksTowardZero) {
  EXPECT_LE((symmetric_nuclear_prox(diag2(2, -1), 0.5) - diag2(1.5, -0.5)).norm(), 1e-14);
  std::mt19937_64 rng(26);
  for (int i = 0; i < 50; ++i) {
    const Matrix m = oracle::random_symmetric(4, rng);
    EXPECT_LE(oracle::sym_nuclear_residual(m, symmetric_nuclear_prox(m, 0.4), 0.4), 1e-8);
  }
}

TEST(GroupColumnProx, FullAndHalfShrinkage) {
  const Matrix c = (Matrix(2, 1) << 3, 4).finished();
  EXPECT_EQ(group_column_prox(c, 5.0), Matrix::Zero(2, 1));
  EXPECT_LE((group_column_prox(c, 2.5) - (Matrix(2, 1) << 1.5, 2).finished()).norm(), 1e-15);
}

TEST(GroupColumnProx, ColumnsIndependent) {
  std::mt19937_64 rng(27);
  for (int i = 0; i < 50; ++i) {
    const Matrix m = oracle::random_matrix(4, 5, rng);
    const Matrix x = group_column_prox(m, 1.5);
    for (Index j = 0; j < 5; ++j) {
      const Matrix col = group_column_prox(m.col(j), 1.5);
      EXPECT_EQ(x.col(j), col.col(0));
      const double n = m.col(j).norm();
      const Vector ref = n > 1.5 ? Vector((1.0 - 1.5 / n) * m.col(j)) : Vector::Zero(4);
      EXPECT_LE((x.col(j) - ref).norm(), 1e-14);
    }
    EXPECT_LE(oracle::group_residual(m, x, 1.5), 1e-8);
  }
}

TEST(LogdetUpdate, ScalarQuadraticRoot) {
  const Matrix t = logdet_update(m1(0), m1(1), 1.0);
  EXPECT_NEAR(t(0, 0), (-1.0 + std::sqrt(5.0)) / 2.0, 1e-15);
  EXPECT_NEAR(t(0, 0), 0.61803, 1e-5);
}

TEST(LogdetUpdate, LargeRhoReturnsTarget) {
  const Matrix t = logdet_update(Matrix::Identity(3, 3), Matrix::Zero(3, 3), 1e8);
  EXPECT_LE((t - Matrix::Identity(3, 3)).norm(), 1e-7);
}

TEST(LogdetUpdate, FirstOrderCondition) {
  std::mt19937_64 rng(28);
  for (int i = 0; i < 50; ++i) {
    const Matrix b = oracle::random_symmetric(4, rng);
    const Matrix sigma = oracle::random_spd(4, rng);
    const Matrix t = logdet_update(b, sigma, 0.7);
    EXPECT_LE(oracle::logdet_residual(b, sigma, 0.7, t), 1e-8);
    EXPECT_GT(min_eigenvalue(t), 0.0);
  }
}

TEST(LogdetUpdate, BadRhoThrows) {
  EXPECT_THROW((void)logdet_update(m1(0), m1(1), 0.0), InvalidArgument);
}

TEST(DiagonalProjection, Cases) {
  EXPECT_EQ(diagonal_projection((Matrix(2, 2) << 1, 2, 2, 3).finished()), diag2(1, 3));
  EXPECT_EQ(diagonal_projection(diag2(4, 5)), diag2(4, 5));
  std::mt19937_64 rng(29);
  for (int i = 0; i < 20; ++i) {
    const Matrix m = oracle::random_symmetric(5, rng);
    const Matrix x = diagonal_projection(m);
    EXPECT_EQ(diagonal_projection(x), x);
    EXPECT_LE(oracle::diagonal_residual(m, x), 1e-15);
    for (Index r = 0; r < 5; ++r)
      for (Index c = 0; c < 5; ++c) EXPECT_EQ(x(r, c), r == c ? m(r, c) : 0.0);
  }
}

TEST(ProxProperties, FirmNonexpansiveness) {
  std::mt19937_64 rng(30);
  auto sym = [&] { return Matrix(2.0 * oracle::random_symmetric(4, rng)); };
  auto rect = [&] { return Matrix(2.0 * oracle::random_matrix(4, 3, rng)); };
  const Matrix sigma = oracle::random_spd(4, rng);
  expect_firmly_nonexpansive([](const Matrix& m) { return soft_threshold(m, 0.5); }, sym, 200);
  expect_firmly_nonexpansive([](const Matrix& m) { return svt(m, 0.5); }, rect, 200);
  expect_firmly_nonexpansive([](const Matrix& m) { return psd_trace_prox(m, 0.5); }, sym, 200);
  expect_firmly_nonexpansive([](const Matrix& m) { return symmetric_nuclear_prox(m, 0.5); }, sym, 200);
  expect_firmly_nonexpansive([](const Matrix& m) { return group_column_prox(m, 0.5); }, rect, 200);
  expect_firmly_nonexpansive([](const Matrix& m) { return diagonal_projection(m); }, sym, 200);
  // prox of (1/rho)(-logdet + <Sigma, .>)
  expect_firmly_nonexpansive([&](const Matrix& m) { return logdet_update(m, sigma, 2.0); }, sym, 200);
}

TEST(ProxProperties, OrthogonalEquivariance) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 30; ++i) {
    const Matrix m = oracle::random_symmetric(5, rng);
    const Matrix q = oracle::random_orthogonal(5, rng);
    const Matrix r = q * m * q.transpose();
    EXPECT_LE((svt(r, 0.4) - q * svt(m, 0.4) * q.transpose()).norm(), 1e-9);
    EXPECT_LE((psd_trace_prox(r, 0.4) - q * psd_trace_prox(m, 0.4) * q.transpose()).norm(), 1e-9);
  }
}

TEST(ProxProperties, ZeroThreshold) {
  std::mt19937_64 rng(32);
  const Matrix s = oracle::random_symmetric(4, rng);
  const Matrix r = oracle::random_matrix(4, 3, rng);
  EXPECT_EQ(soft_threshold(s, 0.0), s);
  EXPECT_LE((svt(r, 0.0) - r).norm(), 1e-12);
  EXPECT_EQ(group_column_prox(r, 0.0), r);
  const Matrix p = psd_trace_prox(s, 0.0);
  EXPECT_LE((p - oracle::psd_trace_prox_ref(s, 0.0)).norm(), 1e-12);
  EXPECT_GE(min_eigenvalue(p), -1e-12);
}

TEST(Norms, Definitions) {
  const Matrix m = (Matrix(2, 2) << 1, -2, -2, 3).finished();
  EXPECT_EQ(l1_norm(m), 8.0);
  EXPECT_EQ(l1_norm(m, false), 4.0);
  EXPECT_NEAR(group_norm((Matrix(2, 2) << 3, 0, 4, 1).finished()), 6.0, 1e-15);
  EXPECT_NEAR(nuclear_norm(diag2(3, -1)), 4.0, 1e-14);
}

TEST(SubgradientDistances, ZeroAtProxOutputs) {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 20; ++i) {
    const Matrix s = oracle::random_symmetric(4, rng);
    const Matrix r = oracle::random_matrix(4, 3, rng);
    EXPECT_LE(l1_subgradient_distance(soft_threshold(s, 0.3), s - soft_threshold(s, 0.3), 0.3), 1e-10);
    EXPECT_LE(nuclear_subgradient_distance(svt(r, 0.3), r - svt(r, 0.3), 0.3), 1e-10);
    EXPECT_LE(group_subgradient_distance(group_column_prox(r, 0.3), r - group_column_prox(r, 0.3), 0.3),
              1e-10);
    const Matrix p = psd_trace_prox(s, 0.3);
    EXPECT_LE(psd_trace_subgradient_distance(p, s - p, 0.3), 1e-10);
    const Matrix n = symmetric_nuclear_prox(s, 0.3);
    EXPECT_LE(symmetric_nuclear_subgradient_distance(n, s - n, 0.3), 1e-10);
  }
}

TEST(SubgradientDistances, DetectViolations) {
  const Matrix x = diag2(1, 0);
  EXPECT_GT(l1_subgradient_distance(x, diag2(0.5, 0), 1.0), 0.4);
  EXPECT_GT(group_subgradient_distance(Matrix::Zero(2, 1), (Matrix(2, 1) << 3, 4).finished(), 1.0), 3.9);
}
