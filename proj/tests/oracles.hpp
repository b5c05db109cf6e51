#pragma once
// Reference computations for the tests, written without the library's prox and
// decomposition code.
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "sdr/model_core.hpp"

namespace oracle {

using sdr::Index;
using sdr::Matrix;
using sdr::Vector;

// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
Matrix random_spd(Index n, std::mt19937_64& rng, double lo = 0.5, double hi = 3.0);
Matrix random_matrix(Index r, Index c, std::mt19937_64& rng);
Matrix random_symmetric(Index n, std::mt19937_64& rng);
Matrix random_orthogonal(Index n, std::mt19937_64& rng);

// Element-by-element assembly of [[S-L, K], [K', X]].
Matrix assemble_entrywise(const Matrix& s, const Matrix& l, const Matrix& k, const Matrix& x);

// Kronecker product and column-major vec.
Matrix kron(const Matrix& a, const Matrix& b);
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Index rows, Index cols);

// log N(y; mean, cov) from LU determinant and solve.
double mvn_logpdf(const Vector& y, const Vector& mean, const Matrix& cov);

// Symmetric eigendecomposition through BDCSVD; eigenvalue signs read off u_i'v_i.
struct SymEig {
  Vector values;
  Matrix vectors;
};
SymEig sym_eig(const Matrix& m);

// Closed-form prox references.
Matrix svt_ref(const Matrix& m, double t);
Matrix psd_trace_prox_ref(const Matrix& m, double t);

// Optimality residuals of X = prox_{t g}(M), i.e. distance of (M - X) / t from dg(X).
double soft_residual(const Matrix& m, const Matrix& x, double t, bool penalize_diagonal);
double svt_residual(const Matrix& m, const Matrix& x, double t);
double psd_trace_residual(const Matrix& m, const Matrix& x, double t);
double sym_nuclear_residual(const Matrix& m, const Matrix& x, double t);
double group_residual(const Matrix& m, const Matrix& x, double t);
double diagonal_residual(const Matrix& m, const Matrix& x);
double logdet_residual(const Matrix& b, const Matrix& sigma, double rho, const Matrix& theta);

// Extremum of num/den over the unit sphere of span(basis) (d <= 3) on a dense angular grid.
using MatFn = std::function<double(const Matrix&)>;
double sphere_extremum(const std::vector<Matrix>& basis, const MatFn& num, const MatFn& den,
                       bool maximize, double step);

// Extremum of f over the surface of the box prod [-w_i, w_i] in R^3 on a grid of `per_side`
// points per face edge.
double box_surface_extremum(const Vector& widths, const std::function<double(const Vector&)>& f,
                            bool maximize, int per_side);

// Accelerated proximal gradient with backtracking and function-value restarts on
// (S, L, K, X) for the five programs. Independent of the ADMM solver.
struct ReferenceFit {
  Matrix s, l, k, x;
  double objective = 0.0;
  int iterations = 0;
};
ReferenceFit reference_fit(const sdr::RegConfig& config, const Matrix& sigma, Index p, Index q,
                           int max_iters = 200000, double tol = 1e-13);
double reference_objective(const sdr::RegConfig& config, const Matrix& s, const Matrix& l,
                           const Matrix& k, const Matrix& x, const Matrix& sigma);

}  // namespace oracle
