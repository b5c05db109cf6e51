#pragma once
#include <vector>

#include "sdr/model_core.hpp"

namespace sdr {

struct SolverOptions {
  double rho_admm = 1.0;
  int max_iters = 5000;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  double over_relaxation = 1.6;
  bool adaptive_rho = true;
  int rho_freeze_iter = 1000;
  // Gauss-Seidel passes over the (S_Y, L_Y) pair per iteration.
  int inner_sweeps = 1;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double primal_residual = 0.0;  // relative
  double dual_residual = 0.0;    // relative
  double rho = 0.0;
};

struct FitResult {
  JointPrecision theta_hat;
  StructuredParams params_hat;  // s_Y holds D_Y for the factor-model variant
  RegConfig config;
  std::vector<std::pair<Index, Index>> support;  // (i, j), i < j, nonzero off-diagonal of S_Y
  Index edge_count = 0;
  Index latent_rank = 0;
  Index cross_rank = 0;
  std::vector<Index> column_support;  // nonzero columns of Theta_YX
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_rho = 0.0;
  std::vector<IterationRecord> history;
};

struct KktResiduals {
  double gradient_x = 0.0;
  double sparse = 0.0;    // S_Y inclusion, or diagonal stationarity for the factor model
  double latent = 0.0;
  double cross = 0.0;
  double consensus = 0.0;

  [[nodiscard]] double max() const;
};

[[nodiscard]] FitResult fit(const RegConfig& config, const Matrix& sigma_n, Index p, Index q,
                            const SolverOptions& options = {});

[[nodiscard]] double penalty(const RegConfig& config, const StructuredParams& params);
[[nodiscard]] double objective(const RegConfig& config, const StructuredParams& params,
                               const JointPrecision& theta, const Matrix& sigma_n);

[[nodiscard]] KktResiduals kkt_residuals(const FitResult& fit, const RegConfig& config,
                                         const Matrix& sigma_n);
// Same certificate for an arbitrary (theta, params) pair.
[[nodiscard]] KktResiduals kkt_residuals(const Matrix& theta, const StructuredParams& params,
                                         const RegConfig& config, const Matrix& sigma_n);

// Structure read-out shared by the solver and loaders.
void extract_structure(FitResult& fit);

}  // namespace sdr
