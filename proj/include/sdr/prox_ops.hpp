#pragma once
#include "sdr/model_core.hpp"

namespace sdr {

struct ProxReport {
  Matrix input;
  double threshold = 0.0;
  Index zeros = 0;     // exact zero entries, singular values, eigenvalues or columns
  Index kept = 0;      // resulting rank / column count where meaningful
  double residual = 0.0;
};

[[nodiscard]] Matrix soft_threshold(const Matrix& m, double t, bool penalize_diagonal = true,
                                    ProxReport* report = nullptr);
[[nodiscard]] Matrix svt(const Matrix& m, double t, ProxReport* report = nullptr);
[[nodiscard]] Matrix psd_trace_prox(const Matrix& m, double t, ProxReport* report = nullptr);
// Symmetric singular value thresholding: eigenvalues shrunk toward zero by t.
[[nodiscard]] Matrix symmetric_nuclear_prox(const Matrix& m, double t,
                                            ProxReport* report = nullptr);
[[nodiscard]] Matrix group_column_prox(const Matrix& m, double t, ProxReport* report = nullptr);
[[nodiscard]] Matrix logdet_update(const Matrix& b, const Matrix& sigma_n, double rho,
                                   Vector* eigenvalues = nullptr);
[[nodiscard]] Matrix diagonal_projection(const Matrix& m);

// Frobenius distance from g to t * subdifferential of the respective norm at x.
[[nodiscard]] double l1_subgradient_distance(const Matrix& x, const Matrix& g, double t,
                                             bool penalize_diagonal = true);
[[nodiscard]] double nuclear_subgradient_distance(const Matrix& x, const Matrix& g, double t);
[[nodiscard]] double group_subgradient_distance(const Matrix& x, const Matrix& g, double t);
// Distance from g to t*I + normal cone of the PSD cone at x.
[[nodiscard]] double psd_trace_subgradient_distance(const Matrix& x, const Matrix& g, double t);
// Symmetric nuclear norm over symmetric matrices.
[[nodiscard]] double symmetric_nuclear_subgradient_distance(const Matrix& x, const Matrix& g,
                                                            double t);

[[nodiscard]] double nuclear_norm(const Matrix& m);
[[nodiscard]] double group_norm(const Matrix& m);  // sum of column norms
[[nodiscard]] double l1_norm(const Matrix& m, bool include_diagonal = true);

}  // namespace sdr
