#pragma once
#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdr/errors.hpp"

namespace sdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Symmetric joint precision over (Y, X), responses first.
class JointPrecision {
 public:
  JointPrecision() = default;
  // Symmetrizes silently when the relative asymmetry is at most 1e-8.
  JointPrecision(const Matrix& theta, Index p, Index q);

  [[nodiscard]] Index p() const { return p_; }
  [[nodiscard]] Index q() const { return q_; }
  [[nodiscard]] Index dim() const { return p_ + q_; }
  [[nodiscard]] const Matrix& matrix() const { return theta_; }
  [[nodiscard]] Matrix theta_Y() const { return theta_.topLeftCorner(p_, p_); }
  [[nodiscard]] Matrix theta_YX() const { return theta_.topRightCorner(p_, q_); }
  [[nodiscard]] Matrix theta_X() const { return theta_.bottomRightCorner(q_, q_); }
  [[nodiscard]] bool is_positive_definite() const;
  [[nodiscard]] Matrix covariance() const;

 private:
  Matrix theta_;
  Index p_ = 0;
  Index q_ = 0;
};

// (S_Y, L_Y, Theta_YX, Theta_X). For the factor-model variant s_Y holds D_Y.
struct StructuredParams {
  Matrix s_Y;
  Matrix l_Y;
  Matrix theta_YX;
  Matrix theta_X;

  [[nodiscard]] Index p() const { return s_Y.rows(); }
  [[nodiscard]] Index q() const { return theta_X.rows(); }
  [[nodiscard]] static StructuredParams zeros(Index p, Index q);
  void check_dimensions() const;
};

enum class Variant { SdrFm, SdrGm, SdrLvgm, CsLvgm, CsGm };

[[nodiscard]] std::string_view variant_name(Variant v);
[[nodiscard]] Variant parse_variant(std::string_view name);
[[nodiscard]] bool has_latent(Variant v);
[[nodiscard]] bool has_sparse_weight(Variant v);  // uses delta
[[nodiscard]] bool is_column_sparse(Variant v);

struct RegConfig {
  Variant variant = Variant::SdrLvgm;
  double lambda_n = 0.0;
  double gamma = 1.0;
  double delta = 1.0;
  bool penalize_diagonal = true;
  // Replace tr(L)+PSD constraint by the unsigned nuclear norm of L.
  bool relaxed_latent = false;

  void validate() const;
};

struct ComplexitySummary {
  long node_params = 0;
  long edge_params = 0;
  long latent_rank_params = 0;
  long cross_rank_params = 0;
  long total = 0;
};

[[nodiscard]] Matrix assemble(const StructuredParams& params);
[[nodiscard]] StructuredParams split_adjoint(const Matrix& z, Index p, Index q);

[[nodiscard]] Matrix sdr_map(const JointPrecision& theta);

[[nodiscard]] double conditional_loglik(const Matrix& theta_Y, const Matrix& theta_YX,
                                        const Vector& y, const Vector& x);

[[nodiscard]] ComplexitySummary count_parameters(long p, long q, long edges, long latent_rank,
                                                 long cross_rank);
// Column-sparse cross block: kappa selected covariates, p entries each.
[[nodiscard]] ComplexitySummary count_parameters_column_sparse(long p, long q, long edges,
                                                               long latent_rank, long kappa);

[[nodiscard]] std::vector<double> principal_angles(const Matrix& u1, const Matrix& u2);

[[nodiscard]] Matrix sample_covariance(const Matrix& data);

struct FactorReport {
  Vector noise;      // diagonal of D^{-1}
  Matrix loadings;   // (D-L)^{-1} = diag(noise) + loadings * loadings'
};
[[nodiscard]] FactorReport fm_factor_report(const Matrix& d, const Matrix& l);

// Singular values at or below max(rows,cols)*eps*sigma_max*10 count as zero.
[[nodiscard]] double rank_tolerance(const Vector& singular_values, Index rows, Index cols);
[[nodiscard]] Index numerical_rank(const Matrix& m, std::optional<double> tol = std::nullopt);

[[nodiscard]] Matrix symmetrize_checked(const Matrix& m, double rel_tol = 1e-8);
[[nodiscard]] double min_eigenvalue(const Matrix& sym);
[[nodiscard]] Matrix orthonormal_basis(const Matrix& basis);  // throws on rank deficiency

}  // namespace sdr
