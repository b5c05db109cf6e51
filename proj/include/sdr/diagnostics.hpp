#pragma once
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sdr/model_core.hpp"

namespace sdr {

// Omega(M): symmetric matrices supported on a fixed index set.
struct SupportSpace {
  Index p = 0;
  std::vector<std::pair<Index, Index>> entries;  // i <= j, sorted

  [[nodiscard]] static SupportSpace from_matrix(const Matrix& m);
  [[nodiscard]] static SupportSpace diagonal(Index p);
  [[nodiscard]] static SupportSpace full(Index p);
  [[nodiscard]] static SupportSpace empty(Index p) { return {p, {}}; }
  [[nodiscard]] Matrix mask() const;
};

// T(N) = {U Y1' + Y2 V'}; symmetric tangents use V = U.
struct LowRankTangent {
  Matrix u;
  Matrix v;
  bool symmetric = false;

  [[nodiscard]] static LowRankTangent from_matrix(const Matrix& n, bool symmetric);
  [[nodiscard]] static LowRankTangent from_basis(const Matrix& u, const Matrix& v);
  [[nodiscard]] static LowRankTangent from_symmetric_basis(const Matrix& u);
  [[nodiscard]] static LowRankTangent empty(Index rows, Index cols, bool symmetric);
  [[nodiscard]] Index rows() const { return u.rows(); }
  [[nodiscard]] Index cols() const { return v.rows(); }
  [[nodiscard]] Index rank() const { return u.cols(); }
};

// F(M): matrices whose nonzero columns lie in a fixed set.
struct ColumnSupport {
  Index p = 0;
  Index q = 0;
  std::vector<Index> columns;

  [[nodiscard]] static ColumnSupport from_matrix(const Matrix& m);
};

struct SubspaceProduct {
  SupportSpace omega;
  LowRankTangent t_Y;
  std::variant<LowRankTangent, ColumnSupport> t_YX;

  [[nodiscard]] Index p() const { return omega.p; }
  [[nodiscard]] Index q() const;
  [[nodiscard]] bool column_sparse() const { return std::holds_alternative<ColumnSupport>(t_YX); }
  // Tangent product at (S_Y*, L_Y*, Theta_YX*); column support for the CS variants.
  [[nodiscard]] static SubspaceProduct at(const StructuredParams& parts, bool column_sparse = false);
};

[[nodiscard]] Matrix project_support(const SupportSpace& space, const Matrix& m);
[[nodiscard]] Matrix project_lowrank_tangent(const LowRankTangent& t, const Matrix& n);
[[nodiscard]] Matrix project_column_support(const ColumnSupport& f, const Matrix& n);
[[nodiscard]] StructuredParams project_product(const SubspaceProduct& h, const StructuredParams& z);
[[nodiscard]] Matrix fisher_apply(const Matrix& sigma_star, const Matrix& m);

[[nodiscard]] double phi_norm(const StructuredParams& z, double delta, double gamma);
[[nodiscard]] double phi_tilde_norm(const StructuredParams& z, double delta, double gamma);

[[nodiscard]] double incoherence(const Matrix& n);

// Orthonormal coordinates for S^p x S^p x R^{pxq} x S^q.
class ProductCoordinates {
 public:
  ProductCoordinates(Index p, Index q);
  [[nodiscard]] Index dim() const { return dim_; }
  [[nodiscard]] Vector to_coords(const StructuredParams& z) const;
  [[nodiscard]] StructuredParams from_coords(const Vector& x) const;

 private:
  Index p_, q_, dim_;
};

enum class Certificate { Exact, Bound, Sampled };
[[nodiscard]] std::string_view certificate_name(Certificate c);

struct Estimate {
  double value = 0.0;
  std::string mode;
  Certificate level = Certificate::Exact;
};

enum class GainMode { ExactFrobenius, PhiSampled };

struct SearchOptions {
  int restarts = 24;
  int local_starts = 6;
  int max_sweeps = 300;
  double min_step = 1e-7;
  std::uint64_t seed = 12345;
};

struct SearchResult {
  double value = 0.0;
  Vector argument;
};

// Extremum of num(x)/den(x) over nonzero x in R^d by restarts plus pattern search.
[[nodiscard]] SearchResult sampled_ratio_extremum(
    Index d, const std::function<double(const Vector&)>& num,
    const std::function<double(const Vector&)>& den, bool maximize, const SearchOptions& options,
    const std::vector<Vector>& seeds = {});

// Dense matrices of the operators in product coordinates.
struct FisherOperator {
  Matrix full;       // A^dagger I* A on the whole product space
  Matrix basis_h;    // orthonormal basis of H
  Matrix basis_perp; // orthonormal basis of the complement of H
  Matrix restricted; // basis_h' * full * basis_h
};
[[nodiscard]] FisherOperator build_fisher_operator(const SubspaceProduct& h, const Matrix& sigma_star);

[[nodiscard]] Estimate chi_min_gain(const SubspaceProduct& h, const Matrix& sigma_star, double delta,
                                    double gamma, GainMode mode, const SearchOptions& options = {});
[[nodiscard]] Estimate varphi_irrepresentability(const SubspaceProduct& h, const Matrix& sigma_star,
                                                 double delta, double gamma, GainMode mode,
                                                 const SearchOptions& options = {});

struct RhoEstimate {
  double value = 0.0;
  Matrix maximizer;
};
[[nodiscard]] RhoEstimate rho_distortion(const LowRankTangent& t1, const LowRankTangent& t2,
                                         int restarts = 8, std::uint64_t seed = 99);

struct MuBounds {
  double upper = 0.0;  // deg
  double lower = 0.0;  // best sign pattern found
  bool exhaustive = false;
};
[[nodiscard]] MuBounds mu_omega(const SupportSpace& space, int samples = 2000, std::uint64_t seed = 5);

struct XiEstimate {
  double bracket_lo = 0.0;  // inc
  double bracket_hi = 0.0;  // 2 inc
  double estimate = 0.0;
};
[[nodiscard]] XiEstimate xi_tangent(const LowRankTangent& t, const SearchOptions& options = {});

// Perturbed tangent with rho(result, t) close to but not above budget.
[[nodiscard]] LowRankTangent perturb_tangent(const LowRankTangent& t, double budget,
                                             std::uint64_t seed);

struct EtaValues {
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta3 = 0.0;
};
struct EtaReport {
  EtaValues nominal;
  EtaValues worst;  // over nominal and accepted perturbations
  int perturbations = 0;
  Certificate level = Certificate::Sampled;
};
[[nodiscard]] EtaValues eta_at(const SubspaceProduct& h, const Matrix& sigma_star,
                               const SearchOptions& options = {});
[[nodiscard]] EtaReport eta_quantities(const SubspaceProduct& h_star, const Matrix& sigma_star,
                                       double omega_Y, double omega_YX, int samples,
                                       const SearchOptions& options = {});

struct PolyhedralSet {
  double beta = 0.0;
  double delta_lo = 0.0;
  double delta_hi = 0.0;
  bool nonempty = false;
  std::vector<std::string> failed_hypotheses;  // "i".."iv"; "i"/"iii" need eta1/eta3
  std::vector<std::string> unchecked_hypotheses;
  double alpha = 0.0, inc = 0.0, deg = 0.0, eta2 = 0.0;

  // [max{1, eta2 deg delta 2beta/alpha}, min{delta,1}/eta2 * alpha/beta]
  [[nodiscard]] std::pair<double, double> gamma_interval(double delta) const;
  [[nodiscard]] bool contains(double delta, double gamma) const;
};
[[nodiscard]] PolyhedralSet polyhedral_set_V(double alpha, double nu, double omega_Y, double omega_YX,
                                             double inc, double deg, double eta2,
                                             std::optional<double> eta1 = std::nullopt,
                                             std::optional<double> eta3 = std::nullopt);

enum class TheoremKind { LowRank, ColumnSparse };

struct TheoremConstants {
  TheoremKind kind = TheoremKind::LowRank;
  double alpha = 0, nu = 0, psi = 0, delta = 0, gamma = 0, deg = 0, kappa = 0;
  double omega_Y = 0, omega_YX = 0;
  double dim = 0;  // p + q
  double m = 0, m_bar = 0, beta = 0;
  double C1 = 0, C2 = 0;
  double C_sigmaY = 0, C_sigmaYX = 0;  // low-rank theorem
  double C_sigma = 0;                  // column-sparse theorem
  double C_samp = 0;
  double lambda_upper = 0;
  double n_min = 0;
  // tau >= tau_coef*lambda, sigma_Y >= sigmaY_coef*lambda, sigma_YX >= sigmaYX_coef*lambda,
  // zeta_YX >= zeta_coef*lambda.
  double tau_coef = 0, sigmaY_coef = 0, sigmaYX_coef = 0, zeta_coef = 0;

  [[nodiscard]] std::pair<double, double> lambda_range(double n) const;
  [[nodiscard]] bool lambda_range_nonempty(double n) const;
};

struct TheoremInputs {
  double alpha = 1.0;
  double nu = 0.25;
  double psi = 1.0;
  double delta = 1.0;
  double gamma = 1.0;
  double deg = 1.0;
  double omega_Y = 0.1;
  double omega_YX = 0.1;
  double dim = 1.0;  // p + q
  TheoremKind kind = TheoremKind::LowRank;
  double kappa = 0.0;
};
[[nodiscard]] TheoremConstants theorem_constants(const TheoremInputs& in);

}  // namespace sdr
