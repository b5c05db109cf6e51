#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include "sdr/diagnostics.hpp"
#include "sdr/solver.hpp"
#include "sdr/synthgen.hpp"

namespace sdr {

struct StructuralFlags {
  bool sign = false;         // sign(S_hat) == sign(S*), sign(0) = 0
  bool support = false;      // same nonzero pattern, signs ignored
  bool latent_rank = false;
  bool cross = false;        // rank match, or column-support match for CS variants
  [[nodiscard]] bool success() const { return sign && latent_rank && cross; }
};

// Entries with |x| <= this are treated as zero when reading structure.
inline constexpr double kZeroGuard = 1e-10;

[[nodiscard]] StructuralFlags structural_match(const FitResult& fit, const PopulationModel& pop,
                                               Variant variant);

struct PhiError {
  double sparse = 0.0;  // ||S_hat - S*||_inf / delta
  double latent = 0.0;  // ||L_hat - L*||_2
  double cross = 0.0;   // ||K_hat - K*||_2 / gamma  (||.||_{2,inf} / gamma for CS variants)
  double x = 0.0;       // ||Theta_X_hat - Theta_X*||_2
  [[nodiscard]] double max() const;
};

[[nodiscard]] PhiError phi_error(const FitResult& fit, const PopulationModel& pop,
                                 const RegConfig& config);

struct TrialOutcome {
  Index n = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  StructuralFlags flags;
  PhiError error;
  bool converged = false;
  double objective = 0.0;
  int iterations = 0;
  Index edge_count = 0;
  Index latent_rank = 0;
  Index cross_rank = 0;
  Index columns = 0;
};

// Reference population: p=20, q=4, k=2, h=2, at most 3 neighbours per node in S_Y*.
// kappa > 0 restricts Theta_YX* to kappa columns.
[[nodiscard]] PopulationSpec reference_population_spec(Index kappa = 0);

[[nodiscard]] TrialOutcome run_trial(const PopulationModel& pop, Index n, const RegConfig& config,
                                     const SolverOptions& options, std::uint64_t seed);

// n -> (lambda_n, gamma, delta) with lambda_n = c sqrt((p+q)/n).
struct RegRule {
  Variant variant = Variant::SdrLvgm;
  double c = 1.0;
  double gamma = 1.0;
  double delta = 1.0;
  bool penalize_diagonal = true;
  [[nodiscard]] RegConfig at(Index n, Index p, Index q) const;
};

struct GridPointSummary {
  Index n = 0;
  int trials = 0;
  double success_rate = 0.0;
  double support_rate = 0.0;
  double converged_rate = 0.0;
  double mean_phi = 0.0;
  double median_phi = 0.0;
};

struct ExperimentSummary {
  std::vector<Index> n_grid;
  std::vector<GridPointSummary> points;
  std::vector<TrialOutcome> outcomes;  // sorted by (n, trial)
  double slope = 0.0;                  // log median Phi error against log n; NaN below 3 points
  int trials = 0;
  double wall_seconds = 0.0;
};

// Seed of trial t at grid index i; fixed before any work is scheduled.
[[nodiscard]] std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t grid_index, int trial);

[[nodiscard]] ExperimentSummary run_experiment(const PopulationModel& pop,
                                               const std::vector<Index>& n_grid, int trials,
                                               const RegRule& rule, const SolverOptions& options,
                                               int jobs = 1, std::uint64_t base_seed = 1);

[[nodiscard]] double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
[[nodiscard]] double median(std::vector<double> v);

// Flat CSV: n,trial,seed,flags,four error components,objective,iterations.
void write_outcomes_csv(const ExperimentSummary& summary, std::ostream& out);

// Parameter count of a fitted model.
[[nodiscard]] ComplexitySummary fit_complexity(const FitResult& fit);

// Index of the chosen fit per variant: total closest to target, then fewer parameters,
// then smaller lambda_n.
[[nodiscard]] std::map<Variant, std::size_t> select_by_complexity(const std::vector<FitResult>& fits,
                                                                  long target_params);

// Mean conditional log-likelihood of Y given X over rows of [Y X]; q = 0 gives the marginal.
[[nodiscard]] double predictive_loglik(const FitResult& fit, const Matrix& test_data, Index p,
                                       Index q);

struct CalibrationGrid {
  std::vector<double> c{1.5, 2.0, 2.5, 3.0, 4.0};
  std::vector<double> gamma{1.0, 2.0};
  std::vector<double> delta{0.4, 0.55, 0.7, 1.0};
};

struct Calibration {
  RegRule rule;
  double success_rate = 0.0;
  bool from_parameter_set = false;  // gamma, delta from the Proposition-style set V
};

// Picks (c, gamma, delta) maximizing success at n_mid. If gamma_delta is given those are kept
// and only c is searched.
[[nodiscard]] Calibration calibrate(const PopulationModel& pop, Index n_mid, int trials,
                                    Variant variant, const CalibrationGrid& grid,
                                    const SolverOptions& options,
                                    const std::pair<double, double>* gamma_delta = nullptr,
                                    int jobs = 1, std::uint64_t base_seed = 7);

// (gamma, delta) at the middle of the parameter set V of the population, if V is nonempty.
[[nodiscard]] std::optional<std::pair<double, double>> parameter_set_midpoint(
    const PopulationModel& pop, double alpha, double nu, double omega_Y, double omega_YX,
    const SearchOptions& options = {});

}  // namespace sdr
