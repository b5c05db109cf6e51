#pragma once
#include <cstdint>

#include "sdr/model_core.hpp"

namespace sdr {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct PopulationSpec {
  Index p = 20;
  Index q = 4;
  Index k = 2;           // rank of Theta_YX*
  Index h = 2;           // rank of L_Y*
  Index max_degree = 2;  // off-diagonal neighbours per node in S_Y*
  Index edges = 10;      // requested off-diagonal edges (fewer if the cap forbids)
  Index kappa = 0;       // >0: Theta_YX* supported on kappa columns
  Range s_offdiag{0.3, 0.5};
  double s_diag = 1.0;
  double latent_scale = 0.5;
  Range cross_singular{0.4, 0.6};
  double x_offdiag = 0.1;
  double x_margin = 1.0;
  double diag_boost = 0.1;
  int max_boosts = 100;
  double min_eigenvalue = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct PopulationMetadata {
  double tau_Y = 0.0;     // smallest nonzero |entry| of S_Y*
  double sigma_Y = 0.0;   // smallest nonzero singular value of L_Y*
  double sigma_YX = 0.0;  // smallest nonzero singular value of Theta_YX*
  double zeta_YX = 0.0;   // smallest norm among nonzero columns of Theta_YX*
  Index deg = 0;          // max nonzeros per row of S_Y*, diagonal included
  double inc = 0.0;       // incoherence of L_Y*
  Index kappa = 0;        // nonzero columns of Theta_YX*
  Index latent_rank = 0;
  Index cross_rank = 0;
  Index edges = 0;
};

struct PopulationModel {
  PopulationSpec spec;
  JointPrecision theta_star;
  StructuredParams parts;  // (S_Y*, L_Y*, Theta_YX*, Theta_X*)
  PopulationMetadata meta;
  int boosts_used = 0;

  [[nodiscard]] Matrix sigma_star() const { return theta_star.covariance(); }
};

[[nodiscard]] PopulationModel make_population(const PopulationSpec& spec);
[[nodiscard]] Matrix sample(const PopulationModel& pop, Index n, std::uint64_t seed);
[[nodiscard]] PopulationMetadata describe(const StructuredParams& parts);
[[nodiscard]] inline PopulationMetadata describe(const PopulationModel& pop) {
  return describe(pop.parts);
}

}  // namespace sdr
