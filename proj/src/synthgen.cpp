#include "sdr/synthgen.hpp"

#include "sdr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace sdr {

namespace {

Matrix gaussian(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = nd(rng);
  return m;
}

Matrix random_orthonormal(Index r, Index c, std::mt19937_64& rng) {
  if (c == 0) return Matrix::Zero(r, 0);
  Eigen::HouseholderQR<Matrix> qr(gaussian(r, c, rng));
  Matrix q = qr.householderQ() * Matrix::Identity(r, c);
  // Fix signs so the draw is Haar distributed.
  const Matrix rr = qr.matrixQR().topLeftCorner(c, c);
  for (Index j = 0; j < c; ++j)
    if (rr(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

double uniform_magnitude(const Range& r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(r.lo, r.hi);
  std::bernoulli_distribution sign(0.5);
  const double v = r.hi > r.lo ? u(rng) : r.lo;
  return sign(rng) ? v : -v;
}

Vector nonzero_singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  const Vector s = Eigen::JacobiSVD<Matrix>(m).singularValues();
  const double tol = rank_tolerance(s, m.rows(), m.cols());
  const Index r = (s.array() > tol).count();
  return s.head(r);
}

}  // namespace

void PopulationSpec::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(what);
  };
  need(p >= 1 && q >= 0, "need p >= 1 and q >= 0");
  need(k >= 0 && k <= std::min(p, q), "k must lie in [0, min(p, q)]");
  need(h >= 0 && (h < p || h == 0), "h must be < p");
  need(max_degree >= 0 && (max_degree < p || max_degree == 0), "max_degree must be < p");
  need(edges >= 0, "edges must be >= 0");
  need(kappa >= 0 && kappa <= q, "kappa must lie in [0, q]");
  need(kappa == 0 || k <= kappa, "k cannot exceed kappa");
  need(s_offdiag.lo > 0 && s_offdiag.hi >= s_offdiag.lo, "bad S_Y magnitude range");
  need(cross_singular.lo > 0 && cross_singular.hi >= cross_singular.lo, "bad singular value range");
  need(latent_scale > 0 && s_diag > 0 && x_margin > 0 && x_offdiag >= 0, "scales must be positive");
  need(diag_boost > 0 && max_boosts >= 0 && min_eigenvalue > 0, "bad boost settings");
}

PopulationMetadata describe(const StructuredParams& parts) {
  parts.check_dimensions();
  PopulationMetadata md;
  const Matrix& s = parts.s_Y;
  double tau = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < s.cols(); ++j) {
    Index row_nnz = 0;
    for (Index i = 0; i < s.rows(); ++i) {
      if (s(i, j) != 0.0) {
        tau = std::min(tau, std::abs(s(i, j)));
        ++row_nnz;
        if (i < j) ++md.edges;
      }
    }
    md.deg = std::max(md.deg, row_nnz);
  }
  md.tau_Y = std::isfinite(tau) ? tau : 0.0;
  const Vector sl = nonzero_singular_values(parts.l_Y);
  md.latent_rank = sl.size();
  md.sigma_Y = sl.size() ? sl.minCoeff() : 0.0;
  const Vector sk = nonzero_singular_values(parts.theta_YX);
  md.cross_rank = sk.size();
  md.sigma_YX = sk.size() ? sk.minCoeff() : 0.0;
  md.inc = md.latent_rank > 0 ? incoherence(parts.l_Y) : 0.0;
  double zeta = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < parts.theta_YX.cols(); ++j) {
    const double nc = parts.theta_YX.col(j).norm();
    if (nc > 0.0) {
      ++md.kappa;
      zeta = std::min(zeta, nc);
    }
  }
  md.zeta_YX = std::isfinite(zeta) ? zeta : 0.0;
  return md;
}

PopulationModel make_population(const PopulationSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Index p = spec.p, q = spec.q;

  // Sparse pattern: propose random pairs, reject those that break the degree cap.
  Matrix s = Matrix::Zero(p, p);
  std::vector<Index> degree(static_cast<size_t>(p), 0);
  std::set<std::pair<Index, Index>> chosen;
  std::uniform_int_distribution<Index> pick(0, p - 1);
  const Index max_edges = spec.max_degree * p / 2;
  const Index target = std::min(spec.edges, max_edges);
  long attempts = 0;
  const long budget = 1000L * (p * p + 10);
  while (static_cast<Index>(chosen.size()) < target && attempts++ < budget) {
    Index i = pick(rng), j = pick(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (chosen.count({i, j})) continue;
    if (degree[static_cast<size_t>(i)] >= spec.max_degree ||
        degree[static_cast<size_t>(j)] >= spec.max_degree)
      continue;
    chosen.insert({i, j});
    ++degree[static_cast<size_t>(i)];
    ++degree[static_cast<size_t>(j)];
  }
  for (const auto& [i, j] : chosen) {
    const double v = uniform_magnitude(spec.s_offdiag, rng);
    s(i, j) = v;
    s(j, i) = v;
  }
  // Diagonal dominance margin before any boost.
  for (Index i = 0; i < p; ++i) s(i, i) = s.row(i).cwiseAbs().sum() + spec.s_diag;

  const Matrix qy = random_orthonormal(p, spec.h, rng);
  const Matrix l = spec.latent_scale * qy * qy.transpose();

  Matrix k = Matrix::Zero(p, q);
  if (spec.k > 0) {
    const Matrix u = random_orthonormal(p, spec.k, rng);
    Vector d(spec.k);
    std::uniform_real_distribution<double> ud(spec.cross_singular.lo, spec.cross_singular.hi);
    for (Index i = 0; i < spec.k; ++i) d(i) = ud(rng);
    Matrix v = Matrix::Zero(q, spec.k);
    if (spec.kappa > 0) {
      std::vector<Index> cols(static_cast<size_t>(q));
      for (Index j = 0; j < q; ++j) cols[static_cast<size_t>(j)] = j;
      std::shuffle(cols.begin(), cols.end(), rng);
      cols.resize(static_cast<size_t>(spec.kappa));
      std::sort(cols.begin(), cols.end());
      const Matrix vk = random_orthonormal(spec.kappa, spec.k, rng);
      for (Index a = 0; a < spec.kappa; ++a) v.row(cols[static_cast<size_t>(a)]) = vk.row(a);
    } else {
      v = random_orthonormal(q, spec.k, rng);
    }
    k = u * d.asDiagonal() * v.transpose();
  }

  Matrix x = Matrix::Zero(q, q);
  for (Index j = 0; j < q; ++j)
    for (Index i = 0; i < j; ++i) {
      std::uniform_real_distribution<double> ux(-spec.x_offdiag, spec.x_offdiag);
      x(i, j) = x(j, i) = spec.x_offdiag > 0 ? ux(rng) : 0.0;
    }
  for (Index i = 0; i < q; ++i) x(i, i) = x.row(i).cwiseAbs().sum() + spec.x_margin;

  PopulationModel pop;
  pop.spec = spec;
  pop.parts = {s, l, k, x};
  for (int b = 0;; ++b) {
    const Matrix theta = assemble(pop.parts);
    if (min_eigenvalue(theta) >= spec.min_eigenvalue) {
      pop.theta_star = JointPrecision(theta, p, q);
      pop.boosts_used = b;
      break;
    }
    if (b >= spec.max_boosts)
      throw ConstructionFailure("population not positive definite within the boost budget");
    pop.parts.s_Y.diagonal().array() += spec.diag_boost;
  }
  pop.meta = describe(pop.parts);
  return pop;
}

Matrix sample(const PopulationModel& pop, Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  const Matrix sigma = pop.sigma_star();
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericalFailure("Cholesky of Sigma* failed");
  std::mt19937_64 rng(seed);
  const Matrix z = gaussian(n, sigma.rows(), rng);
  return z * llt.matrixU();
}

}  // namespace sdr
