#include "sdr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "sdr/prox_ops.hpp"

namespace sdr {

namespace {

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double col_norm_max(const Matrix& m) { return m.size() ? m.colwise().norm().maxCoeff() : 0.0; }

Matrix orth_or_empty(const Matrix& m, Index rows) {
  if (m.cols() == 0) return Matrix::Zero(rows, 0);
  return orthonormal_basis(m);
}

// Orthonormal basis (columns) for the range of a symmetric projector matrix.
Matrix projector_range(const Matrix& proj) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (proj + proj.transpose()));
  std::vector<Index> keep;
  for (Index i = 0; i < proj.rows(); ++i)
    if (es.eigenvalues()(i) > 0.5) keep.push_back(i);
  Matrix b(proj.rows(), static_cast<Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) b.col(static_cast<Index>(j)) = es.eigenvectors().col(keep[j]);
  return b;
}

// Coordinates for a single block (symmetric or rectangular).
struct BlockCoords {
  Index rows, cols;
  bool symmetric;
  [[nodiscard]] Index dim() const { return symmetric ? rows * (rows + 1) / 2 : rows * cols; }
  [[nodiscard]] Vector to(const Matrix& m) const {
    Vector x(dim());
    Index k = 0;
    if (symmetric) {
      for (Index j = 0; j < rows; ++j)
        for (Index i = 0; i <= j; ++i)
          x(k++) = i == j ? m(i, i) : std::sqrt(2.0) * 0.5 * (m(i, j) + m(j, i));
    } else {
      for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) x(k++) = m(i, j);
    }
    return x;
  }
  [[nodiscard]] Matrix from(const Vector& x) const {
    Matrix m(rows, cols);
    Index k = 0;
    if (symmetric) {
      for (Index j = 0; j < rows; ++j)
        for (Index i = 0; i <= j; ++i) {
          if (i == j) m(i, i) = x(k++);
          else m(i, j) = m(j, i) = x(k++) / std::sqrt(2.0);
        }
    } else {
      for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = x(k++);
    }
    return m;
  }
  // Orthonormal basis of the range of a linear projection given as a function.
  [[nodiscard]] Matrix subspace_basis(const std::function<Matrix(const Matrix&)>& proj) const {
    const Index d = dim();
    Matrix pm(d, d);
    for (Index i = 0; i < d; ++i) pm.col(i) = to(proj(from(Vector::Unit(d, i))));
    return projector_range(pm);
  }
};

Matrix polar_factor(const Matrix& g, bool symmetric) {
  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.transpose()));
    Vector s = es.eigenvalues().unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
    return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
  }
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Index r = std::min(g.rows(), g.cols());
  return svd.matrixU().leftCols(r) * svd.matrixV().leftCols(r).transpose();
}

}  // namespace

// ---------------------------------------------------------------- spaces

SupportSpace SupportSpace::from_matrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("support matrix must be square");
  SupportSpace s{m.rows(), {}};
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i <= j; ++i)
      if (m(i, j) != 0.0 || m(j, i) != 0.0) s.entries.emplace_back(i, j);
  return s;
}

SupportSpace SupportSpace::diagonal(Index p) {
  SupportSpace s{p, {}};
  for (Index i = 0; i < p; ++i) s.entries.emplace_back(i, i);
  return s;
}

SupportSpace SupportSpace::full(Index p) {
  SupportSpace s{p, {}};
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i <= j; ++i) s.entries.emplace_back(i, j);
  return s;
}

Matrix SupportSpace::mask() const {
  Matrix m = Matrix::Zero(p, p);
  for (const auto& [i, j] : entries) m(i, j) = m(j, i) = 1.0;
  return m;
}

LowRankTangent LowRankTangent::from_matrix(const Matrix& n, bool symmetric) {
  if (symmetric) {
    if (n.rows() != n.cols()) throw InvalidArgument("symmetric tangent needs a square matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (n + n.transpose()));
    const Vector& ev = es.eigenvalues();
    const double tol = rank_tolerance(ev.cwiseAbs(), n.rows(), n.cols());
    std::vector<Index> keep;
    for (Index i = 0; i < ev.size(); ++i)
      if (std::abs(ev(i)) > tol) keep.push_back(i);
    Matrix u(n.rows(), static_cast<Index>(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) u.col(static_cast<Index>(j)) = es.eigenvectors().col(keep[j]);
    return {u, u, true};
  }
  if (n.size() == 0) return empty(n.rows(), n.cols(), false);
  Eigen::JacobiSVD<Matrix> svd(n, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Index r = (s.array() > rank_tolerance(s, n.rows(), n.cols())).count();
  return {svd.matrixU().leftCols(r), svd.matrixV().leftCols(r), false};
}

LowRankTangent LowRankTangent::from_basis(const Matrix& u, const Matrix& v) {
  if (u.cols() != v.cols()) throw InvalidArgument("U and V must have the same number of columns");
  return {orth_or_empty(u, u.rows()), orth_or_empty(v, v.rows()), false};
}

LowRankTangent LowRankTangent::from_symmetric_basis(const Matrix& u) {
  Matrix q = orth_or_empty(u, u.rows());
  return {q, q, true};
}

LowRankTangent LowRankTangent::empty(Index rows, Index cols, bool symmetric) {
  return {Matrix::Zero(rows, 0), Matrix::Zero(symmetric ? rows : cols, 0), symmetric};
}

ColumnSupport ColumnSupport::from_matrix(const Matrix& m) {
  ColumnSupport f{m.rows(), m.cols(), {}};
  for (Index j = 0; j < m.cols(); ++j)
    if (m.col(j).cwiseAbs().maxCoeff() > 0.0) f.columns.push_back(j);
  return f;
}

Index SubspaceProduct::q() const {
  if (const auto* t = std::get_if<LowRankTangent>(&t_YX)) return t->cols();
  return std::get<ColumnSupport>(t_YX).q;
}

SubspaceProduct SubspaceProduct::at(const StructuredParams& parts, bool column_sparse) {
  parts.check_dimensions();
  SubspaceProduct h;
  h.omega = SupportSpace::from_matrix(parts.s_Y);
  h.t_Y = LowRankTangent::from_matrix(parts.l_Y, true);
  if (column_sparse) h.t_YX = ColumnSupport::from_matrix(parts.theta_YX);
  else h.t_YX = LowRankTangent::from_matrix(parts.theta_YX, false);
  return h;
}

Matrix project_support(const SupportSpace& space, const Matrix& m) {
  if (m.rows() != space.p || m.cols() != space.p) throw InvalidArgument("support dimension mismatch");
  return m.cwiseProduct(space.mask());
}

Matrix project_lowrank_tangent(const LowRankTangent& t, const Matrix& n) {
  if (n.rows() != t.rows() || n.cols() != t.cols()) throw InvalidArgument("tangent dimension mismatch");
  if (t.rank() == 0) return Matrix::Zero(n.rows(), n.cols());
  const Matrix pu_n = t.u * (t.u.transpose() * n);
  const Matrix n_pv = (n * t.v) * t.v.transpose();
  return pu_n + n_pv - t.u * (t.u.transpose() * n_pv);
}

Matrix project_column_support(const ColumnSupport& f, const Matrix& n) {
  if (n.rows() != f.p || n.cols() != f.q) throw InvalidArgument("column support dimension mismatch");
  Matrix out = Matrix::Zero(n.rows(), n.cols());
  for (Index j : f.columns) out.col(j) = n.col(j);
  return out;
}

StructuredParams project_product(const SubspaceProduct& h, const StructuredParams& z) {
  StructuredParams out;
  out.s_Y = project_support(h.omega, z.s_Y);
  out.l_Y = project_lowrank_tangent(h.t_Y, z.l_Y);
  if (const auto* t = std::get_if<LowRankTangent>(&h.t_YX)) out.theta_YX = project_lowrank_tangent(*t, z.theta_YX);
  else out.theta_YX = project_column_support(std::get<ColumnSupport>(h.t_YX), z.theta_YX);
  out.theta_X = z.theta_X;
  return out;
}

Matrix fisher_apply(const Matrix& sigma_star, const Matrix& m) {
  if (sigma_star.rows() != m.rows() || m.rows() != m.cols() || sigma_star.cols() != m.cols())
    throw InvalidArgument("fisher_apply dimension mismatch");
  return sigma_star * m * sigma_star;
}

double phi_norm(const StructuredParams& z, double delta, double gamma) {
  if (!(delta > 0.0) || !(gamma > 0.0)) throw InvalidArgument("delta and gamma must be positive");
  return std::max({max_abs(z.s_Y) / delta, spectral_norm(z.l_Y), spectral_norm(z.theta_YX) / gamma,
                   spectral_norm(z.theta_X)});
}

double phi_tilde_norm(const StructuredParams& z, double delta, double gamma) {
  if (!(delta > 0.0) || !(gamma > 0.0)) throw InvalidArgument("delta and gamma must be positive");
  return std::max({max_abs(z.s_Y) / delta, spectral_norm(z.l_Y), col_norm_max(z.theta_YX) / gamma,
                   spectral_norm(z.theta_X)});
}

double incoherence(const Matrix& n) {
  if (n.size() == 0 || n.cwiseAbs().maxCoeff() == 0.0) throw InvalidArgument("incoherence of a zero matrix");
  Eigen::JacobiSVD<Matrix> svd(n, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Index r = (s.array() > rank_tolerance(s, n.rows(), n.cols())).count();
  const Matrix u = svd.matrixU().leftCols(r);
  const Matrix v = svd.matrixV().leftCols(r);
  return std::max(u.rowwise().norm().maxCoeff(), v.rowwise().norm().maxCoeff());
}

// ---------------------------------------------------------------- coordinates

ProductCoordinates::ProductCoordinates(Index p, Index q)
    : p_(p), q_(q), dim_(p * (p + 1) + p * q + q * (q + 1) / 2) {}

Vector ProductCoordinates::to_coords(const StructuredParams& z) const {
  const BlockCoords sy{p_, p_, true}, k{p_, q_, false}, x{q_, q_, true};
  Vector out(dim_);
  out << sy.to(z.s_Y), sy.to(z.l_Y), k.to(z.theta_YX), x.to(z.theta_X);
  return out;
}

StructuredParams ProductCoordinates::from_coords(const Vector& v) const {
  const BlockCoords sy{p_, p_, true}, k{p_, q_, false}, x{q_, q_, true};
  const Index a = sy.dim(), b = k.dim();
  return {sy.from(v.segment(0, a)), sy.from(v.segment(a, a)), k.from(v.segment(2 * a, b)),
          x.from(v.segment(2 * a + b, x.dim()))};
}

std::string_view certificate_name(Certificate c) {
  switch (c) {
    case Certificate::Exact: return "exact";
    case Certificate::Bound: return "bound";
    case Certificate::Sampled: return "sampled";
  }
  return "unknown";
}

// ---------------------------------------------------------------- search

SearchResult sampled_ratio_extremum(Index d, const std::function<double(const Vector&)>& num,
                                    const std::function<double(const Vector&)>& den, bool maximize,
                                    const SearchOptions& opt, const std::vector<Vector>& seeds) {
  SearchResult best;
  best.value = maximize ? -std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::infinity();
  if (d == 0) {
    best.value = 0.0;
    return best;
  }
  const double sgn = maximize ? 1.0 : -1.0;
  auto ratio = [&](const Vector& x, double& dval) {
    dval = den(x);
    if (!(dval > 0.0)) return -std::numeric_limits<double>::infinity();
    return sgn * num(x) / dval;
  };
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  auto gauss = [&] {
    Vector v(d);
    for (Index i = 0; i < d; ++i) v(i) = nd(rng);
    return v;
  };

  std::vector<std::pair<double, Vector>> starts;
  auto consider = [&](const Vector& x) {
    double dv;
    const double r = ratio(x, dv);
    if (std::isfinite(r)) starts.emplace_back(r, x / dv);
  };
  for (const auto& s : seeds) consider(s);
  for (Index i = 0; i < d; ++i) consider(Vector::Unit(d, i));
  for (int r = 0; r < opt.restarts; ++r) consider(gauss());
  if (starts.empty()) throw NumericalFailure("no admissible starting point for ratio search");
  std::sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  const int n_local = std::min<int>(opt.local_starts, static_cast<int>(starts.size()));
  double best_r = starts.front().first;
  Vector best_x = starts.front().second;
  for (int s = 0; s < n_local; ++s) {
    Vector x = starts[static_cast<size_t>(s)].second;
    double fx = starts[static_cast<size_t>(s)].first;
    double step = 0.5 / std::max(1.0, x.norm()) * x.norm();
    if (!(step > 0.0)) step = 0.5;
    for (int sweep = 0; sweep < opt.max_sweeps && step > opt.min_step * std::max(1.0, x.norm()); ++sweep) {
      bool improved = false;
      auto try_dir = [&](const Vector& dir) {
        for (double sign : {1.0, -1.0}) {
          const Vector y = x + sign * step * dir;
          double dv;
          const double r = ratio(y, dv);
          if (r > fx + 1e-15 * std::abs(fx)) {
            fx = r;
            x = y / dv;
            improved = true;
            return;
          }
        }
      };
      for (Index i = 0; i < d; ++i) try_dir(Vector::Unit(d, i));
      for (Index i = 0; i < std::min<Index>(d, 8); ++i) {
        Vector g = gauss();
        try_dir(g / g.norm());
      }
      if (!improved) step *= 0.5;
    }
    if (fx > best_r) {
      best_r = fx;
      best_x = x;
    }
  }
  best.value = sgn * best_r;
  best.argument = best_x;
  return best;
}

// ---------------------------------------------------------------- Fisher operator

FisherOperator build_fisher_operator(const SubspaceProduct& h, const Matrix& sigma_star) {
  const Index p = h.p(), q = h.q();
  if (sigma_star.rows() != p + q || sigma_star.cols() != p + q)
    throw InvalidArgument("Sigma* dimension does not match the subspace product");
  if (h.t_Y.rows() != p || h.t_Y.cols() != p) throw InvalidArgument("T_Y has wrong shape");
  const ProductCoordinates pc(p, q);
  const Index n = pc.dim();
  FisherOperator op;
  op.full.resize(n, n);
  Matrix proj(n, n);
  for (Index i = 0; i < n; ++i) {
    const StructuredParams e = pc.from_coords(Vector::Unit(n, i));
    const Matrix img = fisher_apply(sigma_star, assemble(e));
    op.full.col(i) = pc.to_coords(split_adjoint(img, p, q));
    proj.col(i) = pc.to_coords(project_product(h, e));
  }
  op.basis_h = projector_range(proj);
  op.basis_perp = projector_range(Matrix::Identity(n, n) - proj);
  op.restricted = op.basis_h.transpose() * op.full * op.basis_h;
  return op;
}

namespace {

std::function<double(const StructuredParams&)> phi_for(const SubspaceProduct& h, double delta,
                                                       double gamma) {
  if (h.column_sparse())
    return [=](const StructuredParams& z) { return phi_tilde_norm(z, delta, gamma); };
  return [=](const StructuredParams& z) { return phi_norm(z, delta, gamma); };
}

}  // namespace

Estimate chi_min_gain(const SubspaceProduct& h, const Matrix& sigma_star, double delta, double gamma,
                      GainMode mode, const SearchOptions& opt) {
  const FisherOperator op = build_fisher_operator(h, sigma_star);
  const Index d = op.basis_h.cols();
  if (d == 0) return {0.0, "exact-frobenius", Certificate::Exact};
  if (mode == GainMode::ExactFrobenius) {
    const Vector s = Eigen::JacobiSVD<Matrix>(op.restricted).singularValues();
    return {s(s.size() - 1), "exact-frobenius", Certificate::Exact};
  }
  const ProductCoordinates pc(h.p(), h.q());
  const auto phi = phi_for(h, delta, gamma);
  auto num = [&](const Vector& x) { return phi(pc.from_coords(op.basis_h * (op.restricted * x))); };
  auto den = [&](const Vector& x) { return phi(pc.from_coords(op.basis_h * x)); };
  const auto res = sampled_ratio_extremum(d, num, den, false, opt);
  return {res.value, h.column_sparse() ? "phi-tilde-sampled" : "phi-sampled", Certificate::Sampled};
}

Estimate varphi_irrepresentability(const SubspaceProduct& h, const Matrix& sigma_star, double delta,
                                   double gamma, GainMode mode, const SearchOptions& opt) {
  const FisherOperator op = build_fisher_operator(h, sigma_star);
  const Index d = op.basis_h.cols();
  const std::string name = mode == GainMode::ExactFrobenius
                               ? "exact-frobenius"
                               : (h.column_sparse() ? "phi-tilde-sampled" : "phi-sampled");
  if (op.basis_perp.cols() == 0 || d == 0) return {0.0, name, Certificate::Exact};
  Eigen::JacobiSVD<Matrix> svd(op.restricted, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  if (!(s(s.size() - 1) > 1e-12 * std::max(1.0, s(0))))
    throw DegenerateModel("restricted Fisher operator is singular on H");
  const Matrix inv = svd.solve(Matrix::Identity(d, d));
  const Matrix cross = op.basis_perp.transpose() * op.full * op.basis_h * inv;
  if (mode == GainMode::ExactFrobenius) {
    const double v = Eigen::JacobiSVD<Matrix>(cross).singularValues()(0);
    return {v, name, Certificate::Exact};
  }
  const ProductCoordinates pc(h.p(), h.q());
  const auto phi = phi_for(h, delta, gamma);
  auto num = [&](const Vector& x) { return phi(pc.from_coords(op.basis_perp * (cross * x))); };
  auto den = [&](const Vector& x) { return phi(pc.from_coords(op.basis_h * x)); };
  const auto res = sampled_ratio_extremum(d, num, den, true, opt);
  return {res.value, name, Certificate::Sampled};
}

// ---------------------------------------------------------------- rho, mu, xi

RhoEstimate rho_distortion(const LowRankTangent& t1, const LowRankTangent& t2, int restarts,
                           std::uint64_t seed) {
  if (t1.rows() != t2.rows() || t1.cols() != t2.cols() || t1.symmetric != t2.symmetric)
    throw InvalidArgument("tangent spaces live in different ambient spaces");
  const bool sym = t1.symmetric;
  const Index r = t1.rows(), c = t1.cols();
  auto dmap = [&](const Matrix& n) -> Matrix { return project_lowrank_tangent(t1, n) - project_lowrank_tangent(t2, n); };
  RhoEstimate best{0.0, Matrix::Zero(r, c)};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Matrix> starts;
  // Deterministic starts from the bases themselves, then random ones.
  for (const Matrix* b : {&t1.u, &t2.u})
    for (Index j = 0; j < b->cols(); ++j) {
      Matrix n = b->col(j) * (sym ? b->col(j) : (b == &t1.u ? t1.v.col(j) : t2.v.col(j))).transpose();
      starts.push_back(n);
    }
  for (int k = 0; k < restarts; ++k) {
    Matrix g(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) g(i, j) = nd(rng);
    starts.push_back(sym ? Matrix(0.5 * (g + g.transpose())) : g);
  }
  for (Matrix n : starts) {
    n = polar_factor(n, sym);
    double val = spectral_norm(dmap(n));
    for (int it = 0; it < 200; ++it) {
      const Matrix dn = dmap(n);
      Matrix dir;
      if (sym) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (dn + dn.transpose()));
        const Vector& ev = es.eigenvalues();
        const Index top = std::abs(ev(0)) > std::abs(ev(ev.size() - 1)) ? 0 : ev.size() - 1;
        const Vector u = es.eigenvectors().col(top);
        dir = (ev(top) >= 0 ? 1.0 : -1.0) * u * u.transpose();
      } else {
        Eigen::JacobiSVD<Matrix> svd(dn, Eigen::ComputeFullU | Eigen::ComputeFullV);
        dir = svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
      }
      const Matrix next = polar_factor(dmap(dir), sym);
      const double nv = spectral_norm(dmap(next));
      if (nv <= val * (1.0 + 1e-14)) {
        if (nv > val) { val = nv; n = next; }
        break;
      }
      val = nv;
      n = next;
    }
    if (val > best.value) best = {val, n};
  }
  return best;
}

MuBounds mu_omega(const SupportSpace& space, int samples, std::uint64_t seed) {
  MuBounds mb;
  std::vector<Index> row_count(static_cast<size_t>(space.p), 0);
  for (const auto& [i, j] : space.entries) {
    ++row_count[static_cast<size_t>(i)];
    if (i != j) ++row_count[static_cast<size_t>(j)];
  }
  mb.upper = space.p ? static_cast<double>(*std::max_element(row_count.begin(), row_count.end())) : 0.0;
  const size_t m = space.entries.size();
  if (m == 0) return mb;
  auto eval = [&](const std::vector<double>& signs) {
    Matrix n = Matrix::Zero(space.p, space.p);
    for (size_t k = 0; k < m; ++k) {
      const auto [i, j] = space.entries[k];
      n(i, j) = n(j, i) = signs[k];
    }
    return spectral_norm(n);
  };
  std::vector<double> signs(m, 1.0);
  if (m <= 16) {
    mb.exhaustive = true;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      for (size_t k = 0; k < m; ++k) signs[k] = (mask >> k) & 1u ? -1.0 : 1.0;
      mb.lower = std::max(mb.lower, eval(signs));
    }
    return mb;
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  mb.lower = eval(signs);
  for (int s = 0; s < samples; ++s) {
    for (size_t k = 0; k < m; ++k) signs[k] = coin(rng) ? 1.0 : -1.0;
    mb.lower = std::max(mb.lower, eval(signs));
  }
  return mb;
}

XiEstimate xi_tangent(const LowRankTangent& t, const SearchOptions& opt) {
  XiEstimate xe;
  if (t.rank() == 0) return xe;
  const double inc = std::max(t.u.rowwise().norm().maxCoeff(), t.v.rowwise().norm().maxCoeff());
  xe.bracket_lo = inc;
  xe.bracket_hi = 2.0 * inc;
  const BlockCoords bc{t.rows(), t.cols(), t.symmetric};
  const Matrix basis = bc.subspace_basis([&](const Matrix& m) { return project_lowrank_tangent(t, m); });
  auto mat = [&](const Vector& x) { return bc.from(basis * x); };
  auto num = [&](const Vector& x) { return max_abs(mat(x)); };
  auto den = [&](const Vector& x) { return spectral_norm(mat(x)); };
  // Seeds that attain at least inc.
  std::vector<Vector> seeds;
  const Matrix pu = t.u * t.u.transpose(), pv = t.v * t.v.transpose();
  for (Index i = 0; i < t.rows(); ++i) {
    const Vector ui = pu.col(i);
    if (ui.norm() == 0.0) continue;
    Matrix n;
    if (t.symmetric) {
      const Vector e = Vector::Unit(t.rows(), i);
      n = ui.normalized() * e.transpose() + e * ui.normalized().transpose();
    } else {
      n = ui.normalized() * Vector::Unit(t.cols(), 0).transpose();
    }
    seeds.push_back(basis.transpose() * bc.to(n));
  }
  if (!t.symmetric)
    for (Index j = 0; j < t.cols(); ++j) {
      const Vector vj = pv.col(j);
      if (vj.norm() == 0.0) continue;
      seeds.push_back(basis.transpose() * bc.to(Vector::Unit(t.rows(), 0) * vj.normalized().transpose()));
    }
  const auto res = sampled_ratio_extremum(basis.cols(), num, den, true, opt, seeds);
  xe.estimate = res.value;
  return xe;
}

LowRankTangent perturb_tangent(const LowRankTangent& t, double budget, std::uint64_t seed) {
  if (t.rank() == 0 || budget <= 0.0) return t;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  auto gauss = [&](Index r, Index c) {
    Matrix g(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) g(i, j) = nd(rng);
    return g;
  };
  const Matrix gu = gauss(t.u.rows(), t.rank());
  const Matrix gv = t.symmetric ? gu : gauss(t.v.rows(), t.rank());
  auto make = [&](double eps) {
    if (t.symmetric) return LowRankTangent::from_symmetric_basis(t.u + eps * gu);
    return LowRankTangent::from_basis(t.u + eps * gu, t.v + eps * gv);
  };
  double lo = 0.0, hi = 1.0;
  while (rho_distortion(t, make(hi), 2, seed).value < budget && hi < 1e3) hi *= 2.0;
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (rho_distortion(t, make(mid), 2, seed).value <= budget) lo = mid;
    else hi = mid;
  }
  return make(lo);
}

// ---------------------------------------------------------------- eta

namespace {

struct BlockSpace {
  BlockCoords coords;
  Matrix basis;  // in block coordinates
  std::function<Matrix(const Matrix&)> project;
  std::function<double(const Matrix&)> norm;
};

std::vector<BlockSpace> block_spaces(const SubspaceProduct& h) {
  const Index p = h.p(), q = h.q();
  std::vector<BlockSpace> out;
  const BlockCoords sy{p, p, true}, kx{p, q, false}, xx{q, q, true};
  auto proj_omega = [h](const Matrix& m) { return project_support(h.omega, m); };
  auto proj_ty = [h](const Matrix& m) { return project_lowrank_tangent(h.t_Y, m); };
  std::function<Matrix(const Matrix&)> proj_yx;
  if (const auto* t = std::get_if<LowRankTangent>(&h.t_YX)) {
    LowRankTangent tt = *t;
    proj_yx = [tt](const Matrix& m) { return project_lowrank_tangent(tt, m); };
  } else {
    ColumnSupport f = std::get<ColumnSupport>(h.t_YX);
    proj_yx = [f](const Matrix& m) { return project_column_support(f, m); };
  }
  auto ident = [](const Matrix& m) { return m; };
  out.push_back({sy, sy.subspace_basis(proj_omega), proj_omega, max_abs});
  out.push_back({sy, sy.subspace_basis(proj_ty), proj_ty, spectral_norm});
  out.push_back({kx, kx.subspace_basis(proj_yx), proj_yx,
                 h.column_sparse() ? std::function<double(const Matrix&)>(col_norm_max)
                                   : std::function<double(const Matrix&)>(spectral_norm)});
  out.push_back({xx, xx.subspace_basis(ident), ident, spectral_norm});
  return out;
}

// A applied to an element of block i alone.
Matrix embed_block(int i, const Matrix& m, Index p, Index q) {
  StructuredParams z = StructuredParams::zeros(p, q);
  switch (i) {
    case 0: z.s_Y = m; break;
    case 1: z.l_Y = m; break;
    case 2: z.theta_YX = m; break;
    default: z.theta_X = m; break;
  }
  return assemble(z);
}

// Component i of A^dagger(Z).
Matrix adjoint_block(int i, const Matrix& big, Index p, Index q) {
  const StructuredParams z = split_adjoint(big, p, q);
  switch (i) {
    case 0: return z.s_Y;
    case 1: return z.l_Y;
    case 2: return z.theta_YX;
    default: return z.theta_X;
  }
}

}  // namespace

EtaValues eta_at(const SubspaceProduct& h, const Matrix& sigma_star, const SearchOptions& opt) {
  const Index p = h.p(), q = h.q();
  const auto blocks = block_spaces(h);
  EtaValues ev;
  ev.eta1 = std::numeric_limits<double>::infinity();
  const Matrix sy = sigma_star.topLeftCorner(p, p);
  for (int i = 0; i < 4; ++i) {
    const BlockSpace& b = blocks[static_cast<size_t>(i)];
    const Index d = b.basis.cols();
    if (d == 0) continue;
    auto elem = [&](const Vector& x) { return b.coords.from(b.basis * x); };
    // eta1: gain of the block operator in its own dual norm.
    auto g1 = [&](const Vector& x) {
      const Matrix img = fisher_apply(sigma_star, embed_block(i, elem(x), p, q));
      return b.norm(b.project(adjoint_block(i, img, p, q)));
    };
    auto n1 = [&](const Vector& x) { return b.norm(elem(x)); };
    SearchOptions o = opt;
    o.seed = opt.seed + static_cast<std::uint64_t>(i);
    ev.eta1 = std::min(ev.eta1, sampled_ratio_extremum(d, g1, n1, false, o).value);
    // eta2: leakage of I* out of A(H[i]) in spectral norm.
    auto g2 = [&](const Vector& x) {
      const Matrix big = embed_block(i, elem(x), p, q);
      const Matrix img = fisher_apply(sigma_star, big);
      const Matrix back = embed_block(i, b.project(adjoint_block(i, img, p, q)), p, q);
      // L enters A with a minus sign; the projection itself is sign-free.
      const Matrix proj = i == 1 ? Matrix(-back) : back;
      return spectral_norm(img - proj);
    };
    auto n2 = [&](const Vector& x) { return spectral_norm(embed_block(i, elem(x), p, q)); };
    ev.eta2 = std::max(ev.eta2, sampled_ratio_extremum(d, g2, n2, true, o).value);
  }
  if (!std::isfinite(ev.eta1)) ev.eta1 = 0.0;
  // eta3: Y-block action of I* on T_Y (l_inf) and on Omega (spectral).
  const BlockSpace& bt = blocks[1];
  const BlockSpace& bo = blocks[0];
  if (bt.basis.cols() > 0) {
    auto elem = [&](const Vector& x) { return bt.coords.from(bt.basis * x); };
    auto g = [&](const Vector& x) { return max_abs(sy * elem(x) * sy); };
    auto n = [&](const Vector& x) { return max_abs(elem(x)); };
    ev.eta3 = std::max(ev.eta3, sampled_ratio_extremum(bt.basis.cols(), g, n, true, opt).value);
  }
  if (bo.basis.cols() > 0) {
    auto elem = [&](const Vector& x) { return bo.coords.from(bo.basis * x); };
    auto g = [&](const Vector& x) { return spectral_norm(sy * elem(x) * sy); };
    auto n = [&](const Vector& x) { return spectral_norm(elem(x)); };
    ev.eta3 = std::max(ev.eta3, sampled_ratio_extremum(bo.basis.cols(), g, n, true, opt).value);
  }
  return ev;
}

EtaReport eta_quantities(const SubspaceProduct& h_star, const Matrix& sigma_star, double omega_Y,
                         double omega_YX, int samples, const SearchOptions& opt) {
  EtaReport rep;
  rep.nominal = eta_at(h_star, sigma_star, opt);
  rep.worst = rep.nominal;
  for (int s = 0; s < samples; ++s) {
    SubspaceProduct h = h_star;
    const std::uint64_t seed = opt.seed + 1000u + static_cast<std::uint64_t>(s);
    h.t_Y = perturb_tangent(h_star.t_Y, omega_Y, seed);
    if (const auto* t = std::get_if<LowRankTangent>(&h_star.t_YX)) h.t_YX = perturb_tangent(*t, omega_YX, seed + 7);
    const EtaValues v = eta_at(h, sigma_star, opt);
    rep.worst.eta1 = std::min(rep.worst.eta1, v.eta1);
    rep.worst.eta2 = std::max(rep.worst.eta2, v.eta2);
    rep.worst.eta3 = std::max(rep.worst.eta3, v.eta3);
    ++rep.perturbations;
  }
  return rep;
}

// ---------------------------------------------------------------- parameter set V

std::pair<double, double> PolyhedralSet::gamma_interval(double delta) const {
  const double inf = std::numeric_limits<double>::infinity();
  const double lo = std::max(1.0, eta2 * deg * delta * 2.0 * beta / alpha);
  const double hi = eta2 > 0.0 ? std::min(delta, 1.0) / eta2 * (alpha / beta) : inf;
  return {lo, hi};
}

bool PolyhedralSet::contains(double delta, double gamma) const {
  if (!(delta >= delta_lo && delta <= delta_hi)) return false;
  const auto [lo, hi] = gamma_interval(delta);
  return gamma >= lo && gamma <= hi;
}

PolyhedralSet polyhedral_set_V(double alpha, double nu, double omega_Y, double omega_YX, double inc,
                               double deg, double eta2, std::optional<double> eta1,
                               std::optional<double> eta3) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (!(nu > 0.0 && nu < 1.0 / 3.0)) throw InvalidArgument("nu must lie in (0, 1/3)");
  if (!(omega_Y > 0.0 && omega_Y < 1.0) || !(omega_YX > 0.0 && omega_YX < 1.0))
    throw InvalidArgument("omegas must lie in (0, 1)");
  if (!(deg > 0.0) || inc < 0.0 || eta2 < 0.0) throw InvalidArgument("bad deg, inc or eta2");
  PolyhedralSet v;
  v.alpha = alpha;
  v.inc = inc;
  v.deg = deg;
  v.eta2 = eta2;
  v.beta = (3.0 - nu) / nu;
  const double beta = v.beta;
  const double lead = (2.0 * inc + omega_Y) / (4.0 * (1.0 - omega_Y));
  v.delta_lo = lead * std::sqrt(beta / alpha);
  v.delta_hi = (2.0 / deg) * std::sqrt(alpha / beta);
  v.nonempty = false;
  if (v.delta_lo <= v.delta_hi) {
    // the gamma window is widest at delta = 1, clamped into the delta interval
    const auto [lo, hi] = v.gamma_interval(std::clamp(1.0, v.delta_lo, v.delta_hi));
    v.nonempty = lo <= hi;
  }
  if (eta1) {
    if (!(*eta1 >= 2.0 * alpha)) v.failed_hypotheses.emplace_back("i");
  } else {
    v.unchecked_hypotheses.emplace_back("i");
  }
  const double ii = std::min({alpha * (1.0 - 3.0 / (1.0 + beta)), std::sqrt(alpha / beta) * lead,
                              alpha / (beta * std::sqrt(2.0 * deg)), 0.5 * std::pow(alpha / beta, 1.5)});
  if (!(eta2 <= ii)) v.failed_hypotheses.emplace_back("ii");
  if (eta3) {
    if (!(*eta3 <= std::sqrt(alpha / beta))) v.failed_hypotheses.emplace_back("iii");
  } else {
    v.unchecked_hypotheses.emplace_back("iii");
  }
  if (!((2.0 * inc + omega_Y) / (1.0 - omega_Y) * deg <= 8.0 * alpha / beta))
    v.failed_hypotheses.emplace_back("iv");
  return v;
}

// ---------------------------------------------------------------- theorem constants

std::pair<double, double> TheoremConstants::lambda_range(double n) const {
  const double lo = std::sqrt(4608.0 * psi * psi * beta * beta * m * m * dim / n);
  return {lo, lambda_upper};
}

bool TheoremConstants::lambda_range_nonempty(double n) const {
  const auto [lo, hi] = lambda_range(n);
  return lo <= hi;
}

TheoremConstants theorem_constants(const TheoremInputs& in) {
  if (!(in.alpha > 0 && in.psi > 0 && in.delta > 0 && in.gamma > 0 && in.deg > 0 && in.dim > 0))
    throw InvalidArgument("theorem inputs must be positive");
  if (!(in.nu > 0.0 && in.nu < 1.0 / 3.0)) throw InvalidArgument("nu must lie in (0, 1/3)");
  TheoremConstants c;
  c.kind = in.kind;
  c.alpha = in.alpha;
  c.nu = in.nu;
  c.psi = in.psi;
  c.delta = in.delta;
  c.gamma = in.gamma;
  c.deg = in.deg;
  c.kappa = in.kappa;
  c.omega_Y = in.omega_Y;
  c.omega_YX = in.omega_YX;
  c.dim = in.dim;
  const double a = in.alpha, psi = in.psi, d = in.delta, g = in.gamma;
  c.m = std::max({1.0 / d, 1.0, 1.0 / g});
  c.m_bar = std::max({d, 1.0, g});
  c.beta = (3.0 - in.nu) / in.nu;
  const double b = c.beta;
  c.C1 = 24.0 / a + 1.0 / (psi * psi);
  const bool cs = in.kind == TheoremKind::ColumnSparse;
  c.C2 = (cs ? 8.0 : 4.0) / a * (1.0 / (3.0 * b) + 1.0);
  const double c1sq_psisq = c.C1 * c.C1 * psi * psi;
  if (cs) {
    c.C_sigma = c1sq_psisq * std::max(12.0 * b + 1.0, 1.0 / (c.C2 * psi * psi) + 1.0);
  } else {
    c.C_sigmaY = c1sq_psisq * std::max(12.0 * b + 1.0, 2.0 / (c.C2 * psi * psi) + 1.0);
    c.C_sigmaYX = c1sq_psisq * std::max(18.0 * b, 2.0 / (c.C2 * psi * psi) + 6.0 * b);
  }
  c.C_samp = std::max({1.0 / (48.0 * psi * b), 48.0 * b * psi * psi * psi * c.C1 * c.C1,
                       8.0 * psi * c.C2, 128.0 * psi * psi * psi * c.C2 / a});
  const double deg_eff = cs ? std::max(in.deg, in.kappa) : in.deg;
  c.lambda_upper = 1.0 / (c.m * c.m_bar * c.m_bar * deg_eff * c.C_samp);
  c.n_min = 4608.0 * psi * psi * b * b * c.m * c.m * in.dim / (c.lambda_upper * c.lambda_upper);
  c.tau_coef = 2.0 * c.C1 * d;
  if (cs) {
    c.sigmaY_coef = c.m * c.C_sigma;
    c.zeta_coef = 2.0 * g * c.C1;
  } else {
    c.sigmaY_coef = c.m / in.omega_Y * c.C_sigmaY;
    c.sigmaYX_coef = c.m * c.m / in.omega_YX * c.C_sigmaYX * g * g;
  }
  return c;
}

}  // namespace sdr
