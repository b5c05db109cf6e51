#include "sdr/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace sdr {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

Matrix symmetrize_checked(const Matrix& m, double rel_tol) {
  require(m.rows() == m.cols(), "matrix is not square");
  const double scale = std::max(m.norm(), std::numeric_limits<double>::min());
  const double asym = (m - m.transpose()).norm();
  if (asym > rel_tol * scale) {
    std::ostringstream os;
    os << "matrix is not symmetric (relative asymmetry " << asym / scale << ")";
    throw InvalidArgument(os.str());
  }
  return 0.5 * (m + m.transpose());
}

double min_eigenvalue(const Matrix& sym) {
  if (sym.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigendecomposition failed");
  return es.eigenvalues()(0);
}

JointPrecision::JointPrecision(const Matrix& theta, Index p, Index q) : p_(p), q_(q) {
  require(p >= 1 && q >= 0, "need p >= 1 and q >= 0");
  require(theta.rows() == p + q && theta.cols() == p + q, "theta has wrong dimension");
  theta_ = symmetrize_checked(theta);
}

bool JointPrecision::is_positive_definite() const {
  Eigen::LLT<Matrix> llt(theta_);
  return llt.info() == Eigen::Success && min_eigenvalue(theta_) > 0.0;
}

Matrix JointPrecision::covariance() const {
  Eigen::LLT<Matrix> llt(theta_);
  if (llt.info() != Eigen::Success) throw InvalidArgument("theta is not positive definite");
  Matrix sigma = llt.solve(Matrix::Identity(dim(), dim()));
  return 0.5 * (sigma + sigma.transpose());
}

StructuredParams StructuredParams::zeros(Index p, Index q) {
  return {Matrix::Zero(p, p), Matrix::Zero(p, p), Matrix::Zero(p, q), Matrix::Zero(q, q)};
}

void StructuredParams::check_dimensions() const {
  const Index p = s_Y.rows();
  const Index q = theta_X.rows();
  require(s_Y.cols() == p && l_Y.rows() == p && l_Y.cols() == p, "Y blocks have inconsistent size");
  require(theta_X.cols() == q, "theta_X is not square");
  require(theta_YX.rows() == p && theta_YX.cols() == q, "theta_YX has wrong shape");
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::SdrFm: return "sdr-fm";
    case Variant::SdrGm: return "sdr-gm";
    case Variant::SdrLvgm: return "sdr-lvgm";
    case Variant::CsLvgm: return "cs-lvgm";
    case Variant::CsGm: return "cs-gm";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::SdrFm, Variant::SdrGm, Variant::SdrLvgm, Variant::CsLvgm, Variant::CsGm})
    if (variant_name(v) == name) return v;
  throw InvalidArgument("unknown variant '" + std::string(name) + "'");
}

bool has_latent(Variant v) {
  return v == Variant::SdrFm || v == Variant::SdrLvgm || v == Variant::CsLvgm;
}

bool has_sparse_weight(Variant v) { return v == Variant::SdrLvgm || v == Variant::CsLvgm; }

bool is_column_sparse(Variant v) { return v == Variant::CsLvgm || v == Variant::CsGm; }

void RegConfig::validate() const {
  require(std::isfinite(lambda_n) && lambda_n >= 0.0, "lambda_n must be finite and >= 0");
  require(std::isfinite(gamma) && gamma > 0.0, "gamma must be finite and > 0");
  if (has_sparse_weight(variant))
    require(std::isfinite(delta) && delta > 0.0, "delta must be finite and > 0");
}

Matrix assemble(const StructuredParams& params) {
  params.check_dimensions();
  const Index p = params.p();
  const Index q = params.q();
  Matrix out(p + q, p + q);
  out.topLeftCorner(p, p) = params.s_Y - params.l_Y;
  out.topRightCorner(p, q) = params.theta_YX;
  out.bottomLeftCorner(q, p) = params.theta_YX.transpose();
  out.bottomRightCorner(q, q) = params.theta_X;
  return out;
}

StructuredParams split_adjoint(const Matrix& z, Index p, Index q) {
  require(p >= 0 && q >= 0, "negative block size");
  require(z.rows() == p + q && z.cols() == p + q, "matrix has wrong dimension");
  Matrix zy = z.topLeftCorner(p, p);
  return {zy, zy, z.topRightCorner(p, q), z.bottomRightCorner(q, q)};
}

Matrix sdr_map(const JointPrecision& theta) {
  const Matrix ty = theta.theta_Y();
  Eigen::JacobiSVD<Matrix> svd(ty);
  const Vector& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1)
                                            : std::numeric_limits<double>::infinity();
  if (!(cond < 1.0 / (std::numeric_limits<double>::epsilon() * 10.0))) {
    std::ostringstream os;
    os << "theta_Y is singular (condition number " << cond << ")";
    throw NumericalFailure(os.str());
  }
  Eigen::PartialPivLU<Matrix> lu(ty);
  return -lu.solve(theta.theta_YX());
}

double conditional_loglik(const Matrix& theta_Y, const Matrix& theta_YX, const Vector& y,
                          const Vector& x) {
  const Index p = theta_Y.rows();
  require(theta_Y.cols() == p && theta_YX.rows() == p && theta_YX.cols() == x.size() &&
              y.size() == p,
          "dimension mismatch in conditional_loglik");
  Eigen::LLT<Matrix> llt(theta_Y);
  if (llt.info() != Eigen::Success) throw InvalidArgument("theta_Y is not positive definite");
  const Vector mu = -llt.solve(theta_YX * x);
  const Vector r = y - mu;
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return 0.5 * logdet - 0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi) -
         0.5 * r.dot(theta_Y * r);
}

ComplexitySummary count_parameters(long p, long q, long edges, long latent_rank, long cross_rank) {
  require(p >= 0 && q >= 0 && edges >= 0 && latent_rank >= 0 && cross_rank >= 0,
          "counts must be nonnegative");
  require(latent_rank <= p, "latent rank exceeds p");
  require(cross_rank <= std::min(p, q), "cross rank exceeds min(p, q)");
  ComplexitySummary c;
  c.node_params = p;
  c.edge_params = edges;
  c.latent_rank_params = latent_rank * p - latent_rank * (latent_rank - 1) / 2;
  c.cross_rank_params = cross_rank * (p + q) - cross_rank * cross_rank;
  c.total = c.node_params + c.edge_params + c.latent_rank_params + c.cross_rank_params;
  return c;
}

ComplexitySummary count_parameters_column_sparse(long p, long q, long edges, long latent_rank,
                                                 long kappa) {
  require(kappa >= 0 && kappa <= q, "kappa must lie in [0, q]");
  ComplexitySummary c = count_parameters(p, q, edges, latent_rank, 0);
  c.cross_rank_params = kappa * p;
  c.total += c.cross_rank_params;
  return c;
}

double rank_tolerance(const Vector& singular_values, Index rows, Index cols) {
  const double smax = singular_values.size() ? singular_values.maxCoeff() : 0.0;
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() *
         smax * 10.0;
}

Index numerical_rank(const Matrix& m, std::optional<double> tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  const double t = tol ? *tol : rank_tolerance(s, m.rows(), m.cols());
  return (s.array() > t).count();
}

Matrix orthonormal_basis(const Matrix& basis) {
  require(basis.cols() >= 1 && basis.rows() >= basis.cols(), "basis has too many columns");
  Eigen::JacobiSVD<Matrix> svd(basis, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (!(s(s.size() - 1) > rank_tolerance(s, basis.rows(), basis.cols())))
    throw InvalidArgument("basis columns are linearly dependent");
  return svd.matrixU();
}

std::vector<double> principal_angles(const Matrix& u1, const Matrix& u2) {
  require(u1.rows() == u2.rows(), "bases live in different ambient dimensions");
  Matrix qa = orthonormal_basis(u1);
  Matrix qb = orthonormal_basis(u2);
  if (qa.cols() > qb.cols()) std::swap(qa, qb);
  // Cosines resolve large angles, sines resolve small ones.
  const Vector cosines = Eigen::JacobiSVD<Matrix>(qb.transpose() * qa).singularValues();
  const Matrix resid = qa - qb * (qb.transpose() * qa);
  Vector sines = Eigen::JacobiSVD<Matrix>(resid).singularValues();
  std::sort(sines.data(), sines.data() + sines.size());
  std::vector<double> angles(static_cast<size_t>(qa.cols()));
  for (Index i = 0; i < qa.cols(); ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double s = std::clamp(sines(i), 0.0, 1.0);
    const double rad = c * c >= 0.5 ? std::asin(s) : std::acos(c);
    angles[static_cast<size_t>(i)] = rad * kRadToDeg;
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

Matrix sample_covariance(const Matrix& data) {
  require(data.rows() >= 2, "need at least two samples");
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Matrix centered = data.rowwise() - mean;
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(data.rows());
  return 0.5 * (cov + cov.transpose());
}

FactorReport fm_factor_report(const Matrix& d, const Matrix& l) {
  const Index p = d.rows();
  require(d.cols() == p && l.rows() == p && l.cols() == p, "D and L must be p x p");
  require((d - Matrix(d.diagonal().asDiagonal())).norm() == 0.0, "D must be diagonal");
  const Matrix ls = symmetrize_checked(l);
  Eigen::LLT<Matrix> llt(Matrix(d) - ls);
  if (llt.info() != Eigen::Success || min_eigenvalue(Matrix(d) - ls) <= 0.0)
    throw InvalidArgument("D - L is not positive definite");

  Eigen::SelfAdjointEigenSolver<Matrix> es(ls);
  const Vector& ev = es.eigenvalues();
  const double tol = rank_tolerance(ev.cwiseAbs(), p, p);
  std::vector<Index> keep;
  for (Index i = 0; i < p; ++i) {
    if (ev(i) < -std::max(tol, 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff())))
      throw InvalidArgument("L is not positive semidefinite");
    if (ev(i) > tol) keep.push_back(i);
  }
  const Vector dinv = d.diagonal().cwiseInverse();
  FactorReport rep{dinv, Matrix::Zero(p, 0)};
  if (keep.empty()) return rep;

  // L = F F'; (D - FF')^{-1} = D^{-1} + D^{-1}F (I - F'D^{-1}F)^{-1} F'D^{-1}.
  Matrix f(p, static_cast<Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j)
    f.col(static_cast<Index>(j)) = es.eigenvectors().col(keep[j]) * std::sqrt(ev(keep[j]));
  const Matrix dinv_f = dinv.asDiagonal() * f;
  const Matrix core = Matrix::Identity(f.cols(), f.cols()) - f.transpose() * dinv_f;
  Eigen::SelfAdjointEigenSolver<Matrix> core_es(0.5 * (core + core.transpose()));
  const Vector inv_sqrt = core_es.eigenvalues().cwiseSqrt().cwiseInverse();
  rep.loadings = dinv_f * core_es.eigenvectors() * inv_sqrt.asDiagonal();
  return rep;
}

}  // namespace sdr
