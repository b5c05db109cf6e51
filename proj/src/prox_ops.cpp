#include "sdr/prox_ops.hpp"

#include <algorithm>
#include <cmath>

namespace sdr {

namespace {

void check_threshold(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("threshold must be finite and >= 0");
}

Eigen::SelfAdjointEigenSolver<Matrix> sym_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success) throw NumericalFailure("eigendecomposition failed");
  return es;
}

struct Svd {
  Matrix u, v;
  Vector s;
};

Svd full_svd(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalFailure("SVD failed");
  return {svd.matrixU(), svd.matrixV(), svd.singularValues()};
}

Index count_exact_zeros(const Matrix& m) { return (m.array() == 0.0).count(); }

// Orthonormal basis of range(x) (first block) and its complement, for symmetric x.
std::pair<Matrix, Matrix> range_split(const Matrix& x) {
  const auto es = sym_eig(x);
  const Vector& ev = es.eigenvalues();
  const double tol = rank_tolerance(ev.cwiseAbs(), x.rows(), x.cols());
  std::vector<Index> on, off;
  for (Index i = 0; i < ev.size(); ++i) (std::abs(ev(i)) > tol ? on : off).push_back(i);
  Matrix r(x.rows(), static_cast<Index>(on.size())), n(x.rows(), static_cast<Index>(off.size()));
  for (size_t j = 0; j < on.size(); ++j) r.col(static_cast<Index>(j)) = es.eigenvectors().col(on[j]);
  for (size_t j = 0; j < off.size(); ++j) n.col(static_cast<Index>(j)) = es.eigenvectors().col(off[j]);
  return {r, n};
}

}  // namespace

double nuclear_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues().sum();
}

double group_norm(const Matrix& m) { return m.colwise().norm().sum(); }

double l1_norm(const Matrix& m, bool include_diagonal) {
  double s = m.cwiseAbs().sum();
  if (!include_diagonal) s -= m.diagonal().cwiseAbs().sum();
  return s;
}

double l1_subgradient_distance(const Matrix& x, const Matrix& g, double t, bool penalize_diagonal) {
  double acc = 0.0;
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      double d;
      if (i == j && !penalize_diagonal) d = g(i, j);
      else if (x(i, j) > 0.0) d = g(i, j) - t;
      else if (x(i, j) < 0.0) d = g(i, j) + t;
      else d = std::max(std::abs(g(i, j)) - t, 0.0);
      acc += d * d;
    }
  }
  return std::sqrt(acc);
}

double nuclear_subgradient_distance(const Matrix& x, const Matrix& g, double t) {
  const Svd s = full_svd(x);
  const double tol = rank_tolerance(s.s, x.rows(), x.cols());
  const Index r = (s.s.array() > tol).count();
  const Matrix ur = s.u.leftCols(r), vr = s.v.leftCols(r);
  const Matrix pu = ur * ur.transpose(), pv = vr * vr.transpose();
  const Matrix iu = Matrix::Identity(x.rows(), x.rows()) - pu;
  const Matrix iv = Matrix::Identity(x.cols(), x.cols()) - pv;
  const Matrix g_perp = iu * g * iv;
  const Matrix g_tan = g - g_perp;
  const double on_t = (g_tan - t * ur * vr.transpose()).squaredNorm();
  const double off_t = svt(g_perp, t).squaredNorm();
  return std::sqrt(on_t + off_t);
}

double group_subgradient_distance(const Matrix& x, const Matrix& g, double t) {
  double acc = 0.0;
  for (Index j = 0; j < x.cols(); ++j) {
    const double nc = x.col(j).norm();
    if (nc > 0.0) {
      acc += (g.col(j) - t * x.col(j) / nc).squaredNorm();
    } else {
      const double e = std::max(g.col(j).norm() - t, 0.0);
      acc += e * e;
    }
  }
  return std::sqrt(acc);
}

double psd_trace_subgradient_distance(const Matrix& x, const Matrix& g, double t) {
  // g = t I - P with P PSD and P x = 0.
  const auto [r, n] = range_split(x);
  const Index p = x.rows();
  const Matrix pm = t * Matrix::Identity(p, p) - 0.5 * (g + g.transpose());
  double acc = 0.5 * (g - g.transpose()).squaredNorm();
  acc += (r.transpose() * pm * r).squaredNorm() + 2.0 * (r.transpose() * pm * n).squaredNorm();
  if (n.cols() > 0) {
    const Vector ev = sym_eig(n.transpose() * pm * n).eigenvalues();
    acc += ev.cwiseMin(0.0).squaredNorm();
  }
  return std::sqrt(acc);
}

double symmetric_nuclear_subgradient_distance(const Matrix& x, const Matrix& g, double t) {
  // Subdifferential over symmetric matrices: Q_r sign(Lambda_r) Q_r' + W, W on the null space,
  // spectral norm of W at most one.
  const auto es = sym_eig(x);
  const Vector& ev = es.eigenvalues();
  const double tol = rank_tolerance(ev.cwiseAbs(), x.rows(), x.cols());
  const Index p = x.rows();
  std::vector<Index> on, off;
  for (Index i = 0; i < p; ++i) (std::abs(ev(i)) > tol ? on : off).push_back(i);
  Matrix r(p, static_cast<Index>(on.size())), n(p, static_cast<Index>(off.size()));
  Vector sg(static_cast<Index>(on.size()));
  for (size_t j = 0; j < on.size(); ++j) {
    r.col(static_cast<Index>(j)) = es.eigenvectors().col(on[j]);
    sg(static_cast<Index>(j)) = ev(on[j]) > 0 ? 1.0 : -1.0;
  }
  for (size_t j = 0; j < off.size(); ++j) n.col(static_cast<Index>(j)) = es.eigenvectors().col(off[j]);
  const Matrix gs = 0.5 * (g + g.transpose());
  double acc = 0.5 * (g - g.transpose()).squaredNorm();
  acc += (r.transpose() * gs * r - t * Matrix(sg.asDiagonal())).squaredNorm();
  acc += 2.0 * (r.transpose() * gs * n).squaredNorm();
  if (n.cols() > 0) {
    const Vector e = sym_eig(n.transpose() * gs * n).eigenvalues();
    for (Index i = 0; i < e.size(); ++i) {
      const double ex = std::max(std::abs(e(i)) - t, 0.0);
      acc += ex * ex;
    }
  }
  return std::sqrt(acc);
}

Matrix soft_threshold(const Matrix& m, double t, bool penalize_diagonal, ProxReport* report) {
  check_threshold(t);
  Matrix out = m.unaryExpr([t](double v) {
    const double a = std::abs(v) - t;
    return a > 0.0 ? std::copysign(a, v) : 0.0;
  });
  if (!penalize_diagonal) {
    const Index k = std::min(m.rows(), m.cols());
    for (Index i = 0; i < k; ++i) out(i, i) = m(i, i);
  }
  if (report) {
    *report = {m, t, count_exact_zeros(out), m.size() - count_exact_zeros(out),
               l1_subgradient_distance(out, m - out, t, penalize_diagonal)};
  }
  return out;
}

Matrix svt(const Matrix& m, double t, ProxReport* report) {
  check_threshold(t);
  if (m.size() == 0) return m;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalFailure("SVD failed");
  Vector s = svd.singularValues();
  Index kept = 0;
  for (Index i = 0; i < s.size(); ++i) {
    s(i) = s(i) > t ? s(i) - t : 0.0;
    if (s(i) > 0.0) ++kept;
  }
  Matrix out = svd.matrixU().leftCols(kept) * s.head(kept).asDiagonal() *
               svd.matrixV().leftCols(kept).transpose();
  if (report) {
    *report = {m, t, s.size() - kept, kept, 0.0};
    report->residual = nuclear_subgradient_distance(out, m - out, t);
  }
  return out;
}

Matrix psd_trace_prox(const Matrix& m, double t, ProxReport* report) {
  check_threshold(t);
  if (m.size() == 0) return m;
  const auto es = sym_eig(m);
  Vector ev = es.eigenvalues();
  Index kept = 0;
  for (Index i = 0; i < ev.size(); ++i) {
    ev(i) = ev(i) > t ? ev(i) - t : 0.0;
    if (ev(i) > 0.0) ++kept;
  }
  const Matrix q = es.eigenvectors().rightCols(kept);
  Matrix out = q * ev.tail(kept).asDiagonal() * q.transpose();
  out = 0.5 * (out + out.transpose());
  if (report) {
    *report = {m, t, ev.size() - kept, kept, 0.0};
    report->residual = psd_trace_subgradient_distance(out, m - out, t);
  }
  return out;
}

Matrix symmetric_nuclear_prox(const Matrix& m, double t, ProxReport* report) {
  check_threshold(t);
  if (m.size() == 0) return m;
  const auto es = sym_eig(m);
  Vector ev = es.eigenvalues();
  Index kept = 0;
  for (Index i = 0; i < ev.size(); ++i) {
    const double a = std::abs(ev(i)) - t;
    ev(i) = a > 0.0 ? std::copysign(a, ev(i)) : 0.0;
    if (ev(i) != 0.0) ++kept;
  }
  Matrix out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  out = 0.5 * (out + out.transpose());
  if (report) {
    *report = {m, t, ev.size() - kept, kept, 0.0};
    report->residual = symmetric_nuclear_subgradient_distance(out, m - out, t);
  }
  return out;
}

Matrix group_column_prox(const Matrix& m, double t, ProxReport* report) {
  check_threshold(t);
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  Index kept = 0;
  for (Index j = 0; j < m.cols(); ++j) {
    const double nc = m.col(j).norm();
    if (nc > t) {
      out.col(j) = m.col(j) * (1.0 - t / nc);
      ++kept;
    }
  }
  if (report) {
    *report = {m, t, m.cols() - kept, kept, group_subgradient_distance(out, m - out, t)};
  }
  return out;
}

Matrix logdet_update(const Matrix& b, const Matrix& sigma_n, double rho, Vector* eigenvalues) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("rho must be positive");
  if (b.rows() != sigma_n.rows() || b.cols() != sigma_n.cols() || b.rows() != b.cols())
    throw InvalidArgument("logdet_update dimension mismatch");
  const auto es = sym_eig(b - sigma_n / rho);
  const Vector& lam = es.eigenvalues();
  Vector theta(lam.size());
  const double c = 4.0 / rho;
  for (Index i = 0; i < lam.size(); ++i) {
    const double root = std::sqrt(lam(i) * lam(i) + c);
    // Rationalized form avoids cancellation for negative eigenvalues.
    theta(i) = lam(i) >= 0.0 ? 0.5 * (lam(i) + root) : (2.0 / rho) / (root - lam(i));
  }
  if (eigenvalues) *eigenvalues = theta;
  Matrix out = es.eigenvectors() * theta.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

Matrix diagonal_projection(const Matrix& m) {
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  const Index k = std::min(m.rows(), m.cols());
  for (Index i = 0; i < k; ++i) out(i, i) = m(i, i);
  return out;
}

}  // namespace sdr
