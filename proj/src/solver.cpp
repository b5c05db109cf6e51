#include "sdr/solver.hpp"

#include <algorithm>
#include <cmath>

#include "sdr/prox_ops.hpp"

namespace sdr {

namespace {

struct ZStep {
  StructuredParams z;
  Index latent_rank = 0;
  Index cross_rank = 0;
};

double latent_penalty(const RegConfig& c, const Matrix& l) {
  return c.relaxed_latent ? nuclear_norm(0.5 * (l + l.transpose())) : l.trace();
}

Matrix latent_prox(const RegConfig& c, const Matrix& m, double t, ProxReport* rep) {
  return c.relaxed_latent ? symmetric_nuclear_prox(m, t, rep) : psd_trace_prox(m, t, rep);
}

// Minimizes penalty(Z) + rho/2 ||A(Z) - W||^2 block by block.
ZStep z_step(const RegConfig& c, const Matrix& w, const StructuredParams& prev, Index p, Index q,
             double rho, int sweeps) {
  ZStep out;
  const double lam = c.lambda_n;
  const Matrix wy = w.topLeftCorner(p, p);
  out.z.theta_X = w.bottomRightCorner(q, q);
  // The cross block appears twice in A(Z), hence the factor 2.
  const double tk = lam * c.gamma / (2.0 * rho);
  ProxReport rep;
  if (is_column_sparse(c.variant)) {
    out.z.theta_YX = group_column_prox(w.topRightCorner(p, q), tk, &rep);
  } else {
    out.z.theta_YX = svt(w.topRightCorner(p, q), tk, &rep);
  }
  out.cross_rank = rep.kept;

  switch (c.variant) {
    case Variant::SdrGm:
    case Variant::CsGm:
      out.z.s_Y = soft_threshold(wy, lam / rho, c.penalize_diagonal);
      out.z.l_Y = Matrix::Zero(p, p);
      break;
    case Variant::SdrLvgm:
    case Variant::CsLvgm: {
      Matrix l = prev.l_Y;
      Matrix s;
      for (int k = 0; k < sweeps; ++k) {
        s = soft_threshold(wy + l, lam * c.delta / rho, c.penalize_diagonal);
        l = latent_prox(c, s - wy, lam / rho, &rep);
      }
      out.z.s_Y = std::move(s);
      out.z.l_Y = std::move(l);
      out.latent_rank = rep.kept;
      break;
    }
    case Variant::SdrFm: {
      Matrix l = prev.l_Y;
      Matrix d;
      for (int k = 0; k < sweeps; ++k) {
        d = diagonal_projection(wy + l);
        l = latent_prox(c, d - wy, lam / rho, &rep);
      }
      out.z.s_Y = std::move(d);
      out.z.l_Y = std::move(l);
      out.latent_rank = rep.kept;
      break;
    }
  }
  return out;
}

Matrix checked_sigma(const Matrix& sigma_n, Index p, Index q) {
  if (p < 1 || q < 0) throw InvalidArgument("need p >= 1 and q >= 0");
  if (sigma_n.rows() != p + q || sigma_n.cols() != p + q)
    throw InvalidArgument("Sigma_n has wrong dimension");
  if (!sigma_n.allFinite()) throw InvalidArgument("Sigma_n has non-finite entries");
  Matrix s = symmetrize_checked(sigma_n);
  const double scale = std::max(1.0, s.norm());
  if (min_eigenvalue(s) < -1e-10 * scale) throw InvalidArgument("Sigma_n is not PSD");
  return s;
}

}  // namespace

void SolverOptions::validate() const {
  if (!(rho_admm > 0.0) || !std::isfinite(rho_admm)) throw InvalidArgument("rho_admm must be > 0");
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0)) throw InvalidArgument("tolerances must be > 0");
  if (!(over_relaxation >= 1.0 && over_relaxation <= 1.8))
    throw InvalidArgument("over_relaxation must lie in [1, 1.8]");
  if (inner_sweeps < 1) throw InvalidArgument("inner_sweeps must be >= 1");
}

double KktResiduals::max() const {
  return std::max({gradient_x, sparse, latent, cross, consensus});
}

double penalty(const RegConfig& c, const StructuredParams& z) {
  z.check_dimensions();
  const double cross = is_column_sparse(c.variant) ? group_norm(z.theta_YX) : nuclear_norm(z.theta_YX);
  double pen = c.gamma * cross;
  switch (c.variant) {
    case Variant::SdrFm:
      pen += latent_penalty(c, z.l_Y);
      break;
    case Variant::SdrGm:
    case Variant::CsGm:
      pen += l1_norm(z.s_Y, c.penalize_diagonal);
      break;
    case Variant::SdrLvgm:
    case Variant::CsLvgm:
      pen += latent_penalty(c, z.l_Y) + c.delta * l1_norm(z.s_Y, c.penalize_diagonal);
      break;
  }
  return c.lambda_n * pen;
}

double objective(const RegConfig& c, const StructuredParams& params, const JointPrecision& theta,
                 const Matrix& sigma_n) {
  Eigen::LLT<Matrix> llt(theta.matrix());
  if (llt.info() != Eigen::Success) throw InvalidArgument("theta is not positive definite");
  if (sigma_n.rows() != theta.dim() || sigma_n.cols() != theta.dim())
    throw InvalidArgument("Sigma_n has wrong dimension");
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -logdet + (sigma_n.cwiseProduct(theta.matrix())).sum() + penalty(c, params);
}

void extract_structure(FitResult& f) {
  const StructuredParams& z = f.params_hat;
  f.support.clear();
  if (f.config.variant != Variant::SdrFm) {
    for (Index j = 0; j < z.s_Y.cols(); ++j)
      for (Index i = 0; i < j; ++i)
        if (z.s_Y(i, j) != 0.0) f.support.emplace_back(i, j);
  }
  f.edge_count = static_cast<Index>(f.support.size());
  f.latent_rank = has_latent(f.config.variant) ? numerical_rank(z.l_Y) : 0;
  f.cross_rank = numerical_rank(z.theta_YX);
  f.column_support.clear();
  for (Index j = 0; j < z.theta_YX.cols(); ++j)
    if (z.theta_YX.col(j).cwiseAbs().maxCoeff() > 0.0) f.column_support.push_back(j);
}

FitResult fit(const RegConfig& config, const Matrix& sigma_n, Index p, Index q,
              const SolverOptions& opt) {
  config.validate();
  opt.validate();
  const Matrix sigma = checked_sigma(sigma_n, p, q);
  const Index n = p + q;
  const Matrix eye = Matrix::Identity(n, n);

  Matrix init = sigma + 1e-3 * eye;
  if (min_eigenvalue(sigma) <= 0.0) init += 1e-6 * sigma.trace() / static_cast<double>(n) * eye;
  Matrix theta0 = Eigen::LLT<Matrix>(init).solve(eye);
  theta0 = 0.5 * (theta0 + theta0.transpose());

  StructuredParams z = split_adjoint(theta0, p, q);
  z.l_Y.setZero();
  if (config.variant == Variant::SdrFm) z.s_Y = diagonal_projection(z.s_Y);
  Matrix az = assemble(z);
  Matrix u = Matrix::Zero(n, n);
  Matrix theta = theta0;
  Vector theta_eigs;
  double rho = opt.rho_admm;
  const double alpha = opt.over_relaxation;
  const double sigma_scale = std::max(sigma.norm(), 1e-12);

  FitResult res;
  res.config = config;
  ZStep step{z, 0, 0};
  int it = 0;
  for (it = 1; it <= opt.max_iters; ++it) {
    theta = logdet_update(az - u, sigma, rho, &theta_eigs);
    const Matrix theta_relaxed = alpha * theta + (1.0 - alpha) * az;
    const Matrix w = theta_relaxed + u;
    step = z_step(config, w, z, p, q, rho, opt.inner_sweeps);
    Matrix az_new = assemble(step.z);
    u += theta_relaxed - az_new;

    const double r = (theta - az_new).norm();
    const double s = rho * (az_new - az).norm();
    const double r_rel = r / std::max({theta.norm(), az_new.norm(), 1e-300});
    // Dual scale: the multiplier rho*U, floored by the data scale.
    const double s_rel = s / std::max(rho * u.norm(), sigma_scale);

    IterationRecord rec;
    rec.iter = it;
    rec.objective = -theta_eigs.array().log().sum() + sigma.cwiseProduct(theta).sum() +
                    penalty(config, step.z);
    rec.primal_residual = r_rel;
    rec.dual_residual = s_rel;
    rec.rho = rho;
    res.history.push_back(rec);

    z = std::move(step.z);
    az = std::move(az_new);
    if (!std::isfinite(r) || !std::isfinite(s)) throw NumericalFailure("solver diverged");
    if (r_rel <= opt.tol_primal && s_rel <= opt.tol_dual) {
      res.converged = true;
      break;
    }
    if (opt.adaptive_rho && it < opt.rho_freeze_iter) {
      if (r > 10.0 * s) {
        rho *= 2.0;
        u /= 2.0;
      } else if (s > 10.0 * r) {
        rho /= 2.0;
        u *= 2.0;
      }
    }
  }
  res.iterations = std::min(it, opt.max_iters);
  res.final_rho = rho;
  res.theta_hat = JointPrecision(theta, p, q);
  res.params_hat = z;
  extract_structure(res);
  res.latent_rank = has_latent(config.variant) ? step.latent_rank : 0;
  res.cross_rank = is_column_sparse(config.variant) ? numerical_rank(z.theta_YX) : step.cross_rank;
  res.objective = objective(config, res.params_hat, res.theta_hat, sigma);
  return res;
}

KktResiduals kkt_residuals(const Matrix& theta, const StructuredParams& z, const RegConfig& c,
                           const Matrix& sigma_n) {
  const Index p = z.p();
  const Index q = z.q();
  const Index n = p + q;
  Eigen::LLT<Matrix> llt(theta);
  if (llt.info() != Eigen::Success) throw InvalidArgument("theta is not positive definite");
  const Matrix g = sigma_n - llt.solve(Matrix::Identity(n, n));
  const Matrix gy = 0.5 * (g.topLeftCorner(p, p) + g.topLeftCorner(p, p).transpose());
  const Matrix gyx = g.topRightCorner(p, q);
  const double lam = c.lambda_n;

  KktResiduals k;
  k.gradient_x = g.bottomRightCorner(q, q).norm();
  k.consensus = (theta - assemble(z)).norm();
  k.cross = is_column_sparse(c.variant)
                ? group_subgradient_distance(z.theta_YX, -2.0 * gyx, lam * c.gamma)
                : nuclear_subgradient_distance(z.theta_YX, -2.0 * gyx, lam * c.gamma);
  switch (c.variant) {
    case Variant::SdrGm:
    case Variant::CsGm:
      k.sparse = l1_subgradient_distance(z.s_Y, -gy, lam, c.penalize_diagonal);
      break;
    case Variant::SdrLvgm:
    case Variant::CsLvgm:
      k.sparse = l1_subgradient_distance(z.s_Y, -gy, lam * c.delta, c.penalize_diagonal);
      break;
    case Variant::SdrFm:
      k.sparse = gy.diagonal().norm();
      break;
  }
  if (has_latent(c.variant)) {
    k.latent = c.relaxed_latent ? symmetric_nuclear_subgradient_distance(z.l_Y, gy, lam)
                                : psd_trace_subgradient_distance(z.l_Y, gy, lam);
  }
  return k;
}

KktResiduals kkt_residuals(const FitResult& f, const RegConfig& c, const Matrix& sigma_n) {
  return kkt_residuals(f.theta_hat.matrix(), f.params_hat, c, sigma_n);
}

}  // namespace sdr
