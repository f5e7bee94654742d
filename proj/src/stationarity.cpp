#include "ipg/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ipg/errors.hpp"

namespace ipg {

namespace {
constexpr double kPi = std::numbers::pi;

double effective_eps(double eps) { return std::max(eps, kZeroEpsFloor); }
}  // namespace

double StationarityReport::max_residual() const {
  double v = 0.0;
  for (const auto& [name, r] : residuals) v = std::max(v, r);
  return v;
}

StationarityReport audit_sp(const CompositeProblem& prob, const BlockVector& x,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& z1,
                            const Eigen::VectorXd& z2, double eps) {
  if (x.size() != prob.dim_x || y.size() != prob.dim_y || z1.size() != prob.dim_y ||
      z2.size() != prob.a.output_dim()) {
    throw DimensionError("audit_sp: shape mismatch");
  }
  if (!prob.gbar.subdiff_distance) {
    throw InvariantError("audit_sp: regularizer carries no subdifferential-distance oracle");
  }
  StationarityReport rep;
  rep.kind = ProblemKind::SP;
  rep.epsilon = eps;
  rep.z1 = z1;
  rep.z2 = z2;

  const BlockVector grad = prob.f0.grad(x);
  const Eigen::VectorXd kkt_x =
      grad.vec() + prob.abar.apply_transpose(z1) + prob.a.apply_transpose(z2);
  rep.residuals["subdiff_dist"] = prob.gbar.subdiff_distance(y, z1);
  rep.residuals["grad_residual"] = kkt_x.norm();
  rep.residuals["split_feas"] = (y - prob.abar.apply(x.vec()) - prob.bbar).norm();
  rep.residuals["affine_feas"] = (prob.a.apply(x.vec()) + prob.b).norm();
  rep.certified = rep.max_residual() <= effective_eps(eps);
  return rep;
}

StationarityReport audit_ap(const Instance& inst, const BlockVector& x, double eps) {
  if (x.blocks() != inst.m || x.block_dim() != inst.params.block_dim) {
    throw DimensionError("audit_ap: shape mismatch");
  }
  StationarityReport rep;
  rep.kind = ProblemKind::AP;
  rep.epsilon = eps;

  Eigen::VectorXd grad_sum = Eigen::VectorXd::Zero(inst.params.block_dim);
  for (int i = 0; i < inst.m; ++i) grad_sum += f_grad(i + 1, x.block(i), inst.params);

  rep.residuals["consensus_residual"] = inst.op_h.apply(x).norm();
  rep.residuals["projected_grad"] = grad_sum.norm() / std::sqrt(static_cast<double>(inst.m));
  rep.certified = rep.max_residual() <= effective_eps(eps);
  return rep;
}

double block_average_lower_bound(const Instance& inst, const BlockVector& x) {
  if (x.blocks() != inst.m || x.block_dim() != inst.params.block_dim) {
    throw DimensionError("block_average_lower_bound: shape mismatch");
  }
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(inst.params.block_dim);
  for (int i = 0; i < inst.m; ++i) xbar += x.block(i);
  xbar /= static_cast<double>(inst.m);

  Eigen::VectorXd grad_avg = Eigen::VectorXd::Zero(inst.params.block_dim);
  for (int i = 0; i < inst.m; ++i) grad_avg += f_grad(i + 1, xbar, inst.params);
  grad_avg /= static_cast<double>(inst.m);

  return 0.5 * std::sqrt(static_cast<double>(inst.m)) * grad_avg.norm();
}

SmallCoordCertificate small_coordinate_certificate(const Instance& inst, const BlockVector& x) {
  SmallCoordCertificate cert;
  cert.threshold = 150.0 * kPi * inst.params.eps /
                   (std::sqrt(static_cast<double>(inst.m)) * inst.params.lip_f);
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(inst.params.block_dim);
  for (int i = 0; i < inst.m; ++i) xbar += x.block(i);
  xbar /= static_cast<double>(inst.m);
  for (int j = 0; j < inst.params.block_dim; ++j) {
    if (std::abs(xbar(j)) < cert.threshold) {
      cert.violating_j = j + 1;
      break;
    }
  }
  cert.bound = block_average_lower_bound(inst, x);
  return cert;
}

StationarityReport audit_p_relaxed(const CompositeProblem& prob, const BlockVector& x,
                                   Eigen::VectorXd gamma, Eigen::VectorXd u, double eps,
                                   const AuditPOptions& opts) {
  if (x.size() != prob.dim_x) throw DimensionError("audit_p_relaxed: x shape mismatch");
  if (gamma.size() != prob.a.output_dim() || u.size() != prob.abar.output_dim()) {
    throw DimensionError("audit_p_relaxed: multiplier shape mismatch");
  }
  const bool has_abar = prob.abar.output_blocks() > 0;
  if (has_abar && !prob.gbar.subdiff_project) {
    throw InvariantError("audit_p_relaxed: regularizer carries no subdifferential projection");
  }

  StationarityReport rep;
  rep.kind = ProblemKind::P;
  rep.epsilon = eps;

  const Eigen::VectorXd grad = prob.f0.grad(x).vec();
  const Eigen::VectorXd ybar = prob.abar.apply(x.vec()) + prob.bbar;

  // u lives in d gbar(ybar); gamma is free. Alternate an exact least-squares
  // step in gamma with projected gradient steps in u. The u step size uses
  // the Abar Gram spectral bound.
  const double ustep = prob.norm_abar > 0.0 ? 1.0 / (prob.norm_abar * prob.norm_abar) : 0.0;
  if (has_abar) u = prob.gbar.subdiff_project(ybar, u);

  // Each measurement follows an exact gamma step, so the sequence of measured
  // residuals is nonincreasing and starts at the u-restricted optimum.
  auto gamma_step = [&](Eigen::VectorXd& residual) {
    const Eigen::VectorXd r = grad + prob.abar.apply_transpose(u);
    gamma = -prob.a.gram_solve(prob.a.apply(r));
    residual = r + prob.a.apply_transpose(gamma);
    return residual.norm();
  };

  Eigen::VectorXd residual;
  double prev = gamma_step(residual);
  bool converged = !has_abar;  // gamma-only problems are solved in one step
  for (int it = 0; it < opts.max_iter && !converged; ++it) {
    u = prob.gbar.subdiff_project(ybar, u - ustep * prob.abar.apply(residual));
    const double cur = gamma_step(residual);
    if (std::abs(prev - cur) <= opts.tol * std::max(1.0, cur)) converged = true;
    prev = cur;
  }
  const Eigen::VectorXd r_final = residual;

  rep.converged = converged;
  rep.residuals["grad_residual"] = r_final.norm();
  rep.residuals["affine_feas"] = (prob.a.apply(x.vec()) + prob.b).norm();
  rep.certified = converged && rep.max_residual() <= effective_eps(eps);
  rep.z1 = u;
  rep.z2 = gamma;
  return rep;
}

}  // namespace ipg
