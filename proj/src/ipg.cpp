#include "ipg/ipg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ipg/errors.hpp"
#include "ipg/prox.hpp"

namespace ipg {

namespace {

double resolve_tau(const CompositeProblem& prob, const IpgConfig& cfg) {
  const double tau = cfg.tau > 0.0 ? cfg.tau : 2.0 * prob.lip_grad;
  if (!(tau > prob.lip_grad)) {
    throw InvariantError("ipg: tau must exceed the gradient Lipschitz constant (tau = " +
                         std::to_string(tau) + ", L_f = " + std::to_string(prob.lip_grad) + ")");
  }
  return tau;
}

double resolve_sigma(const CompositeProblem& prob, const IpgConfig& cfg) {
  const double sigma = cfg.sigma > 0.0 ? cfg.sigma : prob.lip_grad;
  if (!(sigma > 0.0)) throw InvariantError("ipg: sigma must be > 0");
  return sigma;
}

double resolve_rho(const CompositeProblem& prob, const IpgConfig& cfg, double tau) {
  if (cfg.rho > 0.0) return cfg.rho;
  if (cfg.inner_mode == InnerMode::scheduled_quadratic_growth) {
    const bool zero_offsets = prob.b.isZero(0.0) && prob.bbar.isZero(0.0);
    if (!zero_offsets) {
      throw InvariantError(
          "ipg: quadratic-growth mode with nonzero offsets needs a user-supplied rho");
    }
    // Hoffman constant of the box-constrained optimality system with zero
    // offsets: theta = 1/sqrt(lambda_min(S S^T)), hence rho = lambda_min/tau.
    return prob.min_pos_gram_stacked / tau;
  }
  return 0.0;  // adaptive / strongly-convex modes derive mu internally
}

// Upper bound on D(z_start) - D* by weak duality: -D* is the subproblem
// optimum, which is at most the subproblem objective at the feasible point
// (x, y) = (0, bbar), i.e. -<grad, x^k> + (tau/2)||x^k||^2 + gbar(bbar).
double dual_gap_bound(const CompositeProblem& prob, const DualProblem& dp,
                      const DualState& start) {
  const double dual0 = dp.value(start.z1, start.z2);
  const double primal_zero = -dp.grad_anchor.vec().dot(dp.anchor_x.vec()) +
                             0.5 * dp.tau * dp.anchor_x.vec().squaredNorm() +
                             prob.gbar.value(prob.bbar);
  return std::max(dual0 + primal_zero, 1e-300);
}

}  // namespace

TheoryConstants compute_constants(const CompositeProblem& prob, const IpgConfig& cfg,
                                  double delta_f_bound, double delta_f0_bound) {
  if (!(prob.pinv_norm_a > 0.0)) {
    throw InvariantError("compute_constants: A must have full row rank");
  }
  TheoryConstants tc;
  tc.tau = resolve_tau(prob, cfg);
  tc.sigma = resolve_sigma(prob, cfg);
  tc.lip_f0 = prob.lip_f0;
  tc.lip_gbar = prob.gbar.lip;
  tc.norm_a = prob.norm_a;
  tc.norm_abar = prob.norm_abar;
  tc.norm_stacked = prob.norm_stacked;
  tc.pinv_norm = prob.pinv_norm_a;

  const double tau = tc.tau, sigma = tc.sigma;
  const double lf = prob.lip_grad;
  const double s = tc.norm_stacked;
  tc.b1 = tc.norm_abar * s / tau + 1.0 / sigma + (tc.norm_abar + tc.norm_a) * s / tau;
  tc.b2 = tc.pinv_norm * (tc.lip_f0 + tc.norm_abar * tc.lip_gbar);
  tc.b3 = 1.0 + tc.pinv_norm * s;
  tc.b4 = (tc.lip_f0 + s * (tc.lip_gbar + tc.b2)) / tau;

  const double eps = cfg.eps;
  const double t1 = eps / (tc.b1 * sigma);
  const double t2 = eps / tc.b1;
  const double t3 =
      eps * eps / (48.0 * lf * tc.b1 * (tc.b2 + sigma * tc.norm_abar * tc.b4 + tc.lip_gbar));
  const double t4 =
      std::sqrt(eps * eps / (48.0 * lf * tc.b1 * tc.b3 * (1.0 + sigma * tc.norm_abar * s / tau)));
  tc.delta_eps = std::min(std::min(t1, t2), std::min(t3, t4));

  if (delta_f_bound > 0.0) {
    tc.k_eps = static_cast<long>(std::ceil(12.0 * lf * delta_f_bound / (eps * eps)));
  }
  if (delta_f0_bound > 0.0) {
    tc.k_bar_eps = static_cast<long>(std::ceil(192.0 * lf * delta_f0_bound / (eps * eps)));
    tc.delta_bar_eps = std::min(std::min(eps / (6.0 * s), delta_f0_bound / (tc.b1 * tc.lip_gbar)),
                                tc.delta_eps);
  }
  return tc;
}

double instance_delta_bound(const Instance& inst, const BlockVector& x0,
                            const Eigen::VectorXd& y0) {
  const double f0_at_zero = f0_value(inst.zero_x(), inst.params);
  const double inf_bound = f0_at_zero - 3000.0 * std::numbers::pi * std::numbers::pi *
                                            inst.params.block_dim * inst.params.eps *
                                            inst.params.eps / inst.params.lip_f;
  return f0_value(x0, inst.params) + gbar_value(y0, inst.params) - inf_bound;
}

StepOutcome ipg_step(const CompositeProblem& prob, const IpgConfig& cfg, double tau, double sigma,
                     double delta, const DualState& z_ini, IpgState& state,
                     OracleCounter& counter) {
  StepOutcome out;
  DualProblem dp = make_dual_problem(prob, state.x, state.grad_x, tau);

  RestartOptions opts;
  opts.rho = resolve_rho(prob, cfg, tau);
  opts.max_cycles = cfg.max_cycles;
  opts.reference_steps = cfg.reference_steps;
  opts.trace = cfg.dual_trace;

  const DualState start = cfg.warm_start_inner && state.k > 0
                              ? DualState::at(state.z1, state.z2)
                              : z_ini;
  if (cfg.inner_mode == InnerMode::scheduled_strongly_convex ||
      cfg.inner_mode == InnerMode::scheduled_quadratic_growth) {
    opts.gap_estimate = dual_gap_bound(prob, dp, start);
  }
  InnerResult inner = restarted_apg(dp, start, delta, cfg.inner_mode, opts, &counter);

  // x update: x+ = x - (Abar^T z1 + A^T z2 + grad)/tau.
  counter.abart_matvecs += 1;
  counter.at_matvecs += 1;
  const Eigen::VectorXd kkt_core =
      prob.abar.apply_transpose(inner.z1) + prob.a.apply_transpose(inner.z2);
  BlockVector x_next(prob.blocks, prob.block_dim,
                     state.x.vec() - (kkt_core + state.grad_x.vec()) / tau);

  // y update: y+ = prox_{(1/sigma) gbar}(z1/sigma + Abar x+ + bbar).
  counter.abar_matvecs += 1;
  counter.prox_gbar_calls += 1;
  const Eigen::VectorXd abar_xnext = prob.abar.apply(x_next.vec());
  const Eigen::VectorXd y_next =
      prob.gbar.prox(inner.z1 / sigma + abar_xnext + prob.bbar, 1.0 / sigma);

  counter.grad_f0_calls += 1;
  BlockVector grad_next = prob.f0.grad(x_next);

  counter.a_matvecs += 1;
  out.step_norm = (x_next.vec() - state.x.vec()).norm();
  out.split_feas = (y_next - abar_xnext - prob.bbar).norm();
  out.affine_feas = (prob.a.apply(x_next.vec()) + prob.b).norm();
  out.grad_residual = (grad_next.vec() + kkt_core).norm();
  out.subdiff_dist =
      prob.gbar.subdiff_distance ? prob.gbar.subdiff_distance(y_next, inner.z1) : 0.0;
  out.inner_steps = inner.cert.steps_used;
  out.cert = inner.cert;

  state.x = std::move(x_next);
  state.y = y_next;
  state.grad_x = std::move(grad_next);
  state.z1 = std::move(inner.z1);
  state.z2 = std::move(inner.z2);
  state.k += 1;
  return out;
}

SolveResult solve(const CompositeProblem& prob, const IpgConfig& cfg) {
  const double tau = resolve_tau(prob, cfg);
  const double sigma = resolve_sigma(prob, cfg);

  SolveResult res;
  res.constants = compute_constants(prob, cfg, cfg.delta_f_bound, cfg.delta_f0_bound);

  double delta = 0.0;
  long schedule = cfg.max_outer;
  switch (cfg.delta_mode) {
    case DeltaMode::explicit_value:
      if (!(cfg.delta > 0.0)) throw InvariantError("solve: explicit delta must be > 0");
      delta = cfg.delta;
      break;
    case DeltaMode::theory_eps:
      if (!(cfg.delta_f_bound > 0.0)) {
        throw InvariantError("solve: theory_eps mode needs delta_f_bound > 0");
      }
      delta = res.constants.delta_eps;
      schedule = res.constants.k_eps;
      break;
    case DeltaMode::theory_near_eps:
      if (!(cfg.delta_f0_bound > 0.0)) {
        throw InvariantError("solve: theory_near_eps mode needs delta_f0_bound > 0");
      }
      delta = res.constants.delta_bar_eps;
      schedule = res.constants.k_bar_eps;
      break;
  }
  res.delta_used = delta;
  const long max_k = std::min(schedule, cfg.max_outer);

  IpgState state;
  state.x = BlockVector(prob.blocks, prob.block_dim);  // zero start
  const double start_infeas = (prob.a.apply(state.x.vec()) + prob.b).norm();
  if (start_infeas > 1e-12 * std::max(1.0, prob.b.norm())) {
    throw InvariantError("solve: zero start is not feasible for this problem (||A x0 + b|| = " +
                         std::to_string(start_infeas) + ")");
  }
  state.y = prob.abar.apply(state.x.vec()) + prob.bbar;
  res.counters.grad_f0_calls += 1;
  state.grad_x = prob.f0.grad(state.x);

  // Fixed inner start z_ini = (y0, A x0), pulled into dom(gbar*).
  res.counters.a_matvecs += 1;
  DualState z_ini = DualState::at(prox_conjugate(prob.gbar.prox, state.y, 1.0),
                                  prob.a.apply(state.x.vec()));

  const double eps_eff = std::max(cfg.eps, kZeroEpsFloor);
  const double near_step_cap = cfg.eps / (4.0 * prob.lip_grad);

  double best_step = std::numeric_limits<double>::infinity();
  bool best_certified = false;

  for (long k = 0; k < max_k; ++k) {
    const BlockVector x_prev = state.x;
    const StepOutcome o = ipg_step(prob, cfg, tau, sigma, delta, z_ini, state, res.counters);
    res.total_inner_steps += o.inner_steps;

    TraceRow row;
    row.k = k;
    row.step_norm = o.step_norm;
    row.split_feas = o.split_feas;
    row.affine_feas = o.affine_feas;
    row.inner_steps = o.inner_steps;
    row.cum_grad_calls = res.counters.grad_f0_calls;
    row.cum_matvecs = res.counters.matvecs();
    row.cum_prox_calls = res.counters.prox_calls();
    row.z1_norm = state.z1.norm();
    res.trace.push_back(row);
    res.outer_iters = k + 1;

    if (o.step_norm < best_step) {
      best_step = o.step_norm;
      res.k_prime = k;
      res.x_anchor = x_prev;
      res.x_best = state.x;
      res.y_best = state.y;
      res.z1_best = state.z1;
      res.z2_best = state.z2;
      const double worst = std::max(std::max(o.grad_residual, o.subdiff_dist),
                                    std::max(o.split_feas, o.affine_feas));
      best_certified = worst <= eps_eff;
      if (cfg.delta_mode == DeltaMode::theory_near_eps) {
        best_certified = best_certified && o.step_norm <= near_step_cap;
      }
      if (best_certified && cfg.early_exit && !cfg.force_full_schedule) break;
    }
  }

  if (res.k_prime < 0) {  // max_outer == 0: report the initial point
    res.x_anchor = state.x;
    res.x_best = state.x;
    res.y_best = state.y;
    res.z1_best = z_ini.z1;
    res.z2_best = z_ini.z2;
  }
  res.report = audit_sp(prob, res.x_best, res.y_best, res.z1_best, res.z2_best, cfg.eps);
  res.certified = res.report.certified;
  if (cfg.delta_mode == DeltaMode::theory_near_eps && res.k_prime >= 0) {
    res.certified = res.certified && best_step <= near_step_cap;
  }
  return res;
}

RecoveryResult near_stationary_recovery(const CompositeProblem& prob, const IpgConfig& cfg,
                                        const SolveResult& result, double delta_refine) {
  if (!(delta_refine > 0.0)) {
    throw InvariantError("near_stationary_recovery: delta_refine must be > 0");
  }
  if (result.k_prime < 0) {
    throw InvariantError("near_stationary_recovery: solve produced no iterate");
  }
  const double tau = resolve_tau(prob, cfg);

  OracleCounter scratch;
  const BlockVector grad_anchor = prob.f0.grad(result.x_anchor);
  DualProblem dp = make_dual_problem(prob, result.x_anchor, grad_anchor, tau);

  RestartOptions opts;
  opts.rho = resolve_rho(prob, cfg, tau);
  opts.max_cycles = cfg.max_cycles;
  opts.reference_steps = cfg.reference_steps;
  const DualState start = DualState::at(result.z1_best, result.z2_best);
  const InnerMode mode = cfg.inner_mode == InnerMode::reference_oracle
                             ? InnerMode::reference_oracle
                             : InnerMode::adaptive;
  InnerResult refined = restarted_apg(dp, start, delta_refine, mode, opts, &scratch);

  RecoveryResult rec;
  rec.x_bar = BlockVector(prob.blocks, prob.block_dim,
                          result.x_anchor.vec() -
                              (prob.abar.apply_transpose(refined.z1) +
                               prob.a.apply_transpose(refined.z2) + grad_anchor.vec()) /
                                  tau);

  // The recovery from an exact dual solution satisfies Abar xbar + bbar = 0
  // identically; the delta_refine-inexact one misses by noise whose signs
  // would pin every subgradient of gbar. Restore the exact property: when the
  // Abar rows touch disjoint block pairs, averaging each pair is the exact
  // Euclidean projection and makes the row residuals bit-exact zero.
  if (prob.bbar.isZero(0.0)) {
    bool disjoint = true;
    const auto& rows = prob.abar.rows();
    for (size_t i = 1; i < rows.size(); ++i) disjoint = disjoint && rows[i] > rows[i - 1] + 1;
    if (disjoint) {
      for (int r : rows) {
        const Eigen::VectorXd mid = 0.5 * (rec.x_bar.block(r - 1) + rec.x_bar.block(r));
        rec.x_bar.block(r - 1) = mid;
        rec.x_bar.block(r) = mid;
      }
    }
  }

  rec.omega_bound = prob.norm_stacked * delta_refine / tau;
  rec.refine_dist_bound = refined.cert.dist_bound;
  rec.cert = refined.cert;
  return rec;
}

}  // namespace ipg
