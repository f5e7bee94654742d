#include "ipg/dual_solver.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ipg/errors.hpp"
#include "ipg/prox.hpp"

namespace ipg {

Eigen::VectorXd DualProblem::core(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                                  OracleCounter* counter) const {
  if (counter) {
    ++counter->abart_matvecs;
    ++counter->at_matvecs;
  }
  return prob->abar.apply_transpose(z1) + prob->a.apply_transpose(z2) + shift;
}

double DualProblem::value(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2) const {
  const double conj = prob->gbar.conjugate ? prob->gbar.conjugate(z1) : 0.0;
  if (std::isinf(conj)) return conj;
  const Eigen::VectorXd c = core(z1, z2);
  return 0.5 / tau * c.squaredNorm() + conj - z1.dot(prob->bbar) - z2.dot(prob->b);
}

void DualProblem::smooth_grad(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                              Eigen::VectorXd& g1, Eigen::VectorXd& g2,
                              OracleCounter* counter) const {
  const Eigen::VectorXd c = core(z1, z2, counter);
  if (counter) {
    ++counter->abar_matvecs;
    ++counter->a_matvecs;
  }
  g1 = prob->abar.apply(c) / tau - prob->bbar;
  g2 = prob->a.apply(c) / tau - prob->b;
}

void DualProblem::prox_grad_step(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                                 Eigen::VectorXd& z1_out, Eigen::VectorXd& z2_out,
                                 OracleCounter* counter) const {
  Eigen::VectorXd g1, g2;
  smooth_grad(z1, z2, g1, g2, counter);
  if (counter) ++counter->prox_gbar_calls;
  z1_out = prox_conjugate(prob->gbar.prox, z1 - g1 / lip_dual, 1.0 / lip_dual);
  z2_out = z2 - g2 / lip_dual;
}

DualProblem make_dual_problem(const CompositeProblem& prob, const BlockVector& x,
                              const BlockVector& grad_x, double tau) {
  if (!(tau > 0.0)) throw InvariantError("make_dual_problem: tau must be > 0");
  if (x.size() != prob.dim_x || grad_x.size() != prob.dim_x) {
    throw DimensionError("make_dual_problem: anchor dimension mismatch");
  }
  DualProblem dp;
  dp.prob = &prob;
  dp.anchor_x = x;
  dp.grad_anchor = grad_x;
  dp.tau = tau;
  dp.shift = grad_x.vec() - tau * x.vec();
  dp.lip_dual = prob.norm_stacked * prob.norm_stacked / tau;
  dp.mu_dual = prob.min_pos_gram_stacked / tau;
  return dp;
}

DualState DualState::at(Eigen::VectorXd z1, Eigen::VectorXd z2) {
  DualState st;
  st.zhat1 = z1;
  st.zhat2 = z2;
  st.z1 = std::move(z1);
  st.z2 = std::move(z2);
  st.alpha = 1.0;
  return st;
}

DualState apg_cycle(const DualProblem& dp, DualState st, int steps, OracleCounter* counter,
                    const DualTraceSink& trace) {
  if (steps < 1) throw InvariantError("apg_cycle: steps must be >= 1");
  const double lip = dp.lip_dual;
  Eigen::VectorXd g1, g2, z1_new, z2_new;
  for (int j = 0; j < steps; ++j) {
    dp.smooth_grad(st.zhat1, st.zhat2, g1, g2, counter);
    if (counter) ++counter->prox_gbar_calls;
    z1_new = prox_conjugate(dp.prob->gbar.prox, st.zhat1 - g1 / lip, 1.0 / lip);
    z2_new = st.zhat2 - g2 / lip;
    const double alpha_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * st.alpha * st.alpha));
    const double mom = (st.alpha - 1.0) / alpha_next;
    st.zhat1 = z1_new + mom * (z1_new - st.z1);
    st.zhat2 = z2_new + mom * (z2_new - st.z2);
    if (trace) {
      const double gnorm =
          lip * std::sqrt((st.z1 - z1_new).squaredNorm() + (st.z2 - z2_new).squaredNorm());
      trace(st.step + 1, dp.value(z1_new, z2_new), gnorm);
    }
    st.z1 = std::move(z1_new);
    st.z2 = std::move(z2_new);
    st.alpha = alpha_next;
    ++st.step;
  }
  return st;
}

bool adaptive_stop_check(const DualProblem& dp, Eigen::VectorXd& z1, Eigen::VectorXd& z2,
                         double mu, double delta, double* grad_map_norm,
                         OracleCounter* counter) {
  if (!(mu > 0.0)) throw InvariantError("adaptive_stop_check: mu must be > 0");
  Eigen::VectorXd z1_next, z2_next;
  dp.prox_grad_step(z1, z2, z1_next, z2_next, counter);
  const double gnorm =
      dp.lip_dual * std::sqrt((z1 - z1_next).squaredNorm() + (z2 - z2_next).squaredNorm());
  if (grad_map_norm) *grad_map_norm = gnorm;
  if (gnorm <= mu * delta) {
    z1 = std::move(z1_next);
    z2 = std::move(z2_next);
    return true;
  }
  return false;
}

namespace {

int cycle_length(double lip, double curvature) {
  return static_cast<int>(std::ceil(2.0 * std::sqrt(2.0 * lip / curvature)));
}

int cycle_count(double gap, double curvature, double delta) {
  const double arg = 2.0 * gap / (curvature * delta * delta);
  if (arg <= 1.0) return 0;
  return static_cast<int>(std::ceil(std::log2(arg)));
}

}  // namespace

InnerResult restarted_apg(const DualProblem& dp, const DualState& init, double delta,
                          InnerMode mode, const RestartOptions& opts, OracleCounter* counter) {
  if (!(delta > 0.0)) throw InvariantError("restarted_apg: delta must be > 0");

  InnerResult out;
  out.cert.mode = mode;

  if (mode == InnerMode::reference_oracle) {
    Eigen::VectorXd z1 = init.z1, z2 = init.z2, z1n, z2n;
    for (long s = 0; s < opts.reference_steps; ++s) {
      dp.prox_grad_step(z1, z2, z1n, z2n, counter);
      z1.swap(z1n);
      z2.swap(z2n);
    }
    const double mu = dp.mu_dual;
    double gnorm = 0.0;
    adaptive_stop_check(dp, z1, z2, mu, std::numeric_limits<double>::max(), &gnorm, counter);
    out.z1 = std::move(z1);
    out.z2 = std::move(z2);
    out.cert.mu_or_rho = mu;
    out.cert.dist_bound = gnorm / mu;
    out.cert.steps_used = opts.reference_steps + 1;
    return out;
  }

  double curvature = 0.0;
  switch (mode) {
    case InnerMode::scheduled_strongly_convex:
    case InnerMode::adaptive:
      curvature = opts.rho > 0.0 ? opts.rho : dp.mu_dual;
      break;
    case InnerMode::scheduled_quadratic_growth:
      curvature = opts.rho;
      break;
    default:
      break;
  }
  if (!(curvature > 0.0)) {
    throw InvariantError("restarted_apg: curvature constant must be > 0 (got " +
                         std::to_string(curvature) + ")");
  }
  const int jk = cycle_length(dp.lip_dual, curvature);

  DualState st = DualState::at(init.z1, init.z2);
  long steps = 0;
  int cycles = 0;

  if (mode == InnerMode::adaptive) {
    Eigen::VectorXd z1 = st.z1, z2 = st.z2;
    double gnorm = 0.0;
    while (cycles < opts.max_cycles) {
      ++steps;  // certificate probe costs one proximal gradient round
      if (adaptive_stop_check(dp, z1, z2, curvature, delta, &gnorm, counter)) {
        out.z1 = std::move(z1);
        out.z2 = std::move(z2);
        out.cert.mu_or_rho = curvature;
        out.cert.dist_bound = gnorm / curvature;
        out.cert.steps_used = steps;
        out.cert.cycles_used = cycles;
        return out;
      }
      st = DualState::at(std::move(z1), std::move(z2));
      st = apg_cycle(dp, std::move(st), jk, counter, opts.trace);
      steps += jk;
      ++cycles;
      z1 = st.z1;
      z2 = st.z2;
    }
    throw InvariantError("restarted_apg: adaptive mode exhausted max_cycles without certificate");
  }

  // Scheduled modes.
  if (!(opts.gap_estimate > 0.0)) {
    throw InvariantError("restarted_apg: scheduled mode needs gap_estimate > 0");
  }
  const int ik = cycle_count(opts.gap_estimate, curvature, delta);
  for (int i = 0; i < ik; ++i) {
    st = apg_cycle(dp, std::move(st), jk, counter, opts.trace);
    steps += jk;
    ++cycles;
    st = DualState::at(std::move(st.z1), std::move(st.z2));  // restart: momentum reset
  }
  out.z1 = std::move(st.z1);
  out.z2 = std::move(st.z2);
  out.cert.mu_or_rho = curvature;
  out.cert.dist_bound = delta;
  out.cert.steps_used = steps;
  out.cert.cycles_used = cycles;
  return out;
}

}  // namespace ipg
