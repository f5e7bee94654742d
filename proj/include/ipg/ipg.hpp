#pragma once

#include <Eigen/Core>
#include <vector>

#include "ipg/composite_problem.hpp"
#include "ipg/dual_solver.hpp"
#include "ipg/instance.hpp"
#include "ipg/oracle_counter.hpp"
#include "ipg/stationarity.hpp"

namespace ipg {

enum class DeltaMode { explicit_value, theory_eps, theory_near_eps };

struct IpgConfig {
  double tau = 0.0;    // <= 0 selects 2 * lip_grad
  double sigma = 0.0;  // <= 0 selects lip_grad
  double eps = 0.1;
  DeltaMode delta_mode = DeltaMode::theory_eps;
  double delta = 0.0;  // used by explicit_value
  InnerMode inner_mode = InnerMode::adaptive;
  double rho = 0.0;  // quadratic-growth constant; <= 0 derives lambda_min/tau when b = bbar = 0
  long max_outer = 200000;
  bool early_exit = true;
  bool force_full_schedule = false;  // run the whole K_eps schedule regardless
  bool warm_start_inner = false;     // non-default: reuse the previous z as z_ini
  double delta_f_bound = 0.0;        // upper bound on F(x0,y0) - inf F (theory modes)
  double delta_f0_bound = 0.0;       // upper bound on F0(x0) - inf F0
  long reference_steps = 100000;
  int max_cycles = 1 << 20;
  DualTraceSink dual_trace;          // optional per-inner-step sink
};

// Constants of the outer-loop analysis, all derived from operator norms and
// the two Lipschitz constants:
//   B1 = ||Abar|| ||S|| / tau + 1/sigma + (||Abar|| + ||A||) ||S|| / tau
//   B2 = ||(A A^T)^{-1} A|| (l_f + ||Abar|| l_g)
//   B3 = 1 + ||(A A^T)^{-1} A|| ||S||
//   B4 = (l_f + ||S|| (l_g + B2)) / tau            with S = [Abar; A].
struct TheoryConstants {
  double b1 = 0, b2 = 0, b3 = 0, b4 = 0;
  double delta_eps = 0;      // inner tolerance for an eps-stationary point of (SP)
  double delta_bar_eps = 0;  // tightened tolerance for near-stationarity of (P)
  long k_eps = 0;            // ceil(12 L_f dF / eps^2)
  long k_bar_eps = 0;        // ceil(192 L_f dF0 / eps^2)
  double lip_f0 = 0, lip_gbar = 0;
  double norm_a = 0, norm_abar = 0, norm_stacked = 0, pinv_norm = 0;
  double tau = 0, sigma = 0;
};

TheoryConstants compute_constants(const CompositeProblem& prob, const IpgConfig& cfg,
                                  double delta_f_bound, double delta_f0_bound);

// Default certified bound on F(x0, y0) - inf F for the hard instance
// (and on F0(x0) - inf F0): f0(x0) + gbar(y0) - f0(0) + 3000 pi^2 dbar eps^2 / L_f.
double instance_delta_bound(const Instance& inst, const BlockVector& x0,
                            const Eigen::VectorXd& y0);

struct IpgState {
  BlockVector x;
  Eigen::VectorXd y;
  BlockVector grad_x;        // grad f0(x), cached across audit and next step
  Eigen::VectorXd z1, z2;    // from the last inner solve
  long k = 0;
};

struct TraceRow {
  long k = 0;
  double step_norm = 0, split_feas = 0, affine_feas = 0;
  long inner_steps = 0;
  long cum_grad_calls = 0, cum_matvecs = 0, cum_prox_calls = 0;
  double z1_norm = 0;  // ||z1^(k+1)||, not part of the CSV schema
};

struct SolveResult {
  bool certified = false;
  long k_prime = -1;          // argmin_k ||x^(k+1) - x^(k)|| over the executed range
  long outer_iters = 0;
  BlockVector x_anchor;       // x^(k')
  BlockVector x_best;         // x^(k'+1)
  Eigen::VectorXd y_best, z1_best, z2_best;
  StationarityReport report;  // SP audit of the returned iterate
  std::vector<TraceRow> trace;
  OracleCounter counters;
  TheoryConstants constants;
  double delta_used = 0.0;
  long total_inner_steps = 0;
};

struct StepOutcome {
  double step_norm = 0, split_feas = 0, affine_feas = 0, grad_residual = 0, subdiff_dist = 0;
  long inner_steps = 0;
  InnerCertificate cert;
};

// One outer iteration: inner dual solve to tolerance delta, then the two
// closed-form primal recovery updates. Mutates `state` in place.
StepOutcome ipg_step(const CompositeProblem& prob, const IpgConfig& cfg, double tau, double sigma,
                     double delta, const DualState& z_ini, IpgState& state,
                     OracleCounter& counter);

// Runs the outer loop from the feasible zero start (x0 = 0 requires A 0 + b = 0)
// and returns the best iterate, its audit, the trace, and the counters.
SolveResult solve(const CompositeProblem& prob, const IpgConfig& cfg);

struct RecoveryResult {
  BlockVector x_bar;
  double omega_bound = 0.0;        // (1/tau) ||S|| * delta_refine
  double refine_dist_bound = 0.0;  // certified dist(z_refined, argmin)
  InnerCertificate cert;
};

// Re-solves the k'-th dual problem to tolerance delta_refine and recomputes
// the exactly-feasible recovery point xbar from the refined multipliers.
RecoveryResult near_stationary_recovery(const CompositeProblem& prob, const IpgConfig& cfg,
                                        const SolveResult& result, double delta_refine);

}  // namespace ipg
