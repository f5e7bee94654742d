#pragma once

#include <Eigen/Core>
#include <functional>

#include "ipg/composite_problem.hpp"
#include "ipg/oracle_counter.hpp"

namespace ipg {

// Negative Lagrangian dual of the proximal subproblem anchored at x^(k):
//   D(z) = 1/(2 tau) || Abar^T z1 + A^T z2 + grad_f0(x^k) - tau x^k ||^2
//          + gbar*(z1) - z1.bbar - z2.b.
// The smooth part has gradient Lipschitz constant lip_dual = lambda_max/tau
// and is mu_dual-strongly convex with mu_dual = lambda_min/tau, both over the
// stacked operator's Gram matrix.
struct DualProblem {
  const CompositeProblem* prob = nullptr;
  BlockVector anchor_x;
  BlockVector grad_anchor;
  double tau = 0.0;
  Eigen::VectorXd shift;  // grad_anchor - tau * anchor_x
  double lip_dual = 0.0;
  double mu_dual = 0.0;

  // Abar^T z1 + A^T z2 + shift.
  Eigen::VectorXd core(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                       OracleCounter* counter = nullptr) const;

  // D(z); +infinity when z1 leaves dom(gbar*).
  double value(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2) const;

  // Gradients of the smooth part w.r.t. z1 and z2.
  void smooth_grad(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2, Eigen::VectorXd& g1,
                   Eigen::VectorXd& g2, OracleCounter* counter = nullptr) const;

  // One proximal gradient step from (z1, z2) with step 1/lip_dual.
  void prox_grad_step(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                      Eigen::VectorXd& z1_out, Eigen::VectorXd& z2_out,
                      OracleCounter* counter = nullptr) const;
};

DualProblem make_dual_problem(const CompositeProblem& prob, const BlockVector& x,
                              const BlockVector& grad_x, double tau);

// APG state: main iterate (z1, z2), extrapolated point (zhat1, zhat2), and the
// momentum scalar updated by alpha_{j+1} = (1 + sqrt(1 + 4 alpha_j^2)) / 2.
struct DualState {
  Eigen::VectorXd z1, z2, zhat1, zhat2;
  double alpha = 1.0;
  int cycle = 0;
  long step = 0;

  static DualState at(Eigen::VectorXd z1, Eigen::VectorXd z2);
};

enum class InnerMode {
  scheduled_strongly_convex,
  scheduled_quadratic_growth,
  adaptive,
  reference_oracle,
};

struct InnerCertificate {
  InnerMode mode = InnerMode::adaptive;
  double mu_or_rho = 0.0;
  double dist_bound = 0.0;
  long steps_used = 0;
  int cycles_used = 0;
};

struct InnerResult {
  Eigen::VectorXd z1, z2;
  InnerCertificate cert;
};

// Optional per-step trace sink: (step index, dual value, ||G||).
using DualTraceSink = std::function<void(long, double, double)>;

// Executes exactly `steps` APG iterations (momentum degenerates to a plain
// proximal gradient step at j = 0 because alpha_0 = 1).
DualState apg_cycle(const DualProblem& dp, DualState state, int steps,
                    OracleCounter* counter = nullptr, const DualTraceSink& trace = nullptr);

// Gradient-mapping stopping certificate: takes one proximal gradient step
// from z, forms G = lip_dual * (z - z+), and accepts iff ||G|| <= mu * delta,
// which certifies D(z+) - D* <= ||G||^2/(2 mu) and dist(z+, argmin) <= delta.
// On acceptance z is replaced by the step point z+.
bool adaptive_stop_check(const DualProblem& dp, Eigen::VectorXd& z1, Eigen::VectorXd& z2,
                         double mu, double delta, double* grad_map_norm = nullptr,
                         OracleCounter* counter = nullptr);

struct RestartOptions {
  double rho = 0.0;           // quadratic-growth constant (QG mode)
  double gap_estimate = 0.0;  // upper bound on D(z_ini) - D* (scheduled modes)
  int max_cycles = 1 << 20;   // safety cap for adaptive mode
  long reference_steps = 100000;
  DualTraceSink trace;
};

// Restarted APG: cycles of j_k steps, momentum reset at every restart.
//  - scheduled_strongly_convex: j_k = ceil(2 sqrt(2 lip/mu)) (= ceil(2 sqrt2
//    kappa)), i_k = ceil(log2(2 gap / (mu delta^2))).
//  - scheduled_quadratic_growth: same shape with the supplied rho.
//  - adaptive: cycles of the same length, stopping on the gradient-mapping
//    certificate instead of a precomputed cycle count.
//  - reference_oracle: plain proximal gradient for `reference_steps` steps
//    (test / recovery use).
InnerResult restarted_apg(const DualProblem& dp, const DualState& init, double delta,
                          InnerMode mode, const RestartOptions& opts = {},
                          OracleCounter* counter = nullptr);

}  // namespace ipg
