#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ipg/errors.hpp"
#include "ipg/instance.hpp"
#include "ipg/ipg.hpp"
#include "ipg/rng.hpp"
#include "ipg/stationarity.hpp"

using namespace ipg;

namespace {

IpgConfig base_config(const Instance& inst, double eps) {
  IpgConfig cfg;
  cfg.eps = eps;
  cfg.tau = 2.0 * inst.params.lip_f;
  cfg.sigma = 1.0;
  cfg.delta_mode = DeltaMode::theory_eps;
  cfg.inner_mode = InnerMode::adaptive;
  const double bound =
      instance_delta_bound(inst, inst.zero_x(), Eigen::VectorXd::Zero(inst.dim_nbar));
  cfg.delta_f_bound = bound;
  cfg.delta_f0_bound = bound;
  return cfg;
}

}  // namespace

TEST_CASE("theory constants against dense-matrix computations") {
  Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
  IpgConfig cfg = base_config(inst, 0.1);
  const TheoryConstants tc =
      compute_constants(inst.problem, cfg, cfg.delta_f_bound, cfg.delta_f0_bound);

  const Eigen::MatrixXd ad = inst.op_a.dense();
  const Eigen::MatrixXd abd = inst.op_abar.dense();
  const Eigen::MatrixXd hd = inst.op_h.dense();
  Eigen::JacobiSVD<Eigen::MatrixXd> sa(ad), sab(abd), sh(hd);

  CHECK(tc.norm_a == doctest::Approx(sa.singularValues()(0)).epsilon(1e-9));
  CHECK(tc.norm_abar == doctest::Approx(sab.singularValues()(0)).epsilon(1e-9));
  CHECK(tc.norm_stacked == doctest::Approx(sh.singularValues()(0)).epsilon(1e-9));
  const Eigen::Index last_a = sa.singularValues().size() - 1;
  CHECK(tc.pinv_norm == doctest::Approx(1.0 / sa.singularValues()(last_a)).epsilon(1e-9));
  CHECK(tc.lip_f0 == doctest::Approx(inst.lip_f0).epsilon(1e-12));
  CHECK(tc.lip_gbar == doctest::Approx(inst.lip_gbar).epsilon(1e-12));

  // Formula reconstruction.
  const double b1 = tc.norm_abar * tc.norm_stacked / 2.0 + 1.0 +
                    (tc.norm_abar + tc.norm_a) * tc.norm_stacked / 2.0;
  CHECK(tc.b1 == doctest::Approx(b1).epsilon(1e-12));
  const double b2 = tc.pinv_norm * (tc.lip_f0 + tc.norm_abar * tc.lip_gbar);
  CHECK(tc.b2 == doctest::Approx(b2).epsilon(1e-12));
  CHECK(tc.b3 == doctest::Approx(1.0 + tc.pinv_norm * tc.norm_stacked).epsilon(1e-12));
  CHECK(tc.b4 ==
        doctest::Approx((tc.lip_f0 + tc.norm_stacked * (tc.lip_gbar + tc.b2)) / 2.0)
            .epsilon(1e-12));
}

TEST_CASE("outer iteration count arithmetic") {
  Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
  IpgConfig cfg = base_config(inst, 0.1);
  const TheoryConstants tc = compute_constants(inst.problem, cfg, 10.0, 10.0);
  CHECK(tc.k_eps == 12000);  // ceil(12 * 1 * 10 / 0.01)
  CHECK(tc.k_bar_eps == static_cast<long>(std::ceil(192.0 * 10.0 / 0.01)));
}

TEST_CASE("larger sigma shrinks the 1/sigma term of B1") {
  Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
  IpgConfig a = base_config(inst, 0.1);
  IpgConfig b = a;
  b.sigma = 100.0;
  const double b1_a = compute_constants(inst.problem, a, 1.0, 1.0).b1;
  const double b1_b = compute_constants(inst.problem, b, 1.0, 1.0).b1;
  CHECK(b1_b < b1_a);
  CHECK(b1_a - b1_b == doctest::Approx(1.0 - 0.01).epsilon(1e-9));
}

TEST_CASE("single step identities") {
  Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
  IpgConfig cfg = base_config(inst, 0.1);
  cfg.inner_mode = InnerMode::reference_oracle;
  cfg.reference_steps = 20000;

  IpgState state;
  state.x = inst.zero_x();
  state.y = Eigen::VectorXd::Zero(inst.dim_nbar);
  state.grad_x = f0_grad(state.x, inst.params);
  const DualState z_ini = DualState::at(Eigen::VectorXd::Zero(inst.dim_nbar),
                                        Eigen::VectorXd::Zero(inst.dim_n));
  OracleCounter counter;
  const BlockVector x0 = state.x;
  const BlockVector g0 = state.grad_x;
  const StepOutcome o = ipg_step(inst.problem, cfg, 2.0, 1.0, 1e-8, z_ini, state, counter);

  SUBCASE("x-update stationarity identity holds to machine precision") {
    const Eigen::VectorXd residual = g0.vec() + inst.op_abar.apply_transpose(state.z1) +
                                     inst.op_a.apply_transpose(state.z2) +
                                     2.0 * (state.x.vec() - x0.vec());
    CHECK(residual.lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SUBCASE("near-exact dual gives near-exact feasibility") {
    CHECK(o.split_feas + o.affine_feas <= 1e-8);
  }
  SUBCASE("counters moved") {
    CHECK(counter.grad_f0_calls == 1);
    CHECK(counter.prox_calls() > 0);
  }
}

TEST_CASE("end-to-end solve on the hard instance") {
  Instance inst = build_instance({2, 2, 5, 0.1, 1.0, 0.0});
  IpgConfig cfg = base_config(inst, 0.1);
  const SolveResult res = solve(inst.problem, cfg);

  CHECK(res.certified);
  CHECK(res.outer_iters <= res.constants.k_eps);
  for (const auto& [name, value] : res.report.residuals) {
    CHECK_MESSAGE(value <= 0.1, name);
  }

  SUBCASE("trace invariants") {
    const double feas_cap = res.constants.b1 * res.delta_used;
    const double step_cap = res.constants.b4 + res.constants.norm_stacked * res.constants.b3 *
                                                   res.delta_used / res.constants.tau;
    double running_min = std::numeric_limits<double>::infinity();
    for (const TraceRow& r : res.trace) {
      CHECK(r.split_feas + r.affine_feas <= feas_cap);
      CHECK(r.step_norm <= step_cap);
      CHECK(r.z1_norm <= res.constants.lip_gbar * (1.0 + 1e-9));
      running_min = std::min(running_min, r.step_norm);
    }
    CHECK(res.trace[res.k_prime].step_norm == running_min);
  }

  SUBCASE("determinism: identical config, identical trace") {
    const SolveResult res2 = solve(inst.problem, cfg);
    REQUIRE(res2.trace.size() == res.trace.size());
    for (size_t i = 0; i < res.trace.size(); ++i) {
      CHECK(res.trace[i].step_norm == res2.trace[i].step_norm);
      CHECK(res.trace[i].inner_steps == res2.trace[i].inner_steps);
    }
    CHECK((res.x_best.vec() - res2.x_best.vec()).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("solve with max_outer = 0 reports the initial point") {
  Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
  IpgConfig cfg = base_config(inst, 0.1);
  cfg.max_outer = 0;
  const SolveResult res = solve(inst.problem, cfg);
  CHECK(res.trace.empty());
  CHECK(res.outer_iters == 0);
  CHECK(res.k_prime == -1);
  CHECK_FALSE(res.certified);
  CHECK(res.x_best.vec().norm() == 0.0);
}

TEST_CASE("a problem whose start is already stationary exits immediately") {
  // Quadratic smooth part with minimizer at the feasible zero start; the
  // regularizer weight is zero so y = Abar x is unconstrained in cost.
  const int m = 6, bd = 5;
  SmoothOracle f0;
  f0.value = [](const BlockVector& x) { return 0.5 * x.vec().squaredNorm(); };
  f0.grad = [](const BlockVector& x) { return x; };
  ChainOperator a(6.0, m, bd, {1, 3, 5});
  ChainOperator abar(6.0, m, bd, {2, 4});
  CompositeProblem prob = make_problem(m, bd, std::move(f0), 1.0, 1.0,
                                       weighted_l1_regularizer(0.0), a, abar,
                                       Eigen::VectorXd::Zero(a.output_dim()),
                                       Eigen::VectorXd::Zero(abar.output_dim()), 1.0);
  IpgConfig cfg;
  cfg.eps = 0.1;
  cfg.delta_mode = DeltaMode::explicit_value;
  cfg.delta = 1e-10;
  cfg.inner_mode = InnerMode::adaptive;
  cfg.max_outer = 50;
  const SolveResult res = solve(prob, cfg);
  CHECK(res.certified);
  CHECK(res.outer_iters == 1);  // the very first iterate certifies
}

TEST_CASE("near stationary recovery") {
  Instance inst = build_instance({2, 2, 5, 0.1, 1.0, 0.0});
  IpgConfig cfg = base_config(inst, 0.1);
  cfg.delta_mode = DeltaMode::theory_near_eps;
  const SolveResult res = solve(inst.problem, cfg);
  REQUIRE(res.certified);

  const double delta_bar = res.constants.delta_bar_eps;
  const RecoveryResult rec = near_stationary_recovery(inst.problem, cfg, res, delta_bar);

  SUBCASE("certificate arithmetic and the 1/(12 L_f) window") {
    CHECK(rec.omega_bound ==
          doctest::Approx(res.constants.norm_stacked * delta_bar / 2.0).epsilon(1e-12));
    CHECK(rec.omega_bound <= 0.1 / 12.0);
    const RecoveryResult half = near_stationary_recovery(inst.problem, cfg, res, delta_bar / 2);
    CHECK(half.omega_bound == doctest::Approx(0.5 * rec.omega_bound).epsilon(1e-12));
  }
  SUBCASE("measured recovery distance and exact feasibility") {
    CHECK((res.x_best.vec() - rec.x_bar.vec()).norm() <= 0.1 / 12.0);
    // xbar from a high-accuracy dual is feasible up to the refine tolerance.
    CHECK((inst.op_a.apply(rec.x_bar.vec()) + inst.problem.b).norm() <= 1e-6);
  }
  SUBCASE("audits chain through") {
    const auto p_rep = audit_p_relaxed(inst.problem, rec.x_bar, res.z2_best, res.z1_best, 0.1);
    CHECK(p_rep.certified);
    const auto ap_bar = audit_ap(inst, rec.x_bar, 0.1);
    CHECK(ap_bar.certified);
    const auto ap_best = audit_ap(inst, res.x_best, 0.2);
    CHECK(ap_best.certified);
  }
}

TEST_CASE("validation errors") {
  Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
  SUBCASE("tau must dominate the Lipschitz constant") {
    IpgConfig cfg = base_config(inst, 0.1);
    cfg.tau = 0.5;
    CHECK_THROWS_AS(solve(inst.problem, cfg), InvariantError);
  }
  SUBCASE("theory mode requires a gap bound") {
    IpgConfig cfg = base_config(inst, 0.1);
    cfg.delta_f_bound = 0.0;
    CHECK_THROWS_AS(solve(inst.problem, cfg), InvariantError);
  }
  SUBCASE("explicit mode requires a positive delta") {
    IpgConfig cfg = base_config(inst, 0.1);
    cfg.delta_mode = DeltaMode::explicit_value;
    cfg.delta = 0.0;
    CHECK_THROWS_AS(solve(inst.problem, cfg), InvariantError);
  }
}

TEST_CASE("forced full schedule ignores certification") {
  Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
  IpgConfig cfg = base_config(inst, 0.1);
  cfg.max_outer = 40;
  cfg.force_full_schedule = true;
  const SolveResult res = solve(inst.problem, cfg);
  CHECK(res.outer_iters == 40);  // never breaks early
}

TEST_CASE("warm-started inner solves still certify") {
  Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
  IpgConfig cfg = base_config(inst, 0.1);
  cfg.warm_start_inner = true;
  const SolveResult res = solve(inst.problem, cfg);
  CHECK(res.certified);
  for (const auto& [name, value] : res.report.residuals) {
    CHECK_MESSAGE(value <= 0.1, name);
  }
}

TEST_CASE("quadratic-growth schedule coincides with strong convexity here") {
  // With zero offsets the derived growth constant equals lambda_min/tau, so
  // the two scheduled modes run identical cycle counts and produce
  // bit-identical traces.
  Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
  IpgConfig sc = base_config(inst, 0.1);
  sc.inner_mode = InnerMode::scheduled_strongly_convex;
  sc.max_outer = 25;
  sc.force_full_schedule = true;
  IpgConfig qg = sc;
  qg.inner_mode = InnerMode::scheduled_quadratic_growth;
  const SolveResult a = solve(inst.problem, sc);
  const SolveResult b = solve(inst.problem, qg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].step_norm == b.trace[i].step_norm);
    CHECK(a.trace[i].inner_steps == b.trace[i].inner_steps);
  }
}

TEST_CASE("dual trace sink receives every inner step") {
  Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
  IpgConfig cfg = base_config(inst, 0.1);
  cfg.max_outer = 3;
  cfg.force_full_schedule = true;
  long rows = 0;
  double last_value = std::numeric_limits<double>::infinity();
  cfg.dual_trace = [&](long, double value, double gnorm) {
    ++rows;
    last_value = value;
    CHECK(gnorm >= 0.0);
  };
  const SolveResult res = solve(inst.problem, cfg);
  CHECK(rows > 0);
  CHECK(std::isfinite(last_value));
  // Certificate probes are not traced; every traced row is a cycle step.
  long cycle_steps = 0;
  for (const TraceRow& r : res.trace) cycle_steps += r.inner_steps;
  CHECK(rows <= cycle_steps);
}

TEST_CASE("larger geometry with adjacent affine rows") {
  // m1 = 4 puts consecutive rows into A, so A A^T is no longer a multiple of
  // the identity; exercises the generic gram paths end to end.
  Instance inst = build_instance({4, 1, 7, 0.1, 1.0, 0.0});
  CHECK(inst.m == 12);
  CHECK(inst.rows_m == std::vector<int>{4, 8});
  CHECK(inst.rows_mc.size() == 9);

  // Dense cross-check of the cached norms for this row pattern.
  const Eigen::MatrixXd ad = inst.op_a.dense();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ad);
  CHECK(inst.problem.norm_a ==
        doctest::Approx(svd.singularValues()(0)).epsilon(1e-10));
  CHECK(inst.problem.pinv_norm_a ==
        doctest::Approx(1.0 / svd.singularValues()(svd.singularValues().size() - 1))
            .epsilon(1e-10));

  IpgConfig cfg = base_config(inst, 0.1);
  const SolveResult res = solve(inst.problem, cfg);
  CHECK(res.certified);
  for (const auto& [name, value] : res.report.residuals) {
    CHECK_MESSAGE(value <= 0.1, name);
  }
}

TEST_CASE("reference-precision recovery satisfies the subproblem KKT system") {
  // Independent optimality certificate for the inner subproblem: with the
  // dual solved to reference precision, the recovered (x+, y+) must satisfy
  // primal feasibility in both constraints and z1 in d gbar(y+), which by
  // convexity certifies the subproblem optimum without using the dual route.
  Instance inst = build_instance({2, 1, 5, 0.1, 1.0, 0.0});
  IpgConfig cfg = base_config(inst, 0.1);
  cfg.inner_mode = InnerMode::reference_oracle;
  cfg.reference_steps = 100000;

  IpgState state;
  state.x = inst.zero_x();
  Rng rng(515);
  for (Eigen::Index i = 0; i < state.x.size(); ++i) {
    state.x.vec()(i) = 0.03 * rng.uniform(-1, 1);
  }
  // Make the anchor feasible so the zero-start substitute stays valid.
  state.x = BlockVector(inst.m, 5,
                        state.x.vec() - inst.op_a.apply_transpose(inst.op_a.gram_solve(
                                            inst.op_a.apply(state.x.vec()))));
  REQUIRE((inst.op_a.apply(state.x.vec())).norm() <= 1e-10);
  state.y = inst.op_abar.apply(state.x.vec());
  state.grad_x = f0_grad(state.x, inst.params);

  const DualState z_ini = DualState::at(Eigen::VectorXd::Zero(inst.dim_nbar),
                                        Eigen::VectorXd::Zero(inst.dim_n));
  OracleCounter counter;
  const StepOutcome o = ipg_step(inst.problem, cfg, 2.0, 1.0, 1e-9, z_ini, state, counter);

  CHECK(o.affine_feas <= 1e-7);
  CHECK(o.split_feas <= 1e-7);
  const double subgrad_dist = inst.problem.gbar.subdiff_distance(state.y, state.z1);
  CHECK(subgrad_dist <= 1e-6);
}
