// Python bindings for the core operations: instance construction, the smooth
// and prox oracles, chain-operator algebra, the solver, the stationarity
// audits, and the span-oracle episodes.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ipg/commands.hpp"
#include "ipg/dual_solver.hpp"
#include "ipg/instance.hpp"
#include "ipg/ipg.hpp"
#include "ipg/prox.hpp"
#include "ipg/span_tracker.hpp"
#include "ipg/stationarity.hpp"
#include "ipg/verify.hpp"

namespace py = pybind11;
using namespace ipg;

namespace {

BlockVector as_block(const Instance& inst, const Eigen::VectorXd& x) {
  return BlockVector(inst.m, inst.params.block_dim, x);
}

py::dict report_dict(const StationarityReport& rep) {
  py::dict d;
  d["certified"] = rep.certified;
  d["converged"] = rep.converged;
  d["epsilon"] = rep.epsilon;
  py::dict res;
  for (const auto& [name, value] : rep.residuals) res[py::str(name)] = value;
  d["residuals"] = res;
  d["z1"] = rep.z1;
  d["z2"] = rep.z2;
  return d;
}

py::dict counter_dict(const OracleCounter& c) {
  py::dict d;
  d["grad_f0_calls"] = c.grad_f0_calls;
  d["a_matvecs"] = c.a_matvecs;
  d["at_matvecs"] = c.at_matvecs;
  d["abar_matvecs"] = c.abar_matvecs;
  d["abart_matvecs"] = c.abart_matvecs;
  d["prox_g_calls"] = c.prox_g_calls;
  d["prox_gbar_calls"] = c.prox_gbar_calls;
  d["total"] = c.total();
  return d;
}

InnerMode inner_mode_of(const std::string& name) {
  if (name == "adaptive") return InnerMode::adaptive;
  if (name == "scheduled-sc") return InnerMode::scheduled_strongly_convex;
  if (name == "scheduled-qg") return InnerMode::scheduled_quadratic_growth;
  if (name == "reference") return InnerMode::reference_oracle;
  throw InvariantError("unknown inner mode: " + name);
}

DeltaMode delta_mode_of(const std::string& name) {
  if (name == "explicit") return DeltaMode::explicit_value;
  if (name == "theory-eps") return DeltaMode::theory_eps;
  if (name == "theory-near-eps") return DeltaMode::theory_near_eps;
  throw InvariantError("unknown delta mode: " + name);
}

IpgConfig config_from_kwargs(const Instance& inst, double eps, double tau, double sigma,
                             const std::string& delta_mode, double delta,
                             const std::string& inner, long max_outer, bool early_exit) {
  IpgConfig cfg;
  cfg.eps = eps;
  cfg.tau = tau;
  cfg.sigma = sigma;
  cfg.delta_mode = delta_mode_of(delta_mode);
  cfg.delta = delta;
  cfg.inner_mode = inner_mode_of(inner);
  cfg.max_outer = max_outer;
  cfg.early_exit = early_exit;
  const double bound =
      instance_delta_bound(inst, inst.zero_x(), Eigen::VectorXd::Zero(inst.dim_nbar));
  cfg.delta_f_bound = bound;
  cfg.delta_f0_bound = bound;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "inexact proximal gradient lab: chain-structured hard instance, "
            "dual-APG solver, stationarity audits, span-oracle tracking";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_ValueError);
  py::register_exception<SpanRuleError>(m, "SpanRuleError", PyExc_RuntimeError);

  // Scalar building blocks.
  m.def("psi", &psi, py::arg("u"));
  m.def("psi_prime", &psi_prime, py::arg("u"));
  m.def("phi", &phi, py::arg("v"));
  m.def("phi_prime", &phi_prime, py::arg("v"));
  m.def("varphi", &varphi, py::arg("z"), py::arg("j"));

  // Chain operators.
  py::class_<ChainOperator>(m, "ChainOperator")
      .def(py::init<double, int, int, std::vector<int>>(), py::arg("scale"),
           py::arg("source_blocks"), py::arg("block_dim"), py::arg("rows"))
      .def_static("full_chain", &ChainOperator::full_chain, py::arg("scale"),
                  py::arg("source_blocks"), py::arg("block_dim"))
      .def_property_readonly("rows", &ChainOperator::rows)
      .def_property_readonly("scale", &ChainOperator::scale)
      .def("apply", py::overload_cast<const Eigen::VectorXd&>(&ChainOperator::apply, py::const_),
           py::arg("x"))
      .def("apply_transpose",
           py::overload_cast<const Eigen::VectorXd&>(&ChainOperator::apply_transpose, py::const_),
           py::arg("y"))
      .def("dense", &ChainOperator::dense)
      .def("norms", [](const ChainOperator& op) {
        const OperatorNorms n = op.norms();
        py::dict d;
        d["spectral_norm"] = n.spectral_norm;
        d["min_pos_gram_eig"] = n.min_pos_gram_eig;
        return d;
      });

  m.def("full_chain_gram_eigs", &full_chain_gram_eigs, py::arg("m"), py::arg("lip_f"));
  m.def("stacked_condition_number", &stacked_condition_number, py::arg("m"));

  // Prox kit.
  m.def("prox_weighted_l1", &prox_weighted_l1, py::arg("y"), py::arg("c"));
  m.def("project_linf_ball", &project_linf_ball, py::arg("z"), py::arg("radius"));
  m.def("subdiff_distance_weighted_l1", &subdiff_distance_weighted_l1, py::arg("y"),
        py::arg("z"), py::arg("c"));
  m.def(
      "prox_pairwise_l1",
      [](const Eigen::VectorXd& x, double eta_beta, std::vector<int> pairs, int blocks,
         int block_dim) {
        const PairwiseGeometry geom = make_pairwise_geometry(std::move(pairs), blocks, block_dim);
        return prox_pairwise_l1(BlockVector(blocks, block_dim, x), eta_beta, geom).vec();
      },
      py::arg("x"), py::arg("eta_beta"), py::arg("pairs"), py::arg("blocks"),
      py::arg("block_dim"));

  // Instance.
  py::class_<InstanceParams>(m, "InstanceParams")
      .def(py::init([](int m1, int m2, int block_dim, double eps, double lip_f, double beta) {
             return InstanceParams{m1, m2, block_dim, eps, lip_f, beta};
           }),
           py::arg("m1") = 2, py::arg("m2") = 1, py::arg("block_dim") = 5, py::arg("eps") = 0.1,
           py::arg("lip_f") = 1.0, py::arg("beta") = 0.0)
      .def_readwrite("m1", &InstanceParams::m1)
      .def_readwrite("m2", &InstanceParams::m2)
      .def_readwrite("block_dim", &InstanceParams::block_dim)
      .def_readwrite("eps", &InstanceParams::eps)
      .def_readwrite("lip_f", &InstanceParams::lip_f)
      .def_readwrite("beta", &InstanceParams::beta)
      .def_property_readonly("m", &InstanceParams::m);

  py::class_<Instance>(m, "Instance")
      .def_property_readonly("m", [](const Instance& i) { return i.m; })
      .def_property_readonly("dim_x", [](const Instance& i) { return i.dim_x; })
      .def_property_readonly("dim_n", [](const Instance& i) { return i.dim_n; })
      .def_property_readonly("dim_nbar", [](const Instance& i) { return i.dim_nbar; })
      .def_property_readonly("rows_m", [](const Instance& i) { return i.rows_m; })
      .def_property_readonly("rows_mc", [](const Instance& i) { return i.rows_mc; })
      .def_property_readonly("beta", [](const Instance& i) { return i.params.beta; })
      .def_property_readonly("params", [](const Instance& i) { return i.params; })
      .def_property_readonly("gbar_weight", [](const Instance& i) { return i.gbar_weight; })
      .def_property_readonly("lip_f0", [](const Instance& i) { return i.lip_f0; })
      .def_property_readonly("lip_gbar", [](const Instance& i) { return i.lip_gbar; })
      .def_property_readonly("op_h", [](const Instance& i) { return i.op_h; })
      .def_property_readonly("op_a", [](const Instance& i) { return i.op_a; })
      .def_property_readonly("op_abar", [](const Instance& i) { return i.op_abar; })
      .def("f_value",
           [](const Instance& i, int idx, const Eigen::VectorXd& z) {
             return f_value(idx, z, i.params);
           })
      .def("f_grad",
           [](const Instance& i, int idx, const Eigen::VectorXd& z) {
             return f_grad(idx, z, i.params);
           })
      .def("f0_value",
           [](const Instance& i, const Eigen::VectorXd& x) {
             return f0_value(as_block(i, x), i.params);
           })
      .def("f0_grad",
           [](const Instance& i, const Eigen::VectorXd& x) {
             return f0_grad(as_block(i, x), i.params).vec();
           })
      .def("gbar_value",
           [](const Instance& i, const Eigen::VectorXd& y) { return gbar_value(y, i.params); })
      .def("g_value", [](const Instance& i, const Eigen::VectorXd& x) {
        return g_value(as_block(i, x), i.params);
      });

  m.def(
      "build_instance",
      [](int m1, int m2, int block_dim, double eps, double lip_f, double beta) {
        return build_instance({m1, m2, block_dim, eps, lip_f, beta});
      },
      py::arg("m1") = 2, py::arg("m2") = 1, py::arg("block_dim") = 5, py::arg("eps") = 0.1,
      py::arg("lip_f") = 1.0, py::arg("beta") = 0.0);
  m.def("beta_lower_bound", &beta_lower_bound, py::arg("m1"), py::arg("m2"),
        py::arg("block_dim"), py::arg("eps"), py::arg("lip_f"));
  m.def("default_beta", &default_beta, py::arg("m1"), py::arg("m2"), py::arg("block_dim"),
        py::arg("eps"), py::arg("lip_f"));

  // Solver.
  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("certified", &SolveResult::certified)
      .def_readonly("k_prime", &SolveResult::k_prime)
      .def_readonly("outer_iters", &SolveResult::outer_iters)
      .def_readonly("delta_used", &SolveResult::delta_used)
      .def_readonly("total_inner_steps", &SolveResult::total_inner_steps)
      .def_property_readonly("x", [](const SolveResult& r) { return r.x_best.vec(); })
      .def_property_readonly("y", [](const SolveResult& r) { return r.y_best; })
      .def_property_readonly("z1", [](const SolveResult& r) { return r.z1_best; })
      .def_property_readonly("z2", [](const SolveResult& r) { return r.z2_best; })
      .def_property_readonly("report", [](const SolveResult& r) { return report_dict(r.report); })
      .def_property_readonly("counters",
                             [](const SolveResult& r) { return counter_dict(r.counters); })
      .def_property_readonly("k_eps", [](const SolveResult& r) { return r.constants.k_eps; })
      .def_property_readonly("trace", [](const SolveResult& r) {
        py::list rows;
        for (const TraceRow& t : r.trace) {
          py::dict d;
          d["k"] = t.k;
          d["step_norm"] = t.step_norm;
          d["split_feas"] = t.split_feas;
          d["affine_feas"] = t.affine_feas;
          d["inner_steps"] = t.inner_steps;
          rows.append(d);
        }
        return rows;
      });

  m.def(
      "solve",
      [](const Instance& inst, double eps, double tau, double sigma,
         const std::string& delta_mode, double delta, const std::string& inner, long max_outer,
         bool early_exit) {
        const IpgConfig cfg = config_from_kwargs(inst, eps, tau, sigma, delta_mode, delta, inner,
                                                 max_outer, early_exit);
        return solve(inst.problem, cfg);
      },
      py::arg("instance"), py::arg("eps") = 0.1, py::arg("tau") = 0.0, py::arg("sigma") = 0.0,
      py::arg("delta_mode") = "theory-eps", py::arg("delta") = 0.0,
      py::arg("inner") = "adaptive", py::arg("max_outer") = 3000000,
      py::arg("early_exit") = true);

  m.def(
      "near_stationary_recovery",
      [](const Instance& inst, const SolveResult& res, double delta_refine, double eps,
         double tau, double sigma) {
        const IpgConfig cfg = config_from_kwargs(inst, eps, tau, sigma, "theory-near-eps", 0.0,
                                                 "adaptive", 3000000, true);
        const RecoveryResult rec = near_stationary_recovery(inst.problem, cfg, res, delta_refine);
        py::dict d;
        d["x_bar"] = rec.x_bar.vec();
        d["omega_bound"] = rec.omega_bound;
        d["refine_dist_bound"] = rec.refine_dist_bound;
        return d;
      },
      py::arg("instance"), py::arg("result"), py::arg("delta_refine"), py::arg("eps") = 0.1,
      py::arg("tau") = 0.0, py::arg("sigma") = 0.0);

  // Audits.
  m.def(
      "audit_sp",
      [](const Instance& inst, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
         const Eigen::VectorXd& z1, const Eigen::VectorXd& z2, double eps) {
        return report_dict(audit_sp(inst.problem, as_block(inst, x), y, z1, z2, eps));
      },
      py::arg("instance"), py::arg("x"), py::arg("y"), py::arg("z1"), py::arg("z2"),
      py::arg("eps"));
  m.def(
      "audit_ap",
      [](const Instance& inst, const Eigen::VectorXd& x, double eps) {
        return report_dict(audit_ap(inst, as_block(inst, x), eps));
      },
      py::arg("instance"), py::arg("x"), py::arg("eps"));
  m.def(
      "audit_p_relaxed",
      [](const Instance& inst, const Eigen::VectorXd& x, const Eigen::VectorXd& gamma,
         const Eigen::VectorXd& u, double eps) {
        return report_dict(audit_p_relaxed(inst.problem, as_block(inst, x), gamma, u, eps));
      },
      py::arg("instance"), py::arg("x"), py::arg("gamma"), py::arg("u"), py::arg("eps"));
  m.def(
      "block_average_lower_bound",
      [](const Instance& inst, const Eigen::VectorXd& x) {
        return block_average_lower_bound(inst, as_block(inst, x));
      },
      py::arg("instance"), py::arg("x"));

  // Span tracking.
  m.def(
      "lower_bound_episode",
      [](const Instance& inst, const std::string& model, int t_cap, std::uint64_t seed) {
        if (model != "a2" && model != "a3") throw InvariantError("model must be a2 or a3");
        const SpanModel sm = model == "a2" ? SpanModel::a2 : SpanModel::a3;
        const EpisodeResult ep = lower_bound_episode(inst, sm, t_cap, seed);
        py::dict d;
        d["activation_t"] = ep.activation_t;
        d["predicted_floor_p"] = ep.predicted_floor_p;
        d["predicted_floor_sp"] = ep.predicted_floor_sp;
        d["censored"] = ep.censored;
        d["oracle_total"] = ep.oracle_total;
        d["counters"] = counter_dict(ep.trace.counters);
        return d;
      },
      py::arg("instance"), py::arg("model") = "a2", py::arg("t_cap") = 2000,
      py::arg("seed") = 12345);
  m.def(
      "run_ipg_tracked",
      [](const Instance& inst, int outer_iters, double delta) {
        TrackedIpgConfig cfg;
        cfg.outer_iters = outer_iters;
        cfg.delta = delta;
        const SupportTrace t = run_ipg_tracked_a3(inst, cfg);
        py::dict d;
        d["first_activation"] = t.first_activation;
        d["entries"] = t.entries.size();
        d["counters"] = counter_dict(t.counters);
        return d;
      },
      py::arg("instance"), py::arg("outer_iters") = 3, py::arg("delta") = 1e-4);
  m.def(
      "support_of",
      [](const Eigen::VectorXd& v, int blocks, int block_dim, double tol) {
        return support_of(BlockVector(blocks, block_dim, v), tol);
      },
      py::arg("v"), py::arg("blocks"), py::arg("block_dim"), py::arg("tol") = 0.0);

  // Property suites.
  m.def(
      "run_verify",
      [](std::uint64_t seed) {
        VerifyOptions opts;
        opts.seed = seed;
        py::list out;
        for (const PropertyResult& r : run_verify_suite(opts)) {
          out.append(py::make_tuple(r.name, r.passed, r.detail));
        }
        return out;
      },
      py::arg("seed") = 12345);
}
