#include "ipg/commands.hpp"

#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include "ipg/errors.hpp"
#include "ipg/io.hpp"

namespace ipg {

namespace {

Instance load_instance(const std::optional<std::string>& file, const InstanceParams& params) {
  if (file) return instance_from_json(nlohmann::json::parse(read_text_file(*file)));
  return build_instance(params);
}

void fill_theory_bounds(const Instance& inst, IpgConfig& cfg) {
  const BlockVector x0 = inst.zero_x();
  const Eigen::VectorXd y0 = Eigen::VectorXd::Zero(inst.dim_nbar);
  const double bound = instance_delta_bound(inst, x0, y0);
  if (cfg.delta_f_bound <= 0.0) cfg.delta_f_bound = bound;
  if (cfg.delta_f0_bound <= 0.0) cfg.delta_f0_bound = bound;
}

}  // namespace

int cmd_instance(const InstanceCmdOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    Instance inst = build_instance(opts.params);
    nlohmann::json doc = instance_to_json(inst);

    IpgConfig cfg;
    cfg.eps = inst.params.eps;
    fill_theory_bounds(inst, cfg);
    const TheoryConstants tc =
        compute_constants(inst.problem, cfg, cfg.delta_f_bound, cfg.delta_f0_bound);
    doc["previews"] = {{"k_eps", tc.k_eps},
                       {"k_bar_eps", tc.k_bar_eps},
                       {"delta_eps", tc.delta_eps},
                       {"delta_bar_eps", tc.delta_bar_eps},
                       {"delta_f_bound", cfg.delta_f_bound}};
    write_text_file(opts.output, doc.dump(2) + "\n");
    out << "wrote " << opts.output << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "instance: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_solve(const SolveCmdOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    Instance inst = load_instance(opts.instance_file, opts.params);
    IpgConfig cfg = opts.cfg;
    fill_theory_bounds(inst, cfg);
    std::string dual_rows;
    if (opts.dual_trace) {
      dual_rows = csv_join({"step", "dual_value", "grad_map_norm"});
      cfg.dual_trace = [&dual_rows](long step, double value, double gnorm) {
        dual_rows += csv_join({std::to_string(step), format_double(value),
                               format_double(gnorm)});
      };
    }
    const SolveResult res = solve(inst.problem, cfg);
    if (opts.dual_trace) write_text_file(opts.output_prefix + ".dual.csv", dual_rows);
    write_text_file(opts.output_prefix + ".trace.csv", trace_to_csv(res.trace));
    write_text_file(opts.output_prefix + ".report.json",
                    solve_result_to_json(res).dump(2) + "\n");
    out << "outer=" << res.outer_iters << " inner=" << res.total_inner_steps
        << " certified=" << (res.certified ? "true" : "false") << "\n";
    return kExitOk;  // an uncertified solve is still valid output
  } catch (const std::exception& e) {
    err << "solve: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_verify(const VerifyCmdOptions& opts, std::ostream& out, std::ostream& err) {
  std::vector<PropertyResult> results;
  try {
    VerifyOptions vopts;
    vopts.seed = opts.seed;
    vopts.inject_gradient_fault = opts.inject_gradient_fault;
    vopts.params = opts.params;
    results = run_verify_suite(vopts);
  } catch (const std::exception& e) {
    err << "verify: " << e.what() << "\n";
    return kExitConfig;
  }
  bool all_ok = true;
  for (const PropertyResult& r : results) {
    out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name;
    if (!r.passed) out << "  (" << r.detail << ")";
    out << "\n";
    all_ok = all_ok && r.passed;
  }
  return all_ok ? kExitOk : kExitProperty;
}

std::vector<BenchRow> bench_sweep(const Instance& inst, const std::vector<double>& eps_list,
                                  const IpgConfig& base_cfg, int workers) {
  std::vector<BenchRow> rows(eps_list.size());
  const double kappa = stacked_condition_number(inst.m);

  IpgConfig proto = base_cfg;
  fill_theory_bounds(inst, proto);

  auto run_one = [&](size_t idx) {
    BenchRow& row = rows[idx];
    row.eps = eps_list[idx];
    row.kappa = kappa;
    row.predicted_scale =
        kappa * inst.params.lip_f * proto.delta_f_bound / (row.eps * row.eps);
    try {
      IpgConfig cfg = proto;
      cfg.eps = row.eps;
      const SolveResult res = solve(inst.problem, cfg);
      row.outer_iters = res.outer_iters;
      row.apg_steps = res.total_inner_steps;
      row.grad_calls = res.counters.grad_f0_calls;
      row.matvecs = res.counters.matvecs();
      row.prox_calls = res.counters.prox_calls();
      row.certified = res.certified;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  if (workers <= 1) {
    for (size_t i = 0; i < eps_list.size(); ++i) run_one(i);
  } else {
    // Static striping: run-to-worker assignment does not depend on timing.
    const int n = static_cast<int>(eps_list.size());
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&, w]() {
        for (int i = w; i < n; i += workers) run_one(static_cast<size_t>(i));
      });
    }
    for (auto& t : threads) t.join();
  }
  return rows;
}

std::string bench_to_csv(const std::vector<BenchRow>& rows) {
  std::string out = csv_join({"eps", "outer_iters", "apg_steps", "grad_calls", "matvecs",
                              "prox_calls", "kappa", "predicted_scale", "certified", "error"});
  for (const BenchRow& r : rows) {
    out += csv_join({format_double(r.eps), std::to_string(r.outer_iters),
                     std::to_string(r.apg_steps), std::to_string(r.grad_calls),
                     std::to_string(r.matvecs), std::to_string(r.prox_calls),
                     format_double(r.kappa), format_double(r.predicted_scale),
                     r.certified ? "true" : "false", r.error});
  }
  return out;
}

int cmd_bench(const BenchCmdOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.eps_list.empty()) throw InvariantError("bench: eps list is empty");
    Instance inst = load_instance(opts.instance_file, opts.params);
    const std::vector<BenchRow> rows = bench_sweep(inst, opts.eps_list, opts.cfg, opts.workers);
    write_text_file(opts.output, bench_to_csv(rows));
    out << "wrote " << opts.output << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "bench: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_span(const SpanCmdOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    Instance inst = build_instance(opts.params);
    SupportTrace trace;
    if (opts.mode == "a2" || opts.mode == "a3") {
      const SpanModel model = opts.mode == "a2" ? SpanModel::a2 : SpanModel::a3;
      EpisodeResult ep = lower_bound_episode(inst, model, opts.t_cap, opts.seed);
      nlohmann::json doc = support_trace_to_json(ep.trace);
      doc["episode"] = {{"activation_t", ep.activation_t},
                        {"predicted_floor_p", ep.predicted_floor_p},
                        {"predicted_floor_sp", ep.predicted_floor_sp},
                        {"censored", ep.censored}};
      write_text_file(opts.output_prefix + ".span.json", doc.dump(2) + "\n");
      trace = std::move(ep.trace);
    } else if (opts.mode == "ipg") {
      TrackedIpgConfig tcfg;
      trace = run_ipg_tracked_a3(inst, tcfg);
      write_text_file(opts.output_prefix + ".span.json",
                      support_trace_to_json(trace).dump(2) + "\n");
    } else {
      throw InvariantError("span: unknown mode " + opts.mode);
    }
    write_text_file(opts.output_prefix + ".activation.csv",
                    activation_to_csv(trace.first_activation));
    out << "wrote " << opts.output_prefix << ".span.json\n";
    return kExitOk;
  } catch (const SpanRuleError& e) {
    err << "span: " << e.what() << "\n";
    return kExitProperty;
  } catch (const std::exception& e) {
    err << "span: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace ipg
