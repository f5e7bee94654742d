// Command-line front end: instance generation, solving, property
// verification, accuracy sweeps, and span-oracle episodes.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>

#include <json.hpp>

#include "ipg/commands.hpp"
#include "ipg/io.hpp"

namespace {

int env_workers() {
  const char* v = std::getenv("IPGTOOL_WORKERS");
  if (!v) return 1;
  const int n = std::atoi(v);
  return n >= 1 ? n : 1;
}

// Applies values from a JSON config file to options the command line did not
// set explicitly (flags win).
template <typename T>
void maybe_set(const CLI::App* app, const std::string& flag, const nlohmann::json& cfg,
               const std::string& key, T& target) {
  if (app->count(flag) == 0 && cfg.contains(key)) target = cfg.at(key).get<T>();
}

void add_param_flags(CLI::App* app, ipg::InstanceParams& p) {
  app->add_option("--m1", p.m1, "even block-count factor, >= 2");
  app->add_option("--m2", p.m2, "second block-count factor, >= 1");
  app->add_option("--bd", p.block_dim, "per-block dimension, odd and >= 5");
  app->add_option("--eps", p.eps, "instance accuracy parameter");
  app->add_option("--lf", p.lip_f, "gradient Lipschitz constant L_f");
  app->add_option("--beta", p.beta, "l1 weight; <= 0 selects the default");
}

void apply_param_config(const CLI::App* app, const nlohmann::json& cfg, ipg::InstanceParams& p) {
  maybe_set(app, "--m1", cfg, "m1", p.m1);
  maybe_set(app, "--m2", cfg, "m2", p.m2);
  maybe_set(app, "--bd", cfg, "block_dim", p.block_dim);
  maybe_set(app, "--eps", cfg, "eps", p.eps);
  maybe_set(app, "--lf", cfg, "lip_f", p.lip_f);
  maybe_set(app, "--beta", cfg, "beta", p.beta);
}

void add_solver_flags(CLI::App* app, ipg::IpgConfig& cfg, std::string& inner,
                      std::string& delta_mode) {
  app->add_option("--tau", cfg.tau, "proximal weight; <= 0 selects 2 L_f");
  app->add_option("--sigma", cfg.sigma, "y-update weight; <= 0 selects L_f");
  app->add_option("--eps-target", cfg.eps, "target stationarity accuracy");
  app->add_option("--delta", cfg.delta, "explicit inner tolerance");
  app->add_option("--delta-mode", delta_mode, "explicit | theory-eps | theory-near-eps");
  app->add_option("--inner", inner, "adaptive | scheduled-sc | scheduled-qg | reference");
  app->add_option("--rho", cfg.rho, "quadratic-growth constant for scheduled-qg");
  app->add_option("--max-outer", cfg.max_outer, "outer iteration cap");
  app->add_flag("--no-early-exit", cfg.force_full_schedule, "run the full schedule");
  app->add_flag("--warm-start-inner", cfg.warm_start_inner, "reuse the previous z as z_ini");
  app->add_option("--delta-f-bound", cfg.delta_f_bound, "objective-gap bound for K_eps");
  app->add_option("--delta-f0-bound", cfg.delta_f0_bound, "objective-gap bound for K_bar_eps");
}

bool resolve_modes(const std::string& inner, const std::string& delta_mode, ipg::IpgConfig& cfg,
                   std::ostream& err) {
  if (inner == "adaptive") {
    cfg.inner_mode = ipg::InnerMode::adaptive;
  } else if (inner == "scheduled-sc") {
    cfg.inner_mode = ipg::InnerMode::scheduled_strongly_convex;
  } else if (inner == "scheduled-qg") {
    cfg.inner_mode = ipg::InnerMode::scheduled_quadratic_growth;
  } else if (inner == "reference") {
    cfg.inner_mode = ipg::InnerMode::reference_oracle;
  } else {
    err << "unknown inner mode: " << inner << "\n";
    return false;
  }
  if (delta_mode == "explicit") {
    cfg.delta_mode = ipg::DeltaMode::explicit_value;
  } else if (delta_mode == "theory-eps") {
    cfg.delta_mode = ipg::DeltaMode::theory_eps;
  } else if (delta_mode == "theory-near-eps") {
    cfg.delta_mode = ipg::DeltaMode::theory_near_eps;
  } else {
    err << "unknown delta mode: " << delta_mode << "\n";
    return false;
  }
  return true;
}

nlohmann::json load_config(const std::string& path, std::ostream& err, bool& ok) {
  ok = true;
  if (path.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(ipg::read_text_file(path));
  } catch (const std::exception& e) {
    err << "config: " << e.what() << "\n";
    ok = false;
    return nlohmann::json::object();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inexact proximal gradient lab: hard-instance construction, "
               "dual-APG solver, stationarity audits, span-oracle tracking"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; explicit flags win");

  // instance
  auto* inst_cmd = app.add_subcommand("instance", "write an instance JSON document");
  ipg::InstanceCmdOptions inst_opts;
  add_param_flags(inst_cmd, inst_opts.params);
  inst_cmd->add_option("-o,--output", inst_opts.output, "output path")->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "run the solver, emit trace CSV + report JSON");
  ipg::SolveCmdOptions solve_opts;
  std::string solve_instance_file, solve_inner = "adaptive", solve_delta_mode = "theory-eps";
  solve_cmd->add_option("--instance", solve_instance_file, "instance JSON file");
  add_param_flags(solve_cmd, solve_opts.params);
  add_solver_flags(solve_cmd, solve_opts.cfg, solve_inner, solve_delta_mode);
  solve_cmd->add_flag("--dual-trace", solve_opts.dual_trace,
                      "also write per-inner-step dual values to <prefix>.dual.csv");
  solve_cmd->add_option("-o,--output", solve_opts.output_prefix, "output prefix")->required();

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run the property suites");
  ipg::VerifyCmdOptions verify_opts;
  verify_cmd->add_option("--seed", verify_opts.seed, "sampling seed");
  verify_cmd->add_flag("--inject-fault", verify_opts.inject_gradient_fault,
                       "flip one gradient branch (harness sanity check; suite must fail)");
  add_param_flags(verify_cmd, verify_opts.params);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "accuracy sweep on one instance");
  ipg::BenchCmdOptions bench_opts;
  std::string bench_instance_file, bench_inner = "adaptive", bench_delta_mode = "theory-eps";
  bench_cmd->add_option("--instance", bench_instance_file, "instance JSON file");
  add_param_flags(bench_cmd, bench_opts.params);
  add_solver_flags(bench_cmd, bench_opts.cfg, bench_inner, bench_delta_mode);
  bench_cmd->add_option("--eps-list", bench_opts.eps_list, "target accuracies")
      ->required()
      ->delimiter(',');
  bench_cmd->add_option("-o,--output", bench_opts.output, "sweep CSV path")->required();

  // span
  auto* span_cmd = app.add_subcommand("span", "span-oracle episodes and the solver replay");
  ipg::SpanCmdOptions span_opts;
  span_cmd->add_option("--model", span_opts.mode, "a2 | a3 | ipg");
  add_param_flags(span_cmd, span_opts.params);
  span_cmd->add_option("--t-cap", span_opts.t_cap, "iteration cap");
  span_cmd->add_option("--seed", span_opts.seed, "schedule seed");
  span_cmd->add_option("-o,--output", span_opts.output_prefix, "output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ipg::kExitConfig;
  }

  bool cfg_ok = true;
  const nlohmann::json cfg = load_config(config_path, std::cerr, cfg_ok);
  if (!cfg_ok) return ipg::kExitConfig;

  if (inst_cmd->parsed()) {
    apply_param_config(inst_cmd, cfg, inst_opts.params);
    return ipg::cmd_instance(inst_opts, std::cout, std::cerr);
  }
  if (solve_cmd->parsed()) {
    apply_param_config(solve_cmd, cfg, solve_opts.params);
    maybe_set(solve_cmd, "--inner", cfg, "inner", solve_inner);
    maybe_set(solve_cmd, "--delta-mode", cfg, "delta_mode", solve_delta_mode);
    maybe_set(solve_cmd, "--eps-target", cfg, "eps_target", solve_opts.cfg.eps);
    if (!resolve_modes(solve_inner, solve_delta_mode, solve_opts.cfg, std::cerr)) {
      return ipg::kExitConfig;
    }
    if (!solve_instance_file.empty()) solve_opts.instance_file = solve_instance_file;
    return ipg::cmd_solve(solve_opts, std::cout, std::cerr);
  }
  if (verify_cmd->parsed()) {
    apply_param_config(verify_cmd, cfg, verify_opts.params);
    return ipg::cmd_verify(verify_opts, std::cout, std::cerr);
  }
  if (bench_cmd->parsed()) {
    apply_param_config(bench_cmd, cfg, bench_opts.params);
    if (!resolve_modes(bench_inner, bench_delta_mode, bench_opts.cfg, std::cerr)) {
      return ipg::kExitConfig;
    }
    if (!bench_instance_file.empty()) bench_opts.instance_file = bench_instance_file;
    bench_opts.workers = env_workers();
    return ipg::cmd_bench(bench_opts, std::cout, std::cerr);
  }
  if (span_cmd->parsed()) {
    apply_param_config(span_cmd, cfg, span_opts.params);
    return ipg::cmd_span(span_opts, std::cout, std::cerr);
  }
  return ipg::kExitConfig;
}
