#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ipg/instance.hpp"
#include "ipg/ipg.hpp"
#include "ipg/span_tracker.hpp"
#include "ipg/verify.hpp"

namespace ipg {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitProperty = 3;

struct InstanceCmdOptions {
  InstanceParams params;
  std::string output;  // instance JSON path
};

int cmd_instance(const InstanceCmdOptions& opts, std::ostream& out, std::ostream& err);

struct SolveCmdOptions {
  std::optional<std::string> instance_file;
  InstanceParams params;  // used when no file is given
  IpgConfig cfg;
  std::string output_prefix;  // writes <prefix>.trace.csv and <prefix>.report.json
  bool dual_trace = false;    // also write <prefix>.dual.csv (step, value, ||G||)
};

int cmd_solve(const SolveCmdOptions& opts, std::ostream& out, std::ostream& err);

struct VerifyCmdOptions {
  std::uint64_t seed = 12345;
  bool inject_gradient_fault = false;
  InstanceParams params{2, 1, 5, 0.1, 1.0, 0.0};
};

int cmd_verify(const VerifyCmdOptions& opts, std::ostream& out, std::ostream& err);

struct BenchRow {
  double eps = 0.0;
  long outer_iters = 0;
  long apg_steps = 0;
  long grad_calls = 0, matvecs = 0, prox_calls = 0;
  double kappa = 0.0;
  double predicted_scale = 0.0;
  bool certified = false;
  std::string error;  // per-row failure; the sweep continues
};

// Solves one fixed instance at each target accuracy in eps_list (the inner
// tolerance and outer schedule are re-derived per target from the theory
// constants). Runs are independent and deterministic; `workers` > 1 runs them
// on a thread pool in sweep order.
std::vector<BenchRow> bench_sweep(const Instance& inst, const std::vector<double>& eps_list,
                                  const IpgConfig& base_cfg, int workers);

std::string bench_to_csv(const std::vector<BenchRow>& rows);

struct BenchCmdOptions {
  std::optional<std::string> instance_file;
  InstanceParams params;
  std::vector<double> eps_list;
  IpgConfig cfg;
  std::string output;  // sweep CSV path
  int workers = 1;
};

int cmd_bench(const BenchCmdOptions& opts, std::ostream& out, std::ostream& err);

struct SpanCmdOptions {
  InstanceParams params{2, 2, 7, 0.1, 1.0, 0.0};
  std::string mode = "a2";  // a2 | a3 | ipg
  int t_cap = 2000;
  std::uint64_t seed = 12345;
  std::string output_prefix;  // writes <prefix>.span.json and <prefix>.activation.csv
};

int cmd_span(const SpanCmdOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace ipg
