#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ipg/commands.hpp"
#include "ipg/io.hpp"

using namespace ipg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ipgtool_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_binary(const std::string& args) {
  const std::string cmd = std::string(IPGTOOL_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("instance command writes a parseable document") {
  TempDir dir;
  InstanceCmdOptions opts;
  opts.params = {2, 1, 5, 0.1, 1.0, 0.0};
  opts.output = dir.file("inst.json");
  std::ostringstream out, err;
  CHECK(cmd_instance(opts, out, err) == kExitOk);

  const nlohmann::json doc = nlohmann::json::parse(read_text_file(opts.output));
  CHECK(doc["derived"]["m"] == 6);
  CHECK(doc["derived"]["dim_x"] == 30);
  CHECK(doc["norms"]["kappa"].get<double>() == doctest::Approx(3.7320508).epsilon(1e-7));

  // Round trip through the documented schema parser (previews are derived
  // solver-side metadata, not part of the core schema).
  Instance inst = instance_from_json(doc);
  nlohmann::json core = doc;
  core.erase("previews");
  CHECK(instance_to_json(inst).dump() == core.dump(-1));

  SUBCASE("re-running produces byte-identical output") {
    InstanceCmdOptions again = opts;
    again.output = dir.file("inst2.json");
    CHECK(cmd_instance(again, out, err) == kExitOk);
    CHECK(read_text_file(opts.output) == read_text_file(again.output));
  }
}

TEST_CASE("invalid parameters exit with the config code") {
  TempDir dir;
  InstanceCmdOptions opts;
  opts.params = {2, 1, 4, 0.1, 1.0, 0.0};  // even block_dim
  opts.output = dir.file("bad.json");
  std::ostringstream out, err;
  CHECK(cmd_instance(opts, out, err) == kExitConfig);
  CHECK(err.str().find("odd") != std::string::npos);
}

TEST_CASE("solve command emits trace CSV and report JSON") {
  TempDir dir;
  SolveCmdOptions opts;
  opts.params = {2, 1, 5, 0.1, 1.0, 0.0};
  opts.cfg.eps = 0.1;
  opts.cfg.delta_mode = DeltaMode::theory_eps;
  opts.cfg.inner_mode = InnerMode::adaptive;
  opts.cfg.max_outer = 100000;
  opts.output_prefix = dir.file("run");
  std::ostringstream out, err;
  REQUIRE(cmd_solve(opts, out, err) == kExitOk);

  const std::string csv = read_text_file(dir.file("run.trace.csv"));
  CHECK(csv.rfind("k,step_norm,split_feas,affine_feas,inner_steps,cum_grad_calls,"
                  "cum_matvecs,cum_prox_calls\n", 0) == 0);
  CHECK(csv.find("\r") == std::string::npos);  // LF endings only

  const nlohmann::json rep = nlohmann::json::parse(read_text_file(dir.file("run.report.json")));
  CHECK(rep["certified"] == true);
  CHECK(rep["report"]["problem_kind"] == "SP");
  const StationarityReport parsed = report_from_json(rep["report"]);
  CHECK(parsed.certified);

  SUBCASE("identical config gives identical bytes") {
    SolveCmdOptions again = opts;
    again.output_prefix = dir.file("run2");
    REQUIRE(cmd_solve(again, out, err) == kExitOk);
    CHECK(read_text_file(dir.file("run.trace.csv")) == read_text_file(dir.file("run2.trace.csv")));
    CHECK(read_text_file(dir.file("run.report.json")) ==
          read_text_file(dir.file("run2.report.json")));
  }

  SUBCASE("max_outer = 0 still succeeds with an empty trace") {
    SolveCmdOptions zero = opts;
    zero.cfg.max_outer = 0;
    zero.output_prefix = dir.file("zero");
    REQUIRE(cmd_solve(zero, out, err) == kExitOk);  // uncertified is valid output
    const nlohmann::json zrep = nlohmann::json::parse(read_text_file(dir.file("zero.report.json")));
    CHECK(zrep["certified"] == false);
    const std::string ztr = read_text_file(dir.file("zero.trace.csv"));
    CHECK(std::count(ztr.begin(), ztr.end(), '\n') == 1);  // header only
  }
}

TEST_CASE("solve consumes an instance file") {
  TempDir dir;
  InstanceCmdOptions iopts;
  iopts.params = {2, 1, 5, 0.1, 1.0, 0.0};
  iopts.output = dir.file("inst.json");
  std::ostringstream out, err;
  REQUIRE(cmd_instance(iopts, out, err) == kExitOk);

  SolveCmdOptions sopts;
  sopts.instance_file = iopts.output;
  sopts.cfg.eps = 0.1;
  sopts.cfg.max_outer = 100000;
  sopts.output_prefix = dir.file("filerun");
  CHECK(cmd_solve(sopts, out, err) == kExitOk);
}

TEST_CASE("bench sweep CSV") {
  TempDir dir;
  BenchCmdOptions opts;
  opts.params = {2, 1, 5, 0.2, 1.0, 0.0};
  opts.eps_list = {0.2, 0.1};
  opts.cfg.max_outer = 200000;
  opts.output = dir.file("sweep.csv");
  opts.workers = 2;
  std::ostringstream out, err;
  REQUIRE(cmd_bench(opts, out, err) == kExitOk);
  const std::string csv = read_text_file(opts.output);
  CHECK(csv.rfind("eps,outer_iters,apg_steps,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  SUBCASE("single-eps sweep matches the first row of the pair") {
    BenchCmdOptions single = opts;
    single.eps_list = {0.2};
    single.output = dir.file("single.csv");
    single.workers = 1;
    REQUIRE(cmd_bench(single, out, err) == kExitOk);
    const std::string a = read_text_file(opts.output);
    const std::string b = read_text_file(single.output);
    const std::string first_two = a.substr(0, a.find('\n', a.find('\n') + 1) + 1);
    CHECK(b == first_two);
  }
}

TEST_CASE("span command writes trace and activation files") {
  TempDir dir;
  SpanCmdOptions opts;
  opts.params = {2, 1, 5, 0.1, 1.0, 0.0};
  opts.mode = "a2";
  opts.t_cap = 100;
  opts.output_prefix = dir.file("ep");
  std::ostringstream out, err;
  REQUIRE(cmd_span(opts, out, err) == kExitOk);
  const nlohmann::json doc = nlohmann::json::parse(read_text_file(dir.file("ep.span.json")));
  CHECK(doc["model"] == "a2");
  CHECK(doc["episode"]["censored"] == false);
  const std::string act = read_text_file(dir.file("ep.activation.csv"));
  CHECK(act.rfind("coordinate,first_activation_t\n", 0) == 0);

  SpanCmdOptions ipg_opts = opts;
  ipg_opts.mode = "ipg";
  ipg_opts.output_prefix = dir.file("replay");
  CHECK(cmd_span(ipg_opts, out, err) == kExitOk);

  SpanCmdOptions bad = opts;
  bad.mode = "nope";
  CHECK(cmd_span(bad, out, err) == kExitConfig);
}

TEST_CASE("binary-level exit codes and determinism") {
  TempDir dir;
  SUBCASE("config error on even block dimension") {
    CHECK(run_binary("instance --m1 2 --m2 1 --bd 4 --eps 0.1 -o " + dir.file("x.json")) ==
          kExitConfig);
  }
  SUBCASE("unknown flags are config errors") {
    CHECK(run_binary("instance --nonsense 1 -o " + dir.file("x.json")) == kExitConfig);
  }
  SUBCASE("instance writing succeeds and is byte-stable") {
    REQUIRE(run_binary("instance --m1 2 --m2 1 --bd 5 --eps 0.1 -o " + dir.file("a.json")) ==
            kExitOk);
    REQUIRE(run_binary("instance --m1 2 --m2 1 --bd 5 --eps 0.1 -o " + dir.file("b.json")) ==
            kExitOk);
    CHECK(read_text_file(dir.file("a.json")) == read_text_file(dir.file("b.json")));
  }
  SUBCASE("config file supplies defaults, flags win") {
    std::ofstream cfg(dir.file("cfg.json"));
    cfg << R"({"m1": 2, "m2": 1, "block_dim": 5, "eps": 0.1})";
    cfg.close();
    REQUIRE(run_binary("--config " + dir.file("cfg.json") + " instance -o " + dir.file("c.json")) ==
            kExitOk);
    const nlohmann::json doc = nlohmann::json::parse(read_text_file(dir.file("c.json")));
    CHECK(doc["params"]["eps"].get<double>() == 0.1);
    // Flag overrides the config value.
    REQUIRE(run_binary("--config " + dir.file("cfg.json") + " instance --eps 0.2 -o " +
                       dir.file("d.json")) == kExitOk);
    const nlohmann::json doc2 = nlohmann::json::parse(read_text_file(dir.file("d.json")));
    CHECK(doc2["params"]["eps"].get<double>() == 0.2);
  }
}

TEST_CASE("verify command gates on property failures") {
  std::ostringstream out, err;
  VerifyCmdOptions opts;
  opts.inject_gradient_fault = true;  // the harness must notice a broken gradient
  CHECK(cmd_verify(opts, out, err) == kExitProperty);
  CHECK(out.str().find("[FAIL] gradient_fd") != std::string::npos);
}

TEST_CASE("bench records per-row failures and continues") {
  TempDir dir;
  BenchCmdOptions opts;
  opts.params = {2, 1, 5, 0.2, 1.0, 0.0};
  opts.eps_list = {-1.0, 0.2};  // first row is invalid, second must still run
  opts.cfg.max_outer = 100000;
  opts.output = dir.file("mixed.csv");
  std::ostringstream out, err;
  REQUIRE(cmd_bench(opts, out, err) == kExitOk);
  const std::string csv = read_text_file(opts.output);
  const size_t h = csv.find('\n');
  const size_t r1_end = csv.find('\n', h + 1);
  const std::string row1 = csv.substr(h + 1, r1_end - h - 1);
  const std::string row2 = csv.substr(r1_end + 1);
  const bool row1_failed = row1.find("false,") != std::string::npos && !row1.ends_with(",\n");
  CHECK(row1_failed);                                    // invalid eps: error recorded
  CHECK(row2.find("true,") != std::string::npos);        // valid eps: still solved
}

TEST_CASE("worker count does not change the sweep bytes") {
  Instance inst = build_instance({2, 1, 5, 0.2, 1.0, 0.0});
  IpgConfig cfg;
  cfg.max_outer = 1000000;
  const auto one = bench_sweep(inst, {0.2, 0.1}, cfg, 1);
  const auto many = bench_sweep(inst, {0.2, 0.1}, cfg, 4);
  CHECK(bench_to_csv(one) == bench_to_csv(many));
}

TEST_CASE("solver mode flags resolve at the binary level") {
  TempDir dir;
  const std::string base = "solve --m1 2 --m2 1 --bd 5 --eps 0.1 --eps-target 0.1 ";
  CHECK(run_binary(base + "--inner scheduled-sc -o " + dir.file("sc")) == kExitOk);
  CHECK(run_binary(base + "--inner scheduled-qg -o " + dir.file("qg")) == kExitOk);
  CHECK(run_binary(base + "--delta-mode explicit --delta 1e-6 -o " + dir.file("ex")) == kExitOk);
  CHECK(run_binary(base + "--inner bogus -o " + dir.file("bad")) == kExitConfig);
  CHECK(run_binary(base + "--delta-mode bogus -o " + dir.file("bad2")) == kExitConfig);
}
