#include "ipg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ipg/errors.hpp"

namespace ipg {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_join(const std::vector<std::string>& cells) {
  std::string out;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json doc;
  doc["params"] = {{"m1", inst.params.m1},         {"m2", inst.params.m2},
                   {"block_dim", inst.params.block_dim}, {"eps", inst.params.eps},
                   {"lip_f", inst.params.lip_f},   {"beta", inst.params.beta}};
  doc["derived"] = {{"m", inst.m},
                    {"dim_x", inst.dim_x},
                    {"dim_n", inst.dim_n},
                    {"dim_nbar", inst.dim_nbar},
                    {"rows_m", inst.rows_m},
                    {"rows_mc", inst.rows_mc},
                    {"gbar_weight", inst.gbar_weight},
                    {"lip_f0", inst.lip_f0},
                    {"lip_gbar", inst.lip_gbar}};
  doc["norms"] = {{"norm_a", inst.problem.norm_a},
                  {"norm_abar", inst.problem.norm_abar},
                  {"norm_stacked", inst.problem.norm_stacked},
                  {"min_pos_gram_stacked", inst.problem.min_pos_gram_stacked},
                  {"pinv_norm_a", inst.problem.pinv_norm_a},
                  {"kappa", stacked_condition_number(inst.m)}};
  return doc;
}

Instance instance_from_json(const nlohmann::json& doc) {
  const auto& p = doc.at("params");
  InstanceParams params;
  params.m1 = p.at("m1").get<int>();
  params.m2 = p.at("m2").get<int>();
  params.block_dim = p.at("block_dim").get<int>();
  params.eps = p.at("eps").get<double>();
  params.lip_f = p.at("lip_f").get<double>();
  params.beta = p.at("beta").get<double>();
  return build_instance(params);
}

namespace {
std::string kind_name(ProblemKind k) {
  switch (k) {
    case ProblemKind::P: return "P";
    case ProblemKind::SP: return "SP";
    case ProblemKind::AP: return "AP";
  }
  return "?";
}

ProblemKind kind_from_name(const std::string& s) {
  if (s == "P") return ProblemKind::P;
  if (s == "SP") return ProblemKind::SP;
  if (s == "AP") return ProblemKind::AP;
  throw InvariantError("report_from_json: unknown problem kind " + s);
}
}  // namespace

nlohmann::json report_to_json(const StationarityReport& rep) {
  nlohmann::json doc;
  doc["problem_kind"] = kind_name(rep.kind);
  doc["epsilon"] = rep.epsilon;
  doc["certified"] = rep.certified;
  doc["converged"] = rep.converged;
  doc["residuals"] = rep.residuals;
  doc["multipliers"] = {{"z1", std::vector<double>(rep.z1.begin(), rep.z1.end())},
                        {"z2", std::vector<double>(rep.z2.begin(), rep.z2.end())}};
  return doc;
}

StationarityReport report_from_json(const nlohmann::json& doc) {
  StationarityReport rep;
  rep.kind = kind_from_name(doc.at("problem_kind").get<std::string>());
  rep.epsilon = doc.at("epsilon").get<double>();
  rep.certified = doc.at("certified").get<bool>();
  rep.converged = doc.at("converged").get<bool>();
  rep.residuals = doc.at("residuals").get<std::map<std::string, double>>();
  const auto z1 = doc.at("multipliers").at("z1").get<std::vector<double>>();
  const auto z2 = doc.at("multipliers").at("z2").get<std::vector<double>>();
  rep.z1 = Eigen::Map<const Eigen::VectorXd>(z1.data(), static_cast<Eigen::Index>(z1.size()));
  rep.z2 = Eigen::Map<const Eigen::VectorXd>(z2.data(), static_cast<Eigen::Index>(z2.size()));
  return rep;
}

nlohmann::json solve_result_to_json(const SolveResult& res) {
  nlohmann::json doc;
  doc["certified"] = res.certified;
  doc["k_prime"] = res.k_prime;
  doc["outer_iters"] = res.outer_iters;
  doc["delta_used"] = res.delta_used;
  doc["total_inner_steps"] = res.total_inner_steps;
  doc["report"] = report_to_json(res.report);
  doc["counters"] = {{"grad_f0_calls", res.counters.grad_f0_calls},
                     {"a_matvecs", res.counters.a_matvecs},
                     {"at_matvecs", res.counters.at_matvecs},
                     {"abar_matvecs", res.counters.abar_matvecs},
                     {"abart_matvecs", res.counters.abart_matvecs},
                     {"prox_g_calls", res.counters.prox_g_calls},
                     {"prox_gbar_calls", res.counters.prox_gbar_calls}};
  doc["constants"] = {{"b1", res.constants.b1},
                      {"b2", res.constants.b2},
                      {"b3", res.constants.b3},
                      {"b4", res.constants.b4},
                      {"delta_eps", res.constants.delta_eps},
                      {"delta_bar_eps", res.constants.delta_bar_eps},
                      {"k_eps", res.constants.k_eps},
                      {"k_bar_eps", res.constants.k_bar_eps},
                      {"tau", res.constants.tau},
                      {"sigma", res.constants.sigma}};
  doc["x_best"] = std::vector<double>(res.x_best.vec().begin(), res.x_best.vec().end());
  doc["y_best"] = std::vector<double>(res.y_best.begin(), res.y_best.end());
  return doc;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
  std::string out = csv_join({"k", "step_norm", "split_feas", "affine_feas", "inner_steps",
                              "cum_grad_calls", "cum_matvecs", "cum_prox_calls"});
  for (const TraceRow& r : trace) {
    out += csv_join({std::to_string(r.k), format_double(r.step_norm),
                     format_double(r.split_feas), format_double(r.affine_feas),
                     std::to_string(r.inner_steps), std::to_string(r.cum_grad_calls),
                     std::to_string(r.cum_matvecs), std::to_string(r.cum_prox_calls)});
  }
  return out;
}

nlohmann::json support_trace_to_json(const SupportTrace& trace) {
  nlohmann::json doc;
  doc["model"] = trace.model == SpanModel::a2 ? "a2" : "a3";
  doc["first_activation"] = trace.first_activation;
  doc["counters"] = {{"grad_f0_calls", trace.counters.grad_f0_calls},
                     {"a_matvecs", trace.counters.a_matvecs},
                     {"at_matvecs", trace.counters.at_matvecs},
                     {"abar_matvecs", trace.counters.abar_matvecs},
                     {"abart_matvecs", trace.counters.abart_matvecs},
                     {"prox_g_calls", trace.counters.prox_g_calls},
                     {"prox_gbar_calls", trace.counters.prox_gbar_calls}};
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : trace.entries) {
    entries.push_back({{"t", e.t}, {"x_supports", e.x_supports}, {"y_supports", e.y_supports}});
  }
  doc["entries"] = std::move(entries);
  return doc;
}

std::string activation_to_csv(const std::vector<long>& first_activation) {
  std::string out = csv_join({"coordinate", "first_activation_t"});
  for (size_t j = 0; j < first_activation.size(); ++j) {
    out += csv_join({std::to_string(j + 1), std::to_string(first_activation[j])});
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace ipg
