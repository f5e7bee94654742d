#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ipg/instance.hpp"
#include "ipg/ipg.hpp"
#include "ipg/span_tracker.hpp"
#include "ipg/stationarity.hpp"

namespace ipg {

// All floating-point output uses 17 significant digits, '.' decimal separator
// and LF line endings, so that identical runs produce identical bytes.
std::string format_double(double v);

std::string csv_join(const std::vector<std::string>& cells);

// ---- instance document -----------------------------------------------------
// {
//   "params": {"m1", "m2", "block_dim", "eps", "lip_f", "beta"},
//   "derived": {"m", "dim_x", "dim_n", "dim_nbar", "rows_m", "rows_mc",
//               "gbar_weight", "lip_f0", "lip_gbar"},
//   "norms": {"norm_a", "norm_abar", "norm_stacked", "min_pos_gram_stacked",
//             "pinv_norm_a", "kappa"},
//   "previews": {"k_eps", "k_bar_eps", "delta_f_bound"}   (optional)
// }
nlohmann::json instance_to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& doc);

nlohmann::json report_to_json(const StationarityReport& rep);
StationarityReport report_from_json(const nlohmann::json& doc);

nlohmann::json solve_result_to_json(const SolveResult& res);

std::string trace_to_csv(const std::vector<TraceRow>& trace);

nlohmann::json support_trace_to_json(const SupportTrace& trace);
std::string activation_to_csv(const std::vector<long>& first_activation);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace ipg
