#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exact/attributes.hpp"
#include "exact/driftsim.hpp"
#include "exact/inference.hpp"
#include "exact/selection.hpp"

namespace exact {

using ordered_json = nlohmann::ordered_json;

// Library file: {"version":1,"attributes":[{"id":0,"name":"Base"},...]}.
ordered_json library_to_json(const AttributeLibrary& library);
AttributeLibrary library_from_json(const ordered_json& j);
void save_library(const AttributeLibrary& library, const std::string& path);
AttributeLibrary load_library(const std::string& path);

// Pairs file: JSON Lines, one object per line with keys
// pair_id, user_id, prompt, chosen, rejected.
std::vector<PreferencePair> load_pairs(const std::string& path);
void save_pairs(const std::vector<PreferencePair>& pairs, const std::string& path);

ordered_json eval_report_to_json(const EvalReport& report);
ordered_json set_objective_report_to_json(const SetObjectiveReport& report);
ordered_json gamma_estimate_to_json(const GammaEstimate& estimate);
ordered_json sim_report_to_json(const SimReport& report);
std::string sim_report_to_csv(const SimReport& report);

}  // namespace exact
