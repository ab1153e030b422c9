#include "exact/serialization.hpp"

#include <fstream>
#include <sstream>

namespace exact {

ordered_json library_to_json(const AttributeLibrary& library) {
  ordered_json j;
  j["version"] = 1;
  j["attributes"] = ordered_json::array();
  for (const auto& entry : library.attributes()) {
    ordered_json e;
    e["id"] = entry.id;
    e["name"] = entry.name;
    j["attributes"].push_back(std::move(e));
  }
  return j;
}

AttributeLibrary library_from_json(const ordered_json& j) {
  if (j.value("version", 0) != 1) throw Error("unsupported library version");
  if (!j.contains("attributes") || !j["attributes"].is_array()) {
    throw Error("library file lacks an attributes array");
  }
  std::vector<std::string> names;
  int expected_id = 0;
  for (const auto& e : j["attributes"]) {
    if (e.at("id").get<int>() != expected_id) {
      throw Error("attribute ids must be dense 0..K-1");
    }
    names.push_back(e.at("name").get<std::string>());
    ++expected_id;
  }
  return AttributeLibrary(std::move(names));
}

void save_library(const AttributeLibrary& library, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << library_to_json(library).dump() << "\n";
  if (!out) throw IoError("write failed: " + path);
}

AttributeLibrary load_library(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("bad library file " + path + ": " + e.what());
  }
  return library_from_json(j);
}

std::vector<PreferencePair> load_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<PreferencePair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const ordered_json j = ordered_json::parse(line);
      PreferencePair pair;
      pair.pair_id = j.at("pair_id").get<std::string>();
      pair.user_id = j.at("user_id").get<std::string>();
      pair.prompt = j.at("prompt").get<std::string>();
      pair.chosen = j.at("chosen").get<std::string>();
      pair.rejected = j.at("rejected").get<std::string>();
      pairs.push_back(validate_pair(pair));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error("bad pair at " + path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return pairs;
}

void save_pairs(const std::vector<PreferencePair>& pairs, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& pair : pairs) {
    ordered_json j;
    j["pair_id"] = pair.pair_id;
    j["user_id"] = pair.user_id;
    j["prompt"] = pair.prompt;
    j["chosen"] = pair.chosen;
    j["rejected"] = pair.rejected;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

ordered_json eval_report_to_json(const EvalReport& report) {
  ordered_json j;
  j["user_id"] = report.user_id;
  j["n"] = report.n;
  j["accuracy"] = report.accuracy;
  j["improvement_accuracy"] = report.improvement_accuracy;
  j["global_accuracy"] = report.global_accuracy;
  j["base_accuracy"] = report.base_accuracy;
  j["scoring_convention"] = "response_tokens_only";
  if (report.external_judgments.has_value()) {
    j["external_judgments"] = *report.external_judgments;
  } else {
    j["external_judgments"] = nullptr;
  }
  j["per_pair"] = ordered_json::array();
  for (const auto& row : report.per_pair) {
    ordered_json r;
    r["pair_id"] = row.pair_id;
    r["retrieved_entry_prompt"] = row.retrieved_prompt;
    r["attributes"] = row.subset;
    r["similarity"] = row.similarity;
    r["gap_with_attrs"] = row.gap_with_attrs;
    r["gap_base"] = row.gap_base;
    r["gap_global"] = row.gap_global;
    r["correct"] = row.correct;
    r["correct_improvement"] = row.correct_improvement;
    r["correct_global"] = row.correct_global;
    r["correct_base"] = row.correct_base;
    j["per_pair"].push_back(std::move(r));
  }
  return j;
}

ordered_json gamma_estimate_to_json(const GammaEstimate& estimate) {
  ordered_json j;
  j["gamma_hat"] = estimate.gamma_hat;
  j["raw_min"] = estimate.raw_min;
  j["argmin_S"] = estimate.argmin_base;
  j["argmin_L"] = estimate.argmin_extension;
  j["ratios_scanned"] = estimate.ratios_scanned;
  return j;
}

ordered_json set_objective_report_to_json(const SetObjectiveReport& report) {
  ordered_json j;
  j["greedy_members"] = report.greedy_members;
  j["greedy_gains"] = report.greedy_gains;
  j["greedy_value"] = report.greedy_value;
  j["optimal_members"] = report.optimal_members;
  j["optimal_value"] = report.optimal_value;
  j["ratio"] = report.ratio;
  j["gap"] = report.gap;
  j["gamma"] = gamma_estimate_to_json(report.gamma);
  j["bound_factor"] = report.bound_factor;
  j["bound_violated"] = report.bound_violated;
  j["monotone_path"] = report.monotone_path;
  j["monotone_global"] = report.monotone_global;
  j["subset_values"] = ordered_json::array();
  for (const auto& [ids, value] : report.subset_values) {
    ordered_json row;
    row["subset"] = ids;
    row["F"] = value;
    j["subset_values"].push_back(std::move(row));
  }
  return j;
}

ordered_json sim_report_to_json(const SimReport& report) {
  ordered_json j;
  j["topic_count"] = report.topic_count;
  j["dimension"] = report.dimension;
  j["separation"] = report.separation;
  j["sigma"] = report.sigma;
  j["delta"] = report.delta;
  j["trials"] = report.trials;
  j["m1"] = report.m1;
  j["n_min"] = report.n_min;
  j["pool_variance_analytic"] = report.pool_variance_analytic;
  j["pool_variance_emp"] = report.pool_variance_emp;
  j["pool_variance_se"] = report.pool_variance_se;
  j["miscls_rate"] = report.miscls_rate;
  j["per_topic"] = ordered_json::array();
  for (const auto& t : report.per_topic) {
    ordered_json row;
    row["topic"] = t.topic;
    row["n"] = t.sample_count;
    row["weight"] = t.weight;
    row["bias_analytic"] = t.bias_analytic;
    row["pool_mse_analytic"] = t.pool_mse_analytic;
    row["pool_mse_emp"] = t.pool_mse_emp;
    row["pool_mse_se"] = t.pool_mse_se;
    row["bias_emp"] = t.bias_emp;
    row["bias_se"] = t.bias_se;
    row["ret_mse_emp"] = t.ret_mse_emp;
    row["ret_mse_se"] = t.ret_mse_se;
    row["ret_bound"] = t.ret_bound;
    row["miscls_rate"] = t.miscls_rate;
    row["miscls_se"] = t.miscls_se;
    j["per_topic"].push_back(std::move(row));
  }
  return j;
}

std::string sim_report_to_csv(const SimReport& report) {
  std::ostringstream os;
  os << "topic_count,dimension,separation,sigma,delta,trials,m1,topic,n,weight,"
        "bias_analytic,pool_mse_analytic,pool_mse_emp,pool_mse_se,bias_emp,bias_se,"
        "ret_mse_emp,ret_mse_se,ret_bound,miscls_rate,miscls_se\n";
  for (const auto& t : report.per_topic) {
    os << report.topic_count << ',' << report.dimension << ',' << report.separation << ','
       << report.sigma << ',' << report.delta << ',' << report.trials << ',' << report.m1
       << ',' << t.topic << ',' << t.sample_count << ',' << t.weight << ','
       << t.bias_analytic << ',' << t.pool_mse_analytic << ',' << t.pool_mse_emp << ','
       << t.pool_mse_se << ',' << t.bias_emp << ',' << t.bias_se << ',' << t.ret_mse_emp
       << ',' << t.ret_mse_se << ',' << t.ret_bound << ',' << t.miscls_rate << ','
       << t.miscls_se << "\n";
  }
  return os.str();
}

}  // namespace exact
