// exact: attribute-based decoding-time personalization pipeline.
//
// Subcommands: index, eval, infer, simulate, gamma, audit-greedy.
// Machine-readable output is JSON / JSON Lines; human summaries go to
// stderr. Exit codes: 0 success, 1 assertion-style failure (a certified
// bound was violated), 2 input error, 3 backend error.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "exact/attributes.hpp"
#include "exact/driftsim.hpp"
#include "exact/inference.hpp"
#include "exact/remote.hpp"
#include "exact/retrieval.hpp"
#include "exact/scoring.hpp"
#include "exact/selection.hpp"
#include "exact/serialization.hpp"

namespace {

using exact::ordered_json;

struct Options {
  // backends
  std::string backend = "synthetic";
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model = "base";
  // synthetic oracle
  std::uint64_t seed = 0;
  int topics = 2;
  int planted_size = 3;
  double signal = 1.0;
  double noise = 0.0;
  // selection
  int k = 3;
  bool nonneg_filter = true;
  // embedder
  std::string embedder = "synthetic";
  int embed_dim = 64;
  std::uint64_t embed_seed = 0;
  // split
  std::string split = "none";  // none | train | test
  double split_ratio = 0.8;
  std::uint64_t split_seed = 0;
  // decoding
  double temperature = 0.7;
  int top_k = 50;
  double top_p = 0.95;
  int max_new_tokens = 200;
  // misc
  int jobs = 1;
  int restrict_k = 8;  // library prefix size for lattice commands

  ordered_json echo() const {
    ordered_json j;
    j["backend"] = backend;
    j["base_url"] = base_url;
    j["model"] = model;
    j["seed"] = seed;
    j["topics"] = topics;
    j["planted_size"] = planted_size;
    j["signal"] = signal;
    j["noise"] = noise;
    j["k"] = k;
    j["nonneg_filter"] = nonneg_filter;
    j["embedder"] = embedder;
    j["embed_dim"] = embed_dim;
    j["embed_seed"] = embed_seed;
    j["split"] = split;
    j["split_ratio"] = split_ratio;
    j["split_seed"] = split_seed;
    j["temperature"] = temperature;
    j["top_k"] = top_k;
    j["top_p"] = top_p;
    j["max_new_tokens"] = max_new_tokens;
    j["jobs"] = jobs;
    j["restrict"] = restrict_k;
    return j;
  }
};

// Config file values fill in defaults; command-line flags win because CLI11
// only writes bound variables for flags that were actually passed.
void apply_config_file(const std::string& path, Options& opt) {
  std::ifstream in(path);
  if (!in) throw exact::IoError("cannot open config file: " + path);
  ordered_json j;
  in >> j;
  if (j.contains("backend")) opt.backend = j["backend"].get<std::string>();
  if (j.contains("base_url")) opt.base_url = j["base_url"].get<std::string>();
  if (j.contains("model")) opt.model = j["model"].get<std::string>();
  if (j.contains("seed")) opt.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("topics")) opt.topics = j["topics"].get<int>();
  if (j.contains("planted_size")) opt.planted_size = j["planted_size"].get<int>();
  if (j.contains("signal")) opt.signal = j["signal"].get<double>();
  if (j.contains("noise")) opt.noise = j["noise"].get<double>();
  if (j.contains("k")) opt.k = j["k"].get<int>();
  if (j.contains("nonneg_filter")) opt.nonneg_filter = j["nonneg_filter"].get<bool>();
  if (j.contains("embedder")) opt.embedder = j["embedder"].get<std::string>();
  if (j.contains("embed_dim")) opt.embed_dim = j["embed_dim"].get<int>();
  if (j.contains("embed_seed")) opt.embed_seed = j["embed_seed"].get<std::uint64_t>();
  if (j.contains("split")) opt.split = j["split"].get<std::string>();
  if (j.contains("split_ratio")) opt.split_ratio = j["split_ratio"].get<double>();
  if (j.contains("split_seed")) opt.split_seed = j["split_seed"].get<std::uint64_t>();
  if (j.contains("temperature")) opt.temperature = j["temperature"].get<double>();
  if (j.contains("top_k")) opt.top_k = j["top_k"].get<int>();
  if (j.contains("top_p")) opt.top_p = j["top_p"].get<double>();
  if (j.contains("max_new_tokens")) opt.max_new_tokens = j["max_new_tokens"].get<int>();
  if (j.contains("jobs")) opt.jobs = j["jobs"].get<int>();
  if (j.contains("restrict")) opt.restrict_k = j["restrict"].get<int>();
}

exact::RemoteConfig remote_config(const Options& opt) {
  exact::RemoteConfig cfg;
  cfg.base_url = opt.base_url;
  cfg.model = opt.model;
  return exact::remote_config_from_env(std::move(cfg));
}

std::unique_ptr<exact::Scorer> make_scorer(const Options& opt,
                                           const exact::AttributeLibrary& library) {
  if (opt.backend == "synthetic") {
    return std::make_unique<exact::SyntheticOracle>(
        exact::make_disjoint_oracle_spec(library, opt.seed, opt.topics, opt.planted_size,
                                         opt.signal, opt.noise),
        library);
  }
  if (opt.backend == "remote") {
    return std::make_unique<exact::RemoteScorer>(remote_config(opt), library);
  }
  throw exact::Error("unknown backend: " + opt.backend);
}

std::unique_ptr<exact::Embedder> make_embedder(const Options& opt) {
  if (opt.embedder == "synthetic") {
    return std::make_unique<exact::SyntheticEmbedder>(
        exact::SyntheticEmbedderSpec{opt.embed_seed, opt.embed_dim});
  }
  if (opt.embedder == "remote") {
    return std::make_unique<exact::RemoteEmbedder>(remote_config(opt));
  }
  throw exact::Error("unknown embedder: " + opt.embedder);
}

exact::AttributeLibrary load_library_or_default(const std::string& path) {
  if (path.empty()) return exact::load_default_library();
  return exact::load_library(path);
}

std::vector<exact::PreferencePair> load_pairs_with_split(const std::string& path,
                                                         const Options& opt) {
  std::vector<exact::PreferencePair> pairs = exact::load_pairs(path);
  if (opt.split == "none") return pairs;
  auto [train, test] = exact::split_pairs(pairs, opt.split_ratio, opt.split_seed);
  if (opt.split == "train") return train;
  if (opt.split == "test") return test;
  throw exact::Error("unknown split: " + opt.split);
}

std::string sanitize_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
                    c == '-';
    if (!ok) c = '_';
  }
  return out.empty() ? "_" : out;
}

void write_output(const ordered_json& j, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw exact::IoError("cannot open for writing: " + out_path);
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

int cmd_index(const Options& opt, const std::string& pairs_path,
              const std::string& library_path, const std::string& out_dir) {
  const exact::AttributeLibrary library = load_library_or_default(library_path);
  const auto pairs = load_pairs_with_split(pairs_path, opt);
  if (pairs.empty()) throw exact::Error("no pairs in " + pairs_path);

  // Preserve first-seen user order.
  std::vector<std::string> user_order;
  std::map<std::string, std::vector<exact::PreferencePair>> by_user;
  for (const auto& pair : pairs) {
    if (by_user.find(pair.user_id) == by_user.end()) user_order.push_back(pair.user_id);
    by_user[pair.user_id].push_back(pair);
  }

  auto scorer = make_scorer(opt, library);
  auto embedder = make_embedder(opt);
  exact::SelectionConfig config;
  config.budget = opt.k;
  config.nonneg_filter = opt.nonneg_filter;

  for (const auto& user : user_order) {
    exact::CachingScorer cached(*scorer);
    const exact::UserMemory memory =
        exact::build_index(by_user[user], library, config, cached, *embedder);
    const std::string path = out_dir + "/" + sanitize_filename(user) + ".index.jsonl";
    exact::save_memory(memory, path, library.content_hash());

    double mean_objective = 0.0;
    for (const auto& entry : memory.entries) mean_objective += entry.objective;
    if (!memory.empty()) mean_objective /= static_cast<double>(memory.size());
    std::cerr << "user=" << user << " pairs=" << by_user[user].size()
              << " unique_prompts=" << memory.size() << " mean_objective=" << mean_objective
              << "\n";
  }
  return 0;
}

int cmd_eval(const Options& opt, const std::string& index_path,
             const std::string& pairs_path, const std::string& library_path,
             const std::string& mode, const std::string& out_path) {
  const exact::AttributeLibrary library = load_library_or_default(library_path);
  const exact::MemoryFile file = exact::load_memory(index_path);
  if (file.library_hash != library.content_hash()) {
    throw exact::Error("index was built against a different attribute library");
  }
  auto pairs = load_pairs_with_split(pairs_path, opt);
  std::erase_if(pairs, [&](const exact::PreferencePair& p) {
    return p.user_id != file.memory.user_id;
  });

  auto scorer = make_scorer(opt, library);
  auto embedder = make_embedder(opt);
  exact::CachingScorer cached(*scorer);
  const exact::EvalReport report =
      exact::evaluate_pairs(file.memory, pairs, cached, *embedder);

  double headline = report.accuracy;
  if (mode == "global") headline = report.global_accuracy;
  if (mode == "base") headline = report.base_accuracy;

  ordered_json j = exact::eval_report_to_json(report);
  j["mode"] = mode;
  j["config"] = opt.echo();
  write_output(j, out_path);
  std::cerr << "accuracy=" << headline << " n=" << report.n << "\n";
  return 0;
}

int cmd_infer(const Options& opt, const std::string& index_path,
              const std::string& library_path, const std::string& prompt,
              const std::string& out_path) {
  const exact::AttributeLibrary library = load_library_or_default(library_path);
  const exact::MemoryFile file = exact::load_memory(index_path);
  auto embedder = make_embedder(opt);

  std::unique_ptr<exact::GenerationBackend> backend;
  if (opt.backend == "synthetic") {
    backend = std::make_unique<exact::EchoBackend>();
  } else if (opt.backend == "remote") {
    backend = std::make_unique<exact::RemoteGenerator>(remote_config(opt));
  } else {
    throw exact::Error("unknown backend: " + opt.backend);
  }

  exact::DecodingParams params;
  params.temperature = opt.temperature;
  params.top_k = opt.top_k;
  params.top_p = opt.top_p;
  params.max_new_tokens = opt.max_new_tokens;

  const exact::PersonalizeResult result =
      exact::personalize(file.memory, prompt, *backend, params, *embedder, library);

  ordered_json evidence;
  evidence["retrieved_prompt"] = result.retrieval.entry.prompt;
  evidence["attributes"] = result.retrieval.entry.subset.members;
  evidence["similarity"] = result.retrieval.similarity;
  if (result.retrieval.runner_up_similarity.has_value()) {
    evidence["runner_up_similarity"] = *result.retrieval.runner_up_similarity;
    evidence["margin"] = result.retrieval.margin;
  } else {
    evidence["runner_up_similarity"] = nullptr;
    evidence["margin"] = nullptr;  // +inf is not representable in JSON
  }
  evidence["augmented_prompt"] = result.augmented_prompt;

  if (out_path.empty() || out_path == "-") {
    std::cout << result.response << "\n";
  } else {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    out << result.response << "\n";
  }
  std::cerr << evidence.dump() << "\n";
  return 0;
}

int cmd_simulate(const Options& opt, int sim_k, int sim_d, double sim_r, double sim_sigma,
                 const std::vector<int>& counts, int trials, double delta,
                 const std::string& sweep, const std::string& out_path,
                 const std::string& csv_path) {
  const exact::TopicModel model =
      exact::make_model(sim_k, sim_d, sim_r, sim_sigma, {}, opt.seed);

  ordered_json j;
  std::string csv;
  if (!sweep.empty()) {
    std::string range = sweep;
    if (range.rfind("n_min=", 0) == 0) range = range.substr(6);
    const std::size_t dots = range.find("..");
    if (dots == std::string::npos) throw exact::Error("sweep must look like a..b");
    const int lo = std::stoi(range.substr(0, dots));
    const int hi = std::stoi(range.substr(dots + 2));
    const auto rows =
        exact::sweep_min_count(model, lo, hi, trials, delta, opt.seed, opt.jobs);
    const double fitted = exact::fit_complexity_constant(model, rows, delta);

    j["sweep"] = ordered_json::array();
    csv = "n_min,miscls_rate,miscls_se,ret_mse_max\n";
    for (const auto& row : rows) {
      ordered_json r;
      r["n_min"] = row.n_min;
      r["miscls_rate"] = row.miscls_rate;
      r["miscls_se"] = row.miscls_se;
      r["ret_mse_max"] = row.ret_mse_max;
      j["sweep"].push_back(std::move(r));
      csv += std::to_string(row.n_min) + "," + std::to_string(row.miscls_rate) + "," +
             std::to_string(row.miscls_se) + "," + std::to_string(row.ret_mse_max) + "\n";
    }
    j["fitted_constant"] = fitted;
    std::cerr << "sweep n_min=" << lo << ".." << hi << " fitted_constant=" << fitted
              << "\n";
  } else {
    const exact::SimReport report =
        exact::run_sim(model, counts, trials, delta, opt.seed, opt.jobs);
    j = exact::sim_report_to_json(report);
    csv = exact::sim_report_to_csv(report);
    std::cerr << "simulate k=" << sim_k << " d=" << sim_d << " trials=" << trials
              << " miscls=" << report.miscls_rate << "\n";
  }
  j["config"] = opt.echo();
  write_output(j, out_path);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
    if (!out) throw exact::IoError("cannot open for writing: " + csv_path);
    out << csv;
  }
  return 0;
}

int cmd_gamma(const Options& opt, const std::string& pairs_path,
              const std::string& library_path, const std::string& out_path) {
  const exact::AttributeLibrary full = load_library_or_default(library_path);
  const exact::AttributeLibrary library = full.prefix(std::min(opt.restrict_k, full.size()));
  const auto pairs = load_pairs_with_split(pairs_path, opt);
  auto scorer = make_scorer(opt, library);
  exact::CachingScorer cached(*scorer);
  const exact::GammaEstimate estimate = exact::estimate_gamma(pairs, library, cached);

  ordered_json j = exact::gamma_estimate_to_json(estimate);
  j["config"] = opt.echo();
  write_output(j, out_path);
  std::cerr << "gamma_hat=" << estimate.gamma_hat << "\n";
  return 0;
}

int cmd_audit_greedy(const Options& opt, const std::string& pairs_path,
                     const std::string& library_path, const std::string& out_path) {
  const exact::AttributeLibrary full = load_library_or_default(library_path);
  const exact::AttributeLibrary library = full.prefix(std::min(opt.restrict_k, full.size()));
  const auto pairs = load_pairs_with_split(pairs_path, opt);
  auto scorer = make_scorer(opt, library);
  exact::CachingScorer cached(*scorer);
  const exact::SetObjectiveReport report =
      exact::audit_greedy_bound(pairs, library, opt.k, cached);

  ordered_json j = exact::set_objective_report_to_json(report);
  j["config"] = opt.echo();
  write_output(j, out_path);
  std::cerr << "ratio=" << report.ratio << " gamma_hat=" << report.gamma.gamma_hat
            << " bound_violated=" << (report.bound_violated ? "true" : "false") << "\n";
  return report.bound_violated ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attribute-based decoding-time personalization pipeline"};
  app.require_subcommand(1);

  Options opt;

  // Pre-scan for --config so file values become defaults before parsing.
  try {
    for (int i = 1; i + 1 < argc; ++i) {
      if (std::string(argv[i]) == "--config") apply_config_file(argv[i + 1], opt);
    }
  } catch (const std::exception& e) {
    ordered_json err;
    err["type"] = "input";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 2;
  }

  std::string config_path;
  std::string pairs_path;
  std::string library_path;
  std::string index_path;
  std::string out_dir = ".";
  std::string out_path;
  std::string csv_path;
  std::string mode = "retrieval";
  std::string prompt;
  std::string sweep;
  int sim_k = 2;
  int sim_d = 8;
  double sim_r = 2.0;
  double sim_sigma = 0.1;
  std::vector<int> counts = {50};
  int trials = 1000;
  double delta = 0.05;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file; flags override it");
    cmd->add_option("--backend", opt.backend, "synthetic | remote");
    cmd->add_option("--base-url", opt.base_url, "remote endpoint prefix");
    cmd->add_option("--model", opt.model, "remote model name");
    cmd->add_option("--seed", opt.seed, "synthetic backend seed");
    cmd->add_option("--topics", opt.topics, "synthetic oracle topic count");
    cmd->add_option("--planted-size", opt.planted_size, "planted subset size per topic");
    cmd->add_option("--signal", opt.signal, "synthetic oracle signal strength");
    cmd->add_option("--noise", opt.noise, "synthetic oracle noise scale");
    cmd->add_option("--embedder", opt.embedder, "synthetic | remote");
    cmd->add_option("--embed-dim", opt.embed_dim, "synthetic embedder dimension");
    cmd->add_option("--embed-seed", opt.embed_seed, "synthetic embedder seed");
    cmd->add_option("--split", opt.split, "none | train | test");
    cmd->add_option("--split-ratio", opt.split_ratio, "train fraction");
    cmd->add_option("--split-seed", opt.split_seed, "split shuffle seed");
    cmd->add_option("--jobs", opt.jobs, "worker thread cap");
  };

  CLI::App* index = app.add_subcommand("index", "build per-user retrieval indexes");
  add_common(index);
  index->add_option("--pairs", pairs_path, "preference pairs JSONL")->required();
  index->add_option("--library", library_path, "attribute library JSON");
  index->add_option("--out-dir", out_dir, "directory for index files");
  index->add_option("--k", opt.k, "attribute budget per prompt");
  index->add_flag("--nonneg-filter,!--no-nonneg-filter", opt.nonneg_filter,
                  "stop when the best marginal gain is non-positive");

  CLI::App* eval = app.add_subcommand("eval", "pairwise preference-modeling accuracy");
  add_common(eval);
  eval->add_option("--index", index_path, "index file")->required();
  eval->add_option("--pairs", pairs_path, "test pairs JSONL")->required();
  eval->add_option("--library", library_path, "attribute library JSON");
  eval->add_option("--mode", mode, "retrieval | global | base");
  eval->add_option("--out", out_path, "report path ('-' for stdout)");

  CLI::App* infer = app.add_subcommand("infer", "personalized generation for one prompt");
  add_common(infer);
  infer->add_option("--index", index_path, "index file")->required();
  infer->add_option("--library", library_path, "attribute library JSON");
  infer->add_option("--prompt", prompt, "user prompt")->required();
  infer->add_option("--out", out_path, "response path ('-' for stdout)");
  infer->add_option("--temperature", opt.temperature, "sampling temperature");
  infer->add_option("--top-k", opt.top_k, "top-k sampling cutoff");
  infer->add_option("--top-p", opt.top_p, "nucleus sampling mass");
  infer->add_option("--max-new-tokens", opt.max_new_tokens, "generation length cap");

  CLI::App* simulate = app.add_subcommand("simulate", "pooling vs retrieval estimation lab");
  add_common(simulate);
  simulate->add_option("--k", sim_k, "topic count");
  simulate->add_option("--d", sim_d, "embedding dimension");
  simulate->add_option("--r", sim_r, "minimum center separation");
  simulate->add_option("--sigma", sim_sigma, "noise standard deviation");
  simulate->add_option("--n", counts, "per-topic sample count(s)");
  simulate->add_option("--trials", trials, "Monte Carlo trials");
  simulate->add_option("--delta", delta, "failure probability budget");
  simulate->add_option("--sweep", sweep, "sweep per-topic counts, e.g. n_min=1..12");
  simulate->add_option("--out", out_path, "report path ('-' for stdout)");
  simulate->add_option("--csv", csv_path, "per-cell CSV path");

  CLI::App* gamma = app.add_subcommand("gamma", "submodularity-ratio estimate");
  add_common(gamma);
  gamma->add_option("--pairs", pairs_path, "pairs JSONL")->required();
  gamma->add_option("--library", library_path, "attribute library JSON");
  gamma->add_option("--restrict", opt.restrict_k, "library prefix size (<= 12)");
  gamma->add_option("--out", out_path, "report path ('-' for stdout)");

  CLI::App* audit = app.add_subcommand("audit-greedy", "greedy approximation certificate");
  add_common(audit);
  audit->add_option("--pairs", pairs_path, "pairs JSONL")->required();
  audit->add_option("--library", library_path, "attribute library JSON");
  audit->add_option("--restrict", opt.restrict_k, "library prefix size (<= 12)");
  audit->add_option("--k", opt.k, "budget for the audit");
  audit->add_option("--out", out_path, "report path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (index->parsed()) return cmd_index(opt, pairs_path, library_path, out_dir);
    if (eval->parsed()) return cmd_eval(opt, index_path, pairs_path, library_path, mode, out_path);
    if (infer->parsed()) return cmd_infer(opt, index_path, library_path, prompt, out_path);
    if (simulate->parsed()) {
      return cmd_simulate(opt, sim_k, sim_d, sim_r, sim_sigma, counts, trials, delta,
                          sweep, out_path, csv_path);
    }
    if (gamma->parsed()) return cmd_gamma(opt, pairs_path, library_path, out_path);
    if (audit->parsed()) return cmd_audit_greedy(opt, pairs_path, library_path, out_path);
  } catch (const exact::BackendUnavailableError& e) {
    ordered_json err;
    err["type"] = "backend_unavailable";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 3;
  } catch (const exact::BackendProtocolError& e) {
    ordered_json err;
    err["type"] = "backend_protocol";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 3;
  } catch (const std::exception& e) {
    ordered_json err;
    err["type"] = "input";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 2;
  }
  return 0;
}
