#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "exact/attributes.hpp"
#include "exact/driftsim.hpp"
#include "exact/inference.hpp"
#include "exact/retrieval.hpp"
#include "exact/scoring.hpp"
#include "exact/selection.hpp"
#include "exact/serialization.hpp"

namespace py = pybind11;
using namespace exact;

PYBIND11_MODULE(_exact, m) {
  m.doc() = "attribute-based decoding-time personalization core";

  py::register_exception<Error>(m, "ExactError");

  py::class_<AttributeEntry>(m, "AttributeEntry")
      .def_readonly("id", &AttributeEntry::id)
      .def_readonly("name", &AttributeEntry::name)
      .def("__repr__", [](const AttributeEntry& e) {
        return "AttributeEntry(id=" + std::to_string(e.id) + ", name='" + e.name + "')";
      });

  py::class_<AttributeLibrary>(m, "AttributeLibrary")
      .def(py::init<std::vector<std::string>>(), py::arg("names"))
      .def("__len__", &AttributeLibrary::size)
      .def("name_of", &AttributeLibrary::name_of, py::arg("id"))
      .def("id_of",
           [](const AttributeLibrary& lib, const std::string& name) {
             return lib.id_of(name);
           },
           py::arg("name"))
      .def("contains", &AttributeLibrary::contains, py::arg("id"))
      .def("prefix", &AttributeLibrary::prefix, py::arg("k"))
      .def("content_hash", &AttributeLibrary::content_hash)
      .def_property_readonly("attributes", &AttributeLibrary::attributes);

  m.def("load_default_library", &load_default_library);

  py::class_<PreferencePair>(m, "PreferencePair")
      .def(py::init([](std::string pair_id, std::string user_id, std::string prompt,
                       std::string chosen, std::string rejected) {
             return PreferencePair{std::move(pair_id), std::move(user_id),
                                   std::move(prompt), std::move(chosen),
                                   std::move(rejected)};
           }),
           py::arg("pair_id"), py::arg("user_id"), py::arg("prompt"), py::arg("chosen"),
           py::arg("rejected"))
      .def_readwrite("pair_id", &PreferencePair::pair_id)
      .def_readwrite("user_id", &PreferencePair::user_id)
      .def_readwrite("prompt", &PreferencePair::prompt)
      .def_readwrite("chosen", &PreferencePair::chosen)
      .def_readwrite("rejected", &PreferencePair::rejected);

  m.def("validate_pair",
        [](const PreferencePair& pair) { return validate_pair(pair); });

  py::class_<AttributeSubset>(m, "AttributeSubset")
      .def(py::init<>())
      .def(py::init([](std::vector<AttributeId> members, std::vector<double> gains) {
             return AttributeSubset{std::move(members), std::move(gains)};
           }),
           py::arg("members"), py::arg("gains") = std::vector<double>{})
      .def_readwrite("members", &AttributeSubset::members)
      .def_readwrite("gains", &AttributeSubset::gains)
      .def("__len__", &AttributeSubset::size);

  py::class_<IndexEntry>(m, "IndexEntry")
      .def_readonly("prompt", &IndexEntry::prompt)
      .def_readonly("embedding", &IndexEntry::embedding)
      .def_readonly("subset", &IndexEntry::subset)
      .def_readonly("objective", &IndexEntry::objective)
      .def_readonly("created_seq", &IndexEntry::created_seq);

  py::class_<UserMemory>(m, "UserMemory")
      .def_readonly("user_id", &UserMemory::user_id)
      .def_readonly("embedding_dim", &UserMemory::embedding_dim)
      .def_readonly("entries", &UserMemory::entries)
      .def("__len__", &UserMemory::size);

  // scoring
  py::class_<ScoringConfig>(m, "ScoringConfig")
      .def(py::init<>())
      .def_readwrite("beta", &ScoringConfig::beta)
      .def_readwrite("max_response_tokens", &ScoringConfig::max_response_tokens)
      .def_readwrite("retry_limit", &ScoringConfig::retry_limit);

  py::class_<LogProbScore>(m, "LogProbScore")
      .def_readonly("value", &LogProbScore::value)
      .def_readonly("token_count", &LogProbScore::token_count);

  py::class_<Scorer, std::shared_ptr<Scorer>>(m, "Scorer");

  py::class_<SyntheticOracleSpec>(m, "SyntheticOracleSpec")
      .def(py::init<>())
      .def_readwrite("seed", &SyntheticOracleSpec::seed)
      .def_readwrite("topic_count", &SyntheticOracleSpec::topic_count)
      .def_readwrite("planted_subsets", &SyntheticOracleSpec::planted_subsets)
      .def_readwrite("signal_strength", &SyntheticOracleSpec::signal_strength)
      .def_readwrite("noise_scale", &SyntheticOracleSpec::noise_scale);

  m.def("make_disjoint_oracle_spec", &make_disjoint_oracle_spec, py::arg("library"),
        py::arg("seed"), py::arg("topics"), py::arg("planted_size"),
        py::arg("signal_strength") = 1.0, py::arg("noise_scale") = 0.0);

  py::class_<SyntheticOracle, Scorer, std::shared_ptr<SyntheticOracle>>(m, "SyntheticOracle")
      .def(py::init<SyntheticOracleSpec, const AttributeLibrary&>(), py::arg("spec"),
           py::arg("library"))
      .def("score", &SyntheticOracle::score, py::arg("prompt"), py::arg("subset"),
           py::arg("response"))
      .def("topic_of", &SyntheticOracle::topic_of, py::arg("prompt"))
      .def("response_match", &SyntheticOracle::response_match, py::arg("response"));

  m.def(
      "pair_gap",
      [](std::shared_ptr<Scorer> scorer, const PreferencePair& pair,
         const std::vector<AttributeId>& subset) { return pair_gap(*scorer, pair, subset); },
      py::arg("scorer"), py::arg("pair"), py::arg("subset"));

  m.def(
      "implicit_reward",
      [](std::shared_ptr<Scorer> scorer, const ScoringConfig& config,
         const std::string& prompt, const std::vector<AttributeId>& subset,
         const std::string& response) {
        return implicit_reward(*scorer, config, prompt, subset, response);
      },
      py::arg("scorer"), py::arg("config"), py::arg("prompt"), py::arg("subset"),
      py::arg("response"));

  // selection
  py::class_<SelectionConfig>(m, "SelectionConfig")
      .def(py::init<>())
      .def_readwrite("budget", &SelectionConfig::budget)
      .def_readwrite("nonneg_filter", &SelectionConfig::nonneg_filter)
      .def_readwrite("enumeration_cap", &SelectionConfig::enumeration_cap);

  m.def(
      "greedy_select",
      [](const PreferencePair& pair, const AttributeLibrary& library,
         const SelectionConfig& config, std::shared_ptr<Scorer> scorer) {
        return greedy_select(pair, library, config, *scorer);
      },
      py::arg("pair"), py::arg("library"), py::arg("config"), py::arg("scorer"));

  m.def(
      "exhaustive_select",
      [](const PreferencePair& pair, const AttributeLibrary& library, int k,
         std::shared_ptr<Scorer> scorer, std::size_t cap) {
        return exhaustive_select(pair, library, k, *scorer, cap);
      },
      py::arg("pair"), py::arg("library"), py::arg("k"), py::arg("scorer"),
      py::arg("enumeration_cap") = 200000);

  m.def(
      "dataset_objective",
      [](const std::vector<AttributeId>& subset, const std::vector<PreferencePair>& pairs,
         std::shared_ptr<Scorer> scorer) {
        return dataset_objective(subset, pairs, *scorer);
      },
      py::arg("subset"), py::arg("pairs"), py::arg("scorer"));

  py::class_<GammaEstimate>(m, "GammaEstimate")
      .def_readonly("gamma_hat", &GammaEstimate::gamma_hat)
      .def_readonly("raw_min", &GammaEstimate::raw_min)
      .def_readonly("argmin_base", &GammaEstimate::argmin_base)
      .def_readonly("argmin_extension", &GammaEstimate::argmin_extension);

  m.def(
      "estimate_gamma",
      [](const std::vector<PreferencePair>& pairs, const AttributeLibrary& library,
         std::shared_ptr<Scorer> scorer) {
        return estimate_gamma(pairs, library, *scorer);
      },
      py::arg("pairs"), py::arg("library"), py::arg("scorer"));

  py::class_<SetObjectiveReport>(m, "SetObjectiveReport")
      .def_readonly("gamma", &SetObjectiveReport::gamma)
      .def_readonly("greedy_members", &SetObjectiveReport::greedy_members)
      .def_readonly("greedy_gains", &SetObjectiveReport::greedy_gains)
      .def_readonly("optimal_members", &SetObjectiveReport::optimal_members)
      .def_readonly("greedy_value", &SetObjectiveReport::greedy_value)
      .def_readonly("optimal_value", &SetObjectiveReport::optimal_value)
      .def_readonly("ratio", &SetObjectiveReport::ratio)
      .def_readonly("gap", &SetObjectiveReport::gap)
      .def_readonly("bound_factor", &SetObjectiveReport::bound_factor)
      .def_readonly("bound_violated", &SetObjectiveReport::bound_violated)
      .def_readonly("monotone_path", &SetObjectiveReport::monotone_path)
      .def_readonly("monotone_global", &SetObjectiveReport::monotone_global);

  m.def(
      "audit_greedy_bound",
      [](const std::vector<PreferencePair>& pairs, const AttributeLibrary& library, int k,
         std::shared_ptr<Scorer> scorer) {
        return audit_greedy_bound(pairs, library, k, *scorer);
      },
      py::arg("pairs"), py::arg("library"), py::arg("k"), py::arg("scorer"));

  m.def(
      "build_index",
      [](const std::vector<PreferencePair>& pairs, const AttributeLibrary& library,
         const SelectionConfig& config, std::shared_ptr<Scorer> scorer,
         std::shared_ptr<Embedder> embedder) {
        return build_index(pairs, library, config, *scorer, *embedder);
      },
      py::arg("pairs"), py::arg("library"), py::arg("config"), py::arg("scorer"),
      py::arg("embedder"));

  // retrieval
  py::class_<Embedder, std::shared_ptr<Embedder>>(m, "Embedder");

  py::class_<SyntheticEmbedderSpec>(m, "SyntheticEmbedderSpec")
      .def(py::init<>())
      .def(py::init([](std::uint64_t seed, int dimension) {
             return SyntheticEmbedderSpec{seed, dimension};
           }),
           py::arg("seed") = 0, py::arg("dimension") = 64)
      .def_readwrite("seed", &SyntheticEmbedderSpec::seed)
      .def_readwrite("dimension", &SyntheticEmbedderSpec::dimension);

  py::class_<SyntheticEmbedder, Embedder, std::shared_ptr<SyntheticEmbedder>>(
      m, "SyntheticEmbedder")
      .def(py::init<SyntheticEmbedderSpec>(), py::arg("spec"))
      .def("embed", &SyntheticEmbedder::embed, py::arg("prompt"))
      .def_property_readonly("dimension", &SyntheticEmbedder::dimension);

  py::class_<RetrievalResult>(m, "RetrievalResult")
      .def_readonly("entry", &RetrievalResult::entry)
      .def_readonly("similarity", &RetrievalResult::similarity)
      .def_readonly("runner_up_similarity", &RetrievalResult::runner_up_similarity)
      .def_readonly("margin", &RetrievalResult::margin);

  m.def(
      "retrieve",
      [](const UserMemory& memory, const std::string& prompt,
         std::shared_ptr<Embedder> embedder) { return retrieve(memory, prompt, *embedder); },
      py::arg("memory"), py::arg("prompt"), py::arg("embedder"));

  m.def(
      "append",
      [](const UserMemory& memory, const std::string& prompt, const AttributeSubset& subset,
         double objective, std::shared_ptr<Embedder> embedder) {
        return append(memory, prompt, subset, objective, *embedder);
      },
      py::arg("memory"), py::arg("prompt"), py::arg("subset"), py::arg("objective"),
      py::arg("embedder"));

  m.def("save_memory", &save_memory, py::arg("memory"), py::arg("path"),
        py::arg("library_hash"));
  m.def("load_memory", [](const std::string& path) {
    const MemoryFile file = load_memory(path);
    return py::make_tuple(file.memory, file.library_hash);
  });
  m.def("cosine_similarity", &cosine_similarity, py::arg("a"), py::arg("b"));

  // inference
  py::class_<DecodingParams>(m, "DecodingParams")
      .def(py::init<>())
      .def_readwrite("temperature", &DecodingParams::temperature)
      .def_readwrite("top_k", &DecodingParams::top_k)
      .def_readwrite("top_p", &DecodingParams::top_p)
      .def_readwrite("max_new_tokens", &DecodingParams::max_new_tokens);

  m.def(
      "augment_prompt",
      [](const std::string& prompt, const std::vector<AttributeId>& members,
         const AttributeLibrary& library) { return augment_prompt(prompt, members, library); },
      py::arg("prompt"), py::arg("members"), py::arg("library"));

  m.def("parse_attributes_line", &parse_attributes_line, py::arg("augmented"),
        py::arg("library"));

  m.def("global_subset_baseline", &global_subset_baseline, py::arg("memory"));

  py::class_<EvalPairOutcome>(m, "EvalPairOutcome")
      .def_readonly("pair_id", &EvalPairOutcome::pair_id)
      .def_readonly("retrieved_prompt", &EvalPairOutcome::retrieved_prompt)
      .def_readonly("subset", &EvalPairOutcome::subset)
      .def_readonly("similarity", &EvalPairOutcome::similarity)
      .def_readonly("gap_with_attrs", &EvalPairOutcome::gap_with_attrs)
      .def_readonly("gap_base", &EvalPairOutcome::gap_base)
      .def_readonly("gap_global", &EvalPairOutcome::gap_global)
      .def_readonly("correct", &EvalPairOutcome::correct)
      .def_readonly("correct_improvement", &EvalPairOutcome::correct_improvement)
      .def_readonly("correct_global", &EvalPairOutcome::correct_global)
      .def_readonly("correct_base", &EvalPairOutcome::correct_base);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("user_id", &EvalReport::user_id)
      .def_readonly("per_pair", &EvalReport::per_pair)
      .def_readonly("n", &EvalReport::n)
      .def_readonly("accuracy", &EvalReport::accuracy)
      .def_readonly("improvement_accuracy", &EvalReport::improvement_accuracy)
      .def_readonly("global_accuracy", &EvalReport::global_accuracy)
      .def_readonly("base_accuracy", &EvalReport::base_accuracy);

  m.def(
      "evaluate_pairs",
      [](const UserMemory& memory, const std::vector<PreferencePair>& test_pairs,
         std::shared_ptr<Scorer> scorer, std::shared_ptr<Embedder> embedder) {
        return evaluate_pairs(memory, test_pairs, *scorer, *embedder);
      },
      py::arg("memory"), py::arg("test_pairs"), py::arg("scorer"), py::arg("embedder"));

  m.def("split_pairs", &split_pairs, py::arg("pairs"), py::arg("train_ratio"),
        py::arg("seed"));

  // driftsim
  py::class_<TopicModel>(m, "TopicModel")
      .def_readonly("topic_count", &TopicModel::topic_count)
      .def_readonly("dimension", &TopicModel::dimension)
      .def_readonly("centers", &TopicModel::centers)
      .def_readonly("weights", &TopicModel::weights)
      .def_readonly("noise_sigma", &TopicModel::noise_sigma)
      .def_readonly("separation", &TopicModel::separation);

  m.def("make_model", &make_model, py::arg("topic_count"), py::arg("dimension"),
        py::arg("separation"), py::arg("sigma"),
        py::arg("weights") = std::vector<double>{}, py::arg("seed") = 0);

  py::class_<TopicSimStats>(m, "TopicSimStats")
      .def_readonly("topic", &TopicSimStats::topic)
      .def_readonly("sample_count", &TopicSimStats::sample_count)
      .def_readonly("weight", &TopicSimStats::weight)
      .def_readonly("bias_analytic", &TopicSimStats::bias_analytic)
      .def_readonly("pool_mse_analytic", &TopicSimStats::pool_mse_analytic)
      .def_readonly("pool_mse_emp", &TopicSimStats::pool_mse_emp)
      .def_readonly("pool_mse_se", &TopicSimStats::pool_mse_se)
      .def_readonly("bias_emp", &TopicSimStats::bias_emp)
      .def_readonly("bias_se", &TopicSimStats::bias_se)
      .def_readonly("ret_mse_emp", &TopicSimStats::ret_mse_emp)
      .def_readonly("ret_mse_se", &TopicSimStats::ret_mse_se)
      .def_readonly("ret_bound", &TopicSimStats::ret_bound)
      .def_readonly("miscls_rate", &TopicSimStats::miscls_rate);

  py::class_<SimReport>(m, "SimReport")
      .def_readonly("topic_count", &SimReport::topic_count)
      .def_readonly("dimension", &SimReport::dimension)
      .def_readonly("trials", &SimReport::trials)
      .def_readonly("m1", &SimReport::m1)
      .def_readonly("n_min", &SimReport::n_min)
      .def_readonly("delta", &SimReport::delta)
      .def_readonly("pool_variance_analytic", &SimReport::pool_variance_analytic)
      .def_readonly("pool_variance_emp", &SimReport::pool_variance_emp)
      .def_readonly("miscls_rate", &SimReport::miscls_rate)
      .def_readonly("per_topic", &SimReport::per_topic);

  m.def("run_sim", &run_sim, py::arg("model"), py::arg("per_topic_counts"),
        py::arg("trials"), py::arg("delta"), py::arg("seed"), py::arg("jobs") = 1);
}
