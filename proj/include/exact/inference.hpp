#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exact/attributes.hpp"
#include "exact/retrieval.hpp"
#include "exact/scoring.hpp"

namespace exact {

struct DecodingParams {
  double temperature = 0.7;
  int top_k = 50;
  double top_p = 0.95;
  int max_new_tokens = 200;
};

void validate_decoding_params(const DecodingParams& params);

// Appends the attribute block to a prompt:
//
//   <prompt>\nAttributes: <Name1, Name2, ...>
//
// with names in selection order. An empty subset returns the prompt
// unchanged (base policy).
std::string augment_prompt(const std::string& prompt, const AttributeSubset& subset,
                           const AttributeLibrary& library);
std::string augment_prompt(const std::string& prompt,
                           const std::vector<AttributeId>& members,
                           const AttributeLibrary& library);

// Recovers the attribute ids from an augmented prompt's trailing attribute
// line. Returns nullopt when no attribute line is present.
std::optional<std::vector<AttributeId>> parse_attributes_line(
    const std::string& augmented, const AttributeLibrary& library);

// Text generation contract for the online stage.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string generate(const std::string& prompt, const DecodingParams& params) = 0;
};

// Test/debug backend: echoes its prompt back.
class EchoBackend final : public GenerationBackend {
 public:
  std::string generate(const std::string& prompt, const DecodingParams& params) override;
};

struct PersonalizeResult {
  std::string response;
  RetrievalResult retrieval;
  std::string augmented_prompt;
};

// Online inference: retrieve the nearest stored prompt, inject its attribute
// subset, generate.
PersonalizeResult personalize(const UserMemory& memory, const std::string& prompt,
                              GenerationBackend& backend, const DecodingParams& params,
                              Embedder& embedder, const AttributeLibrary& library);

// The single highest-objective attribute subset in the memory (ties toward
// the lowest created_seq); the non-retrieval baseline injects this subset
// for every test prompt.
AttributeSubset global_subset_baseline(const UserMemory& memory);

struct EvalPairOutcome {
  std::string pair_id;
  std::string retrieved_prompt;
  std::vector<AttributeId> subset;  // retrieved attribute ids
  double similarity = 0.0;
  double gap_with_attrs = 0.0;
  double gap_base = 0.0;
  double gap_global = 0.0;
  bool correct = false;              // gap_with_attrs > 0
  bool correct_improvement = false;  // gap_with_attrs - gap_base > 0
  bool correct_global = false;       // gap_global > 0
  bool correct_base = false;         // gap_base > 0
};

struct EvalReport {
  std::string user_id;
  std::vector<EvalPairOutcome> per_pair;
  int n = 0;
  double accuracy = 0.0;              // retrieval variant
  double improvement_accuracy = 0.0;  // gap improvement over base > 0
  double global_accuracy = 0.0;       // best single training subset everywhere
  double base_accuracy = 0.0;         // empty subset
  // Reserved for judgments produced by an external evaluator; never filled
  // by this library.
  std::optional<std::string> external_judgments;
};

// Pairwise preference-modeling evaluation. A pair counts as correct only on
// a strictly positive gap; ties are failures. Throws EmptyTestSetError for
// an empty test list.
EvalReport evaluate_pairs(const UserMemory& memory,
                          const std::vector<PreferencePair>& test_pairs, Scorer& scorer,
                          Embedder& embedder);

// Seeded per-user shuffle and split. Throws on duplicate pair_ids, which
// keeps train/test provably disjoint.
std::pair<std::vector<PreferencePair>, std::vector<PreferencePair>> split_pairs(
    const std::vector<PreferencePair>& pairs, double train_ratio, std::uint64_t seed);

}  // namespace exact
