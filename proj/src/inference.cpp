#include "exact/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "exact/detail/rand.hpp"

namespace exact {

void validate_decoding_params(const DecodingParams& params) {
  if (params.temperature < 0.0) throw Error("temperature must be non-negative");
  if (!(params.top_p > 0.0 && params.top_p <= 1.0)) throw Error("top_p must be in (0, 1]");
  if (params.top_k < 0) throw Error("top_k must be non-negative");
  if (params.max_new_tokens <= 0) throw Error("max_new_tokens must be positive");
}

std::string augment_prompt(const std::string& prompt,
                           const std::vector<AttributeId>& members,
                           const AttributeLibrary& library) {
  if (members.empty()) return prompt;
  std::string out = prompt;
  out += "\nAttributes: <";
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i > 0) out += ", ";
    out += library.name_of(members[i]);
  }
  out += ">";
  return out;
}

std::string augment_prompt(const std::string& prompt, const AttributeSubset& subset,
                           const AttributeLibrary& library) {
  return augment_prompt(prompt, subset.members, library);
}

std::optional<std::vector<AttributeId>> parse_attributes_line(
    const std::string& augmented, const AttributeLibrary& library) {
  static const std::string kPrefix = "\nAttributes: <";
  const std::size_t pos = augmented.rfind(kPrefix);
  if (pos == std::string::npos || augmented.empty() || augmented.back() != '>') {
    return std::nullopt;
  }
  const std::size_t begin = pos + kPrefix.size();
  const std::string body = augmented.substr(begin, augmented.size() - begin - 1);

  std::vector<AttributeId> ids;
  std::size_t start = 0;
  while (start <= body.size()) {
    std::size_t comma = body.find(", ", start);
    const std::string name =
        comma == std::string::npos ? body.substr(start) : body.substr(start, comma - start);
    const auto id = library.id_of(name);
    if (!id) return std::nullopt;
    ids.push_back(*id);
    if (comma == std::string::npos) break;
    start = comma + 2;
  }
  return ids;
}

std::string EchoBackend::generate(const std::string& prompt, const DecodingParams& params) {
  validate_decoding_params(params);
  return prompt;
}

PersonalizeResult personalize(const UserMemory& memory, const std::string& prompt,
                              GenerationBackend& backend, const DecodingParams& params,
                              Embedder& embedder, const AttributeLibrary& library) {
  validate_decoding_params(params);
  PersonalizeResult out;
  out.retrieval = retrieve(memory, prompt, embedder);
  out.augmented_prompt = augment_prompt(prompt, out.retrieval.entry.subset, library);
  out.response = backend.generate(out.augmented_prompt, params);
  return out;
}

AttributeSubset global_subset_baseline(const UserMemory& memory) {
  if (memory.empty()) throw EmptyMemoryError("no entries to pick a global subset from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < memory.entries.size(); ++i) {
    // Strict: ties keep the earliest created_seq.
    if (memory.entries[i].objective > memory.entries[best].objective) best = i;
  }
  return memory.entries[best].subset;
}

EvalReport evaluate_pairs(const UserMemory& memory,
                          const std::vector<PreferencePair>& test_pairs, Scorer& scorer,
                          Embedder& embedder) {
  if (test_pairs.empty()) throw EmptyTestSetError("no test pairs to evaluate");
  const AttributeSubset global = global_subset_baseline(memory);

  EvalReport report;
  report.user_id = memory.user_id;
  report.per_pair.reserve(test_pairs.size());

  int correct = 0;
  int correct_improvement = 0;
  int correct_global = 0;
  int correct_base = 0;
  for (const auto& pair : test_pairs) {
    validate_pair(pair);
    const RetrievalResult hit = retrieve(memory, pair.prompt, embedder);

    EvalPairOutcome row;
    row.pair_id = pair.pair_id;
    row.retrieved_prompt = hit.entry.prompt;
    row.subset = hit.entry.subset.members;
    row.similarity = hit.similarity;
    row.gap_with_attrs = pair_gap(scorer, pair, hit.entry.subset);
    row.gap_base = pair_gap(scorer, pair, std::vector<AttributeId>{});
    row.gap_global = pair_gap(scorer, pair, global);
    row.correct = row.gap_with_attrs > 0.0;
    row.correct_improvement = row.gap_with_attrs - row.gap_base > 0.0;
    row.correct_global = row.gap_global > 0.0;
    row.correct_base = row.gap_base > 0.0;

    correct += row.correct ? 1 : 0;
    correct_improvement += row.correct_improvement ? 1 : 0;
    correct_global += row.correct_global ? 1 : 0;
    correct_base += row.correct_base ? 1 : 0;
    report.per_pair.push_back(std::move(row));
  }

  report.n = static_cast<int>(test_pairs.size());
  const double n = static_cast<double>(report.n);
  report.accuracy = correct / n;
  report.improvement_accuracy = correct_improvement / n;
  report.global_accuracy = correct_global / n;
  report.base_accuracy = correct_base / n;
  return report;
}

std::pair<std::vector<PreferencePair>, std::vector<PreferencePair>> split_pairs(
    const std::vector<PreferencePair>& pairs, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw Error("train ratio must be in (0, 1)");
  }
  std::unordered_set<std::string> ids;
  for (const auto& pair : pairs) {
    if (!ids.insert(pair.pair_id).second) {
      throw Error("duplicate pair_id: " + pair.pair_id);
    }
  }

  // Group by user, preserving first-seen user order.
  std::vector<std::string> user_order;
  std::map<std::string, std::vector<PreferencePair>> by_user;
  for (const auto& pair : pairs) {
    if (by_user.find(pair.user_id) == by_user.end()) user_order.push_back(pair.user_id);
    by_user[pair.user_id].push_back(pair);
  }

  std::vector<PreferencePair> train;
  std::vector<PreferencePair> test;
  for (const auto& user : user_order) {
    auto& bucket = by_user[user];
    detail::Rng rng(detail::fnv1a64(user, detail::fnv1a64_u64(seed)));
    rng.shuffle(bucket);
    const std::size_t n = bucket.size();
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(train_ratio * static_cast<double>(n)));
    if (n >= 2) {
      n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    } else {
      n_train = n;
    }
    for (std::size_t i = 0; i < n; ++i) {
      (i < n_train ? train : test).push_back(std::move(bucket[i]));
    }
  }
  return {std::move(train), std::move(test)};
}

}  // namespace exact
