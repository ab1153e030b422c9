#include "exact/scoring.hpp"

#include <algorithm>
#include <sstream>

#include "exact/detail/rand.hpp"

namespace exact {

namespace {

int count_tokens(const std::string& text) {
  int n = 0;
  bool in_token = false;
  for (char c : text) {
    const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!ws && !in_token) ++n;
    in_token = !ws;
  }
  return n;
}

std::string canonical_subset_key(const std::vector<AttributeId>& subset) {
  std::vector<AttributeId> sorted = subset;
  std::sort(sorted.begin(), sorted.end());
  std::string key;
  for (AttributeId id : sorted) {
    key += std::to_string(id);
    key += ',';
  }
  return key;
}

}  // namespace

void validate_scoring_config(const ScoringConfig& config) {
  if (!(config.beta > 0.0)) throw Error("beta must be positive");
  if (config.max_response_tokens <= 0) throw Error("max_response_tokens must be positive");
  if (config.retry_limit < 0) throw Error("retry_limit must be non-negative");
}

double pair_gap(Scorer& scorer, const PreferencePair& pair,
                const std::vector<AttributeId>& subset) {
  const LogProbScore w = scorer.score(pair.prompt, subset, pair.chosen);
  const LogProbScore l = scorer.score(pair.prompt, subset, pair.rejected);
  return w.value - l.value;
}

double pair_gap(Scorer& scorer, const PreferencePair& pair, const AttributeSubset& subset) {
  return pair_gap(scorer, pair, subset.members);
}

double implicit_reward(Scorer& scorer, const ScoringConfig& config,
                       const std::string& prompt, const std::vector<AttributeId>& subset,
                       const std::string& response) {
  validate_scoring_config(config);
  if (subset.empty()) return 0.0;
  const LogProbScore with = scorer.score(prompt, subset, response);
  const LogProbScore base = scorer.score(prompt, {}, response);
  return config.beta * (with.value - base.value);
}

// ---------------------------------------------------------------------------
// SyntheticOracle
// ---------------------------------------------------------------------------

void validate_oracle_spec(const SyntheticOracleSpec& spec, const AttributeLibrary& library) {
  if (spec.topic_count < 1) throw Error("topic_count must be at least 1");
  if (static_cast<int>(spec.planted_subsets.size()) != spec.topic_count) {
    throw Error("planted_subsets must have one entry per topic");
  }
  if (!(spec.signal_strength > 0.0)) throw Error("signal_strength must be positive");
  if (spec.noise_scale < 0.0) throw Error("noise_scale must be non-negative");
  for (const auto& planted : spec.planted_subsets) {
    for (AttributeId id : planted) {
      if (!library.contains(id)) {
        throw Error("planted attribute id outside library: " + std::to_string(id));
      }
    }
  }
  if (!spec.planted_weights.empty() &&
      static_cast<int>(spec.planted_weights.size()) != spec.topic_count) {
    throw Error("planted_weights must be empty or one list per topic");
  }
  for (std::size_t t = 0; t < spec.planted_weights.size(); ++t) {
    if (spec.planted_weights[t].size() != spec.planted_subsets[t].size()) {
      throw Error("planted_weights[" + std::to_string(t) +
                  "] length must match planted subset size");
    }
  }
  if (!spec.interactions.empty() &&
      static_cast<int>(spec.interactions.size()) != spec.topic_count) {
    throw Error("interactions must be empty or one list per topic");
  }
  // Distinct topics must plant distinct subsets, otherwise there is no
  // contextual shift to detect.
  for (int i = 0; i < spec.topic_count; ++i) {
    for (int j = i + 1; j < spec.topic_count; ++j) {
      auto a = spec.planted_subsets[static_cast<std::size_t>(i)];
      auto b = spec.planted_subsets[static_cast<std::size_t>(j)];
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (a == b) {
        throw Error("planted subsets of topics " + std::to_string(i) + " and " +
                    std::to_string(j) + " are identical");
      }
    }
  }
}

SyntheticOracleSpec make_disjoint_oracle_spec(const AttributeLibrary& library,
                                              std::uint64_t seed, int topics,
                                              int planted_size, double signal_strength,
                                              double noise_scale) {
  if (topics < 1) throw Error("topics must be at least 1");
  if (planted_size < 1) throw Error("planted_size must be at least 1");
  if (topics * planted_size > library.size()) {
    throw Error("library too small for " + std::to_string(topics) + " disjoint subsets of " +
                std::to_string(planted_size));
  }
  std::vector<AttributeId> ids(static_cast<std::size_t>(library.size()));
  for (int i = 0; i < library.size(); ++i) ids[static_cast<std::size_t>(i)] = i;
  detail::Rng rng(detail::fnv1a64("planted", detail::fnv1a64_u64(seed)));
  rng.shuffle(ids);

  SyntheticOracleSpec spec;
  spec.seed = seed;
  spec.topic_count = topics;
  spec.signal_strength = signal_strength;
  spec.noise_scale = noise_scale;
  spec.planted_subsets.resize(static_cast<std::size_t>(topics));
  std::size_t next = 0;
  for (int t = 0; t < topics; ++t) {
    for (int i = 0; i < planted_size; ++i) {
      spec.planted_subsets[static_cast<std::size_t>(t)].push_back(ids[next++]);
    }
    std::sort(spec.planted_subsets[static_cast<std::size_t>(t)].begin(),
              spec.planted_subsets[static_cast<std::size_t>(t)].end());
  }
  return spec;
}

SyntheticOracle::SyntheticOracle(SyntheticOracleSpec spec, const AttributeLibrary& library)
    : spec_(std::move(spec)) {
  validate_oracle_spec(spec_, library);
}

int SyntheticOracle::topic_of(const std::string& prompt) const {
  std::uint64_t h = detail::fnv1a64_u64(spec_.seed);
  h = detail::fnv1a64("topic|", h);
  h = detail::fnv1a64(prompt, h);
  return static_cast<int>(detail::mix64(h) % static_cast<std::uint64_t>(spec_.topic_count));
}

int SyntheticOracle::response_match(const std::string& response) const {
  std::uint64_t h = detail::fnv1a64_u64(spec_.seed);
  h = detail::fnv1a64("match|", h);
  h = detail::fnv1a64(response, h);
  return (detail::mix64(h) & 1u) ? 1 : -1;
}

double SyntheticOracle::subset_signal(const std::vector<AttributeId>& subset,
                                      int topic) const {
  const auto& planted = spec_.planted_subsets[static_cast<std::size_t>(topic)];
  double s = 0.0;
  for (std::size_t i = 0; i < planted.size(); ++i) {
    if (std::find(subset.begin(), subset.end(), planted[i]) == subset.end()) continue;
    s += spec_.planted_weights.empty()
             ? spec_.signal_strength
             : spec_.planted_weights[static_cast<std::size_t>(topic)][i];
  }
  if (!spec_.interactions.empty()) {
    for (const auto& term : spec_.interactions[static_cast<std::size_t>(topic)]) {
      const bool has_a = std::find(subset.begin(), subset.end(), term.a) != subset.end();
      const bool has_b = std::find(subset.begin(), subset.end(), term.b) != subset.end();
      if (has_a && has_b) s += term.weight;
    }
  }
  return s;
}

LogProbScore SyntheticOracle::score(const std::string& prompt,
                                    const std::vector<AttributeId>& subset,
                                    const std::string& response) {
  if (prompt.empty()) throw EmptyFieldError("prompt is empty");
  if (response.empty()) throw EmptyFieldError("response is empty");

  const int topic = topic_of(prompt);
  const double signal = subset_signal(subset, topic);
  const int match = response_match(response);

  double noise = 0.0;
  if (spec_.noise_scale > 0.0) {
    std::uint64_t h = detail::fnv1a64_u64(spec_.seed);
    h = detail::fnv1a64("noise|", h);
    h = detail::fnv1a64(prompt, h);
    h = detail::fnv1a64("|", h);
    h = detail::fnv1a64(response, h);
    h = detail::fnv1a64("|", h);
    h = detail::fnv1a64(canonical_subset_key(subset), h);
    // Uniform in [-1/2, 1/2] so any two-call difference stays within
    // +/- noise_scale.
    noise = spec_.noise_scale * (detail::to_unit_double(detail::mix64(h)) - 0.5);
  }

  LogProbScore out;
  out.value = signal * static_cast<double>(match) + noise;
  out.token_count = count_tokens(response);
  return out;
}

// ---------------------------------------------------------------------------
// Wrappers
// ---------------------------------------------------------------------------

LogProbScore CountingScorer::score(const std::string& prompt,
                                   const std::vector<AttributeId>& subset,
                                   const std::string& response) {
  if (subset.empty()) {
    ++base_calls_;
  } else {
    ++augmented_calls_;
  }
  return inner_.score(prompt, subset, response);
}

void CountingScorer::reset() {
  base_calls_ = 0;
  augmented_calls_ = 0;
}

LogProbScore CachingScorer::score(const std::string& prompt,
                                  const std::vector<AttributeId>& subset,
                                  const std::string& response) {
  std::string key;
  key.reserve(prompt.size() + response.size() + 16);
  key += canonical_subset_key(subset);
  key += '\x1f';
  key += prompt;
  key += '\x1f';
  key += response;
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const LogProbScore s = inner_.score(prompt, subset, response);
  cache_.emplace(std::move(key), s);
  return s;
}

}  // namespace exact
