#pragma once

// Shared synthetic fixtures for unit and acceptance tests.

#include <algorithm>
#include <string>
#include <vector>

#include "exact/attributes.hpp"
#include "exact/detail/rand.hpp"
#include "exact/scoring.hpp"

namespace exact::testing {

inline AttributeLibrary mini_library(int K) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) names.push_back("Attr" + std::to_string(i));
  return AttributeLibrary(std::move(names));
}

// A pair whose responses carry opposite oracle match signs, so the chosen
// response is the one the oracle's latent reward prefers.
inline PreferencePair make_oracle_pair(const SyntheticOracle& oracle,
                                       const std::string& pair_id,
                                       const std::string& user_id,
                                       const std::string& prompt) {
  std::string pos;
  std::string neg;
  for (int salt = 0; pos.empty() || neg.empty(); ++salt) {
    const std::string candidate = "resp " + pair_id + " v" + std::to_string(salt);
    if (oracle.response_match(candidate) > 0) {
      if (pos.empty()) pos = candidate;
    } else if (neg.empty()) {
      neg = candidate;
    }
  }
  return PreferencePair{pair_id, user_id, prompt, pos, neg};
}

// A prompt built from a topic's word pool that the oracle's prompt hash
// actually assigns to that topic (rejection sampling on a salt token). The
// first three pool words form a fixed anchor phrase, so prompts of one
// topic always share several shingles while topics share none.
inline std::string make_topic_prompt(const SyntheticOracle& oracle, int topic,
                                     const std::vector<std::string>& pool,
                                     detail::Rng& rng, int serial) {
  for (int salt = 0;; ++salt) {
    std::string prompt = pool[0] + ' ' + pool[1] + ' ' + pool[2] + ' ';
    for (int w = 0; w < 3; ++w) {
      prompt += pool[static_cast<std::size_t>(rng.next_below(pool.size()))];
      prompt += ' ';
    }
    prompt += "q" + std::to_string(serial) + "s" + std::to_string(salt);
    if (oracle.topic_of(prompt) == topic) return prompt;
  }
}

inline const std::vector<std::string>& topic_word_pool(int topic) {
  static const std::vector<std::string> kPools[2] = {
      {"tensor", "gradient", "lattice", "quantum", "photon", "compiler", "kernel",
       "matrix", "entropy", "circuit"},
      {"sourdough", "marinade", "skillet", "saffron", "roast", "broth", "pastry",
       "glaze", "simmer", "citrus"},
  };
  return kPools[topic & 1];
}

struct TwoTopicFixture {
  SyntheticOracleSpec spec;
  std::vector<PreferencePair> train;
  std::vector<PreferencePair> test;
};

// Two topics with disjoint planted subsets; train and test prompts drawn
// from topic-specific word pools so nearest-neighbor retrieval recovers the
// topic.
inline TwoTopicFixture make_two_topic_fixture(const AttributeLibrary& library,
                                              std::uint64_t seed, int train_per_topic,
                                              int test_per_topic, double noise_scale = 0.0) {
  TwoTopicFixture fixture;
  fixture.spec = make_disjoint_oracle_spec(library, seed, 2, 3, 1.0, noise_scale);
  const SyntheticOracle oracle(fixture.spec, library);

  detail::Rng rng(detail::fnv1a64("two-topic", detail::fnv1a64_u64(seed)));
  int serial = 0;
  for (int topic = 0; topic < 2; ++topic) {
    const auto& pool = topic_word_pool(topic);
    for (int i = 0; i < train_per_topic; ++i) {
      const std::string prompt = make_topic_prompt(oracle, topic, pool, rng, serial);
      fixture.train.push_back(
          make_oracle_pair(oracle, "train-" + std::to_string(serial), "u0", prompt));
      ++serial;
    }
    for (int i = 0; i < test_per_topic; ++i) {
      const std::string prompt = make_topic_prompt(oracle, topic, pool, rng, serial);
      fixture.test.push_back(
          make_oracle_pair(oracle, "test-" + std::to_string(serial), "u0", prompt));
      ++serial;
    }
  }
  return fixture;
}

struct LatticeInstance {
  AttributeLibrary library;
  SyntheticOracleSpec spec;
  std::vector<PreferencePair> pairs;
};

// Modular instance: one topic, distinct random per-attribute weights on a
// planted support of at least `min_support` attributes, no interactions, no
// noise. Greedy is provably optimal here, and a support at least as large
// as the budget keeps the argmax over size-<=k subsets unique (ties would
// otherwise arise from zero-weight padding).
inline LatticeInstance make_modular_instance(std::uint64_t seed, int K, int pairs = 1,
                                             int min_support = 4) {
  LatticeInstance inst;
  inst.library = mini_library(K);
  detail::Rng rng(detail::fnv1a64("modular", detail::fnv1a64_u64(seed)));

  inst.spec.seed = seed;
  inst.spec.topic_count = 1;
  inst.spec.planted_subsets.resize(1);
  inst.spec.planted_weights.resize(1);
  std::vector<AttributeId> order(static_cast<std::size_t>(K));
  for (AttributeId a = 0; a < K; ++a) order[static_cast<std::size_t>(a)] = a;
  rng.shuffle(order);
  min_support = std::min(min_support, K);
  for (int i = 0; i < K; ++i) {
    if (i >= min_support && rng.next_double() >= 0.6) continue;
    inst.spec.planted_subsets[0].push_back(order[static_cast<std::size_t>(i)]);
    inst.spec.planted_weights[0].push_back(rng.next_uniform(0.1, 1.0));
  }

  const SyntheticOracle oracle(inst.spec, inst.library);
  for (int i = 0; i < pairs; ++i) {
    inst.pairs.push_back(make_oracle_pair(oracle, "p" + std::to_string(i), "u0",
                                          "prompt " + std::to_string(seed) + " " +
                                              std::to_string(i)));
  }
  return inst;
}

// Interaction instance: weights on every attribute plus random pairwise
// synergy terms. The objective stays monotone (all terms non-negative) but
// is no longer submodular, so the submodularity ratio drops below 1.
inline LatticeInstance make_interaction_instance(std::uint64_t seed, int K, int pairs = 1) {
  LatticeInstance inst;
  inst.library = mini_library(K);
  detail::Rng rng(detail::fnv1a64("interaction", detail::fnv1a64_u64(seed)));

  inst.spec.seed = seed;
  inst.spec.topic_count = 1;
  inst.spec.planted_subsets.resize(1);
  inst.spec.planted_weights.resize(1);
  inst.spec.interactions.resize(1);
  for (AttributeId a = 0; a < K; ++a) {
    inst.spec.planted_subsets[0].push_back(a);
    inst.spec.planted_weights[0].push_back(rng.next_uniform(0.05, 1.0));
  }
  const int synergies = 2 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(K)));
  for (int s = 0; s < synergies; ++s) {
    const AttributeId a = static_cast<AttributeId>(rng.next_below(static_cast<std::uint64_t>(K)));
    const AttributeId b = static_cast<AttributeId>(rng.next_below(static_cast<std::uint64_t>(K)));
    if (a == b) continue;
    inst.spec.interactions[0].push_back({a, b, rng.next_uniform(0.2, 1.5)});
  }

  const SyntheticOracle oracle(inst.spec, inst.library);
  for (int i = 0; i < pairs; ++i) {
    inst.pairs.push_back(make_oracle_pair(oracle, "p" + std::to_string(i), "u0",
                                          "prompt " + std::to_string(seed) + " " +
                                              std::to_string(i)));
  }
  return inst;
}

}  // namespace exact::testing
