#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "exact/attributes.hpp"

namespace exact {

struct ScoringConfig {
  double beta = 1.0;  // KL-regularization strength; must be > 0
  int max_response_tokens = 2048;
  std::chrono::milliseconds request_timeout{10000};
  int retry_limit = 2;
};

void validate_scoring_config(const ScoringConfig& config);

// Summed per-token conditional log-probability (natural log) of a response.
struct LogProbScore {
  double value = 0.0;
  int token_count = 0;
};

// Anything that can produce log pi(response | prompt, attribute subset).
// An empty subset scores under the base policy.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual LogProbScore score(const std::string& prompt,
                             const std::vector<AttributeId>& subset,
                             const std::string& response) = 0;
};

// log pi(y_w | x, A) - log pi(y_l | x, A).
double pair_gap(Scorer& scorer, const PreferencePair& pair,
                const std::vector<AttributeId>& subset);
double pair_gap(Scorer& scorer, const PreferencePair& pair,
                const AttributeSubset& subset);

// beta * (log pi(y | x, A) - log pi(y | x)). The induced partition-function
// term is constant in y and omitted.
double implicit_reward(Scorer& scorer, const ScoringConfig& config,
                       const std::string& prompt,
                       const std::vector<AttributeId>& subset,
                       const std::string& response);

// ---------------------------------------------------------------------------
// Synthetic oracle
// ---------------------------------------------------------------------------

// Deterministic closed-form scorer with planted topic-dependent preferences.
//
//   score(y | x, A) = s(A, topic(x)) * match(y) + noise(x, y, A)
//
// where match(y) is a +/-1 hash of the response text, topic(x) a hash of the
// prompt, and s(A, t) sums per-attribute weights over A's intersection with
// the topic's planted subset plus any pairwise interaction terms. With no
// interactions the objective is modular in A, so greedy selection is exactly
// optimal; positive pairwise terms introduce complementarity and push the
// submodularity ratio below 1.
struct SyntheticOracleSpec {
  std::uint64_t seed = 0;
  int topic_count = 1;
  std::vector<std::vector<AttributeId>> planted_subsets;  // one per topic
  double signal_strength = 1.0;
  double noise_scale = 0.0;

  // Optional per-topic per-attribute weights. When empty, every planted
  // attribute of a topic carries weight signal_strength.
  std::vector<std::vector<double>> planted_weights;

  // Optional pairwise interaction terms per topic: (a, b, weight) adds
  // weight to s(A, t) whenever both a and b are in A. Positive weights are
  // synergies (drive the submodularity ratio below 1); negative weights are
  // redundancy penalties.
  struct Interaction {
    AttributeId a = 0;
    AttributeId b = 0;
    double weight = 0.0;
  };
  std::vector<std::vector<Interaction>> interactions;  // one list per topic
};

void validate_oracle_spec(const SyntheticOracleSpec& spec,
                          const AttributeLibrary& library);

// Seeded oracle spec with disjoint planted subsets across topics (requires
// topics * planted_size <= library size).
SyntheticOracleSpec make_disjoint_oracle_spec(const AttributeLibrary& library,
                                              std::uint64_t seed, int topics,
                                              int planted_size, double signal_strength,
                                              double noise_scale);

class SyntheticOracle final : public Scorer {
 public:
  SyntheticOracle(SyntheticOracleSpec spec, const AttributeLibrary& library);

  LogProbScore score(const std::string& prompt, const std::vector<AttributeId>& subset,
                     const std::string& response) override;

  // Deterministic topic assignment for a prompt.
  int topic_of(const std::string& prompt) const;

  // +1 if the oracle's latent reward treats the response as preferred-style,
  // -1 otherwise. Exposed so fixtures can construct consistently labeled
  // pairs.
  int response_match(const std::string& response) const;

  const SyntheticOracleSpec& spec() const { return spec_; }

  // Exact attribute signal s(A, t) with no noise.
  double subset_signal(const std::vector<AttributeId>& subset, int topic) const;

 private:
  SyntheticOracleSpec spec_;
};

// ---------------------------------------------------------------------------
// Scorer wrappers
// ---------------------------------------------------------------------------

// Counts evaluations flowing to the wrapped backend. Base-policy calls
// (empty subset) are tallied separately from attribute-conditioned calls:
// the former is a per-pair constant, the latter is the quantity that grows
// with the library size and budget.
class CountingScorer final : public Scorer {
 public:
  explicit CountingScorer(Scorer& inner) : inner_(inner) {}

  LogProbScore score(const std::string& prompt, const std::vector<AttributeId>& subset,
                     const std::string& response) override;

  std::int64_t base_calls() const { return base_calls_; }
  std::int64_t augmented_calls() const { return augmented_calls_; }
  // Pair-gap granularity: each gap evaluation scores both responses once.
  std::int64_t augmented_gap_evals() const { return augmented_calls_ / 2; }
  std::int64_t base_gap_evals() const { return base_calls_ / 2; }
  void reset();

 private:
  Scorer& inner_;
  std::int64_t base_calls_ = 0;
  std::int64_t augmented_calls_ = 0;
};

// Memoizes scores by (prompt, canonical subset, response) so repeated
// subset evaluations never reach the backend twice.
class CachingScorer final : public Scorer {
 public:
  explicit CachingScorer(Scorer& inner) : inner_(inner) {}

  LogProbScore score(const std::string& prompt, const std::vector<AttributeId>& subset,
                     const std::string& response) override;

  std::size_t cache_size() const { return cache_.size(); }

 private:
  Scorer& inner_;
  std::unordered_map<std::string, LogProbScore> cache_;
};

}  // namespace exact
