#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "exact/attributes.hpp"
#include "exact/retrieval.hpp"
#include "exact/scoring.hpp"

namespace exact {

struct SelectionConfig {
  int budget = 3;             // maximum subset size k
  bool nonneg_filter = true;  // stop once the best marginal gain is <= 0
  std::size_t enumeration_cap = 200000;
};

// Greedy per-pair attribute selection: k rounds, each adding the attribute
// whose inclusion maximizes the preferred-vs-dispreferred log-prob gap.
// Ties break toward the lowest attribute id. With the non-negativity filter
// the loop stops early once no candidate improves the gap, so the returned
// subset may be smaller than the budget. Marginal gains are recorded per
// member.
AttributeSubset greedy_select(const PreferencePair& pair, const AttributeLibrary& library,
                              const SelectionConfig& config, Scorer& scorer);

// Same, additionally returning the gap achieved by the selected subset.
std::pair<AttributeSubset, double> greedy_select_with_value(const PreferencePair& pair,
                                                            const AttributeLibrary& library,
                                                            const SelectionConfig& config,
                                                            Scorer& scorer);

// Baseline: evaluates every subset of size <= k and returns the gap argmax.
// Ties break toward the lexicographically smallest id sequence. Throws
// EnumerationTooLargeError when the subset count exceeds the cap.
AttributeSubset exhaustive_select(const PreferencePair& pair, const AttributeLibrary& library,
                                  int k, Scorer& scorer,
                                  std::size_t enumeration_cap = 200000);

// Runs greedy selection for every pair, deduplicates by exact prompt string
// keeping the entry with the largest objective (ties keep the earliest),
// embeds the surviving prompts and assembles the user's memory.
UserMemory build_index(const std::vector<PreferencePair>& pairs,
                       const AttributeLibrary& library, const SelectionConfig& config,
                       Scorer& scorer, Embedder& embedder);

// Empirical set objective: mean over pairs of the gap improvement of A over
// the base policy. Zero for the empty subset by construction.
double dataset_objective(const std::vector<AttributeId>& subset,
                         const std::vector<PreferencePair>& pairs, Scorer& scorer);

struct GammaEstimate {
  double gamma_hat = 1.0;  // clamped to (0, 1]
  double raw_min = 1.0;    // unclamped minimum ratio
  std::vector<AttributeId> argmin_base;       // S achieving the minimum
  std::vector<AttributeId> argmin_extension;  // L achieving the minimum
  std::int64_t ratios_scanned = 0;            // (S, L) pairs with a positive joint gain
};

// Submodularity-ratio estimate over the full subset lattice of the given
// (small) library: the minimum over disjoint (S, L) with a positive joint
// gain of the summed singleton gains over the joint gain. Libraries beyond
// 12 attributes are rejected.
GammaEstimate estimate_gamma(const std::vector<PreferencePair>& pairs,
                             const AttributeLibrary& library, Scorer& scorer);

struct SetObjectiveReport {
  // F value for every subset of the lattice, in bitmask order.
  std::vector<std::pair<std::vector<AttributeId>, double>> subset_values;
  GammaEstimate gamma;
  std::vector<AttributeId> greedy_members;  // selection order
  std::vector<double> greedy_gains;
  std::vector<AttributeId> optimal_members;  // sorted
  double greedy_value = 0.0;
  double optimal_value = 0.0;
  double ratio = 1.0;  // greedy_value / optimal_value (1 when optimum is <= 0)
  double gap = 0.0;    // optimal_value - greedy_value
  double bound_factor = 0.0;  // 1 - exp(-gamma_hat)
  bool monotone_path = true;    // gains along the greedy path all non-negative
  bool monotone_global = true;  // every singleton marginal on the lattice non-negative
  bool bound_violated = false;  // greedy_value < bound_factor * optimal_value - 1e-9
};

// Certifies the greedy approximation bound on the dataset objective for a
// small library: runs k rounds of unfiltered greedy, finds the exhaustive
// optimum over subsets of size <= k, estimates the submodularity ratio and
// checks greedy_value >= (1 - exp(-gamma)) * optimal_value.
SetObjectiveReport audit_greedy_bound(const std::vector<PreferencePair>& pairs,
                                      const AttributeLibrary& library, int k,
                                      Scorer& scorer);

}  // namespace exact
