#include "exact/selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace exact {

namespace {

// Sum of C(K, j) for j in [1, k], saturating at `cap + 1`.
std::size_t subset_count_capped(int K, int k, std::size_t cap) {
  std::size_t total = 0;
  double c = 1.0;  // C(K, 0)
  for (int j = 1; j <= k; ++j) {
    c = c * static_cast<double>(K - j + 1) / static_cast<double>(j);
    if (c > static_cast<double>(cap) || total > cap) return cap + 1;
    total += static_cast<std::size_t>(c + 0.5);
    if (total > cap) return cap + 1;
  }
  return total;
}

std::string subset_key(const std::vector<AttributeId>& ids) {
  std::string key;
  for (AttributeId id : ids) {
    key += std::to_string(id);
    key += ',';
  }
  return key;
}

}  // namespace

std::pair<AttributeSubset, double> greedy_select_with_value(const PreferencePair& pair,
                                                            const AttributeLibrary& library,
                                                            const SelectionConfig& config,
                                                            Scorer& scorer) {
  validate_pair(pair);
  if (config.budget < 0) throw Error("budget must be non-negative");
  AttributeSubset subset;
  if (config.budget == 0) return {subset, pair_gap(scorer, pair, subset.members)};
  if (library.empty()) throw EmptyLibraryError("attribute library is empty");
  const int k = std::min(config.budget, library.size());

  double current = pair_gap(scorer, pair, subset.members);
  std::vector<bool> taken(static_cast<std::size_t>(library.size()), false);

  for (int round = 0; round < k; ++round) {
    AttributeId best_id = -1;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<AttributeId> candidate = subset.members;
    candidate.push_back(0);
    for (AttributeId id = 0; id < library.size(); ++id) {
      if (taken[static_cast<std::size_t>(id)]) continue;
      candidate.back() = id;
      const double value = pair_gap(scorer, pair, candidate);
      if (value > best_value) {  // strict: ties keep the lowest id
        best_value = value;
        best_id = id;
      }
    }
    const double marginal = best_value - current;
    if (config.nonneg_filter && marginal <= 0.0) break;
    subset.members.push_back(best_id);
    subset.gains.push_back(marginal);
    taken[static_cast<std::size_t>(best_id)] = true;
    current = best_value;
  }
  return {subset, current};
}

AttributeSubset greedy_select(const PreferencePair& pair, const AttributeLibrary& library,
                              const SelectionConfig& config, Scorer& scorer) {
  return greedy_select_with_value(pair, library, config, scorer).first;
}

AttributeSubset exhaustive_select(const PreferencePair& pair, const AttributeLibrary& library,
                                  int k, Scorer& scorer, std::size_t enumeration_cap) {
  validate_pair(pair);
  if (k < 0) throw Error("budget must be non-negative");
  AttributeSubset empty;
  if (k == 0) return empty;
  if (library.empty()) throw EmptyLibraryError("attribute library is empty");
  const int K = library.size();
  k = std::min(k, K);

  if (subset_count_capped(K, k, enumeration_cap) > enumeration_cap) {
    throw EnumerationTooLargeError("subset enumeration exceeds cap of " +
                                   std::to_string(enumeration_cap));
  }

  const double base = pair_gap(scorer, pair, std::vector<AttributeId>{});
  std::unordered_map<std::string, double> values;
  values.emplace("", base);

  std::vector<AttributeId> best_members;  // empty subset to start
  double best_value = base;

  // Size-j combinations in lexicographic id order.
  std::vector<AttributeId> combo;
  for (int j = 1; j <= k; ++j) {
    combo.assign(static_cast<std::size_t>(j), 0);
    for (int i = 0; i < j; ++i) combo[static_cast<std::size_t>(i)] = i;
    while (true) {
      const double value = pair_gap(scorer, pair, combo);
      values.emplace(subset_key(combo), value);
      if (value > best_value ||
          (value == best_value &&
           std::lexicographical_compare(combo.begin(), combo.end(), best_members.begin(),
                                        best_members.end()))) {
        best_value = value;
        best_members = combo;
      }
      // Next combination.
      int pos = j - 1;
      while (pos >= 0 && combo[static_cast<std::size_t>(pos)] == K - j + pos) --pos;
      if (pos < 0) break;
      ++combo[static_cast<std::size_t>(pos)];
      for (int q = pos + 1; q < j; ++q) {
        combo[static_cast<std::size_t>(q)] = combo[static_cast<std::size_t>(q - 1)] + 1;
      }
    }
  }

  // Per-member gains along the winner's prefix chain; all prefixes were
  // evaluated during enumeration.
  AttributeSubset out;
  out.members = best_members;
  double prev = base;
  std::vector<AttributeId> prefix;
  for (AttributeId id : best_members) {
    prefix.push_back(id);
    const double v = values.at(subset_key(prefix));
    out.gains.push_back(v - prev);
    prev = v;
  }
  return out;
}

UserMemory build_index(const std::vector<PreferencePair>& pairs,
                       const AttributeLibrary& library, const SelectionConfig& config,
                       Scorer& scorer, Embedder& embedder) {
  if (pairs.empty()) throw Error("no pairs to index");
  for (const auto& pair : pairs) {
    if (pair.user_id != pairs.front().user_id) {
      throw Error("pairs span multiple users: " + pairs.front().user_id + " vs " +
                  pair.user_id);
    }
  }

  struct Selected {
    std::string prompt;
    AttributeSubset subset;
    double objective;
  };
  std::vector<Selected> kept;                       // first-occurrence order
  std::unordered_map<std::string, std::size_t> by_prompt;

  for (const auto& pair : pairs) {
    auto [subset, objective] = greedy_select_with_value(pair, library, config, scorer);
    auto it = by_prompt.find(pair.prompt);
    if (it == by_prompt.end()) {
      by_prompt.emplace(pair.prompt, kept.size());
      kept.push_back({pair.prompt, std::move(subset), objective});
    } else if (objective > kept[it->second].objective) {
      kept[it->second].subset = std::move(subset);
      kept[it->second].objective = objective;
    }
  }

  UserMemory memory;
  memory.user_id = pairs.front().user_id;
  memory.embedding_dim = embedder.dimension();
  memory.entries.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    IndexEntry entry;
    entry.prompt = kept[i].prompt;
    entry.embedding = embedder.embed(kept[i].prompt);
    entry.subset = std::move(kept[i].subset);
    entry.objective = kept[i].objective;
    entry.created_seq = static_cast<std::int64_t>(i);
    memory.entries.push_back(std::move(entry));
  }
  validate_memory(memory);
  return memory;
}

double dataset_objective(const std::vector<AttributeId>& subset,
                         const std::vector<PreferencePair>& pairs, Scorer& scorer) {
  if (pairs.empty()) throw Error("dataset objective over an empty pair list");
  double total = 0.0;
  for (const auto& pair : pairs) {
    total += pair_gap(scorer, pair, subset) - pair_gap(scorer, pair, std::vector<AttributeId>{});
  }
  return total / static_cast<double>(pairs.size());
}

namespace {

std::vector<AttributeId> mask_to_ids(std::uint32_t mask, int K) {
  std::vector<AttributeId> ids;
  for (int a = 0; a < K; ++a) {
    if (mask & (1u << a)) ids.push_back(a);
  }
  return ids;
}

// F over the full lattice: F[mask] = mean gap(mask) - mean gap(empty).
std::vector<double> lattice_objective(const std::vector<PreferencePair>& pairs,
                                      const AttributeLibrary& library, Scorer& scorer) {
  const int K = library.size();
  if (K > 12) {
    throw EnumerationTooLargeError("lattice scan limited to 12 attributes, got " +
                                   std::to_string(K));
  }
  if (pairs.empty()) throw Error("lattice scan over an empty pair list");
  for (const auto& pair : pairs) validate_pair(pair);

  const std::uint32_t n = 1u << K;
  std::vector<double> mean_gap(n, 0.0);
  for (std::uint32_t mask = 0; mask < n; ++mask) {
    const auto ids = mask_to_ids(mask, K);
    double total = 0.0;
    for (const auto& pair : pairs) total += pair_gap(scorer, pair, ids);
    mean_gap[mask] = total / static_cast<double>(pairs.size());
  }
  const double base = mean_gap[0];
  for (double& v : mean_gap) v -= base;
  return mean_gap;  // now F values, F[0] == 0
}

GammaEstimate gamma_from_lattice(const std::vector<double>& F, int K) {
  GammaEstimate out;
  out.raw_min = std::numeric_limits<double>::infinity();
  const std::uint32_t n = 1u << K;

  std::vector<double> singleton(static_cast<std::size_t>(K), 0.0);
  std::uint32_t argmin_s = 0;
  std::uint32_t argmin_l = 0;
  for (std::uint32_t s = 0; s < n; ++s) {
    const std::uint32_t comp = (n - 1) & ~s;
    for (int a = 0; a < K; ++a) {
      if (comp & (1u << a)) {
        singleton[static_cast<std::size_t>(a)] = F[s | (1u << a)] - F[s];
      }
    }
    for (std::uint32_t l = comp; l != 0; l = (l - 1) & comp) {
      const double joint = F[s | l] - F[s];
      if (!(joint > 0.0)) continue;
      double sum = 0.0;
      for (std::uint32_t bits = l; bits != 0; bits &= bits - 1) {
        const int a = std::countr_zero(bits);
        sum += singleton[static_cast<std::size_t>(a)];
      }
      ++out.ratios_scanned;
      const double ratio = sum / joint;
      if (ratio < out.raw_min) {
        out.raw_min = ratio;
        argmin_s = s;
        argmin_l = l;
      }
    }
  }

  if (out.ratios_scanned == 0) {
    // Degenerate lattice with no positive joint gain anywhere.
    out.raw_min = 1.0;
    out.gamma_hat = 1.0;
    return out;
  }
  out.gamma_hat = std::clamp(out.raw_min, 1e-12, 1.0);
  out.argmin_base = mask_to_ids(argmin_s, K);
  out.argmin_extension = mask_to_ids(argmin_l, K);
  return out;
}

}  // namespace

GammaEstimate estimate_gamma(const std::vector<PreferencePair>& pairs,
                             const AttributeLibrary& library, Scorer& scorer) {
  const std::vector<double> F = lattice_objective(pairs, library, scorer);
  return gamma_from_lattice(F, library.size());
}

SetObjectiveReport audit_greedy_bound(const std::vector<PreferencePair>& pairs,
                                      const AttributeLibrary& library, int k,
                                      Scorer& scorer) {
  if (k < 1) throw Error("audit requires a positive budget");
  const int K = library.size();
  const std::vector<double> F = lattice_objective(pairs, library, scorer);
  const std::uint32_t n = 1u << K;

  SetObjectiveReport report;
  report.subset_values.reserve(n);
  for (std::uint32_t mask = 0; mask < n; ++mask) {
    report.subset_values.emplace_back(mask_to_ids(mask, K), F[mask]);
  }
  report.gamma = gamma_from_lattice(F, K);

  // Global monotonicity of the lattice.
  for (std::uint32_t s = 0; s < n && report.monotone_global; ++s) {
    for (int a = 0; a < K; ++a) {
      if (s & (1u << a)) continue;
      if (F[s | (1u << a)] - F[s] < -1e-12) {
        report.monotone_global = false;
        break;
      }
    }
  }

  // Unfiltered greedy: k rounds of argmax marginal gain, ties to lowest id.
  std::uint32_t greedy_mask = 0;
  double current = 0.0;
  const int rounds = std::min(k, K);
  for (int t = 0; t < rounds; ++t) {
    int best_a = -1;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < K; ++a) {
      if (greedy_mask & (1u << a)) continue;
      const double value = F[greedy_mask | (1u << a)];
      if (value > best_value) {
        best_value = value;
        best_a = a;
      }
    }
    if (best_a < 0) break;
    const double gain = best_value - current;
    if (gain < -1e-12) report.monotone_path = false;
    report.greedy_members.push_back(best_a);
    report.greedy_gains.push_back(gain);
    greedy_mask |= (1u << best_a);
    current = best_value;
  }
  report.greedy_value = F[greedy_mask];

  // Exhaustive optimum over subsets of size <= k (lexicographically smallest
  // sequence on ties).
  std::uint32_t best_mask = 0;
  double best_value = 0.0;  // F[0]
  for (std::uint32_t mask = 1; mask < n; ++mask) {
    if (std::popcount(mask) > k) continue;
    if (F[mask] > best_value) {
      best_value = F[mask];
      best_mask = mask;
    } else if (F[mask] == best_value) {
      const auto cand = mask_to_ids(mask, K);
      const auto cur = mask_to_ids(best_mask, K);
      if (std::lexicographical_compare(cand.begin(), cand.end(), cur.begin(), cur.end())) {
        best_mask = mask;
      }
    }
  }
  report.optimal_members = mask_to_ids(best_mask, K);
  report.optimal_value = best_value;

  report.gap = report.optimal_value - report.greedy_value;
  report.ratio =
      report.optimal_value > 0.0 ? report.greedy_value / report.optimal_value : 1.0;
  report.bound_factor = 1.0 - std::exp(-report.gamma.gamma_hat);
  report.bound_violated =
      report.greedy_value < report.bound_factor * report.optimal_value - 1e-9;
  return report;
}

}  // namespace exact
