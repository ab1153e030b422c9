#include "exact/attributes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "exact/detail/rand.hpp"

namespace exact {

namespace {

std::string fold_name(std::string_view name) {
  std::size_t b = 0;
  std::size_t e = name.size();
  while (b < e && std::isspace(static_cast<unsigned char>(name[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(name[e - 1]))) --e;
  std::string out;
  out.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) {
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(name[i]))));
  }
  return out;
}

}  // namespace

AttributeLibrary::AttributeLibrary(std::vector<std::string> names) {
  std::unordered_set<std::string> seen;
  entries_.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string folded = fold_name(names[i]);
    if (folded.empty()) {
      throw Error("attribute name " + std::to_string(i) + " is empty after trimming");
    }
    if (!seen.insert(folded).second) {
      throw Error("duplicate attribute name: " + names[i]);
    }
    entries_.push_back({static_cast<AttributeId>(i), std::move(names[i])});
  }
}

const std::string& AttributeLibrary::name_of(AttributeId id) const {
  if (!contains(id)) {
    throw Error("attribute id out of range: " + std::to_string(id));
  }
  return entries_[static_cast<std::size_t>(id)].name;
}

std::optional<AttributeId> AttributeLibrary::id_of(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.id;
  }
  return std::nullopt;
}

AttributeLibrary AttributeLibrary::prefix(int k) const {
  if (k < 0 || k > size()) {
    throw Error("prefix size out of range: " + std::to_string(k));
  }
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) names.push_back(entries_[static_cast<std::size_t>(i)].name);
  return AttributeLibrary(std::move(names));
}

std::string AttributeLibrary::content_hash() const {
  std::uint64_t h = detail::kFnvOffset;
  for (const auto& e : entries_) {
    h = detail::fnv1a64_u64(static_cast<std::uint64_t>(e.id), h);
    h = detail::fnv1a64(e.name, h);
    h = detail::fnv1a64("\x1e", h);
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

AttributeLibrary load_default_library() {
  // Two-column vocabulary table, read down the first column then the second.
  static const char* const kNames[] = {
      "Base",          "Formal",        "Concise",
      "Vivid",         "Modest",        "Engineer",
      "Persuasive",    "Emotion",       "Humor",
      "Energy",        "Code",          "Easy",
      "Direct",        "Social",        "Western",
      "Eastern",       "Respect",       "Internet Slang",
      "Proverb",       "Critical",      "Vague",
      "Creative",      "Analytic",      "Empathetic",
      "Sycophant",     "Old-fashioned", "Meritocratic",
      "Myopic",        "Principled",    "Hedonist",
      "Utilitarian",   "Realist",       "Pessimistic",
      "Storyteller",   "Flexible",      "Spontaneous",
      "Collectivist",  "Individualistic", "Exclamatory",
      "Conspiracy",    "Tech Industry Priority", "Eco-friendly",
  };
  std::vector<std::string> names(std::begin(kNames), std::end(kNames));
  return AttributeLibrary(std::move(names));
}

const PreferencePair& validate_pair(const PreferencePair& pair) {
  if (pair.prompt.empty()) throw EmptyFieldError("prompt is empty");
  if (pair.chosen.empty()) throw EmptyFieldError("chosen response is empty");
  if (pair.rejected.empty()) throw EmptyFieldError("rejected response is empty");
  if (pair.chosen == pair.rejected) {
    throw DegeneratePairError("chosen and rejected responses are identical (pair " +
                              pair.pair_id + ")");
  }
  return pair;
}

std::vector<AttributeId> AttributeSubset::sorted_members() const {
  std::vector<AttributeId> out = members;
  std::sort(out.begin(), out.end());
  return out;
}

void validate_subset(const AttributeSubset& subset, const AttributeLibrary& library,
                     int budget) {
  if (static_cast<int>(subset.members.size()) > budget) {
    throw Error("subset exceeds budget: " + std::to_string(subset.members.size()) +
                " > " + std::to_string(budget));
  }
  if (subset.gains.size() != subset.members.size()) {
    throw Error("gains length does not match members length");
  }
  std::set<AttributeId> seen;
  for (AttributeId id : subset.members) {
    if (!library.contains(id)) {
      throw Error("subset references unknown attribute id " + std::to_string(id));
    }
    if (!seen.insert(id).second) {
      throw Error("subset contains duplicate attribute id " + std::to_string(id));
    }
  }
}

void validate_memory(const UserMemory& memory) {
  if (memory.embedding_dim < 2) {
    throw Error("embedding dimension must be at least 2");
  }
  std::unordered_set<std::string> prompts;
  std::int64_t last_seq = -1;
  for (const auto& entry : memory.entries) {
    if (entry.prompt.empty()) throw Error("memory entry has an empty prompt");
    if (static_cast<int>(entry.embedding.size()) != memory.embedding_dim) {
      throw DimensionMismatchError("entry embedding dim " +
                                   std::to_string(entry.embedding.size()) +
                                   " != memory dim " +
                                   std::to_string(memory.embedding_dim));
    }
    double sq = 0.0;
    for (double v : entry.embedding) sq += v * v;
    const double norm = std::sqrt(sq);
    if (!(norm > 1.0 - 1e-6 && norm < 1.0 + 1e-6)) {
      throw Error("entry embedding is not unit norm: " + std::to_string(norm));
    }
    if (!std::isfinite(entry.objective)) throw Error("entry objective is not finite");
    if (!prompts.insert(entry.prompt).second) {
      throw Error("duplicate prompt in memory: " + entry.prompt);
    }
    if (entry.created_seq <= last_seq) {
      throw Error("created_seq values must strictly increase");
    }
    last_seq = entry.created_seq;
  }
}

}  // namespace exact
