#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exact/errors.hpp"

namespace exact {

using AttributeId = int;

struct AttributeEntry {
  AttributeId id = 0;
  std::string name;
};

// The fixed universe of named preference attributes. Ids are dense 0..K-1
// and stable; names appear only at serialization and prompt-augmentation
// boundaries.
class AttributeLibrary {
 public:
  AttributeLibrary() = default;

  // Ids are assigned 0..K-1 in the given order. Names must be unique after
  // case-folding and trimming, and non-empty.
  explicit AttributeLibrary(std::vector<std::string> names);

  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  bool contains(AttributeId id) const { return id >= 0 && id < size(); }

  const std::string& name_of(AttributeId id) const;
  std::optional<AttributeId> id_of(std::string_view name) const;  // exact name match
  const std::vector<AttributeEntry>& attributes() const { return entries_; }

  // Restriction to the first k attributes (same ids, same names).
  AttributeLibrary prefix(int k) const;

  // Stable content hash (hex), used to tie persisted indexes to the
  // vocabulary they were built against.
  std::string content_hash() const;

 private:
  std::vector<AttributeEntry> entries_;
};

// The built-in 42-attribute vocabulary.
AttributeLibrary load_default_library();

// One pairwise preference observation for a user.
struct PreferencePair {
  std::string pair_id;
  std::string user_id;
  std::string prompt;
  std::string chosen;    // preferred response
  std::string rejected;  // dispreferred response
};

// Throws EmptyFieldError / DegeneratePairError; otherwise returns the pair
// unchanged.
const PreferencePair& validate_pair(const PreferencePair& pair);

// An ordered attribute selection plus the marginal gain recorded when each
// member was added (same length as members).
struct AttributeSubset {
  std::vector<AttributeId> members;  // selection order preserved
  std::vector<double> gains;

  bool empty() const { return members.empty(); }
  std::size_t size() const { return members.size(); }
  std::vector<AttributeId> sorted_members() const;
};

// Checks membership validity against the library, the size budget, the
// no-duplicates rule and the gains shape. Throws Error on violation.
void validate_subset(const AttributeSubset& subset, const AttributeLibrary& library,
                     int budget);

// One deduplicated record of a user's memory: a historical prompt, its
// embedding, the attribute subset inferred for it and the objective value
// that subset achieved.
struct IndexEntry {
  std::string prompt;
  std::vector<double> embedding;  // unit L2 norm
  AttributeSubset subset;
  double objective = 0.0;
  std::int64_t created_seq = 0;
};

struct UserMemory {
  std::string user_id;
  int embedding_dim = 0;
  std::vector<IndexEntry> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

// Full invariant check: consistent dims, unit-norm embeddings, finite
// objectives, unique prompts, strictly increasing created_seq.
void validate_memory(const UserMemory& memory);

}  // namespace exact
