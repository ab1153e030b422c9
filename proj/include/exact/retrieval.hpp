#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "exact/attributes.hpp"

namespace exact {

// Prompt-to-unit-vector contract. Implementations must be deterministic for
// a fixed configuration; outputs are L2-normalized.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(const std::string& prompt) = 0;
  virtual int dimension() const = 0;
};

struct SyntheticEmbedderSpec {
  std::uint64_t seed = 0;
  int dimension = 64;
};

// Seeded feature hashing over word shingles (unigrams and bigrams), then
// L2 normalization. Prompts sharing many words land near each other;
// unrelated prompts are near-orthogonal in expectation.
class SyntheticEmbedder final : public Embedder {
 public:
  explicit SyntheticEmbedder(SyntheticEmbedderSpec spec);

  std::vector<double> embed(const std::string& prompt) override;
  int dimension() const override { return spec_.dimension; }

  const SyntheticEmbedderSpec& spec() const { return spec_; }

 private:
  SyntheticEmbedderSpec spec_;
};

struct RetrievalResult {
  IndexEntry entry;
  double similarity = 0.0;
  std::optional<double> runner_up_similarity;
  double margin = 0.0;  // top1 - top2; +inf for a singleton memory
};

// Exact cosine scan over the memory. Ties break toward the lowest
// created_seq. Throws EmptyMemoryError / DimensionMismatchError.
RetrievalResult retrieve(const UserMemory& memory, const std::string& prompt,
                         Embedder& embedder);

// Online update: adds (prompt, subset, objective) to the memory. If the
// prompt is already present, the higher-objective entry wins and the
// original slot's created_seq is preserved.
UserMemory append(const UserMemory& memory, const std::string& prompt,
                  const AttributeSubset& subset, double objective, Embedder& embedder);

struct MemoryFile {
  UserMemory memory;
  std::string library_hash;
};

// JSON Lines persistence: a header line followed by one entry per line.
// Writes go through a temp file and an atomic rename. Loading validates all
// memory invariants and reports the offending line on failure.
void save_memory(const UserMemory& memory, const std::string& path,
                 const std::string& library_hash);
MemoryFile load_memory(const std::string& path);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace exact
