#pragma once

#include <memory>
#include <string>
#include <vector>

#include "exact/attributes.hpp"
#include "exact/inference.hpp"
#include "exact/retrieval.hpp"
#include "exact/scoring.hpp"

namespace exact {

// Connection settings for an OpenAI-compatible endpoint. The base URL is a
// prefix such as "http://127.0.0.1:8000/v1"; the client appends
// "/completions" and "/embeddings". The API key, when non-empty, is sent as
// a bearer token.
struct RemoteConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model = "base";
  std::string api_key;
  ScoringConfig scoring;
};

// Reads EXACT_BASE_URL / EXACT_API_KEY into a config, leaving the given
// defaults where the variables are unset.
RemoteConfig remote_config_from_env(RemoteConfig config);

// Scores responses by requesting echoed per-token log-probs for the
// augmented prompt plus the response, then summing the tokens that start at
// or after the response boundary (one newline separates prompt block and
// response). Token boundaries come from the endpoint's reported offsets.
class RemoteScorer final : public Scorer {
 public:
  RemoteScorer(RemoteConfig config, const AttributeLibrary& library);
  ~RemoteScorer() override;

  LogProbScore score(const std::string& prompt, const std::vector<AttributeId>& subset,
                     const std::string& response) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class RemoteEmbedder final : public Embedder {
 public:
  // The dimension is discovered from the first embedding response when
  // `dimension` is 0.
  explicit RemoteEmbedder(RemoteConfig config, int dimension = 0);
  ~RemoteEmbedder() override;

  std::vector<double> embed(const std::string& prompt) override;
  int dimension() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class RemoteGenerator final : public GenerationBackend {
 public:
  explicit RemoteGenerator(RemoteConfig config);
  ~RemoteGenerator() override;

  std::string generate(const std::string& prompt, const DecodingParams& params) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace exact
