#include "exact/remote.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "exact/inference.hpp"

namespace exact {

namespace {

using json = nlohmann::json;

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix, possibly empty
};

ParsedUrl parse_base_url(const std::string& base_url) {
  const std::size_t scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error("base URL must include a scheme: " + base_url);
  }
  const std::size_t path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, path_start);
    out.prefix = base_url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

class Endpoint {
 public:
  explicit Endpoint(const RemoteConfig& config)
      : url_(parse_base_url(config.base_url)), config_(config) {
    client_ = std::make_unique<httplib::Client>(url_.origin);
    const auto timeout = config.scoring.request_timeout;
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client_->set_connection_timeout(secs.count(), usecs.count());
    client_->set_read_timeout(secs.count(), usecs.count());
    client_->set_write_timeout(secs.count(), usecs.count());
  }

  json post(const std::string& route, const json& body) {
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    const std::string path = url_.prefix + route;
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.scoring.retry_limit; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
      }
      auto res = client_->Post(path, headers, payload, "application/json");
      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "server error: HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw BackendProtocolError("HTTP " + std::to_string(res->status) + " from " + path +
                                   ": " + res->body);
      }
      try {
        return json::parse(res->body);
      } catch (const std::exception& e) {
        throw BackendProtocolError(std::string("invalid JSON from endpoint: ") + e.what());
      }
    }
    throw BackendUnavailableError(path + " unavailable after " +
                                  std::to_string(config_.scoring.retry_limit + 1) +
                                  " attempts: " + last_error);
  }

  const RemoteConfig& config() const { return config_; }

 private:
  ParsedUrl url_;
  RemoteConfig config_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

RemoteConfig remote_config_from_env(RemoteConfig config) {
  if (const char* url = std::getenv("EXACT_BASE_URL"); url != nullptr && *url != '\0') {
    config.base_url = url;
  }
  if (const char* key = std::getenv("EXACT_API_KEY"); key != nullptr && *key != '\0') {
    config.api_key = key;
  }
  return config;
}

// ---------------------------------------------------------------------------
// RemoteScorer
// ---------------------------------------------------------------------------

struct RemoteScorer::Impl {
  Impl(RemoteConfig config, const AttributeLibrary& library)
      : endpoint(config), library(library) {}
  Endpoint endpoint;
  AttributeLibrary library;
};

RemoteScorer::RemoteScorer(RemoteConfig config, const AttributeLibrary& library)
    : impl_(std::make_unique<Impl>(std::move(config), library)) {
  validate_scoring_config(impl_->endpoint.config().scoring);
}

RemoteScorer::~RemoteScorer() = default;

LogProbScore RemoteScorer::score(const std::string& prompt,
                                 const std::vector<AttributeId>& subset,
                                 const std::string& response) {
  if (prompt.empty()) throw EmptyFieldError("prompt is empty");
  if (response.empty()) throw EmptyFieldError("response is empty");

  const std::string prompt_block = augment_prompt(prompt, subset, impl_->library) + "\n";
  const std::string full_text = prompt_block + response;

  json body;
  body["model"] = impl_->endpoint.config().model;
  body["prompt"] = full_text;
  body["max_tokens"] = 0;
  body["echo"] = true;
  body["logprobs"] = 0;
  const json reply = impl_->endpoint.post("/completions", body);

  if (!reply.contains("choices") || !reply["choices"].is_array() ||
      reply["choices"].empty()) {
    throw BackendProtocolError("completions reply has no choices");
  }
  const json& choice = reply["choices"][0];
  if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
    throw BackendProtocolError("endpoint does not echo log-probs");
  }
  const json& lp = choice["logprobs"];
  if (!lp.contains("token_logprobs") || !lp.contains("text_offset")) {
    throw BackendProtocolError("logprobs reply lacks token_logprobs/text_offset");
  }
  const auto& logprobs = lp["token_logprobs"];
  const auto& offsets = lp["text_offset"];
  if (logprobs.size() != offsets.size()) {
    throw BackendProtocolError("token_logprobs and text_offset lengths differ");
  }

  // Sum tokens belonging to the response region. The first token of a
  // sequence usually reports a null log-prob; nulls are skipped.
  const std::size_t boundary = prompt_block.size();
  LogProbScore out;
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    if (offsets[i].get<std::size_t>() < boundary) continue;
    if (logprobs[i].is_null()) continue;
    out.value += logprobs[i].get<double>();
    ++out.token_count;
  }
  return out;
}

// ---------------------------------------------------------------------------
// RemoteEmbedder
// ---------------------------------------------------------------------------

struct RemoteEmbedder::Impl {
  explicit Impl(RemoteConfig config) : endpoint(config) {}
  Endpoint endpoint;
  int dimension = 0;
};

RemoteEmbedder::RemoteEmbedder(RemoteConfig config, int dimension)
    : impl_(std::make_unique<Impl>(std::move(config))) {
  impl_->dimension = dimension;
}

RemoteEmbedder::~RemoteEmbedder() = default;

int RemoteEmbedder::dimension() const { return impl_->dimension; }

std::vector<double> RemoteEmbedder::embed(const std::string& prompt) {
  if (prompt.empty()) throw EmptyFieldError("prompt is empty");
  json body;
  body["model"] = impl_->endpoint.config().model;
  body["input"] = json::array({prompt});
  const json reply = impl_->endpoint.post("/embeddings", body);

  if (!reply.contains("data") || !reply["data"].is_array() || reply["data"].empty() ||
      !reply["data"][0].contains("embedding")) {
    throw BackendProtocolError("embeddings reply lacks data[0].embedding");
  }
  std::vector<double> v = reply["data"][0]["embedding"].get<std::vector<double>>();
  if (v.size() < 2) throw BackendProtocolError("embedding dimension below 2");
  if (impl_->dimension == 0) impl_->dimension = static_cast<int>(v.size());
  if (static_cast<int>(v.size()) != impl_->dimension) {
    throw DimensionMismatchError("endpoint changed embedding dimension");
  }

  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) throw BackendProtocolError("endpoint returned a zero embedding");
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return v;
}

// ---------------------------------------------------------------------------
// RemoteGenerator
// ---------------------------------------------------------------------------

struct RemoteGenerator::Impl {
  explicit Impl(RemoteConfig config) : endpoint(config) {}
  Endpoint endpoint;
};

RemoteGenerator::RemoteGenerator(RemoteConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

RemoteGenerator::~RemoteGenerator() = default;

std::string RemoteGenerator::generate(const std::string& prompt,
                                      const DecodingParams& params) {
  validate_decoding_params(params);
  json body;
  body["model"] = impl_->endpoint.config().model;
  body["prompt"] = prompt;
  body["max_tokens"] = params.max_new_tokens;
  body["temperature"] = params.temperature;
  body["top_p"] = params.top_p;
  if (params.top_k > 0) body["top_k"] = params.top_k;
  const json reply = impl_->endpoint.post("/completions", body);

  if (!reply.contains("choices") || !reply["choices"].is_array() ||
      reply["choices"].empty() || !reply["choices"][0].contains("text")) {
    throw BackendProtocolError("completions reply has no choices[0].text");
  }
  return reply["choices"][0]["text"].get<std::string>();
}

}  // namespace exact
