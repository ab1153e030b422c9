#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "exact/inference.hpp"
#include "exact/remote.hpp"

using namespace exact;
using json = nlohmann::json;

namespace {

// Loopback endpoint with a fixed-width fake tokenizer: every 3 bytes is one
// token, the first token's log-prob is null, the rest are -0.01*(i+1).
class FakeEndpoint {
 public:
  FakeEndpoint() {
    server_.Post("/v1/completions", [this](const httplib::Request& req,
                                           httplib::Response& res) {
      ++completion_calls_;
      last_body_ = json::parse(req.body);
      last_auth_ = req.get_header_value("Authorization");
      if (completion_calls_ <= fail_first_) {
        res.status = 500;
        res.set_content("boom", "text/plain");
        return;
      }
      if (!echo_logprobs_) {
        res.set_content(R"({"choices":[{"text":"hi"}]})", "application/json");
        return;
      }
      const std::string prompt = last_body_["prompt"].get<std::string>();
      json tokens = json::array();
      json logprobs = json::array();
      json offsets = json::array();
      int i = 0;
      for (std::size_t off = 0; off < prompt.size(); off += 3, ++i) {
        tokens.push_back(prompt.substr(off, 3));
        offsets.push_back(off);
        if (i == 0) {
          logprobs.push_back(nullptr);
        } else {
          logprobs.push_back(-0.01 * (i + 1));
        }
      }
      json reply;
      reply["choices"] = json::array();
      reply["choices"].push_back(
          {{"text", ""},
           {"logprobs",
            {{"tokens", tokens}, {"token_logprobs", logprobs}, {"text_offset", offsets}}}});
      res.set_content(reply.dump(), "application/json");
    });

    server_.Post("/v1/embeddings", [this](const httplib::Request& req,
                                          httplib::Response& res) {
      last_body_ = json::parse(req.body);
      json reply;
      reply["data"] = json::array();
      reply["data"].push_back({{"embedding", embedding_}});
      res.set_content(reply.dump(), "application/json");
    });

    server_.Post("/v1/generate_echo", [](const httplib::Request&, httplib::Response&) {});

    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  RemoteConfig config() const {
    RemoteConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    cfg.model = "test-model";
    cfg.scoring.retry_limit = 2;
    cfg.scoring.request_timeout = std::chrono::milliseconds(2000);
    return cfg;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> completion_calls_{0};
  int fail_first_ = 0;
  bool echo_logprobs_ = true;
  std::vector<double> embedding_ = {3.0, 0.0, 4.0, 0.0};
  json last_body_;
  std::string last_auth_;
};

// The same fixed-width scheme, reproduced independently to predict the sum.
double expected_response_sum(const std::string& prompt_block, const std::string& response,
                             int* count_out) {
  const std::string full = prompt_block + response;
  double sum = 0.0;
  int count = 0;
  int i = 0;
  for (std::size_t off = 0; off < full.size(); off += 3, ++i) {
    if (off < prompt_block.size()) continue;
    if (i == 0) continue;
    sum += -0.01 * (i + 1);
    ++count;
  }
  if (count_out != nullptr) *count_out = count;
  return sum;
}

}  // namespace

TEST_CASE("remote scorer sums only response-region tokens by reported offsets") {
  FakeEndpoint endpoint;
  const AttributeLibrary lib = load_default_library();
  RemoteScorer scorer(endpoint.config(), lib);

  const std::string prompt = "tell me something";
  const std::vector<AttributeId> subset = {12, 2};
  const std::string response = "a concise direct answer";

  const LogProbScore score = scorer.score(prompt, subset, response);

  const std::string prompt_block = augment_prompt(prompt, subset, lib) + "\n";
  int expected_count = 0;
  const double expected = expected_response_sum(prompt_block, response, &expected_count);
  CHECK(score.value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(score.token_count == expected_count);

  // Request body carries the echo-scoring contract.
  CHECK(endpoint.last_body_["model"] == "test-model");
  CHECK(endpoint.last_body_["max_tokens"] == 0);
  CHECK(endpoint.last_body_["echo"] == true);
  CHECK(endpoint.last_body_["logprobs"] == 0);
  CHECK(endpoint.last_body_["prompt"].get<std::string>() == prompt_block + response);
}

TEST_CASE("remote scorer: empty subset scores the bare prompt") {
  FakeEndpoint endpoint;
  const AttributeLibrary lib = load_default_library();
  RemoteScorer scorer(endpoint.config(), lib);
  scorer.score("base prompt", {}, "resp");
  const std::string sent = endpoint.last_body_["prompt"].get<std::string>();
  CHECK(sent == "base prompt\nresp");
  CHECK(sent.find("Attributes:") == std::string::npos);
}

TEST_CASE("remote scorer retries transient failures, then gives up") {
  FakeEndpoint endpoint;
  const AttributeLibrary lib = load_default_library();

  SUBCASE("two 500s then success") {
    endpoint.fail_first_ = 2;
    RemoteScorer scorer(endpoint.config(), lib);
    CHECK_NOTHROW(scorer.score("p", {}, "r"));
    CHECK(endpoint.completion_calls_ == 3);
  }
  SUBCASE("persistent 500s exhaust the retry budget") {
    endpoint.fail_first_ = 1000;
    RemoteScorer scorer(endpoint.config(), lib);
    CHECK_THROWS_AS(scorer.score("p", {}, "r"), BackendUnavailableError);
    CHECK(endpoint.completion_calls_ == 3);  // retry_limit 2 => 3 attempts
  }
  SUBCASE("unreachable endpoint") {
    RemoteConfig cfg = endpoint.config();
    cfg.base_url = "http://127.0.0.1:1/v1";  // nothing listens here
    cfg.scoring.retry_limit = 0;
    RemoteScorer scorer(cfg, lib);
    CHECK_THROWS_AS(scorer.score("p", {}, "r"), BackendUnavailableError);
  }
}

TEST_CASE("remote scorer flags endpoints without log-prob echo") {
  FakeEndpoint endpoint;
  endpoint.echo_logprobs_ = false;
  const AttributeLibrary lib = load_default_library();
  RemoteScorer scorer(endpoint.config(), lib);
  CHECK_THROWS_AS(scorer.score("p", {}, "r"), BackendProtocolError);
}

TEST_CASE("bearer token is attached when EXACT_API_KEY is set") {
  FakeEndpoint endpoint;
  const AttributeLibrary lib = load_default_library();

  ::setenv("EXACT_API_KEY", "sk-test-123", 1);
  const RemoteConfig cfg = remote_config_from_env(endpoint.config());
  ::unsetenv("EXACT_API_KEY");
  CHECK(cfg.api_key == "sk-test-123");

  RemoteScorer scorer(cfg, lib);
  scorer.score("p", {}, "r");
  CHECK(endpoint.last_auth_ == "Bearer sk-test-123");
}

TEST_CASE("EXACT_BASE_URL overrides the configured endpoint") {
  ::setenv("EXACT_BASE_URL", "http://example.invalid:9/v2", 1);
  RemoteConfig cfg;
  cfg.base_url = "http://other/v1";
  cfg = remote_config_from_env(std::move(cfg));
  ::unsetenv("EXACT_BASE_URL");
  CHECK(cfg.base_url == "http://example.invalid:9/v2");
}

TEST_CASE("remote embedder normalizes endpoint vectors and pins the dimension") {
  FakeEndpoint endpoint;
  RemoteEmbedder embedder(endpoint.config());
  CHECK(embedder.dimension() == 0);  // unknown until the first call

  const auto v = embedder.embed("some text");
  REQUIRE(v.size() == 4);
  CHECK(v[0] == doctest::Approx(0.6));  // [3,0,4,0] normalized
  CHECK(v[2] == doctest::Approx(0.8));
  CHECK(embedder.dimension() == 4);
  CHECK(endpoint.last_body_["input"][0] == "some text");

  endpoint.embedding_ = {1.0, 2.0};  // endpoint suddenly changes dimension
  CHECK_THROWS_AS(embedder.embed("other"), DimensionMismatchError);
}

TEST_CASE("remote generator passes decoding parameters through") {
  FakeEndpoint endpoint;
  endpoint.echo_logprobs_ = false;  // plain text completion reply
  RemoteGenerator generator(endpoint.config());

  DecodingParams params;
  params.temperature = 0.4;
  params.top_k = 25;
  params.top_p = 0.9;
  params.max_new_tokens = 77;
  const std::string text = generator.generate("write a haiku", params);
  CHECK(text == "hi");
  CHECK(endpoint.last_body_["temperature"] == doctest::Approx(0.4));
  CHECK(endpoint.last_body_["top_k"] == 25);
  CHECK(endpoint.last_body_["top_p"] == doctest::Approx(0.9));
  CHECK(endpoint.last_body_["max_tokens"] == 77);
  CHECK(endpoint.last_body_["prompt"] == "write a haiku");
}
