#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "exact/detail/rand.hpp"
#include "exact/retrieval.hpp"
#include "support/fixtures.hpp"

using namespace exact;
using exact::testing::make_topic_prompt;
using exact::testing::topic_word_pool;

namespace {

double norm(const std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

UserMemory tiny_memory(int dim = 4) {
  UserMemory m;
  m.user_id = "u";
  m.embedding_dim = dim;
  return m;
}

IndexEntry raw_entry(std::string prompt, std::vector<double> e, double objective,
                     std::int64_t seq) {
  IndexEntry entry;
  entry.prompt = std::move(prompt);
  const double n = norm(e);
  for (double& x : e) x /= n;
  entry.embedding = std::move(e);
  entry.objective = objective;
  entry.created_seq = seq;
  return entry;
}

}  // namespace

TEST_CASE("synthetic embedder: deterministic unit vectors") {
  SyntheticEmbedder emb({3, 64});
  const auto a = emb.embed("what is a monad");
  const auto b = emb.embed("what is a monad");
  CHECK(a == b);
  CHECK(norm(a) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-9));

  SyntheticEmbedder other_seed({4, 64});
  CHECK(emb.embed("same text") != other_seed.embed("same text"));
  CHECK_THROWS_AS(emb.embed(""), EmptyFieldError);
}

TEST_CASE("near-duplicate prompts stay near; word-disjoint prompts are near-orthogonal") {
  SyntheticEmbedder emb({11, 64});
  const auto a = emb.embed("please summarize the quarterly sales report");
  const auto b = emb.embed("please summarize the quarterly sales reports now");
  CHECK(cosine_similarity(a, b) > 0.6);

  // Monte Carlo over word-disjoint prompt pairs. The cosine of two
  // independent unit vectors concentrates with std about 1/sqrt(d), so the
  // mass inside +/-0.2 is ~0.87 at d=64 and clears 0.99 only at higher
  // dimensions; both measured rates are pinned here.
  const char* kWords[] = {
      "alpha", "bravo", "charlie", "delta",  "echo",   "foxtrot", "golf",   "hotel",
      "india", "juliet", "kilo",   "lima",   "mike",   "november", "oscar", "papa",
      "quebec", "romeo", "sierra", "tango",  "uniform", "victor", "whiskey", "xray",
      "yankee", "zulu",  "amber",  "basil",  "cedar",  "dahlia",  "elm",    "fern"};
  const std::uint64_t half = 16;
  for (const auto& [dim, min_rate] : std::vector<std::pair<int, double>>{
           {64, 0.85}, {384, 0.99}}) {
    SyntheticEmbedder e({12345, dim});
    detail::Rng rng(99);
    int ok = 0;
    const int trials = 4000;
    for (int t = 0; t < trials; ++t) {
      std::string p1;
      std::string p2;
      for (int w = 0; w < 6; ++w) {
        p1 += kWords[rng.next_below(half)];
        p1 += ' ';
        p2 += kWords[half + rng.next_below(half)];
        p2 += ' ';
      }
      p1 += "a" + std::to_string(t);
      p2 += "b" + std::to_string(t);
      if (std::abs(cosine_similarity(e.embed(p1), e.embed(p2))) < 0.2) ++ok;
    }
    CHECK(static_cast<double>(ok) / trials >= min_rate);
  }
}

TEST_CASE("retrieve: exact prompt match wins with similarity 1") {
  SyntheticEmbedder emb({5, 32});
  UserMemory m = tiny_memory(32);
  m.entries.push_back(raw_entry("first prompt", emb.embed("first prompt"), 0.1, 0));
  m.entries.push_back(raw_entry("second prompt", emb.embed("second prompt"), 0.2, 1));

  const RetrievalResult hit = retrieve(m, "second prompt", emb);
  CHECK(hit.entry.prompt == "second prompt");
  CHECK(hit.similarity == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(hit.runner_up_similarity.has_value());
  CHECK(hit.similarity >= *hit.runner_up_similarity);
  CHECK(hit.margin == doctest::Approx(hit.similarity - *hit.runner_up_similarity));
}

TEST_CASE("retrieve: singleton memory always returns its entry, margin infinite") {
  SyntheticEmbedder emb({5, 32});
  UserMemory m = tiny_memory(32);
  m.entries.push_back(raw_entry("only one", emb.embed("only one"), 0.0, 0));
  const RetrievalResult hit = retrieve(m, "totally unrelated words", emb);
  CHECK(hit.entry.prompt == "only one");
  CHECK_FALSE(hit.runner_up_similarity.has_value());
  CHECK(std::isinf(hit.margin));
}

TEST_CASE("retrieve: errors on empty memory and dimension mismatch") {
  SyntheticEmbedder emb({5, 32});
  UserMemory m = tiny_memory(32);
  CHECK_THROWS_AS(retrieve(m, "q", emb), EmptyMemoryError);
  m.entries.push_back(raw_entry("p", emb.embed("p"), 0.0, 0));
  SyntheticEmbedder wrong({5, 16});
  CHECK_THROWS_AS(retrieve(m, "q", wrong), DimensionMismatchError);
}

TEST_CASE("retrieve: equal similarities resolve to the lowest created_seq") {
  SyntheticEmbedder emb({5, 4});
  UserMemory m = tiny_memory(4);
  m.entries.push_back(raw_entry("pa", {1, 0, 0, 0}, 0.0, 0));
  m.entries.push_back(raw_entry("pb", {1, 0, 0, 0}, 0.0, 1));  // same direction
  UserMemory probe = m;
  // Query along the shared direction: exact tie.
  struct FixedEmbedder final : Embedder {
    std::vector<double> embed(const std::string&) override { return {1, 0, 0, 0}; }
    int dimension() const override { return 4; }
  } fixed;
  const RetrievalResult hit = retrieve(probe, "anything", fixed);
  CHECK(hit.entry.created_seq == 0);
  CHECK(hit.margin == doctest::Approx(0.0));
}

TEST_CASE("retrieve agrees with an independent brute-force argmax") {
  SyntheticEmbedder emb({21, 24});
  detail::Rng rng(4242);
  for (int trial = 0; trial < 40; ++trial) {
    UserMemory m = tiny_memory(24);
    const int n = 2 + static_cast<int>(rng.next_below(30));
    for (int i = 0; i < n; ++i) {
      const std::string prompt = "entry " + std::to_string(trial) + " " + std::to_string(i);
      m.entries.push_back(raw_entry(prompt, emb.embed(prompt), 0.0, i));
    }
    const std::string query = "query text number " + std::to_string(trial);
    const RetrievalResult hit = retrieve(m, query, emb);

    // Brute force over raw dot products of normalized vectors.
    const auto q = emb.embed(query);
    int best = -1;
    double best_dot = -2.0;
    for (int i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t c = 0; c < q.size(); ++c) {
        dot += q[c] * m.entries[static_cast<std::size_t>(i)].embedding[c];
      }
      if (dot > best_dot) {
        best_dot = dot;
        best = i;
      }
    }
    CHECK(hit.entry.created_seq == best);
    CHECK(hit.similarity == doctest::Approx(best_dot).epsilon(1e-9));
  }
}

TEST_CASE("cosine is scale-free") {
  detail::Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(8);
    std::vector<double> b(8);
    for (int i = 0; i < 8; ++i) {
      a[static_cast<std::size_t>(i)] = rng.next_uniform(-1, 1);
      b[static_cast<std::size_t>(i)] = rng.next_uniform(-1, 1);
    }
    std::vector<double> a3 = a;
    std::vector<double> bh = b;
    for (double& x : a3) x *= 3.7;
    for (double& x : bh) x *= 0.01;
    CHECK(cosine_similarity(a, b) ==
          doctest::Approx(cosine_similarity(a3, bh)).epsilon(1e-9));
  }
}

TEST_CASE("two-topic construction retrieves the same-topic entry") {
  const AttributeLibrary lib = load_default_library();
  int hits = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = 9000 + static_cast<std::uint64_t>(t);
    SyntheticOracle oracle(make_disjoint_oracle_spec(lib, seed, 2, 3, 1.0, 0.0), lib);
    SyntheticEmbedder emb({seed, 64});
    detail::Rng rng(seed);

    UserMemory m = tiny_memory(64);
    const std::string pa = make_topic_prompt(oracle, 0, topic_word_pool(0), rng, 0);
    const std::string pb = make_topic_prompt(oracle, 1, topic_word_pool(1), rng, 1);
    m.entries.push_back(raw_entry(pa, emb.embed(pa), 1.0, 0));
    m.entries.push_back(raw_entry(pb, emb.embed(pb), 1.0, 1));

    const std::string query = make_topic_prompt(oracle, 0, topic_word_pool(0), rng, 2);
    if (retrieve(m, query, emb).entry.prompt == pa) ++hits;
  }
  CHECK(static_cast<double>(hits) / trials >= 0.99);
}

TEST_CASE("append: add, keep-higher, replace-preserving-seq") {
  SyntheticEmbedder emb({5, 32});
  UserMemory m = tiny_memory(32);
  AttributeSubset s1;
  s1.members = {1};
  s1.gains = {0.5};
  AttributeSubset s2;
  s2.members = {2};
  s2.gains = {0.9};

  m = append(m, "prompt one", s1, 0.5, emb);
  CHECK(m.size() == 1);
  m = append(m, "prompt two", s2, 0.9, emb);
  CHECK(m.size() == 2);
  CHECK(m.entries[1].created_seq == 1);

  // Lower objective: unchanged.
  const UserMemory unchanged = append(m, "prompt one", s2, 0.1, emb);
  CHECK(unchanged.entries[0].subset.members == s1.members);
  CHECK(unchanged.entries[0].objective == 0.5);

  // Higher objective: replaced, created_seq of the slot preserved.
  const UserMemory replaced = append(m, "prompt one", s2, 1.5, emb);
  CHECK(replaced.entries[0].subset.members == s2.members);
  CHECK(replaced.entries[0].objective == 1.5);
  CHECK(replaced.entries[0].created_seq == 0);
  CHECK(replaced.size() == 2);
}

TEST_CASE("memory persistence: equal after round trip, byte-stable on re-save") {
  SyntheticEmbedder emb({5, 16});
  UserMemory m = tiny_memory(16);
  AttributeSubset s;
  s.members = {3, 1};
  s.gains = {0.7, 0.2};
  m = append(m, "alpha beta", s, 1.25, emb);
  m = append(m, "gamma delta", s, -0.5, emb);

  save_memory(m, "mem_roundtrip.jsonl", "deadbeef");
  const MemoryFile loaded = load_memory("mem_roundtrip.jsonl");
  CHECK(loaded.library_hash == "deadbeef");
  REQUIRE(loaded.memory.size() == 2);
  CHECK(loaded.memory.user_id == m.user_id);
  CHECK(loaded.memory.entries[0].prompt == "alpha beta");
  CHECK(loaded.memory.entries[0].embedding == m.entries[0].embedding);
  CHECK(loaded.memory.entries[0].subset.members == s.members);
  CHECK(loaded.memory.entries[0].subset.gains == s.gains);
  CHECK(loaded.memory.entries[0].objective == 1.25);

  save_memory(loaded.memory, "mem_roundtrip2.jsonl", loaded.library_hash);
  std::ifstream f1("mem_roundtrip.jsonl", std::ios::binary);
  std::ifstream f2("mem_roundtrip2.jsonl", std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)),
                       std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)),
                       std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK(b1.find("\"format\":\"exact-index\"") != std::string::npos);
}

TEST_CASE("memory persistence: corrupt files are rejected with a line number") {
  SyntheticEmbedder emb({5, 16});
  UserMemory m = tiny_memory(16);
  AttributeSubset s;
  m = append(m, "alpha", s, 1.0, emb);
  m = append(m, "beta", s, 2.0, emb);
  save_memory(m, "mem_corrupt.jsonl", "h");

  SUBCASE("truncated line") {
    std::ifstream in("mem_corrupt.jsonl", std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out("mem_trunc.jsonl", std::ios::binary);
    out << all.substr(0, all.size() - 20);
    out.close();
    CHECK_THROWS_AS(load_memory("mem_trunc.jsonl"), CorruptIndexError);
    try {
      load_memory("mem_trunc.jsonl");
    } catch (const CorruptIndexError& e) {
      CHECK(e.line == 3);
    }
  }

  SUBCASE("mixed embedding dimensions") {
    std::ofstream out("mem_dims.jsonl", std::ios::binary);
    out << R"({"format":"exact-index","version":1,"user_id":"u","dim":2,"library_hash":"h"})"
        << "\n";
    out << R"({"prompt":"a","embedding":[1.0,0.0],"attributes":[],"gains":[],"objective":0.0,"seq":0})"
        << "\n";
    out << R"({"prompt":"b","embedding":[1.0,0.0,0.0],"attributes":[],"gains":[],"objective":0.0,"seq":1})"
        << "\n";
    out.close();
    CHECK_THROWS_AS(load_memory("mem_dims.jsonl"), CorruptIndexError);
  }

  SUBCASE("non-unit embedding") {
    std::ofstream out("mem_norm.jsonl", std::ios::binary);
    out << R"({"format":"exact-index","version":1,"user_id":"u","dim":2,"library_hash":"h"})"
        << "\n";
    out << R"({"prompt":"a","embedding":[2.0,0.0],"attributes":[],"gains":[],"objective":0.0,"seq":0})"
        << "\n";
    out.close();
    CHECK_THROWS_AS(load_memory("mem_norm.jsonl"), CorruptIndexError);
  }

  SUBCASE("wrong format marker") {
    std::ofstream out("mem_fmt.jsonl", std::ios::binary);
    out << R"({"format":"something-else","version":1})" << "\n";
    out.close();
    CHECK_THROWS_AS(load_memory("mem_fmt.jsonl"), CorruptIndexError);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_memory("does_not_exist.jsonl"), IoError);
  }
}
