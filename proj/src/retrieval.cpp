#include "exact/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "exact/detail/rand.hpp"

namespace exact {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> word_tokens(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

}  // namespace

SyntheticEmbedder::SyntheticEmbedder(SyntheticEmbedderSpec spec) : spec_(spec) {
  if (spec_.dimension < 2) {
    throw Error("embedding dimension must be at least 2");
  }
}

std::vector<double> SyntheticEmbedder::embed(const std::string& prompt) {
  if (prompt.empty()) throw EmptyFieldError("prompt is empty");

  std::vector<double> v(static_cast<std::size_t>(spec_.dimension), 0.0);
  const auto words = word_tokens(prompt);

  auto add_shingle = [&](const std::string& shingle) {
    std::uint64_t h = detail::fnv1a64_u64(spec_.seed);
    h = detail::fnv1a64(shingle, h);
    h = detail::mix64(h);
    const std::size_t idx = static_cast<std::size_t>(h % static_cast<std::uint64_t>(spec_.dimension));
    const double sign = (h >> 63) ? 1.0 : -1.0;
    v[idx] += sign;
  };

  for (const auto& w : words) add_shingle(w);
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    add_shingle(words[i] + " " + words[i + 1]);
  }
  if (words.empty()) add_shingle(prompt);  // punctuation-only prompt

  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) {
    // All shingles cancelled; fall back to a deterministic one-hot.
    std::uint64_t h = detail::mix64(detail::fnv1a64(prompt, detail::fnv1a64_u64(spec_.seed)));
    v[static_cast<std::size_t>(h % static_cast<std::uint64_t>(spec_.dimension))] = 1.0;
    sq = 1.0;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return v;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatchError("cosine of vectors with dims " + std::to_string(a.size()) +
                                 " and " + std::to_string(b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error("cosine of a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

RetrievalResult retrieve(const UserMemory& memory, const std::string& prompt,
                         Embedder& embedder) {
  if (memory.empty()) throw EmptyMemoryError("cannot retrieve from an empty memory");
  if (embedder.dimension() != memory.embedding_dim) {
    throw DimensionMismatchError("embedder dim " + std::to_string(embedder.dimension()) +
                                 " != memory dim " + std::to_string(memory.embedding_dim));
  }
  const std::vector<double> q = embedder.embed(prompt);

  // Entries are stored in increasing created_seq order, so a strict
  // comparison makes ties resolve toward the lowest created_seq.
  std::size_t best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  double second_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < memory.entries.size(); ++i) {
    const double sim = cosine_similarity(q, memory.entries[i].embedding);
    if (sim > best_sim) {
      second_sim = best_sim;
      best_sim = sim;
      best = i;
    } else if (sim > second_sim) {
      second_sim = sim;
    }
  }

  RetrievalResult out;
  out.entry = memory.entries[best];
  out.similarity = best_sim;
  if (memory.entries.size() > 1) {
    out.runner_up_similarity = second_sim;
    out.margin = best_sim - second_sim;
  } else {
    out.margin = std::numeric_limits<double>::infinity();
  }
  return out;
}

UserMemory append(const UserMemory& memory, const std::string& prompt,
                  const AttributeSubset& subset, double objective, Embedder& embedder) {
  if (embedder.dimension() != memory.embedding_dim) {
    throw DimensionMismatchError("embedder dim " + std::to_string(embedder.dimension()) +
                                 " != memory dim " + std::to_string(memory.embedding_dim));
  }
  UserMemory out = memory;
  for (auto& entry : out.entries) {
    if (entry.prompt != prompt) continue;
    if (objective > entry.objective) {
      entry.subset = subset;
      entry.objective = objective;
      entry.embedding = embedder.embed(prompt);  // created_seq keeps the original slot
    }
    return out;
  }
  IndexEntry entry;
  entry.prompt = prompt;
  entry.embedding = embedder.embed(prompt);
  entry.subset = subset;
  entry.objective = objective;
  entry.created_seq = out.entries.empty() ? 0 : out.entries.back().created_seq + 1;
  out.entries.push_back(std::move(entry));
  return out;
}

void save_memory(const UserMemory& memory, const std::string& path,
                 const std::string& library_hash) {
  validate_memory(memory);
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";

  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());

    ordered_json header;
    header["format"] = "exact-index";
    header["version"] = 1;
    header["user_id"] = memory.user_id;
    header["dim"] = memory.embedding_dim;
    header["library_hash"] = library_hash;
    out << header.dump() << "\n";

    for (const auto& entry : memory.entries) {
      ordered_json line;
      line["prompt"] = entry.prompt;
      line["embedding"] = entry.embedding;
      line["attributes"] = entry.subset.members;
      line["gains"] = entry.subset.gains;
      line["objective"] = entry.objective;
      line["seq"] = entry.created_seq;
      out << line.dump() << "\n";
    }
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }

  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("rename failed: " + ec.message());
}

MemoryFile load_memory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);

  std::string line;
  if (!std::getline(in, line)) throw CorruptIndexError("missing header", 1);

  MemoryFile out;
  int line_no = 1;
  try {
    const ordered_json header = ordered_json::parse(line);
    if (header.value("format", "") != "exact-index") {
      throw CorruptIndexError("not an exact-index file", 1);
    }
    if (header.value("version", 0) != 1) {
      throw CorruptIndexError("unsupported index version", 1);
    }
    out.memory.user_id = header.at("user_id").get<std::string>();
    out.memory.embedding_dim = header.at("dim").get<int>();
    out.library_hash = header.at("library_hash").get<std::string>();
  } catch (const CorruptIndexError&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptIndexError(std::string("bad header: ") + e.what(), 1);
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const ordered_json j = ordered_json::parse(line);
      IndexEntry entry;
      entry.prompt = j.at("prompt").get<std::string>();
      entry.embedding = j.at("embedding").get<std::vector<double>>();
      entry.subset.members = j.at("attributes").get<std::vector<AttributeId>>();
      entry.subset.gains = j.value("gains", std::vector<double>{});
      entry.objective = j.at("objective").get<double>();
      entry.created_seq = j.at("seq").get<std::int64_t>();
      out.memory.entries.push_back(std::move(entry));
    } catch (const std::exception& e) {
      throw CorruptIndexError(std::string("bad entry: ") + e.what(), line_no);
    }
  }

  try {
    validate_memory(out.memory);
  } catch (const std::exception& e) {
    throw CorruptIndexError(std::string("invariant violation: ") + e.what(), line_no);
  }
  return out;
}

}  // namespace exact
