#include "rpl/retriever.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "rpl/error.hpp"
#include "rpl/simd.hpp"

namespace rpl {

std::size_t trigram_bucket(std::string_view trigram) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : trigram) {
    h ^= c;
    h *= 16777619u;
  }
  return h % kEmbeddingDim;
}

EmbeddingVector embed(std::string_view text) {
  EmbeddingVector v{};
  std::string word = "#";
  auto flush = [&] {
    if (word.size() == 1) return;
    word += '#';
    for (std::size_t i = 0; i + 3 <= word.size(); ++i) {
      v[trigram_bucket(std::string_view(word).substr(i, 3))] += 1.0;
    }
    word = "#";
  };
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::isalnum(u)) {
      word += static_cast<char>(std::tolower(u));
    } else {
      flush();
    }
  }
  flush();
  const double norm = std::sqrt(simd::dot(v, v));
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  const double na = std::sqrt(simd::dot(a, a));
  const double nb = std::sqrt(simd::dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return simd::dot(a, b) / (na * nb);
}

VectorStore index(std::span<const Chunk> chunks) {
  VectorStore store;
  store.entries.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    store.entries.push_back({i, embed(chunks[i].text), chunks[i]});
  }
  return store;
}

std::vector<ScoredChunk> rank(const VectorStore& store, std::string_view query, std::size_t top_k) {
  if (top_k == 0) throw Error(ErrorCode::InvalidArgument, "top_k must be >= 1");
  const EmbeddingVector q = embed(query);
  std::vector<ScoredChunk> scored;
  scored.reserve(store.size());
  for (const StoreEntry& e : store.entries) scored.push_back({e.id, cosine(q, e.vector), e.chunk});
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (scored.size() > top_k) scored.resize(top_k);
  return scored;
}

std::vector<Chunk> retrieve(const VectorStore& store, std::string_view query, std::size_t top_k) {
  std::vector<Chunk> out;
  for (ScoredChunk& s : rank(store, query, top_k)) out.push_back(std::move(s.chunk));
  return out;
}

void save_store(const VectorStore& store, const std::filesystem::path& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const StoreEntry& e : store.entries) {
    nlohmann::json j;
    j["id"] = e.id;
    j["vector"] = e.vector;
    j["text"] = e.chunk.text;
    j["start"] = e.chunk.range.begin;
    j["end"] = e.chunk.range.end;
    j["section"] = e.chunk.section ? nlohmann::json(*e.chunk.section) : nlohmann::json(nullptr);
    arr.push_back(std::move(j));
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << arr.dump() << '\n';
}

VectorStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  VectorStore store;
  try {
    const nlohmann::json arr = nlohmann::json::parse(in);
    for (const auto& j : arr) {
      StoreEntry e;
      e.id = j.at("id").get<std::size_t>();
      const auto values = j.at("vector").get<std::vector<double>>();
      if (values.size() != kEmbeddingDim) {
        throw Error(ErrorCode::InvalidArgument, "stored vector has wrong dimension");
      }
      std::copy(values.begin(), values.end(), e.vector.begin());
      e.chunk.text = j.at("text").get<std::string>();
      e.chunk.range = {j.value("start", std::size_t{0}), j.value("end", e.chunk.text.size())};
      if (j.contains("section") && !j["section"].is_null()) e.chunk.section = j["section"].get<std::size_t>();
      for (const StoreEntry& prior : store.entries) {
        if (prior.id == e.id) throw Error(ErrorCode::InvalidArgument, "duplicate chunk id");
      }
      store.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad store file: ") + e.what());
  }
  return store;
}

}  // namespace rpl
