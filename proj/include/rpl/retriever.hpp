#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "rpl/chunker.hpp"

namespace rpl {

inline constexpr std::size_t kEmbeddingDim = 256;

using EmbeddingVector = std::array<double, kEmbeddingDim>;

// Deterministic toy embedder. Text is lowercased and cut into words (maximal
// runs of ASCII letters and digits); every word is wrapped as "#word#" and
// each of its character 3-grams is hashed with 32-bit FNV-1a into one of 256
// buckets. The term-frequency vector is L2-normalized; text without words
// embeds to the zero vector.
EmbeddingVector embed(std::string_view text);

// Hash bucket of one 3-gram; exposed for tests.
std::size_t trigram_bucket(std::string_view trigram);

// Cosine similarity; 0 when either vector is zero.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct StoreEntry {
  std::size_t id = 0;
  EmbeddingVector vector{};
  Chunk chunk;
};

struct VectorStore {
  std::vector<StoreEntry> entries;

  std::size_t size() const { return entries.size(); }
};

// One entry per chunk, ids 0..n-1 in insertion order.
VectorStore index(std::span<const Chunk> chunks);

struct ScoredChunk {
  std::size_t id;
  double score;
  Chunk chunk;
};

// Top min(top_k, size) entries by descending cosine to embed(query), ties by
// ascending id. Throws Error(InvalidArgument) when top_k == 0.
std::vector<ScoredChunk> rank(const VectorStore& store, std::string_view query, std::size_t top_k);
std::vector<Chunk> retrieve(const VectorStore& store, std::string_view query, std::size_t top_k);

// JSON array of {id, vector, text, start, end, section}.
void save_store(const VectorStore& store, const std::filesystem::path& path);
VectorStore load_store(const std::filesystem::path& path);

}  // namespace rpl
