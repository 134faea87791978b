#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rpl {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kUnk = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kFirstWordId = 3;

// Lowercased word-and-punctuation split. Text is cut at whitespace; leading
// and trailing ASCII punctuation of each piece become one-character tokens,
// the interior stays whole ("ColossalAI!" -> "colossalai", "!";
// "https://x.org/a." -> "https://x.org/a", ".").
std::vector<std::string> split_words(std::string_view text);

// Lowercase and collapse whitespace runs to one space, trimmed.
std::string normalize_text(std::string_view text);

class Vocab {
 public:
  // Reserved entries only.
  Vocab();

  // Reserved ids first, then every distinct word of `texts` in lexicographic
  // order.
  static Vocab build(std::span<const std::string> texts);
  static Vocab from_words(std::span<const std::string> words);

  std::size_t size() const { return words_.size(); }
  TokenId id(std::string_view word) const;  // kUnk when absent
  std::optional<TokenId> find(std::string_view word) const;
  const std::string& word(TokenId id) const;
  bool reserved(TokenId id) const { return id < kFirstWordId; }

  // JSON object word -> id.
  std::string to_json() const;
  static Vocab from_json(std::string_view json_text);
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  bool operator==(const Vocab& other) const { return words_ == other.words_; }

 private:
  void add(std::string word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
};

TokenSeq tokenize(std::string_view text, const Vocab& vocab);
// Joins token strings with single spaces.
std::string detokenize(std::span<const TokenId> tokens, const Vocab& vocab);

}  // namespace rpl
