#include "rpl/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "rpl/error.hpp"
#include "text_util.hpp"

namespace rpl {

namespace {

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (at < text.size()) {
    while (at < text.size() && detail::is_space(text[at])) ++at;
    std::size_t end = at;
    while (end < text.size() && !detail::is_space(text[end])) ++end;
    std::size_t first = at;
    std::size_t last = end;
    while (first < last && is_punct(text[first])) out.emplace_back(1, text[first++]);
    std::size_t tail = last;
    while (tail > first && is_punct(text[tail - 1])) --tail;
    if (tail > first) out.push_back(detail::to_lower(text.substr(first, tail - first)));
    for (std::size_t i = tail; i < last; ++i) out.emplace_back(1, text[i]);
    at = end;
  }
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (detail::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

Vocab::Vocab() {
  add("<unk>");
  add("<bos>");
  add("<eos>");
}

void Vocab::add(std::string word) {
  ids_.emplace(word, static_cast<TokenId>(words_.size()));
  words_.push_back(std::move(word));
}

Vocab Vocab::build(std::span<const std::string> texts) {
  std::set<std::string> words;
  for (const std::string& t : texts) {
    for (std::string& w : split_words(t)) words.insert(std::move(w));
  }
  return from_words(std::vector<std::string>(words.begin(), words.end()));
}

Vocab Vocab::from_words(std::span<const std::string> words) {
  Vocab v;
  for (const std::string& w : words) {
    if (!v.find(w)) v.add(w);
  }
  return v;
}

TokenId Vocab::id(std::string_view word) const { return find(word).value_or(kUnk); }

std::optional<TokenId> Vocab::find(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocab::word(TokenId id) const {
  if (id >= words_.size()) throw Error(ErrorCode::InvalidArgument, "token id out of range");
  return words_[id];
}

std::string Vocab::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < words_.size(); ++i) j[words_[i]] = i;
  return j.dump(1);
}

Vocab Vocab::from_json(std::string_view json_text) {
  std::vector<std::string> words;
  try {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    words.resize(j.size());
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto id = it.value().get<std::size_t>();
      if (id >= words.size() || !words[id].empty()) {
        throw Error(ErrorCode::InvalidArgument, "vocab ids must be a permutation of 0..V-1");
      }
      words[id] = it.key();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad vocab file: ") + e.what());
  }
  if (words.size() < 4 || words[kUnk] != "<unk>" || words[kBos] != "<bos>" || words[kEos] != "<eos>") {
    throw Error(ErrorCode::InvalidArgument, "vocab must start with <unk>, <bos>, <eos> and hold >= 4 entries");
  }
  Vocab v;
  for (std::size_t i = kFirstWordId; i < words.size(); ++i) v.add(words[i]);
  return v;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_json() << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

TokenSeq tokenize(std::string_view text, const Vocab& vocab) {
  TokenSeq out;
  for (const std::string& w : split_words(text)) out.push_back(vocab.id(w));
  return out;
}

std::string detokenize(std::span<const TokenId> tokens, const Vocab& vocab) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += vocab.word(tokens[i]);
  }
  return out;
}

}  // namespace rpl
