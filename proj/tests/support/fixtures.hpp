#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace rpl::test {

inline std::filesystem::path fixtures_dir() { return RPL_FIXTURES_DIR; }
inline std::filesystem::path corpus_dir() { return fixtures_dir() / "corpus"; }

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rpl::test
