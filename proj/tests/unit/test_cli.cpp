#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "rpl/cli.hpp"

using namespace rpl;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "rpl");
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "rpl_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

const std::string kDoc = (test::corpus_dir() / "install-basaltcli.md").string();

}  // namespace

TEST_CASE("help exits zero") {
  for (const char* cmd : {"attack", "evaluate", "scan", "parse"}) {
    const Run r = run({cmd, "--help"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("--") != std::string::npos);
  }
}

TEST_CASE("usage errors exit one") {
  CHECK(run({"nonsense"}).code == kExitError);
  CHECK(run({"parse", "--bogus"}).code == kExitError);
  const Run missing = run({"parse", "--input", "/no/such/file.md"});
  CHECK(missing.code == kExitError);
  CHECK_FALSE(missing.err.empty());
}

TEST_CASE("parse emits spans as json") {
  const Run r = run({"parse", "--input", kDoc});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(r.out);
  CHECK(j["spans"].size() > 3);
  CHECK(j["spans"][0].contains("visible"));
}

TEST_CASE("split and retrieve") {
  const Run s = run({"split", "--input", kDoc, "--chunk-size", "100", "--overlap", "10"});
  REQUIRE(s.code == kExitOk);
  CHECK(json::parse(s.out).size() > 1);
  const Run r = run({"retrieve", "--input", kDoc, "--query", "download installer", "--top-k", "2", "--chunk-size",
                     "100", "--overlap", "10"});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(r.out);
  CHECK(j.size() == 2);
  CHECK(j[0]["score"].get<double>() >= j[1]["score"].get<double>());
}

TEST_CASE("inject then scan exits two") {
  const std::string crafted = scratch("crafted.md").string();
  const Run inj = run({"inject", "--input", kDoc, "--payload", "one two three four five six", "--output", crafted});
  REQUIRE(inj.code == kExitOk);
  CHECK(json::parse(inj.out)["invisible"] == true);
  const Run sc = run({"scan", "--input", crafted});
  CHECK(sc.code == kExitSuspicious);
  const json finding = json::parse(sc.out.substr(0, sc.out.find('\n')));
  CHECK(finding["severity"] == "suspicious");
  CHECK(finding["text"] == "one two three four five six");
  CHECK(run({"scan", "--input", kDoc}).code == kExitOk);
  CHECK(run({"scan", "--input", test::corpus_dir().string()}).code == kExitOk);
}

TEST_CASE("attack pipeline writes a result") {
  const std::string out = scratch("attacked.md").string();
  const Run r = run({"attack", "--doc", kDoc, "--question", "Where can I download the official installer for Basaltcli?",
                     "--target", "You can download the official installer from https://get.quillnote.app/desktop/setup .",
                     "--crucial", "https://get.quillnote.app/desktop/setup", "--corpus", test::corpus_dir().string(),
                     "--epochs", "20", "--noisy-copies", "0", "--max-step", "3", "--seed", "1", "--output", out});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(r.out);
  CHECK(j.contains("success"));
  CHECK(j["loss_trace"].size() == j["iterations"].get<std::size_t>());
  CHECK(std::filesystem::exists(out));
}

TEST_CASE("train-toy writes model and vocab") {
  const std::string model = scratch("m.bin").string();
  const std::string vocab = scratch("v.json").string();
  const Run r = run({"train-toy", "--corpus", test::corpus_dir().string(), "--epochs", "2", "--noisy-copies", "0",
                     "--out", model, "--vocab-out", vocab});
  REQUIRE(r.code == kExitOk);
  CHECK(json::parse(r.out)["loss_curve"].size() == 2);
  CHECK(std::filesystem::exists(model));
  CHECK(std::filesystem::exists(vocab));
}
