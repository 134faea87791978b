#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "rpl/error.hpp"
#include "rpl/eval.hpp"

using namespace rpl;

namespace {

const std::vector<AttackCase>& manifest() {
  static const std::vector<AttackCase> cases = load_manifest(test::corpus_dir() / "manifest.json");
  return cases;
}

const Vocab& corpus_vocab() {
  static const Vocab v = [] {
    const std::vector<PromptTemplate> templates{qa_scenario_template(), direct_template()};
    return build_corpus_vocab(manifest(), templates, PipelineConfig{});
  }();
  return v;
}

// Answers every question with that case's malicious target response.
test::ScriptedOracle always_target() {
  return test::ScriptedOracle(corpus_vocab(), [](const std::string& input) {
    for (const AttackCase& c : manifest()) {
      const std::string question = detokenize(tokenize(c.question, corpus_vocab()), corpus_vocab());
      if (input.find(question) != std::string::npos) return c.target_response;
    }
    return std::string("unknown");
  });
}

CaseResult successful_row(const AttackCase& c, const std::string& marker) {
  CaseResult r;
  r.id = c.id;
  r.format = c.format;
  r.status = CaseStatus::Completed;
  r.success = true;
  r.question = c.question;
  r.retrieved = {{marker, {0, marker.size()}, {}}};
  r.target = TargetResponse::from_text(c.target_response, c.target, corpus_vocab());
  return r;
}

}  // namespace

TEST_CASE("manifest mirrors the format counts") {
  const std::vector<AttackCase>& cases = manifest();
  REQUIRE(cases.size() == 30);
  std::map<DocFormat, int> counts;
  int attack = 0;
  for (const AttackCase& c : cases) {
    ++counts[c.format];
    attack += c.attack ? 1 : 0;
    CHECK_NOTHROW(c.validate());
    CHECK(std::filesystem::exists(c.document));
  }
  CHECK(counts[DocFormat::Pdf] == 14);
  CHECK(counts[DocFormat::Markdown] == 10);
  CHECK(counts[DocFormat::Html] == 6);
  CHECK(attack == 20);
}

TEST_CASE("targets are in vocabulary") {
  for (const AttackCase& c : manifest()) {
    for (TokenId id : tokenize(c.target, corpus_vocab())) CHECK(id != kUnk);
  }
}

TEST_CASE("empty target is rejected") {
  AttackCase c = manifest()[0];
  c.target.clear();
  CHECK_THROWS_AS(c.validate(), Error);
  const test::ScriptedOracle oracle = always_target();
  const CaseResult r = run_case(c, oracle, PipelineConfig{}, AttackConfig{}, GenerationConfig{});
  CHECK(r.status == CaseStatus::Failed);
  CHECK_FALSE(r.success);
}

TEST_CASE("pre-satisfied suite") {
  const test::ScriptedOracle oracle = always_target();
  const std::vector<double> temps{0.7};
  const EvalReport report = run_suite(manifest(), oracle, PipelineConfig{}, AttackConfig{}, GenerationConfig{}, temps);
  REQUIRE(report.settings.size() == 1);
  const SettingReport& s = report.settings[0];
  CHECK(s.asr == 100.0);
  CHECK(s.attack_asr == 100.0);
  CHECK(s.mean_iterations == 1.0);
  CHECK(s.retrieval_preservation == 100.0);
  REQUIRE(s.formats.size() == 3);
  CHECK(s.formats[0].format == DocFormat::Pdf);
  CHECK(s.formats[0].count == 14);
  CHECK(s.formats[1].count == 10);
  CHECK(s.formats[2].count == 6);
  for (const FormatRow& row : s.formats) CHECK(row.injection >= row.asr);

  SettingReport copy = s;
  copy.asr = copy.mean_seq = -1;
  copy.formats.clear();
  aggregate(copy);
  CHECK(report_json({{copy}}) == report_json(report));
  CHECK(report_json(report) == report_json(run_suite(manifest(), oracle, PipelineConfig{}, AttackConfig{},
                                                     GenerationConfig{}, temps)));
  CHECK(report_table(report).find("ASR") != std::string::npos);
}

TEST_CASE("aggregates are recomputed from rows") {
  SettingReport s;
  for (int i = 0; i < 4; ++i) {
    CaseResult r;
    r.format = i < 3 ? DocFormat::Pdf : DocFormat::Html;
    r.success = i == 0;
    r.attack_success = i < 2;
    r.conveyed = i != 1;
    r.iterations = static_cast<std::size_t>(i + 1);
    s.cases.push_back(r);
  }
  aggregate(s);
  CHECK(s.asr == 25.0);
  CHECK(s.attack_asr == 50.0);
  CHECK(s.mean_iterations == 2.5);
  REQUIRE(s.formats.size() == 2);
  CHECK(s.formats[0].injection == doctest::Approx(200.0 / 3.0));
  CHECK(s.formats[1].asr == 0.0);
}

TEST_CASE("transfer under the same template keeps every success") {
  std::vector<CaseResult> rows;
  for (std::size_t i = 0; i < 4; ++i) rows.push_back(successful_row(manifest()[i], "chunk"));
  const test::ScriptedOracle oracle = always_target();
  const TransferResult t = transfer_eval(rows, qa_scenario_template(), oracle, GenerationConfig{});
  CHECK(t.successful == 4);
  CHECK(t.asr == 100.0);
  CHECK(t.warning.empty());
}

TEST_CASE("transfer with nothing to transfer") {
  const test::ScriptedOracle oracle = always_target();
  const TransferResult t = transfer_eval({}, direct_template(), oracle, GenerationConfig{});
  CHECK(t.asr == 0.0);
  CHECK_FALSE(t.warning.empty());
}

TEST_CASE("allowed tokens exclude carrier breakers") {
  const std::vector<std::string> words{"ok", "a<b", "x```"};
  const Vocab v = Vocab::from_words(words);
  const std::vector<bool> html = allowed_tokens(v, DocFormat::Html);
  const std::vector<bool> md = allowed_tokens(v, DocFormat::Markdown);
  CHECK_FALSE(html[kEos]);
  CHECK(html[v.id("ok")]);
  CHECK_FALSE(html[v.id("a<b")]);
  CHECK(md[v.id("a<b")]);
  CHECK_FALSE(md[v.id("x```")]);
}
