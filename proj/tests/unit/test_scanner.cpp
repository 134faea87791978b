#include <filesystem>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "rpl/doc_model.hpp"
#include "rpl/inject.hpp"
#include "rpl/scanner.hpp"

using namespace rpl;

TEST_CASE("clean fixtures have no findings") {
  for (const auto& entry : std::filesystem::directory_iterator(test::corpus_dir())) {
    if (!format_from_path(entry.path())) continue;
    CAPTURE(entry.path().string());
    CHECK(scan(load_document(entry.path())).empty());
  }
}

TEST_CASE("injected span is the only new finding") {
  const Document doc = parse_document("<p>one</p><p>two</p>", DocFormat::Html);
  const Document out = inject(doc, "short", {0, 3, {}}, InvisibleFeature::HtmlHiddenSpan);
  const std::vector<Finding> findings = scan(out, "x.html");
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].text == "short");
  CHECK(findings[0].path == "x.html");
  CHECK(findings[0].kind == SpanKind::HiddenElement);
  CHECK(out.source.substr(findings[0].range.begin, findings[0].range.size()) == "short");
  CHECK(findings[0].severity == Severity::Info);
  CHECK_FALSE(any_suspicious(findings));
}

TEST_CASE("severity rules") {
  const Document doc = parse_document("```text\nbody\n```", DocFormat::Markdown);
  std::string payload;
  for (int i = 0; i < 30; ++i) payload += (i ? " " : "") + std::string("tok");
  CHECK(scan(inject(doc, payload, {0, 0, {}}, InvisibleFeature::MdFenceInfo))[0].severity == Severity::Suspicious);
  CHECK(scan(inject(doc, "a b c d e", {0, 0, {}}, InvisibleFeature::MdFenceInfo))[0].severity ==
        Severity::Suspicious);
  CHECK(scan(inject(doc, "a b c d", {0, 0, {}}, InvisibleFeature::MdFenceInfo))[0].severity == Severity::Info);
  CHECK(scan(inject(doc, "https://x.io", {0, 0, {}}, InvisibleFeature::MdFenceInfo))[0].severity ==
        Severity::Suspicious);
  CHECK(scan(inject(doc, "www.x.io", {0, 0, {}}, InvisibleFeature::MdFenceInfo))[0].severity ==
        Severity::Suspicious);
  ScanConfig strict;
  strict.suspicious_tokens = 2;
  CHECK(scan(inject(doc, "a b", {0, 0, {}}, InvisibleFeature::MdFenceInfo), "", strict)[0].severity ==
        Severity::Suspicious);
}
