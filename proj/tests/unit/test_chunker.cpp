#include <string>
#include <vector>

#include "doctest.h"
#include "rpl/chunker.hpp"
#include "rpl/doc_model.hpp"
#include "rpl/error.hpp"
#include "rpl/inject.hpp"

using namespace rpl;

namespace {

std::vector<CharRange> ranges(const std::vector<Chunk>& chunks) {
  std::vector<CharRange> out;
  for (const Chunk& c : chunks) out.push_back(c.range);
  return out;
}

// Independent check of a planned point: inject a payload of the given length,
// re-split and look for one chunk holding both ranges.
bool colocated(const Document& doc, CharRange crucial, const SplitterConfig& cfg, const InjectionPoint& pt,
               std::size_t payload_length) {
  const Document out = inject(doc, std::string(payload_length, 'x'), pt, list_features(doc.format)[0]);
  const auto moved = remap_after_injection(doc, out, crucial);
  const auto payload = injected_range(out);
  if (!moved || !payload) return false;
  for (const Chunk& c : split_document(out, cfg)) {
    if (c.range.contains(*moved) && c.range.contains(*payload)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("length splitter stride") {
  const std::vector<Chunk> chunks = split("abcdefghij", {SplitterKind::LengthBased, 4, 1});
  CHECK(ranges(chunks) == std::vector<CharRange>{{0, 4}, {3, 7}, {6, 10}});
  CHECK(chunks[1].text == "defg");
}

TEST_CASE("short text is a single chunk") {
  const std::vector<Chunk> chunks = split("short", {SplitterKind::LengthBased, 100, 10});
  REQUIRE(chunks.size() == 1);
  CHECK(chunks[0].text == "short");
  CHECK(split("", {SplitterKind::LengthBased, 4, 0}).empty());
}

TEST_CASE("length splitter covers the text") {
  const std::string text(103, 'a');
  for (std::size_t size : {1, 5, 16, 50}) {
    for (std::size_t overlap = 0; overlap < size; overlap += 3) {
      const std::vector<Chunk> chunks = split(text, {SplitterKind::LengthBased, size, overlap});
      REQUIRE_FALSE(chunks.empty());
      CHECK(chunks.front().range.begin == 0);
      CHECK(chunks.back().range.end == text.size());
      for (std::size_t i = 1; i < chunks.size(); ++i) {
        CHECK(chunks[i].range.begin == chunks[i - 1].range.begin + size - overlap);
      }
    }
  }
}

TEST_CASE("section splitter") {
  const Document doc = parse_document("# A\nfoo\n# B\nbar", DocFormat::Markdown);
  const std::vector<Chunk> chunks = split_document(doc, {SplitterKind::SectionBased, 512, 0});
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].text == "foo");
  CHECK(chunks[0].section == 0u);
  CHECK(chunks[1].text == "bar");
  CHECK(chunks[1].section == 1u);
}

TEST_CASE("splitter config validation") {
  CHECK_THROWS_AS(SplitterConfig({SplitterKind::LengthBased, 0, 0}).validate(), Error);
  CHECK_THROWS_AS(SplitterConfig({SplitterKind::LengthBased, 4, 4}).validate(), Error);
  CHECK_NOTHROW(SplitterConfig({SplitterKind::LengthBased, 4, 3}).validate());
}

TEST_CASE("section plan lands in the crucial section") {
  const Document doc =
      parse_document("# A\nfoo\n# B\nintro line\n\n```text\nvalue\n```\n", DocFormat::Markdown);
  const SplitterConfig cfg{SplitterKind::SectionBased, 512, 0};
  const auto crucial = crucial_span_range(doc, "value");
  REQUIRE(crucial.has_value());
  const InjectionPoint pt = plan_position(doc, *crucial, cfg, 10);
  CHECK(colocated(doc, *crucial, cfg, pt, 10));
}

TEST_CASE("length plan verified by brute force") {
  // Crucial span at [40, 60) of the parser view.
  const std::string a(39, 'a');
  const std::string crucial(20, 'c');
  const std::string b(70, 'b');
  const Document doc =
      parse_document("<p>" + a + "</p><p>" + crucial + "</p><p>" + b + "</p>", DocFormat::Html);
  const auto range = crucial_span_range(doc, crucial);
  REQUIRE(range.has_value());
  REQUIRE(*range == CharRange{40, 60});
  const SplitterConfig cfg{SplitterKind::LengthBased, 100, 20};

  const InjectionPoint pt = plan_position(doc, *range, cfg, 10);
  CHECK(colocated(doc, *range, cfg, pt, 10));

  // The planner's choice must be one of the feasible points found by
  // exhaustive enumeration.
  std::size_t feasible = 0;
  for (std::size_t s = 0; s < doc.spans.size(); ++s) {
    for (std::size_t off : {std::size_t{0}, doc.spans[s].text.size()}) {
      if (colocated(doc, *range, cfg, {s, off, {}}, 10)) ++feasible;
    }
  }
  CHECK(feasible > 0);
}

TEST_CASE("no feasible position when the chunk is too small") {
  const Document doc = parse_document("<p>" + std::string(10, 'c') + "</p>", DocFormat::Html);
  const auto range = crucial_span_range(doc, std::string(10, 'c'));
  REQUIRE(range.has_value());
  try {
    plan_position(doc, *range, {SplitterKind::LengthBased, 20, 0}, 15);
    FAIL("expected NoFeasiblePosition");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoFeasiblePosition);
  }
}

TEST_CASE("crucial span range") {
  const Document doc = parse_document("<p>alpha</p><p>the beta value</p>", DocFormat::Html);
  CHECK(crucial_span_range(doc, "beta") == CharRange{6, 20});
  CHECK_FALSE(crucial_span_range(doc, "gamma").has_value());
}
