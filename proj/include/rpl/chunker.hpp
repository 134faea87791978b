#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rpl/doc_model.hpp"
#include "rpl/inject.hpp"

namespace rpl {

// Half-open character range [begin, end) into a text.
struct CharRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(CharRange other) const { return begin <= other.begin && other.end <= end; }
  bool operator==(const CharRange&) const = default;
};

enum class SplitterKind { LengthBased, SectionBased };

struct SplitterConfig {
  SplitterKind kind = SplitterKind::LengthBased;
  std::size_t chunk_size = 512;  // characters, LengthBased only
  std::size_t overlap = 0;       // characters, LengthBased only

  // Throws Error(InvalidArgument) unless chunk_size >= 1 and overlap < chunk_size.
  void validate() const;
};

struct Chunk {
  std::string text;
  CharRange range;
  std::optional<std::size_t> section;
};

// A section body located in parser-view coordinates.
struct SectionRange {
  std::string heading;
  CharRange body;
};

std::vector<SectionRange> section_ranges(const Document& doc);

// LengthBased: windows of chunk_size starting every chunk_size - overlap
// characters; the last window may be short. SectionBased: one chunk per
// non-empty section body. Empty text gives no chunks.
std::vector<Chunk> split(std::string_view text, const SplitterConfig& config,
                         std::span<const SectionRange> sections = {});

// Convenience: split(parser_view(doc), config, section_ranges(doc)).
std::vector<Chunk> split_document(const Document& doc, const SplitterConfig& config);

// Parser-view characters a payload occupies once injected: the payload plus
// the newline that separates its span from its neighbour.
constexpr std::size_t payload_footprint(std::size_t payload_length) { return payload_length + 1; }

// Finds an injection point for a payload of `payload_length` characters such
// that re-splitting the injected parser view yields a chunk holding both the
// whole payload and the whole crucial range. Candidates are tried nearest to
// the crucial range first and each is checked by an actual re-split.
//
// Throws Error(NoFeasiblePosition) when chunk_size < footprint + crucial
// length (LengthBased), when the crucial range crosses a section boundary
// (SectionBased), or when no carrier works.
InjectionPoint plan_position(const Document& doc, CharRange crucial, const SplitterConfig& config,
                             std::size_t payload_length);

// Range of `text` inside parser_view(doc) for the span that contains the
// first occurrence of `needle`; nullopt when absent.
std::optional<CharRange> crucial_span_range(const Document& doc, std::string_view needle);

// Where a span-aligned range of the original ends up after inject() added one
// span. Returns nullopt if the document carries no injected span.
std::optional<CharRange> remap_after_injection(const Document& original, const Document& injected,
                                               CharRange range);

// Parser-view range of the injected payload span.
std::optional<CharRange> injected_range(const Document& injected);

}  // namespace rpl
