#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rpl {

enum class DocFormat { Markdown, Html, Pdf };

// Stable names used on the command line and in reports: "md", "html", "pdf".
std::string_view format_name(DocFormat format);
std::optional<DocFormat> parse_format_name(std::string_view name);
// Infers the format from a .md/.markdown/.html/.htm/.pdf extension.
std::optional<DocFormat> format_from_path(const std::filesystem::path& path);

enum class SpanKind { Body, FenceInfo, HiddenElement, InvisiblePdfText, Heading, CodeBody };

std::string_view span_kind_name(SpanKind kind);

// Half-open byte range [begin, end) into a document source.
struct ByteRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const ByteRange&) const = default;
};

struct Span {
  std::string text;
  bool visible = true;
  // Bytes of the text itself. For PDF strings this covers the escaped literal
  // between the parentheses, so it can be longer than `text`.
  ByteRange origin;
  SpanKind kind = SpanKind::Body;
  // Smallest syntactic unit around the span that an injected carrier can be
  // placed next to: the opening fence line for fenced code, the innermost
  // element for HTML text, the BT..ET block for PDF text.
  ByteRange carrier;
};

struct Section {
  std::string heading;
  // Body span indices [first_span, end_span); the heading span is excluded.
  std::size_t first_span = 0;
  std::size_t end_span = 0;
};

struct Document {
  DocFormat format = DocFormat::Markdown;
  std::string source;
  std::vector<Span> spans;
  std::vector<Section> sections;
  // Source bytes added by inject(); erasing them restores the original.
  std::optional<ByteRange> injected;
};

// Throws Error(MalformedDocument) when the source falls outside the supported
// subset: unclosed fences, unbalanced or unknown HTML tags, bad PDF operator
// streams.
Document parse_document(std::string source, DocFormat format);

Document load_document(const std::filesystem::path& path, std::optional<DocFormat> format = {});

// All span texts joined by "\n": what a naive loader extracts.
std::string parser_view(const Document& doc);
// Visible span texts joined by "\n": what a reader sees.
std::string render_view(const Document& doc);

// Start offset of every span inside parser_view(doc).
std::vector<std::size_t> parser_view_offsets(const Document& doc);

// Emits a source in this library's subset for the given spans. Throws
// Error(InvalidArgument) when a span cannot be expressed in the format.
std::string serialize(const Document& doc);

}  // namespace rpl
