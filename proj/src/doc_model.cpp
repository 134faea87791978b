#include "rpl/doc_model.hpp"

#include <fstream>
#include <sstream>

#include "parsers.hpp"
#include "rpl/error.hpp"
#include "text_util.hpp"

namespace rpl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::FeatureFormatMismatch: return "FeatureFormatMismatch";
    case ErrorCode::NoCarrierAtPoint: return "NoCarrierAtPoint";
    case ErrorCode::PayloadBreaksCarrier: return "PayloadBreaksCarrier";
    case ErrorCode::NoFeasiblePosition: return "NoFeasiblePosition";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::OracleFailure: return "OracleFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string_view format_name(DocFormat format) {
  switch (format) {
    case DocFormat::Markdown: return "md";
    case DocFormat::Html: return "html";
    case DocFormat::Pdf: return "pdf";
  }
  return "md";
}

std::optional<DocFormat> parse_format_name(std::string_view name) {
  const std::string lower = detail::to_lower(name);
  if (lower == "md" || lower == "markdown") return DocFormat::Markdown;
  if (lower == "html" || lower == "htm") return DocFormat::Html;
  if (lower == "pdf") return DocFormat::Pdf;
  return std::nullopt;
}

std::optional<DocFormat> format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  if (ext.empty()) return std::nullopt;
  return parse_format_name(std::string_view(ext).substr(1));
}

std::string_view span_kind_name(SpanKind kind) {
  switch (kind) {
    case SpanKind::Body: return "Body";
    case SpanKind::FenceInfo: return "FenceInfo";
    case SpanKind::HiddenElement: return "HiddenElement";
    case SpanKind::InvisiblePdfText: return "InvisiblePdfText";
    case SpanKind::Heading: return "Heading";
    case SpanKind::CodeBody: return "CodeBody";
  }
  return "Body";
}

Document parse_document(std::string source, DocFormat format) {
  switch (format) {
    case DocFormat::Markdown: return detail::parse_markdown(std::move(source));
    case DocFormat::Html: return detail::parse_html(std::move(source));
    case DocFormat::Pdf: return detail::parse_pdf(std::move(source));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown document format");
}

Document load_document(const std::filesystem::path& path, std::optional<DocFormat> format) {
  if (!format) format = format_from_path(path);
  if (!format) {
    throw Error(ErrorCode::InvalidArgument, "cannot infer format of " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_document(buffer.str(), *format);
}

namespace {

std::string join_spans(const Document& doc, bool visible_only) {
  std::string out;
  bool first = true;
  for (const Span& span : doc.spans) {
    if (visible_only && !span.visible) continue;
    if (!first) out += '\n';
    out += span.text;
    first = false;
  }
  return out;
}

}  // namespace

std::string parser_view(const Document& doc) { return join_spans(doc, false); }

std::string render_view(const Document& doc) { return join_spans(doc, true); }

std::vector<std::size_t> parser_view_offsets(const Document& doc) {
  std::vector<std::size_t> offsets;
  offsets.reserve(doc.spans.size());
  std::size_t at = 0;
  for (const Span& span : doc.spans) {
    offsets.push_back(at);
    at += span.text.size() + 1;
  }
  return offsets;
}

std::string serialize(const Document& doc) {
  switch (doc.format) {
    case DocFormat::Markdown: return detail::serialize_markdown(doc);
    case DocFormat::Html: return detail::serialize_html(doc);
    case DocFormat::Pdf: return detail::serialize_pdf(doc);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown document format");
}

namespace detail {

void finish_sections(Document& doc) {
  if (doc.sections.empty()) return;
  doc.sections.back().end_span = doc.spans.size();
  const Section& front = doc.sections.front();
  if (front.heading.empty() && front.first_span == front.end_span && front.first_span == 0) {
    doc.sections.erase(doc.sections.begin());
  }
}

}  // namespace detail
}  // namespace rpl
