#include "rpl/inject.hpp"

#include "parsers.hpp"
#include "rpl/error.hpp"
#include "text_util.hpp"

namespace rpl {

std::string_view feature_name(InvisibleFeature feature) {
  switch (feature) {
    case InvisibleFeature::MdFenceInfo: return "md-fence-info";
    case InvisibleFeature::HtmlHiddenSpan: return "html-hidden-span";
    case InvisibleFeature::PdfInvisibleText: return "pdf-invisible-text";
  }
  return "md-fence-info";
}

std::optional<InvisibleFeature> parse_feature_name(std::string_view name) {
  for (auto f : {InvisibleFeature::MdFenceInfo, InvisibleFeature::HtmlHiddenSpan,
                 InvisibleFeature::PdfInvisibleText}) {
    if (feature_name(f) == name) return f;
  }
  return std::nullopt;
}

DocFormat feature_format(InvisibleFeature feature) {
  switch (feature) {
    case InvisibleFeature::MdFenceInfo: return DocFormat::Markdown;
    case InvisibleFeature::HtmlHiddenSpan: return DocFormat::Html;
    case InvisibleFeature::PdfInvisibleText: return DocFormat::Pdf;
  }
  return DocFormat::Markdown;
}

std::vector<InvisibleFeature> list_features(DocFormat format) {
  switch (format) {
    case DocFormat::Markdown: return {InvisibleFeature::MdFenceInfo};
    case DocFormat::Html: return {InvisibleFeature::HtmlHiddenSpan};
    case DocFormat::Pdf: return {InvisibleFeature::PdfInvisibleText};
  }
  return {};
}

namespace {

void check_payload(std::string_view payload, InvisibleFeature feature) {
  auto breaks = [](const std::string& why) { throw Error(ErrorCode::PayloadBreaksCarrier, why); };
  if (payload.find("```") != std::string_view::npos) breaks("payload contains a fence marker");
  if (payload.find("</") != std::string_view::npos) breaks("payload contains \"</\"");
  if (payload.find_first_of("\r\n") != std::string_view::npos) breaks("payload contains a line break");
  if (detail::trim(payload) != payload) breaks("payload has surrounding whitespace");
  if (feature == InvisibleFeature::HtmlHiddenSpan && payload.find('<') != std::string_view::npos) {
    breaks("payload contains '<'");
  }
}

struct Insertion {
  std::size_t at;
  std::string bytes;
};

Insertion md_fence_insertion(const Document& doc, const Span& span, std::string_view payload) {
  if (span.kind != SpanKind::CodeBody && span.kind != SpanKind::FenceInfo) {
    throw Error(ErrorCode::NoCarrierAtPoint, "markdown carrier needs a fenced code block span");
  }
  if (span.kind == SpanKind::FenceInfo) {
    throw Error(ErrorCode::NoCarrierAtPoint, "fence info string is already occupied");
  }
  const std::string_view line =
      std::string_view(doc.source).substr(span.carrier.begin, span.carrier.size());
  std::size_t lang_begin = 3;
  while (lang_begin < line.size() && detail::is_space(line[lang_begin])) ++lang_begin;
  std::size_t lang_end = lang_begin;
  while (lang_end < line.size() && !detail::is_space(line[lang_end])) ++lang_end;
  if (lang_end == lang_begin) {
    throw Error(ErrorCode::NoCarrierAtPoint, "fence has no language word to follow");
  }
  if (!detail::trim(line.substr(lang_end)).empty()) {
    throw Error(ErrorCode::NoCarrierAtPoint, "fence info string is already occupied");
  }
  return {span.carrier.begin + lang_end, " " + std::string(payload)};
}

Insertion html_insertion(const Span& span, bool before, std::string_view payload) {
  static constexpr std::string_view open = "<span style=\"display:none\">";
  std::string bytes = std::string(open) + std::string(payload) + "</span>";
  return {before ? span.carrier.begin : span.carrier.end, std::move(bytes)};
}

Insertion pdf_insertion(const Span& span, bool before, std::string_view payload) {
  static constexpr std::string_view open = "q BT /F1 1 Tf 3 Tr (";
  const std::string body = std::string(open) + detail::pdf_escape(payload) + ") Tj ET Q";
  if (before) return {span.carrier.begin, body + "\n"};
  return {span.carrier.end, "\n" + body};
}

}  // namespace

Document inject(const Document& doc, std::string_view payload, InjectionPoint point,
                InvisibleFeature feature) {
  if (feature_format(feature) != doc.format) {
    throw Error(ErrorCode::FeatureFormatMismatch,
                std::string(feature_name(feature)) + " does not apply to " +
                    std::string(format_name(doc.format)) + " documents");
  }
  if (point.span_index >= doc.spans.size()) {
    throw Error(ErrorCode::NoCarrierAtPoint,
                "span index " + std::to_string(point.span_index) + " out of range");
  }
  const Span& span = doc.spans[point.span_index];
  if (point.offset > span.text.size()) {
    throw Error(ErrorCode::NoCarrierAtPoint, "offset beyond span text");
  }
  if (doc.injected) throw Error(ErrorCode::NoCarrierAtPoint, "document already carries a payload");
  check_payload(payload, feature);
  if (payload.empty()) return doc;

  const bool before = 2 * point.offset < span.text.size();
  Insertion ins;
  switch (feature) {
    case InvisibleFeature::MdFenceInfo: ins = md_fence_insertion(doc, span, payload); break;
    case InvisibleFeature::HtmlHiddenSpan: ins = html_insertion(span, before, payload); break;
    case InvisibleFeature::PdfInvisibleText: ins = pdf_insertion(span, before, payload); break;
  }

  std::string source = doc.source;
  source.insert(ins.at, ins.bytes);
  Document out = parse_document(std::move(source), doc.format);
  out.injected = ByteRange{ins.at, ins.at + ins.bytes.size()};
  return out;
}

bool verify_invisibility(const Document& original, const Document& injected,
                         std::string_view payload) {
  if (original.format != injected.format) return false;
  if (render_view(original) != render_view(injected)) return false;
  return parser_view(injected).find(payload) != std::string::npos;
}

std::string strip_injection(const Document& doc) {
  if (!doc.injected) return doc.source;
  std::string out = doc.source;
  out.erase(doc.injected->begin, doc.injected->size());
  return out;
}

std::optional<std::size_t> injected_span_index(const Document& doc) {
  if (!doc.injected) return std::nullopt;
  for (std::size_t i = 0; i < doc.spans.size(); ++i) {
    const ByteRange& o = doc.spans[i].origin;
    if (!doc.spans[i].visible && o.begin >= doc.injected->begin && o.end <= doc.injected->end) {
      return i;
    }
  }
  return std::nullopt;
}

}  // namespace rpl
