#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpl/doc_model.hpp"

namespace rpl {

enum class InvisibleFeature { MdFenceInfo, HtmlHiddenSpan, PdfInvisibleText };

std::string_view feature_name(InvisibleFeature feature);
std::optional<InvisibleFeature> parse_feature_name(std::string_view name);
DocFormat feature_format(InvisibleFeature feature);

// Features that can hide a payload in documents of the given format.
std::vector<InvisibleFeature> list_features(DocFormat format);

struct InjectionPoint {
  std::size_t span_index = 0;
  // Character offset inside the span. HTML and PDF carriers sit at element
  // boundaries, so the offset is rounded to the nearer end of the span: the
  // payload goes before the span's carrier when offset < len/2, after it
  // otherwise. Markdown fence carriers ignore the offset.
  std::size_t offset = 0;
  // Span index of the crucial text this point was planned against, if any.
  std::optional<std::size_t> anchor;
};

// Hides `payload` at `point` as exactly one new invisible span. The returned
// document's render view equals the original's and `injected` records the
// added bytes. An empty payload returns the document unchanged.
//
// Errors: FeatureFormatMismatch, NoCarrierAtPoint (bad point, no fence, or a
// fence whose info string is already occupied), PayloadBreaksCarrier (the
// payload contains ```, "</", '<' in HTML, a line break, or surrounding
// whitespace).
Document inject(const Document& doc, std::string_view payload, InjectionPoint point,
                InvisibleFeature feature);

bool verify_invisibility(const Document& original, const Document& injected,
                         std::string_view payload);

// Source with the injected bytes removed; the source itself if nothing was
// injected.
std::string strip_injection(const Document& doc);

// Index of the span produced by inject(), if any.
std::optional<std::size_t> injected_span_index(const Document& doc);

}  // namespace rpl
