#include "rpl/chunker.hpp"

#include <algorithm>

#include "rpl/error.hpp"

namespace rpl {

void SplitterConfig::validate() const {
  if (kind != SplitterKind::LengthBased) return;
  if (chunk_size < 1) throw Error(ErrorCode::InvalidArgument, "chunk_size must be >= 1");
  if (overlap >= chunk_size) throw Error(ErrorCode::InvalidArgument, "overlap must be < chunk_size");
}

std::vector<SectionRange> section_ranges(const Document& doc) {
  const std::vector<std::size_t> offsets = parser_view_offsets(doc);
  std::vector<SectionRange> out;
  out.reserve(doc.sections.size());
  for (const Section& s : doc.sections) {
    SectionRange r{s.heading, {}};
    if (s.first_span < s.end_span) {
      r.body.begin = offsets[s.first_span];
      r.body.end = offsets[s.end_span - 1] + doc.spans[s.end_span - 1].text.size();
    } else {
      const std::size_t at = s.first_span < offsets.size() ? offsets[s.first_span] : 0;
      r.body = {at, at};
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Chunk> split(std::string_view text, const SplitterConfig& config,
                         std::span<const SectionRange> sections) {
  config.validate();
  std::vector<Chunk> chunks;
  if (text.empty()) return chunks;
  if (config.kind == SplitterKind::SectionBased) {
    for (std::size_t i = 0; i < sections.size(); ++i) {
      const CharRange body = sections[i].body;
      if (body.begin >= body.end) continue;
      if (body.end > text.size()) throw Error(ErrorCode::InvalidArgument, "section outside text");
      chunks.push_back({std::string(text.substr(body.begin, body.size())), body, i});
    }
    return chunks;
  }
  const std::size_t stride = config.chunk_size - config.overlap;
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(start + config.chunk_size, text.size());
    chunks.push_back({std::string(text.substr(start, end - start)), {start, end}, std::nullopt});
    if (end == text.size()) break;
  }
  return chunks;
}

std::vector<Chunk> split_document(const Document& doc, const SplitterConfig& config) {
  const std::vector<SectionRange> sections = section_ranges(doc);
  return split(parser_view(doc), config, sections);
}

std::optional<CharRange> crucial_span_range(const Document& doc, std::string_view needle) {
  if (needle.empty()) return std::nullopt;
  const std::vector<std::size_t> offsets = parser_view_offsets(doc);
  for (std::size_t i = 0; i < doc.spans.size(); ++i) {
    if (doc.spans[i].text.find(needle) != std::string::npos) {
      return CharRange{offsets[i], offsets[i] + doc.spans[i].text.size()};
    }
  }
  return std::nullopt;
}

std::optional<CharRange> injected_range(const Document& injected) {
  const std::optional<std::size_t> index = injected_span_index(injected);
  if (!index) return std::nullopt;
  const std::size_t begin = parser_view_offsets(injected)[*index];
  return CharRange{begin, begin + injected.spans[*index].text.size()};
}

std::optional<CharRange> remap_after_injection(const Document& original, const Document& injected,
                                               CharRange range) {
  const std::optional<std::size_t> index = injected_span_index(injected);
  if (!index) return std::nullopt;
  if (*index >= original.spans.size()) return range;
  const std::size_t pivot = parser_view_offsets(original)[*index];
  const std::size_t shift = injected.spans[*index].text.size() + 1;
  auto move = [&](std::size_t p) { return p >= pivot ? p + shift : p; };
  return CharRange{move(range.begin), range.end > pivot ? range.end + shift : range.end};
}

namespace {

struct Candidate {
  InjectionPoint point;
  std::size_t view_offset;
};

std::vector<Candidate> carrier_candidates(const Document& doc) {
  const std::vector<std::size_t> offsets = parser_view_offsets(doc);
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < doc.spans.size(); ++i) {
    const Span& s = doc.spans[i];
    if (doc.format == DocFormat::Markdown) {
      if (s.kind == SpanKind::CodeBody) out.push_back({{i, 0, {}}, offsets[i]});
      continue;
    }
    out.push_back({{i, 0, {}}, offsets[i]});
    out.push_back({{i, s.text.size(), {}}, offsets[i] + s.text.size()});
  }
  return out;
}

std::size_t distance_to(CharRange range, std::size_t at) {
  if (at < range.begin) return range.begin - at;
  if (at > range.end) return at - range.end;
  return 0;
}

}  // namespace

InjectionPoint plan_position(const Document& doc, CharRange crucial, const SplitterConfig& config,
                             std::size_t payload_length) {
  config.validate();
  const std::string view = parser_view(doc);
  if (crucial.begin >= crucial.end || crucial.end > view.size()) {
    throw Error(ErrorCode::InvalidArgument, "crucial range outside the parser view");
  }
  if (payload_length == 0) throw Error(ErrorCode::InvalidArgument, "payload length must be > 0");

  std::optional<CharRange> section_body;
  if (config.kind == SplitterKind::LengthBased) {
    if (crucial.size() + payload_footprint(payload_length) > config.chunk_size) {
      throw Error(ErrorCode::NoFeasiblePosition,
                  "crucial text (" + std::to_string(crucial.size()) + ") plus payload (" +
                      std::to_string(payload_footprint(payload_length)) + ") exceeds chunk size " +
                      std::to_string(config.chunk_size));
    }
  } else {
    for (const SectionRange& s : section_ranges(doc)) {
      if (s.body.contains(crucial)) section_body = s.body;
    }
    if (!section_body) {
      throw Error(ErrorCode::NoFeasiblePosition, "crucial text crosses a section boundary");
    }
  }

  std::vector<Candidate> candidates = carrier_candidates(doc);
  if (section_body) {
    std::erase_if(candidates, [&](const Candidate& c) {
      return c.view_offset < section_body->begin || c.view_offset > section_body->end;
    });
  } else {
    std::stable_sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
      return distance_to(crucial, a.view_offset) < distance_to(crucial, b.view_offset);
    });
  }

  std::optional<std::size_t> anchor;
  for (std::size_t i = 0, at = 0; i < doc.spans.size(); at += doc.spans[i].text.size() + 1, ++i) {
    if (crucial.begin >= at && crucial.begin <= at + doc.spans[i].text.size()) {
      anchor = i;
      break;
    }
  }

  const std::string probe(payload_length, 'x');
  const InvisibleFeature feature = list_features(doc.format).front();
  for (const Candidate& c : candidates) {
    Document injected;
    try {
      injected = inject(doc, probe, c.point, feature);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoCarrierAtPoint) continue;
      throw;
    }
    const std::optional<CharRange> payload = injected_range(injected);
    const std::optional<CharRange> moved = remap_after_injection(doc, injected, crucial);
    if (!payload || !moved) continue;
    for (const Chunk& chunk : split_document(injected, config)) {
      if (chunk.range.contains(*payload) && chunk.range.contains(*moved)) {
        InjectionPoint point = c.point;
        point.anchor = anchor;
        return point;
      }
    }
  }
  throw Error(ErrorCode::NoFeasiblePosition, "no carrier keeps payload and crucial text together");
}

}  // namespace rpl
