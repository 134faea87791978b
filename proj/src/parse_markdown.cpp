// Markdown subset: ATX headings, paragraphs and ``` fenced code blocks.
// The fence info string is "```<language> <rest>"; <rest> is never rendered
// and becomes an invisible FenceInfo span.
#include <optional>
#include <vector>

#include "parsers.hpp"
#include "rpl/error.hpp"
#include "text_util.hpp"

namespace rpl::detail {
namespace {

struct Line {
  std::size_t begin;
  std::size_t end;  // excludes the newline
};

std::vector<Line> split_lines(std::string_view s) {
  std::vector<Line> lines;
  std::size_t at = 0;
  while (at < s.size()) {
    std::size_t nl = s.find('\n', at);
    if (nl == std::string_view::npos) nl = s.size();
    lines.push_back({at, nl});
    at = nl + 1;
  }
  return lines;
}

bool is_fence(std::string_view line) { return starts_with(line, "```"); }

bool is_closing_fence(std::string_view line) {
  return is_fence(line) && trim(line.substr(3)).empty();
}

// Number of leading '#' for an ATX heading line, 0 otherwise.
std::size_t heading_level(std::string_view line) {
  std::size_t n = 0;
  while (n < line.size() && line[n] == '#') ++n;
  if (n == 0 || n > 6) return 0;
  if (n < line.size() && line[n] != ' ' && line[n] != '\t') return 0;
  return n;
}

class MarkdownParser {
 public:
  explicit MarkdownParser(Document& doc) : doc_(doc), src_(doc.source) {}

  void run() {
    const std::vector<Line> lines = split_lines(src_);
    doc_.sections.push_back({"", 0, 0});
    std::size_t i = 0;
    while (i < lines.size()) {
      const std::string_view line = text(lines[i]);
      if (trim(line).empty()) {
        flush_paragraph();
        ++i;
      } else if (std::size_t level = heading_level(line)) {
        flush_paragraph();
        heading(lines[i], level);
        ++i;
      } else if (is_fence(line)) {
        flush_paragraph();
        i = fence(lines, i);
      } else {
        if (!para_) para_ = lines[i];
        para_->end = lines[i].end;
        ++i;
      }
    }
    flush_paragraph();
    finish_sections(doc_);
  }

 private:
  std::string_view text(Line l) const { return std::string_view(src_).substr(l.begin, l.end - l.begin); }

  // Adds a span for the trimmed bytes in [begin, end); returns false if empty.
  bool add_span(std::size_t begin, std::size_t end, SpanKind kind, bool visible, ByteRange carrier) {
    auto [first, last] = trim_bounds(std::string_view(src_).substr(begin, end - begin));
    if (first == last) return false;
    Span span;
    span.origin = {begin + first, begin + last};
    span.text = src_.substr(span.origin.begin, span.origin.size());
    span.kind = kind;
    span.visible = visible;
    span.carrier = carrier;
    doc_.spans.push_back(std::move(span));
    return true;
  }

  void flush_paragraph() {
    if (!para_) return;
    add_span(para_->begin, para_->end, SpanKind::Body, true, {para_->begin, para_->end});
    para_.reset();
  }

  void heading(Line l, std::size_t level) {
    const std::size_t index = doc_.spans.size();
    doc_.sections.back().end_span = index;
    std::string title;
    if (add_span(l.begin + level, l.end, SpanKind::Heading, true, {l.begin, l.end})) {
      title = doc_.spans.back().text;
    }
    doc_.sections.push_back({title, doc_.spans.size(), doc_.spans.size()});
  }

  std::size_t fence(const std::vector<Line>& lines, std::size_t open) {
    const Line opening = lines[open];
    const ByteRange carrier{opening.begin, opening.end};
    const std::string_view info = text(opening).substr(3);
    std::size_t lang_begin = 0;
    while (lang_begin < info.size() && is_space(info[lang_begin])) ++lang_begin;
    std::size_t lang_end = lang_begin;
    while (lang_end < info.size() && !is_space(info[lang_end])) ++lang_end;
    const std::size_t rest = opening.begin + 3 + lang_end;
    add_span(rest, opening.end, SpanKind::FenceInfo, false, carrier);

    std::size_t close = open + 1;
    while (close < lines.size() && !is_closing_fence(text(lines[close]))) ++close;
    if (close == lines.size()) {
      throw Error(ErrorCode::MalformedDocument,
                  "unclosed code fence opened at byte " + std::to_string(opening.begin));
    }
    if (close > open + 1) {
      add_span(lines[open + 1].begin, lines[close - 1].end, SpanKind::CodeBody, true, carrier);
    }
    return close + 1;
  }

  Document& doc_;
  const std::string& src_;
  std::optional<Line> para_;
};

}  // namespace

Document parse_markdown(std::string source) {
  Document doc;
  doc.format = DocFormat::Markdown;
  doc.source = std::move(source);
  MarkdownParser(doc).run();
  return doc;
}

std::string serialize_markdown(const Document& doc) {
  auto reject = [](const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, "markdown writer: " + why);
  };
  auto check_inline = [&](const Span& s) {
    if (s.text.empty() || trim(s.text) != s.text) reject("span text must be non-empty and trimmed");
    if (s.text.find('\n') != std::string::npos) reject("span text must be a single line");
  };
  std::string out;
  for (std::size_t i = 0; i < doc.spans.size(); ++i) {
    const Span& s = doc.spans[i];
    switch (s.kind) {
      case SpanKind::Heading:
        check_inline(s);
        out += "# " + s.text + "\n\n";
        break;
      case SpanKind::Body:
        check_inline(s);
        if (heading_level(s.text) > 0 || is_fence(s.text)) reject("paragraph looks like a block marker");
        out += s.text + "\n\n";
        break;
      case SpanKind::FenceInfo:
      case SpanKind::CodeBody: {
        std::string info;
        if (s.kind == SpanKind::FenceInfo) {
          check_inline(s);
          if (s.text.find("```") != std::string::npos) reject("fence info contains a fence marker");
          info = " " + s.text;
        }
        std::string body;
        if (s.kind == SpanKind::CodeBody) {
          body = s.text;
        } else if (i + 1 < doc.spans.size() && doc.spans[i + 1].kind == SpanKind::CodeBody) {
          body = doc.spans[++i].text;
        }
        if (!body.empty()) {
          if (trim(body) != body) reject("code body must be trimmed");
          for (const Line& l : split_lines(body)) {
            if (is_closing_fence(std::string_view(body).substr(l.begin, l.end - l.begin))) {
              reject("code body contains a closing fence");
            }
          }
          body += '\n';
        }
        out += "```text" + info + "\n" + body + "```\n\n";
        break;
      }
      case SpanKind::HiddenElement:
      case SpanKind::InvisiblePdfText:
        reject("span kind has no markdown form");
    }
  }
  return out;
}

}  // namespace rpl::detail
