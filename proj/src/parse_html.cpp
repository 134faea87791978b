// HTML subset: html/body wrappers plus p, div, span, h1..h6, pre, code and a,
// with inline style attributes only. An element is hidden when its style has
// display:none, visibility:hidden or font-size:0, or it carries the `hidden`
// attribute; hiddenness is inherited. Comments and doctypes are skipped.
// Entities are not decoded.
#include <algorithm>
#include <array>
#include <optional>
#include <vector>

#include "parsers.hpp"
#include "rpl/error.hpp"
#include "text_util.hpp"

namespace rpl::detail {
namespace {

constexpr std::array<std::string_view, 14> kAllowedTags = {
    "html", "body", "p", "div", "span", "h1", "h2", "h3", "h4", "h5", "h6", "pre", "code", "a"};

bool is_heading_tag(std::string_view name) {
  return name.size() == 2 && name[0] == 'h' && name[1] >= '1' && name[1] <= '6';
}

bool is_wrapper_tag(std::string_view name) { return name == "html" || name == "body"; }

struct Attribute {
  std::string name;
  std::string value;
};

// Style-based visibility: parses "a: b; c: d" declarations.
bool style_hides(std::string_view style) {
  std::size_t at = 0;
  while (at <= style.size()) {
    std::size_t semi = style.find(';', at);
    if (semi == std::string_view::npos) semi = style.size();
    const std::string_view decl = style.substr(at, semi - at);
    const std::size_t colon = decl.find(':');
    if (colon != std::string_view::npos) {
      const std::string key = to_lower(trim(decl.substr(0, colon)));
      std::string value = to_lower(trim(decl.substr(colon + 1)));
      if (key == "display" && value == "none") return true;
      if (key == "visibility" && value == "hidden") return true;
      if (key == "font-size") {
        // Zero with any unit: "0", "0px", "0pt", "0.0em", ...
        std::size_t i = 0;
        bool digits = false;
        bool nonzero = false;
        while (i < value.size() && (std::isdigit(static_cast<unsigned char>(value[i])) || value[i] == '.')) {
          if (value[i] != '0' && value[i] != '.') nonzero = true;
          if (value[i] != '.') digits = true;
          ++i;
        }
        if (digits && !nonzero) return true;
      }
    }
    at = semi + 1;
  }
  return false;
}

struct OpenElement {
  std::string name;
  std::size_t start;
  bool hidden;
  std::vector<std::size_t> direct_spans;  // spans whose innermost element is this one
};

class HtmlParser {
 public:
  explicit HtmlParser(Document& doc) : doc_(doc), src_(doc.source) {}

  void run() {
    doc_.sections.push_back({"", 0, 0});
    std::size_t at = 0;
    while (at < src_.size()) {
      const std::size_t lt = src_.find('<', at);
      const std::size_t text_end = lt == std::string::npos ? src_.size() : lt;
      if (text_end > at) add_text(at, text_end);
      if (lt == std::string::npos) break;
      at = markup(lt);
    }
    if (!stack_.empty()) malformed("unclosed <" + stack_.back().name + ">", stack_.back().start);
    finish_sections(doc_);
  }

 private:
  [[noreturn]] void malformed(const std::string& what, std::size_t at) const {
    throw Error(ErrorCode::MalformedDocument, what + " at byte " + std::to_string(at));
  }

  void add_text(std::size_t begin, std::size_t end) {
    auto [first, last] = trim_bounds(std::string_view(src_).substr(begin, end - begin));
    if (first == last) return;
    Span span;
    span.origin = {begin + first, begin + last};
    span.text = src_.substr(span.origin.begin, span.origin.size());
    span.carrier = span.origin;
    bool hidden = false;
    bool heading = false;
    bool code = false;
    for (const OpenElement& e : stack_) {
      hidden = hidden || e.hidden;
      heading = heading || is_heading_tag(e.name);
      code = code || e.name == "pre" || e.name == "code";
    }
    span.visible = !hidden;
    span.kind = hidden ? SpanKind::HiddenElement
                : heading ? SpanKind::Heading
                : code    ? SpanKind::CodeBody
                          : SpanKind::Body;
    if (!stack_.empty() && !is_wrapper_tag(stack_.back().name)) {
      stack_.back().direct_spans.push_back(doc_.spans.size());
    }
    if (heading && !hidden) heading_text_.push_back(span.text);
    doc_.spans.push_back(std::move(span));
  }

  // Parses the markup starting at '<' and returns the offset after it.
  std::size_t markup(std::size_t lt) {
    const std::string_view rest = std::string_view(src_).substr(lt);
    if (starts_with(rest, "<!--")) {
      const std::size_t end = src_.find("-->", lt + 4);
      if (end == std::string::npos) malformed("unterminated comment", lt);
      return end + 3;
    }
    if (starts_with(rest, "<!")) {
      const std::size_t end = src_.find('>', lt);
      if (end == std::string::npos) malformed("unterminated declaration", lt);
      return end + 1;
    }
    if (starts_with(rest, "</")) return end_tag(lt);
    if (rest.size() > 1 && std::isalpha(static_cast<unsigned char>(rest[1]))) return start_tag(lt);
    malformed("stray '<'", lt);
  }

  std::size_t end_tag(std::size_t lt) {
    const std::size_t gt = src_.find('>', lt);
    if (gt == std::string::npos) malformed("unterminated end tag", lt);
    const std::string name = to_lower(trim(std::string_view(src_).substr(lt + 2, gt - lt - 2)));
    if (stack_.empty() || stack_.back().name != name) malformed("unbalanced </" + name + ">", lt);
    close_element(gt + 1);
    return gt + 1;
  }

  std::size_t start_tag(std::size_t lt) {
    std::size_t at = lt + 1;
    std::size_t name_end = at;
    while (name_end < src_.size() && std::isalnum(static_cast<unsigned char>(src_[name_end]))) ++name_end;
    const std::string name = to_lower(std::string_view(src_).substr(at, name_end - at));
    if (std::find(kAllowedTags.begin(), kAllowedTags.end(), name) == kAllowedTags.end()) {
      malformed("unsupported tag <" + name + ">", lt);
    }
    at = name_end;
    std::vector<Attribute> attrs;
    bool self_closing = false;
    while (true) {
      while (at < src_.size() && is_space(src_[at])) ++at;
      if (at >= src_.size()) malformed("unterminated start tag", lt);
      if (src_[at] == '>') {
        ++at;
        break;
      }
      if (src_[at] == '/' && at + 1 < src_.size() && src_[at + 1] == '>') {
        self_closing = true;
        at += 2;
        break;
      }
      std::size_t key_end = at;
      while (key_end < src_.size() && !is_space(src_[key_end]) && src_[key_end] != '=' &&
             src_[key_end] != '>' && src_[key_end] != '/') {
        ++key_end;
      }
      if (key_end == at) malformed("bad attribute", at);
      Attribute attr{to_lower(std::string_view(src_).substr(at, key_end - at)), ""};
      at = key_end;
      if (at < src_.size() && src_[at] == '=') {
        ++at;
        if (at >= src_.size() || (src_[at] != '"' && src_[at] != '\'')) {
          malformed("attribute values must be quoted", at);
        }
        const char quote = src_[at];
        const std::size_t close = src_.find(quote, at + 1);
        if (close == std::string::npos) malformed("unterminated attribute value", at);
        attr.value = src_.substr(at + 1, close - at - 1);
        at = close + 1;
      }
      attrs.push_back(std::move(attr));
    }

    bool hidden = false;
    for (const Attribute& a : attrs) {
      if (a.name == "hidden") hidden = true;
      if (a.name == "style" && style_hides(a.value)) hidden = true;
    }
    if (is_heading_tag(name)) {
      if (in_heading_) malformed("nested heading", lt);
      in_heading_ = true;
      heading_start_span_ = doc_.spans.size();
      heading_depth_ = stack_.size();
      heading_text_.clear();
    }
    stack_.push_back({name, lt, hidden, {}});
    if (self_closing) close_element(at);
    return at;
  }

  void close_element(std::size_t end) {
    OpenElement e = std::move(stack_.back());
    stack_.pop_back();
    for (std::size_t index : e.direct_spans) doc_.spans[index].carrier = {e.start, end};
    if (in_heading_ && stack_.size() == heading_depth_) {
      in_heading_ = false;
      std::string title;
      for (const std::string& part : heading_text_) {
        if (!title.empty()) title += ' ';
        title += part;
      }
      doc_.sections.back().end_span = heading_start_span_;
      doc_.sections.push_back({title, doc_.spans.size(), doc_.spans.size()});
    }
  }

  Document& doc_;
  const std::string& src_;
  std::vector<OpenElement> stack_;
  bool in_heading_ = false;
  std::size_t heading_start_span_ = 0;
  std::size_t heading_depth_ = 0;
  std::vector<std::string> heading_text_;
};

}  // namespace

Document parse_html(std::string source) {
  Document doc;
  doc.format = DocFormat::Html;
  doc.source = std::move(source);
  HtmlParser(doc).run();
  return doc;
}

std::string serialize_html(const Document& doc) {
  std::string out = "<html><body>\n";
  for (const Span& s : doc.spans) {
    if (s.text.empty() || trim(s.text) != s.text) {
      throw Error(ErrorCode::InvalidArgument, "html writer: span text must be non-empty and trimmed");
    }
    if (s.text.find('<') != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "html writer: '<' cannot appear in text");
    }
    switch (s.kind) {
      case SpanKind::Heading: out += "<h2>" + s.text + "</h2>\n"; break;
      case SpanKind::Body: out += "<p>" + s.text + "</p>\n"; break;
      case SpanKind::CodeBody: out += "<pre><code>" + s.text + "</code></pre>\n"; break;
      case SpanKind::HiddenElement:
        out += "<span style=\"display:none\">" + s.text + "</span>\n";
        break;
      case SpanKind::FenceInfo:
      case SpanKind::InvisiblePdfText:
        throw Error(ErrorCode::InvalidArgument, "html writer: span kind has no html form");
    }
  }
  out += "</body></html>\n";
  return out;
}

}  // namespace rpl::detail
