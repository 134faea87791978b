// PDF subset: uncompressed content streams using BT, ET, Tf, Td, Tj, Tr, q
// and Q. Each non-blank Tj string is one span; it is invisible when the text
// render mode in effect is 3. Stream data is located by the stream/endstream
// keywords; /Length and the xref table are not consulted. See
// docs/pdf-subset.md.
#include <cstdio>
#include <vector>

#include "parsers.hpp"
#include "rpl/error.hpp"
#include "text_util.hpp"

namespace rpl::detail {
namespace {

[[noreturn]] void malformed(const std::string& what, std::size_t at) {
  throw Error(ErrorCode::MalformedDocument, "pdf: " + what + " at byte " + std::to_string(at));
}

enum class TokenType { Number, Name, String, Operator };

struct Token {
  TokenType type;
  std::size_t begin;  // for strings: first byte inside the parentheses
  std::size_t end;    // for strings: the closing parenthesis
  std::string value;  // decoded string, name without '/', number or operator text
};

bool is_delimiter(char c) {
  return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' ||
         c == '}' || c == '/' || c == '%';
}

class ContentLexer {
 public:
  ContentLexer(const std::string& src, std::size_t begin, std::size_t end)
      : src_(src), at_(begin), end_(end) {}

  bool next(Token& tok) {
    skip_space();
    if (at_ >= end_) return false;
    const char c = src_[at_];
    if (c == '(') return literal(tok);
    if (c == '/') {
      const std::size_t begin = at_++;
      while (at_ < end_ && !is_space(src_[at_]) && !is_delimiter(src_[at_])) ++at_;
      tok = {TokenType::Name, begin, at_, src_.substr(begin + 1, at_ - begin - 1)};
      return true;
    }
    if (c == '<' || c == '[' || c == '{' || c == ')' || c == '>' || c == ']' || c == '}') {
      malformed(std::string("unsupported syntax '") + c + "'", at_);
    }
    const std::size_t begin = at_;
    while (at_ < end_ && !is_space(src_[at_]) && !is_delimiter(src_[at_])) ++at_;
    std::string word = src_.substr(begin, at_ - begin);
    const bool numeric = word.find_first_not_of("+-.0123456789") == std::string::npos &&
                         word.find_first_of("0123456789") != std::string::npos;
    tok = {numeric ? TokenType::Number : TokenType::Operator, begin, at_, std::move(word)};
    return true;
  }

 private:
  void skip_space() {
    while (at_ < end_) {
      if (is_space(src_[at_])) {
        ++at_;
      } else if (src_[at_] == '%') {
        while (at_ < end_ && src_[at_] != '\n' && src_[at_] != '\r') ++at_;
      } else {
        break;
      }
    }
  }

  bool literal(Token& tok) {
    const std::size_t open = at_++;
    std::string out;
    int depth = 1;
    while (at_ < end_) {
      const char c = src_[at_];
      if (c == '\\') {
        if (++at_ >= end_) break;
        const char e = src_[at_];
        switch (e) {
          case 'n': out += '\n'; ++at_; break;
          case 'r': out += '\r'; ++at_; break;
          case 't': out += '\t'; ++at_; break;
          case 'b': out += '\b'; ++at_; break;
          case 'f': out += '\f'; ++at_; break;
          case '\r':
            ++at_;
            if (at_ < end_ && src_[at_] == '\n') ++at_;
            break;
          case '\n': ++at_; break;
          default:
            if (e >= '0' && e <= '7') {
              int value = 0;
              for (int k = 0; k < 3 && at_ < end_ && src_[at_] >= '0' && src_[at_] <= '7'; ++k) {
                value = value * 8 + (src_[at_++] - '0');
              }
              out += static_cast<char>(value & 0xff);
            } else {
              out += e;
              ++at_;
            }
        }
        continue;
      }
      if (c == '(') ++depth;
      if (c == ')' && --depth == 0) {
        tok = {TokenType::String, open + 1, at_, std::move(out)};
        ++at_;
        return true;
      }
      out += c;
      ++at_;
    }
    malformed("unterminated string", open);
  }

  const std::string& src_;
  std::size_t at_;
  std::size_t end_;
};

class PdfParser {
 public:
  explicit PdfParser(Document& doc) : doc_(doc), src_(doc.source) {}

  void run() {
    if (src_.empty()) return;
    if (!starts_with(src_, "%PDF-")) malformed("missing %PDF- header", 0);
    std::size_t at = 0;
    while (true) {
      const std::size_t kw = src_.find("stream", at);
      if (kw == std::string::npos) break;
      if (kw >= 3 && src_.compare(kw - 3, 3, "end") == 0) {
        at = kw + 6;
        continue;
      }
      at = stream(kw);
    }
    doc_.sections.push_back({"", 0, doc_.spans.size()});
    finish_sections(doc_);
  }

 private:
  std::size_t stream(std::size_t kw) {
    const std::size_t obj = src_.rfind("obj", kw);
    const std::size_t dict_begin = obj == std::string::npos ? 0 : obj;
    if (src_.substr(dict_begin, kw - dict_begin).find("/Filter") != std::string::npos) {
      malformed("compressed streams are not supported", kw);
    }
    std::size_t data = kw + 6;
    if (data < src_.size() && src_[data] == '\r') ++data;
    if (data >= src_.size() || src_[data] != '\n') malformed("stream keyword must end its line", kw);
    ++data;
    const std::size_t endstream = src_.find("endstream", data);
    if (endstream == std::string::npos) malformed("missing endstream", kw);
    content(data, endstream);
    return endstream + 9;
  }

  void content(std::size_t begin, std::size_t end) {
    ContentLexer lexer(src_, begin, end);
    std::vector<Token> operands;
    std::vector<int> saved_modes;
    int mode = 0;
    bool in_text = false;
    std::size_t block_begin = 0;
    std::vector<std::size_t> block_spans;
    Token tok;
    auto expect = [&](std::size_t count, const Token& op) {
      if (operands.size() != count) malformed("wrong operand count for " + op.value, op.begin);
    };
    while (lexer.next(tok)) {
      if (tok.type != TokenType::Operator) {
        operands.push_back(std::move(tok));
        continue;
      }
      const std::string& op = tok.value;
      if (op == "BT") {
        expect(0, tok);
        if (in_text) malformed("nested BT", tok.begin);
        in_text = true;
        block_begin = tok.begin;
        block_spans.clear();
      } else if (op == "ET") {
        expect(0, tok);
        if (!in_text) malformed("ET without BT", tok.begin);
        in_text = false;
        for (std::size_t index : block_spans) doc_.spans[index].carrier = {block_begin, tok.end};
      } else if (op == "q") {
        expect(0, tok);
        if (in_text) malformed("q inside text object", tok.begin);
        saved_modes.push_back(mode);
      } else if (op == "Q") {
        expect(0, tok);
        if (in_text) malformed("Q inside text object", tok.begin);
        if (saved_modes.empty()) malformed("Q without q", tok.begin);
        mode = saved_modes.back();
        saved_modes.pop_back();
      } else if (op == "Tf") {
        expect(2, tok);
        if (operands[0].type != TokenType::Name || operands[1].type != TokenType::Number) {
          malformed("Tf expects a name and a size", tok.begin);
        }
      } else if (op == "Td") {
        expect(2, tok);
        if (operands[0].type != TokenType::Number || operands[1].type != TokenType::Number) {
          malformed("Td expects two numbers", tok.begin);
        }
      } else if (op == "Tr") {
        expect(1, tok);
        int value = -1;
        if (operands[0].type == TokenType::Number) std::sscanf(operands[0].value.c_str(), "%d", &value);
        if (value < 0 || value > 7 || operands[0].value.find('.') != std::string::npos) {
          malformed("Tr expects an integer in 0..7", tok.begin);
        }
        mode = value;
      } else if (op == "Tj") {
        expect(1, tok);
        if (!in_text) malformed("Tj outside BT/ET", tok.begin);
        if (operands[0].type != TokenType::String) malformed("Tj expects a string", tok.begin);
        add_span(operands[0], mode != 3, block_spans);
      } else {
        malformed("unsupported operator " + op, tok.begin);
      }
      operands.clear();
    }
    if (!operands.empty()) malformed("dangling operands", operands.front().begin);
    if (in_text) malformed("unterminated text object", block_begin);
    if (!saved_modes.empty()) malformed("unbalanced q/Q", end);
  }

  void add_span(const Token& str, bool visible, std::vector<std::size_t>& block_spans) {
    const std::string_view text = trim(str.value);
    if (text.empty()) return;
    Span span;
    span.text = std::string(text);
    span.visible = visible;
    span.origin = {str.begin, str.end};
    span.kind = visible ? SpanKind::Body : SpanKind::InvisiblePdfText;
    block_spans.push_back(doc_.spans.size());
    doc_.spans.push_back(std::move(span));
  }

  Document& doc_;
  const std::string& src_;
};

}  // namespace

Document parse_pdf(std::string source) {
  Document doc;
  doc.format = DocFormat::Pdf;
  doc.source = std::move(source);
  PdfParser(doc).run();
  return doc;
}

std::string pdf_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '(': out += "\\("; break;
      case ')': out += "\\)"; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

std::string serialize_pdf(const Document& doc) {
  std::string stream;
  int y = 760;
  for (const Span& s : doc.spans) {
    if (s.text.empty() || trim(s.text) != s.text) {
      throw Error(ErrorCode::InvalidArgument, "pdf writer: span text must be non-empty and trimmed");
    }
    if (s.visible) {
      stream += "BT /F1 11 Tf 72 " + std::to_string(y) + " Td (" + pdf_escape(s.text) + ") Tj ET\n";
      y -= 14;
    } else {
      stream += "q BT /F1 1 Tf 3 Tr (" + pdf_escape(s.text) + ") Tj ET Q\n";
    }
  }

  std::string out = "%PDF-1.4\n";
  std::vector<std::size_t> offsets;
  auto object = [&](const std::string& body) {
    offsets.push_back(out.size());
    out += std::to_string(offsets.size()) + " 0 obj\n" + body + "\nendobj\n";
  };
  object("<< /Type /Catalog /Pages 2 0 R >>");
  object("<< /Type /Pages /Kids [3 0 R] /Count 1 >>");
  object(
      "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Resources << /Font << /F1 4 0 R >> "
      ">> /Contents 5 0 R >>");
  object("<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>");
  object("<< /Length " + std::to_string(stream.size()) + " >>\nstream\n" + stream + "endstream");
  const std::size_t xref = out.size();
  out += "xref\n0 " + std::to_string(offsets.size() + 1) + "\n0000000000 65535 f \n";
  for (std::size_t off : offsets) {
    char line[24];
    std::snprintf(line, sizeof line, "%010zu 00000 n \n", off);
    out += line;
  }
  out += "trailer\n<< /Size " + std::to_string(offsets.size() + 1) + " /Root 1 0 R >>\nstartxref\n" +
         std::to_string(xref) + "\n%%EOF\n";
  return out;
}

}  // namespace rpl::detail
