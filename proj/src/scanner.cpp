#include "rpl/scanner.hpp"

#include <algorithm>

#include "rpl/tokenizer.hpp"

namespace rpl {

std::string_view severity_name(Severity severity) {
  return severity == Severity::Suspicious ? "suspicious" : "info";
}

namespace {

bool url_like(const std::string& token) {
  return token.find("://") != std::string::npos || token.rfind("www.", 0) == 0;
}

}  // namespace

std::vector<Finding> scan(const Document& doc, const std::string& path, const ScanConfig& config) {
  std::vector<Finding> out;
  for (const Span& s : doc.spans) {
    if (s.visible) continue;
    const std::vector<std::string> tokens = split_words(s.text);
    const bool loud = tokens.size() >= config.suspicious_tokens ||
                      std::any_of(tokens.begin(), tokens.end(), url_like);
    out.push_back(Finding{path, s.kind, s.origin, s.text, loud ? Severity::Suspicious : Severity::Info});
  }
  return out;
}

bool any_suspicious(const std::vector<Finding>& findings) {
  return std::any_of(findings.begin(), findings.end(),
                     [](const Finding& f) { return f.severity == Severity::Suspicious; });
}

}  // namespace rpl
