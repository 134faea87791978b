#pragma once

#include <string>
#include <vector>

#include "rpl/doc_model.hpp"

namespace rpl {

enum class Severity { Info, Suspicious };

std::string_view severity_name(Severity severity);

struct Finding {
  std::string path;
  SpanKind kind = SpanKind::Body;
  ByteRange range;
  std::string text;
  Severity severity = Severity::Info;
};

struct ScanConfig {
  // Invisible text with at least this many tokens is Suspicious.
  std::size_t suspicious_tokens = 5;
};

// One finding per invisible span. Suspicious when the text has
// suspicious_tokens or more tokens or holds a URL-like token (contains "://"
// or starts with "www.").
std::vector<Finding> scan(const Document& doc, const std::string& path = {}, const ScanConfig& config = {});

bool any_suspicious(const std::vector<Finding>& findings);

}  // namespace rpl
