#pragma once

#include <string>
#include <string_view>

#include "rpl/doc_model.hpp"

namespace rpl::detail {

Document parse_markdown(std::string source);
Document parse_html(std::string source);
Document parse_pdf(std::string source);

std::string serialize_markdown(const Document& doc);
std::string serialize_html(const Document& doc);
std::string serialize_pdf(const Document& doc);

// PDF literal-string escaping shared by the writer and the injector.
std::string pdf_escape(std::string_view text);

// Closes sections against the final span count and drops an empty preamble.
void finish_sections(Document& doc);

}  // namespace rpl::detail
