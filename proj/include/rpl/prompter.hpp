#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rpl/chunker.hpp"

namespace rpl {

enum class Slot { ScenarioDescription, Content, Question };

struct PromptTemplate {
  std::string name;
  std::vector<Slot> order;
  std::string scenario;

  // Content and Question must each appear exactly once; ScenarioDescription
  // at most once. Throws Error(InvalidArgument).
  void validate() const;
};

struct AugmentedRequest {
  std::string text;
  CharRange content;
  CharRange question;
  std::vector<CharRange> chunks;  // one per retrieved chunk, inside `content`
  std::string template_name;
};

// Fills the slots in template order, joined by a blank line; retrieved chunks
// are joined by a blank line inside the content slot. A scenario slot with
// empty scenario text is omitted.
AugmentedRequest assemble(const PromptTemplate& tmpl, std::span<const Chunk> retrieved,
                          std::string_view question);

// "<Scenario Description> <Content> <Question>"
const PromptTemplate& qa_scenario_template();
// "<Question> <Content>"
const PromptTemplate& direct_template();

// JSON array of {name, order, scenario}; order entries are "scenario",
// "content", "question".
std::vector<PromptTemplate> parse_templates(std::string_view json_text);
std::vector<PromptTemplate> load_templates(const std::filesystem::path& path);
const PromptTemplate& find_template(std::span<const PromptTemplate> templates, std::string_view name);

}  // namespace rpl
