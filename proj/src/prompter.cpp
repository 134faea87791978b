#include "rpl/prompter.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rpl/error.hpp"

namespace rpl {

namespace {

constexpr std::string_view kSlotSeparator = "\n\n";
constexpr std::string_view kChunkSeparator = "\n\n";

// Keep in sync with config/templates.json.
constexpr std::string_view kQaScenario =
    "You are a helpful assistant for software and medicine questions. Answer the question "
    "using only the reference content below.";

}  // namespace

void PromptTemplate::validate() const {
  auto count = [&](Slot s) { return std::count(order.begin(), order.end(), s); };
  if (count(Slot::Content) != 1 || count(Slot::Question) != 1 || count(Slot::ScenarioDescription) > 1) {
    throw Error(ErrorCode::InvalidArgument,
                "template '" + name + "' needs exactly one content and one question slot");
  }
}

AugmentedRequest assemble(const PromptTemplate& tmpl, std::span<const Chunk> retrieved,
                          std::string_view question) {
  tmpl.validate();
  AugmentedRequest req;
  req.template_name = tmpl.name;
  bool first = true;
  for (Slot slot : tmpl.order) {
    if (slot == Slot::ScenarioDescription && tmpl.scenario.empty()) continue;
    if (!first) req.text += kSlotSeparator;
    first = false;
    switch (slot) {
      case Slot::ScenarioDescription: req.text += tmpl.scenario; break;
      case Slot::Content: {
        req.content.begin = req.text.size();
        for (std::size_t i = 0; i < retrieved.size(); ++i) {
          if (i > 0) req.text += kChunkSeparator;
          const std::size_t at = req.text.size();
          req.text += retrieved[i].text;
          req.chunks.push_back({at, req.text.size()});
        }
        req.content.end = req.text.size();
        break;
      }
      case Slot::Question:
        req.question.begin = req.text.size();
        req.text += question;
        req.question.end = req.text.size();
        break;
    }
  }
  return req;
}

const PromptTemplate& qa_scenario_template() {
  static const PromptTemplate t{
      "QA_SCENARIO", {Slot::ScenarioDescription, Slot::Content, Slot::Question}, std::string(kQaScenario)};
  return t;
}

const PromptTemplate& direct_template() {
  static const PromptTemplate t{"DIRECT", {Slot::Question, Slot::Content}, ""};
  return t;
}

std::vector<PromptTemplate> parse_templates(std::string_view json_text) {
  std::vector<PromptTemplate> out;
  try {
    const nlohmann::json arr = nlohmann::json::parse(json_text);
    for (const auto& j : arr) {
      PromptTemplate t;
      t.name = j.at("name").get<std::string>();
      t.scenario = j.value("scenario", std::string());
      for (const auto& s : j.at("order")) {
        const std::string slot = s.get<std::string>();
        if (slot == "scenario") {
          t.order.push_back(Slot::ScenarioDescription);
        } else if (slot == "content") {
          t.order.push_back(Slot::Content);
        } else if (slot == "question") {
          t.order.push_back(Slot::Question);
        } else {
          throw Error(ErrorCode::InvalidArgument, "unknown template slot '" + slot + "'");
        }
      }
      t.validate();
      out.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad template file: ") + e.what());
  }
  return out;
}

std::vector<PromptTemplate> load_templates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_templates(buffer.str());
}

const PromptTemplate& find_template(std::span<const PromptTemplate> templates, std::string_view name) {
  for (const PromptTemplate& t : templates) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown template '" + std::string(name) + "'");
}

}  // namespace rpl
