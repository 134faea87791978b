#include "rpl/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rpl/attack.hpp"
#include "rpl/chunker.hpp"
#include "rpl/doc_model.hpp"
#include "rpl/error.hpp"
#include "rpl/eval.hpp"
#include "rpl/inject.hpp"
#include "rpl/oracle.hpp"
#include "rpl/prompter.hpp"
#include "rpl/retriever.hpp"
#include "rpl/scanner.hpp"
#include "rpl/toy_model.hpp"

namespace rpl {
namespace {

using json = nlohmann::ordered_json;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RPL_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "RPL_SEED must be an unsigned integer");
    }
  }
  return 0;
}

json range_json(std::size_t begin, std::size_t end) { return json::array({begin, end}); }

std::vector<PromptTemplate> templates_from(const std::string& path) {
  if (path.empty()) return {qa_scenario_template(), direct_template()};
  return load_templates(path);
}

SplitterConfig splitter_from(const std::string& kind, std::size_t size, std::size_t overlap) {
  SplitterConfig c;
  if (kind == "length") {
    c.kind = SplitterKind::LengthBased;
  } else if (kind == "section") {
    c.kind = SplitterKind::SectionBased;
  } else {
    throw Error(ErrorCode::InvalidArgument, "splitter must be 'length' or 'section'");
  }
  c.chunk_size = size;
  c.overlap = overlap;
  c.validate();
  return c;
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << data;
}

json document_json(const Document& doc) {
  json j;
  j["format"] = format_name(doc.format);
  j["spans"] = json::array();
  for (const Span& s : doc.spans) {
    j["spans"].push_back({{"text", s.text},
                          {"visible", s.visible},
                          {"kind", span_kind_name(s.kind)},
                          {"origin", range_json(s.origin.begin, s.origin.end)}});
  }
  j["sections"] = json::array();
  for (const Section& s : doc.sections) {
    j["sections"].push_back({{"heading", s.heading}, {"spans", range_json(s.first_span, s.end_span)}});
  }
  j["parser_view"] = parser_view(doc);
  j["render_view"] = render_view(doc);
  return j;
}

json chunk_json(const Chunk& c) {
  json j{{"text", c.text}, {"range", range_json(c.range.begin, c.range.end)}};
  if (c.section) j["section"] = *c.section;
  return j;
}

struct ModelFiles {
  std::string model;
  std::string vocab;
  std::string corpus;
  std::size_t epochs = 200;
  double lr = 0.3;
  std::size_t noisy_copies = 2;
};

void add_model_options(CLI::App* cmd, ModelFiles& m) {
  cmd->add_option("--model", m.model, "Toy model file (trained in-process from --corpus when omitted)");
  cmd->add_option("--vocab", m.vocab, "Vocabulary JSON for --model");
  cmd->add_option("--epochs", m.epochs, "Epochs when training in-process")->capture_default_str();
  cmd->add_option("--lr", m.lr, "Learning rate when training in-process")->capture_default_str();
  cmd->add_option("--noisy-copies", m.noisy_copies, "Noise-augmented copies per training pair")
      ->capture_default_str();
}

ToyOracle load_or_train(const ModelFiles& m, const std::vector<AttackCase>& cases,
                        std::span<const PromptTemplate> templates, const PipelineConfig& pipeline,
                        std::uint64_t seed, std::ostream& err) {
  if (!m.model.empty()) {
    if (m.vocab.empty()) throw Error(ErrorCode::InvalidArgument, "--model needs --vocab");
    return ToyOracle(ToyModel::load(m.model), Vocab::load(m.vocab));
  }
  if (cases.empty()) throw Error(ErrorCode::InvalidArgument, "no model given and no corpus to train on");
  Vocab vocab = build_corpus_vocab(cases, templates, pipeline);
  AugmentConfig augment;
  augment.noisy_copies = m.noisy_copies;
  augment.seed = derive_seed(seed, 2);
  const std::vector<TrainingPair> pairs = build_training_pairs(cases, templates, pipeline, vocab, augment);
  TrainConfig tc;
  tc.dims.vocab = vocab.size();
  tc.epochs = m.epochs;
  tc.learning_rate = m.lr;
  tc.seed = seed;
  err << "training toy model: V=" << vocab.size() << ", " << pairs.size() << " pairs, " << m.epochs
      << " epochs\n";
  return ToyOracle(train_toy(pairs, tc), std::move(vocab));
}

std::vector<AttackCase> corpus_cases(const std::string& corpus) {
  if (corpus.empty()) return {};
  return load_manifest(std::filesystem::path(corpus) / "manifest.json");
}

std::vector<double> parse_temperatures(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad temperature '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no temperatures given");
  return out;
}

std::vector<std::filesystem::path> scan_targets(const std::string& input) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(input)) {
    for (const auto& e : std::filesystem::directory_iterator(input)) {
      if (e.is_regular_file() && format_from_path(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.emplace_back(input);
  }
  return files;
}

// Visible non-heading span most similar to the question.
std::string anchor_for(const Document& doc, const std::string& question) {
  const EmbeddingVector q = embed(question);
  const Span* best = nullptr;
  double best_score = -1.0;
  for (const Span& s : doc.spans) {
    if (!s.visible || s.kind == SpanKind::Heading) continue;
    const double score = cosine(q, embed(s.text));
    if (score > best_score) {
      best = &s;
      best_score = score;
    }
  }
  if (!best) throw Error(ErrorCode::InvalidArgument, "document has no visible body text");
  return best->text;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Retrieval poisoning lab: parse, inject, split, retrieve, attack, evaluate, scan, train-toy"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitError;
  }

  // parse
  std::string parse_input;
  std::string parse_format;
  auto* parse = app.add_subcommand("parse", "Parse a document and print its spans and views");
  parse->add_option("--input", parse_input, "Document path")->required();
  parse->add_option("--format", parse_format, "md, html or pdf (default: from extension)");

  // inject
  std::string inj_input, inj_payload, inj_feature, inj_output, inj_near;
  std::size_t inj_span = 0, inj_offset = 0;
  auto* inj = app.add_subcommand("inject", "Hide a payload in a document");
  inj->add_option("--input", inj_input, "Document path")->required();
  inj->add_option("--payload", inj_payload, "Text to hide")->required();
  inj->add_option("--feature", inj_feature, "md-fence-info, html-hidden-span or pdf-invisible-text");
  inj->add_option("--span", inj_span, "Span index of the injection point (default: first usable span)");
  inj->add_option("--offset", inj_offset, "Character offset inside the span");
  inj->add_option("--near", inj_near, "Plan the point next to the span containing this text");
  inj->add_option("--output", inj_output, "Where to write the crafted document")->required();

  // split
  std::string split_input, split_kind = "length";
  std::size_t split_size = 512, split_overlap = 0;
  auto* spl = app.add_subcommand("split", "Split a document's parser view into chunks");
  spl->add_option("--input", split_input, "Document path")->required();
  spl->add_option("--splitter", split_kind, "length or section")->capture_default_str();
  spl->add_option("--chunk-size", split_size, "Characters per chunk")->capture_default_str();
  spl->add_option("--overlap", split_overlap, "Overlapping characters")->capture_default_str();

  // retrieve
  std::vector<std::string> ret_inputs;
  std::string ret_query, ret_kind = "length", ret_store;
  std::size_t ret_top_k = 1, ret_size = 1000, ret_overlap = 100;
  auto* ret = app.add_subcommand("retrieve", "Index documents and retrieve chunks for a query");
  ret->add_option("--input", ret_inputs, "Document paths")->required();
  ret->add_option("--query", ret_query, "Question")->required();
  ret->add_option("--top-k", ret_top_k, "Chunks to return")->capture_default_str();
  ret->add_option("--splitter", ret_kind, "length or section")->capture_default_str();
  ret->add_option("--chunk-size", ret_size, "Characters per chunk")->capture_default_str();
  ret->add_option("--overlap", ret_overlap, "Overlapping characters")->capture_default_str();
  ret->add_option("--store", ret_store, "Also save the vector store as JSON here");

  // attack
  std::string att_doc, att_question, att_target, att_crucial, att_template = "QA_SCENARIO",
                                                               att_templates, att_output, att_anchor;
  AttackConfig att_cfg;
  GenerationConfig att_gen;
  ModelFiles att_model;
  std::size_t att_size = 1000, att_overlap = 100;
  auto* att = app.add_subcommand("attack", "Optimize an attack sequence for one document and question");
  att->add_option("--doc", att_doc, "Document path")->required();
  att->add_option("--question", att_question, "User question")->required();
  att->add_option("--target", att_target, "Targeted response text")->required();
  att->add_option("--crucial", att_crucial, "Crucial string the response must contain")->required();
  att->add_option("--template", att_template, "Prompt template name")->capture_default_str();
  att->add_option("--templates", att_templates, "Template JSON file (default: built-in)");
  att->add_option("--k", att_cfg.k, "Candidates per step")->capture_default_str();
  att->add_option("--w", att_cfg.w, "Crucial weight")->capture_default_str();
  att->add_option("--max-step", att_cfg.max_step, "Iteration limit")->capture_default_str();
  att->add_option("--top-b", att_cfg.top_b, "Gradient shortlist size")->capture_default_str();
  att->add_option("--init-length", att_cfg.init_length, "Attack sequence length")->capture_default_str();
  att->add_option("--jobs", att_cfg.jobs, "Threads for candidate scoring")->capture_default_str();
  att->add_option("--seed", seed, "Seed (default: RPL_SEED or 0)");
  att->add_option("--temperature", att_gen.temperature, "Sampling temperature")->capture_default_str();
  att->add_option("--corpus", att_model.corpus, "Fixture corpus used to train a model in-process");
  att->add_option("--chunk-size", att_size, "Characters per chunk")->capture_default_str();
  att->add_option("--overlap", att_overlap, "Overlapping characters")->capture_default_str();
  att->add_option("--output", att_output, "Write the crafted document here");
  att->add_option("--anchor", att_anchor, "Document text the payload must share a chunk with "
                                          "(default: the span closest to the question)");
  add_model_options(att, att_model);

  // evaluate
  std::string ev_templates, ev_temps = "0.7,1.0", ev_output, ev_table, ev_transfer = "DIRECT";
  ModelFiles ev_model;
  AttackConfig ev_cfg;
  std::size_t ev_limit = 0, ev_jobs = 1, ev_size = 1000, ev_overlap = 100;
  bool ev_attack_only = false;
  auto* ev = app.add_subcommand("evaluate", "Run the attack suite over a fixture corpus");
  ev->add_option("--corpus", ev_model.corpus, "Corpus directory holding manifest.json")->required();
  ev->add_option("--temperatures", ev_temps, "Comma separated temperatures")->capture_default_str();
  ev->add_option("--seed", seed, "Seed (default: RPL_SEED or 0)");
  ev->add_option("--templates", ev_templates, "Template JSON file (default: built-in)");
  ev->add_option("--k", ev_cfg.k, "Candidates per step")->capture_default_str();
  ev->add_option("--w", ev_cfg.w, "Crucial weight")->capture_default_str();
  ev->add_option("--max-step", ev_cfg.max_step, "Iteration limit")->capture_default_str();
  ev->add_option("--top-b", ev_cfg.top_b, "Gradient shortlist size")->capture_default_str();
  ev->add_option("--init-length", ev_cfg.init_length, "Attack sequence length")->capture_default_str();
  ev->add_option("--limit", ev_limit, "Only the first N cases (0: all)")->capture_default_str();
  ev->add_flag("--attack-only", ev_attack_only, "Only cases of the attack subset");
  ev->add_option("--jobs", ev_jobs, "Cases evaluated in parallel")->capture_default_str();
  ev->add_option("--chunk-size", ev_size, "Characters per chunk")->capture_default_str();
  ev->add_option("--overlap", ev_overlap, "Overlapping characters")->capture_default_str();
  ev->add_option("--transfer", ev_transfer, "Alternate template for transfer (empty: skip)")
      ->capture_default_str();
  ev->add_option("--output", ev_output, "Also write the JSON report here");
  ev->add_option("--table", ev_table, "Write the text table here");
  add_model_options(ev, ev_model);

  // scan
  std::string scan_input;
  ScanConfig scan_cfg;
  auto* scn = app.add_subcommand("scan", "Report invisible content in documents");
  scn->add_option("--input", scan_input, "Document or directory")->required();
  scn->add_option("--threshold", scan_cfg.suspicious_tokens, "Token count that makes a finding suspicious")
      ->capture_default_str();

  // train-toy
  std::string tr_corpus, tr_out, tr_vocab_out, tr_templates;
  TrainConfig tr_cfg;
  AugmentConfig tr_augment;
  tr_augment.noisy_copies = 2;
  auto* tr = app.add_subcommand("train-toy", "Train the toy language model on a fixture corpus");
  tr->add_option("--corpus", tr_corpus, "Corpus directory holding manifest.json")->required();
  tr->add_option("--epochs", tr_cfg.epochs, "Training epochs")->capture_default_str();
  tr->add_option("--lr", tr_cfg.learning_rate, "Learning rate")->capture_default_str();
  tr->add_option("--noisy-copies", tr_augment.noisy_copies, "Noise-augmented copies per training pair")
      ->capture_default_str();
  tr->add_option("--seed", seed, "Seed (default: RPL_SEED or 0)");
  tr->add_option("--templates", tr_templates, "Template JSON file (default: built-in)");
  tr->add_option("--out", tr_out, "Model output path")->required();
  tr->add_option("--vocab-out", tr_vocab_out, "Vocabulary output path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kExitError;
  }

  try {
    if (*parse) {
      std::optional<DocFormat> fmt;
      if (!parse_format.empty()) {
        fmt = parse_format_name(parse_format);
        if (!fmt) throw Error(ErrorCode::InvalidArgument, "unknown format " + parse_format);
      }
      out << document_json(load_document(parse_input, fmt)).dump(2) << '\n';
      return kExitOk;
    }
    if (*inj) {
      const Document doc = load_document(inj_input);
      InvisibleFeature feature = list_features(doc.format).front();
      if (!inj_feature.empty()) {
        const auto f = parse_feature_name(inj_feature);
        if (!f) throw Error(ErrorCode::InvalidArgument, "unknown feature " + inj_feature);
        feature = *f;
      }
      InjectionPoint point{inj_span, inj_offset, std::nullopt};
      if (!inj_near.empty()) {
        const auto crucial = crucial_span_range(doc, inj_near);
        if (!crucial) throw Error(ErrorCode::InvalidArgument, "--near text not found");
        SplitterConfig sc{SplitterKind::LengthBased, 1000, 100};
        point = plan_position(doc, *crucial, sc, inj_payload.size());
      }
      std::optional<Document> result;
      if (inj->count("--span") == 0 && inj_near.empty()) {
        // First span that can carry the feature.
        for (std::size_t i = 0; i < doc.spans.size() && !result; ++i) {
          try {
            result = inject(doc, inj_payload, {i, inj_offset, std::nullopt}, feature);
            point.span_index = i;
          } catch (const Error& e) {
            if (e.code() != ErrorCode::NoCarrierAtPoint) throw;
          }
        }
        if (!result) throw Error(ErrorCode::NoCarrierAtPoint, "no span can carry " + std::string(feature_name(feature)));
      } else {
        result = inject(doc, inj_payload, point, feature);
      }
      const Document& crafted = *result;
      write_file(inj_output, crafted.source);
      json j{{"output", inj_output}, {"feature", feature_name(feature)}, {"span", point.span_index},
             {"invisible", verify_invisibility(doc, crafted, inj_payload)}};
      if (crafted.injected) j["injected"] = range_json(crafted.injected->begin, crafted.injected->end);
      out << j.dump(2) << '\n';
      return kExitOk;
    }
    if (*spl) {
      const Document doc = load_document(split_input);
      json j = json::array();
      for (const Chunk& c : split_document(doc, splitter_from(split_kind, split_size, split_overlap))) {
        j.push_back(chunk_json(c));
      }
      out << j.dump(2) << '\n';
      return kExitOk;
    }
    if (*ret) {
      const SplitterConfig sc = splitter_from(ret_kind, ret_size, ret_overlap);
      std::vector<Chunk> chunks;
      for (const std::string& in : ret_inputs) {
        for (Chunk& c : split_document(load_document(in), sc)) chunks.push_back(std::move(c));
      }
      const VectorStore store = index(chunks);
      if (!ret_store.empty()) save_store(store, ret_store);
      json j = json::array();
      for (const ScoredChunk& s : rank(store, ret_query, ret_top_k)) {
        json c = chunk_json(s.chunk);
        c["id"] = s.id;
        c["score"] = s.score;
        j.push_back(std::move(c));
      }
      out << j.dump(2) << '\n';
      return kExitOk;
    }
    if (*att) {
      const std::vector<PromptTemplate> templates = templates_from(att_templates);
      PipelineConfig pipeline;
      pipeline.splitter = splitter_from("length", att_size, att_overlap);
      pipeline.prompt = find_template(templates, att_template);
      const ToyOracle oracle =
          load_or_train(att_model, corpus_cases(att_model.corpus), templates, pipeline, seed, err);
      const Document doc = load_document(att_doc);
      AttackCase c;
      c.id = "cli";
      c.document = att_doc;
      c.format = doc.format;
      c.question = att_question;
      c.target = att_crucial;
      c.target_response = att_target;
      c.answer = att_anchor.empty() ? anchor_for(doc, att_question) : att_anchor;
      att_cfg.seed = seed;
      att_gen.seed = seed;
      const CaseResult r = run_case(c, oracle, pipeline, att_cfg, att_gen);
      if (r.status != CaseStatus::Completed) throw Error(ErrorCode::InvalidArgument, r.reason);
      if (!att_output.empty()) {
        const InjectionPoint point =
            plan_position(doc, *crucial_span_range(doc, c.answer), pipeline.splitter, r.payload.size());
        write_file(att_output, inject(doc, r.payload, point, list_features(doc.format).front()).source);
      }
      json j;
      j["success"] = r.attack_success;
      j["seq"] = r.payload;
      j["iterations"] = r.iterations;
      j["loss_trace"] = r.loss_trace;
      j["response"] = r.response;
      j["end_to_end_success"] = r.success;
      j["conveyed"] = r.conveyed;
      out << j.dump(2) << '\n';
      return kExitOk;
    }
    if (*ev) {
      const std::vector<PromptTemplate> templates = templates_from(ev_templates);
      std::vector<AttackCase> all = corpus_cases(ev_model.corpus);
      PipelineConfig pipeline;
      pipeline.splitter = splitter_from("length", ev_size, ev_overlap);
      pipeline.prompt = find_template(templates, "QA_SCENARIO");
      pipeline.jobs = ev_jobs;
      const ToyOracle oracle = load_or_train(ev_model, all, templates, pipeline, seed, err);
      std::vector<AttackCase> cases;
      for (const AttackCase& c : all) {
        if (!ev_attack_only || c.attack) cases.push_back(c);
      }
      if (ev_limit > 0 && cases.size() > ev_limit) cases.resize(ev_limit);
      ev_cfg.seed = seed;
      GenerationConfig gen;
      gen.seed = seed;
      const std::vector<double> temps = parse_temperatures(ev_temps);
      const EvalReport report = run_suite(cases, oracle, pipeline, ev_cfg, gen, temps);
      nlohmann::ordered_json j = nlohmann::ordered_json::parse(report_json(report));
      if (!ev_transfer.empty()) {
        const PromptTemplate& alt = find_template(templates, ev_transfer);
        for (std::size_t i = 0; i < report.settings.size(); ++i) {
          GenerationConfig g = gen;
          g.temperature = report.settings[i].temperature;
          const TransferResult t = transfer_eval(report.settings[i].cases, alt, oracle, g);
          j["settings"][i]["transfer"] = {{"template", alt.name},
                                          {"asr", t.asr},
                                          {"successful", t.successful},
                                          {"transferred", t.transferred}};
          if (!t.warning.empty()) err << "transfer: " << t.warning << '\n';
        }
      }
      const std::string text = j.dump(2);
      out << text << '\n';
      if (!ev_output.empty()) write_file(ev_output, text + "\n");
      const std::string table = report_table(report);
      if (!ev_table.empty()) write_file(ev_table, table);
      err << table;
      return kExitOk;
    }
    if (*scn) {
      bool suspicious = false;
      for (const auto& path : scan_targets(scan_input)) {
        const Document doc = load_document(path);
        const std::vector<Finding> findings = scan(doc, path.string(), scan_cfg);
        for (const Finding& f : findings) {
          json j{{"path", f.path},
                 {"kind", span_kind_name(f.kind)},
                 {"range", range_json(f.range.begin, f.range.end)},
                 {"text", f.text},
                 {"severity", severity_name(f.severity)}};
          out << j.dump() << '\n';
        }
        suspicious = suspicious || any_suspicious(findings);
      }
      return suspicious ? kExitSuspicious : kExitOk;
    }
    if (*tr) {
      const std::vector<PromptTemplate> templates = templates_from(tr_templates);
      const std::vector<AttackCase> cases = corpus_cases(tr_corpus);
      PipelineConfig pipeline;
      const Vocab vocab = build_corpus_vocab(cases, templates, pipeline);
      tr_augment.seed = derive_seed(seed, 2);
      const std::vector<TrainingPair> pairs = build_training_pairs(cases, templates, pipeline, vocab, tr_augment);
      tr_cfg.dims.vocab = vocab.size();
      tr_cfg.seed = seed;
      TrainReport report;
      const ToyModel model = train_toy(pairs, tr_cfg, &report);
      model.save(tr_out);
      vocab.save(tr_vocab_out);
      json j{{"model", tr_out},
             {"vocab", tr_vocab_out},
             {"vocab_size", vocab.size()},
             {"pairs", pairs.size()},
             {"loss_curve", report.loss_curve}};
      out << j.dump(2) << '\n';
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  err << app.help();
  return kExitError;
}

}  // namespace rpl
