#include "rpl/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "rpl/error.hpp"
#include "rpl/retriever.hpp"

namespace rpl {

void AttackCase::validate() const {
  if (question.empty()) throw Error(ErrorCode::InvalidArgument, "case " + id + ": empty question");
  if (answer.empty()) throw Error(ErrorCode::InvalidArgument, "case " + id + ": empty answer");
  if (target.empty()) throw Error(ErrorCode::InvalidArgument, "case " + id + ": empty target");
}

std::vector<AttackCase> load_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + manifest.string());
  std::vector<AttackCase> cases;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    for (const auto& item : j) {
      AttackCase c;
      c.id = item.at("id").get<std::string>();
      c.document = manifest.parent_path() / item.at("document").get<std::string>();
      const auto fmt = parse_format_name(item.at("format").get<std::string>());
      if (!fmt) throw Error(ErrorCode::InvalidArgument, "case " + c.id + ": unknown format");
      c.format = *fmt;
      c.category = item.value("category", "");
      c.question = item.at("question").get<std::string>();
      c.answer = item.at("answer").get<std::string>();
      c.response = item.value("response", "");
      c.target = item.at("target").get<std::string>();
      c.target_response = item.value("target_response", "");
      c.attack = item.value("attack", false);
      c.validate();
      cases.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "bad manifest " + manifest.string() + ": " + e.what());
  }
  return cases;
}

std::vector<Chunk> benign_retrieval(const Document& doc, const std::string& question,
                                    const PipelineConfig& pipeline) {
  const std::vector<Chunk> chunks = split_document(doc, pipeline.splitter);
  return retrieve(index(chunks), question, pipeline.top_k);
}

Vocab build_corpus_vocab(const std::vector<AttackCase>& cases, std::span<const PromptTemplate> templates,
                         const PipelineConfig&) {
  std::vector<std::string> texts;
  for (const PromptTemplate& t : templates) texts.push_back(t.scenario);
  for (const AttackCase& c : cases) {
    texts.push_back(parser_view(load_document(c.document, c.format)));
    texts.push_back(c.question);
    texts.push_back(c.response);
    texts.push_back(c.target_response);
    texts.push_back(c.answer);
    texts.push_back(c.target);
  }
  return Vocab::build(texts);
}

std::vector<TrainingPair> build_training_pairs(const std::vector<AttackCase>& cases,
                                               std::span<const PromptTemplate> templates,
                                               const PipelineConfig& pipeline, const Vocab& vocab,
                                               const AugmentConfig& augment) {
  std::vector<TrainingPair> pairs;
  Rng rng(augment.seed);
  for (const AttackCase& c : cases) {
    const Document doc = load_document(c.document, c.format);
    const std::vector<Chunk> retrieved = benign_retrieval(doc, c.question, pipeline);
    TokenSeq completion = tokenize(c.response, vocab);
    completion.push_back(kEos);
    for (const PromptTemplate& t : templates) {
      const AugmentedRequest req = assemble(t, retrieved, c.question);
      const std::string_view text = req.text;
      const TokenSeq prompt = tokenize(text, vocab);
      pairs.push_back({prompt, completion});
      const std::size_t first = tokenize(text.substr(0, req.content.begin), vocab).size();
      const std::size_t last = tokenize(text.substr(0, req.content.end), vocab).size();
      for (std::size_t k = 0; k < augment.noisy_copies; ++k) {
        const std::size_t at = first + rng.below(last - first + 1);
        TokenSeq noisy(prompt.begin(), prompt.begin() + static_cast<std::ptrdiff_t>(at));
        for (std::size_t j = 0; j < augment.noise_length; ++j) {
          noisy.push_back(static_cast<TokenId>(kFirstWordId + rng.below(vocab.size() - kFirstWordId)));
        }
        noisy.insert(noisy.end(), prompt.begin() + static_cast<std::ptrdiff_t>(at), prompt.end());
        pairs.push_back({std::move(noisy), completion});
      }
    }
  }
  return pairs;
}

std::vector<bool> allowed_tokens(const Vocab& vocab, DocFormat format) {
  std::vector<bool> allowed(vocab.size(), true);
  for (TokenId id = 0; id < vocab.size(); ++id) {
    const std::string& w = vocab.word(id);
    bool bad = vocab.reserved(id) || w.find("```") != std::string::npos;
    if (format == DocFormat::Html) bad = bad || w.find_first_of("<>") != std::string::npos;
    allowed[id] = !bad;
  }
  return allowed;
}

std::string_view case_status_name(CaseStatus status) {
  switch (status) {
    case CaseStatus::Completed: return "completed";
    case CaseStatus::Infeasible: return "infeasible";
    case CaseStatus::Failed: return "failed";
  }
  return "failed";
}

namespace {

// The request assembled around a probe payload, with the probe removed.
struct PlannedRequest {
  AugmentedRequest request;
  std::size_t insert_at = 0;
};

void shift_after(CharRange& r, std::size_t at, std::size_t n) {
  if (r.begin > at) r.begin -= n;
  if (r.end > at) r.end -= n;
}

std::optional<PlannedRequest> request_with_probe(const Document& doc, const AttackCase& c,
                                                 const PipelineConfig& pipeline, InjectionPoint point,
                                                 InvisibleFeature feature) {
  static const std::string kProbe = "rplprobe";
  const Document probed = inject(doc, kProbe, point, feature);
  const std::vector<Chunk> retrieved = benign_retrieval(probed, c.question, pipeline);
  AugmentedRequest req = assemble(pipeline.prompt, retrieved, c.question);
  const std::size_t at = req.text.find(kProbe);
  if (at == std::string::npos || at < req.content.begin || at >= req.content.end) return std::nullopt;
  req.text.erase(at, kProbe.size());
  shift_after(req.content, at, kProbe.size());
  shift_after(req.question, at, kProbe.size());
  for (CharRange& r : req.chunks) shift_after(r, at, kProbe.size());
  return PlannedRequest{std::move(req), at};
}

bool crucial_first(const std::vector<ScoredChunk>& ranked, const std::string& needle) {
  return !ranked.empty() && ranked.front().chunk.text.find(needle) != std::string::npos;
}

std::string strip_eos(TokenSeq tokens, const Vocab& vocab) {
  if (!tokens.empty() && tokens.back() == kEos) tokens.pop_back();
  return detokenize(tokens, vocab);
}

}  // namespace

CaseResult run_case(const AttackCase& c, const Oracle& oracle, const PipelineConfig& pipeline,
                    const AttackConfig& attack, const GenerationConfig& gen) {
  CaseResult r;
  r.id = c.id;
  r.format = c.format;
  r.question = c.question;
  const Vocab& vocab = oracle.vocab();
  try {
    c.validate();
    const std::string target_text = c.target_response.empty() ? c.target : c.target_response;
    r.target = TargetResponse::from_text(target_text, c.target, vocab);
    r.target.validate();

    const Document doc = load_document(c.document, c.format);
    const std::optional<CharRange> crucial = crucial_span_range(doc, c.answer);
    if (!crucial) throw Error(ErrorCode::InvalidArgument, "answer not found in document");
    const std::vector<Chunk> benign_chunks = split_document(doc, pipeline.splitter);
    const bool benign_first = crucial_first(rank(index(benign_chunks), c.question, 1), c.answer);

    const InvisibleFeature feature = list_features(c.format).front();
    const std::size_t estimate = attack.init_length * 8;
    const InjectionPoint planned = plan_position(doc, *crucial, pipeline.splitter, estimate);
    const std::optional<PlannedRequest> planned_req = request_with_probe(doc, c, pipeline, planned, feature);
    if (!planned_req) throw Error(ErrorCode::NoFeasiblePosition, "planned position is not retrieved");

    AttackConfig cfg = attack;
    cfg.allowed = allowed_tokens(vocab, c.format);
    const AttackResult ar =
        craft_sequence(oracle, planned_req->request, planned_req->insert_at, r.target, cfg, gen);
    r.attack_success = ar.success;
    r.iterations = ar.iterations;
    r.loss_trace = ar.loss_trace;
    r.seq_tokens = ar.seq.size();
    r.payload = detokenize(ar.seq, vocab);

    const InjectionPoint point = plan_position(doc, *crucial, pipeline.splitter, r.payload.size());
    const Document crafted = craft_document(doc, ar.seq, vocab, feature, point);
    if (!verify_invisibility(doc, crafted, r.payload)) {
      throw Error(ErrorCode::PayloadBreaksCarrier, "crafted document is not visually identical");
    }

    const Document ingested = parse_document(crafted.source, c.format);
    const VectorStore store = index(split_document(ingested, pipeline.splitter));
    const std::vector<ScoredChunk> ranked = rank(store, c.question, pipeline.top_k);
    r.retrieved.clear();
    for (const ScoredChunk& s : ranked) r.retrieved.push_back(s.chunk);
    r.retrieval_preserved = benign_first && crucial_first(ranked, c.answer);
    r.conveyed = std::any_of(r.retrieved.begin(), r.retrieved.end(), [&](const Chunk& ch) {
      return ch.text.find(r.payload) != std::string::npos;
    });

    const AugmentedRequest req = assemble(pipeline.prompt, r.retrieved, c.question);
    const TokenSeq input = tokenize(req.text, vocab);
    r.req_tokens = input.size();
    GenerationConfig final_gen = gen;
    final_gen.seed = derive_seed(gen.seed, 0);
    const TokenSeq out = oracle.generate(input, final_gen);
    r.response = strip_eos(out, vocab);
    r.res_tokens = tokenize(r.response, vocab).size();
    r.success = success_check(r.response, r.target);
    r.status = CaseStatus::Completed;
  } catch (const Error& e) {
    r.status = e.code() == ErrorCode::NoFeasiblePosition ? CaseStatus::Infeasible : CaseStatus::Failed;
    r.reason = e.what();
    r.success = false;
  }
  return r;
}

namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void aggregate(SettingReport& s) {
  const std::size_t n = s.cases.size();
  std::size_t success = 0;
  std::size_t attack_success = 0;
  std::size_t preserved = 0;
  double iters = 0;
  double seq = 0;
  double req = 0;
  double res = 0;
  for (const CaseResult& c : s.cases) {
    success += c.success ? 1 : 0;
    attack_success += c.attack_success ? 1 : 0;
    preserved += c.retrieval_preserved ? 1 : 0;
    iters += static_cast<double>(c.iterations);
    seq += static_cast<double>(c.seq_tokens);
    req += static_cast<double>(c.req_tokens);
    res += static_cast<double>(c.res_tokens);
  }
  const double denom = n == 0 ? 1.0 : static_cast<double>(n);
  s.asr = percent(success, n);
  s.attack_asr = percent(attack_success, n);
  s.retrieval_preservation = percent(preserved, n);
  s.mean_iterations = iters / denom;
  s.mean_seq = seq / denom;
  s.mean_req = req / denom;
  s.mean_res = res / denom;
  s.formats.clear();
  for (DocFormat f : {DocFormat::Pdf, DocFormat::Markdown, DocFormat::Html}) {
    FormatRow row;
    row.format = f;
    std::size_t conveyed = 0;
    std::size_t ok = 0;
    for (const CaseResult& c : s.cases) {
      if (c.format != f) continue;
      ++row.count;
      conveyed += c.conveyed ? 1 : 0;
      ok += c.success ? 1 : 0;
    }
    if (row.count == 0) continue;
    row.injection = percent(conveyed, row.count);
    row.asr = percent(ok, row.count);
    s.formats.push_back(row);
  }
}

EvalReport run_suite(const std::vector<AttackCase>& cases, const Oracle& oracle,
                     const PipelineConfig& pipeline, const AttackConfig& attack,
                     const GenerationConfig& gen, std::span<const double> temperatures) {
  if (cases.empty()) throw Error(ErrorCode::InvalidArgument, "suite has no cases");
  EvalReport report;
  for (double t : temperatures) {
    SettingReport setting;
    setting.temperature = t;
    setting.cases.resize(cases.size());
    auto work = [&](std::size_t i) {
      AttackConfig a = attack;
      a.seed = derive_seed(attack.seed, i);
      GenerationConfig g = gen;
      g.temperature = t;
      g.seed = derive_seed(gen.seed, i);
      setting.cases[i] = run_case(cases[i], oracle, pipeline, a, g);
    };
    const std::size_t threads = std::min(std::max<std::size_t>(pipeline.jobs, 1), cases.size());
    if (threads <= 1) {
      for (std::size_t i = 0; i < cases.size(); ++i) work(i);
    } else {
      std::vector<std::exception_ptr> errors(threads);
      std::vector<std::thread> pool;
      for (std::size_t k = 0; k < threads; ++k) {
        pool.emplace_back([&, k] {
          try {
            for (std::size_t i = k; i < cases.size(); i += threads) work(i);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    aggregate(setting);
    report.settings.push_back(std::move(setting));
  }
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json root;
  root["settings"] = nlohmann::ordered_json::array();
  for (const SettingReport& s : report.settings) {
    nlohmann::ordered_json js;
    js["temperature"] = s.temperature;
    js["asr"] = s.asr;
    js["attack_asr"] = s.attack_asr;
    js["iter"] = s.mean_iterations;
    js["seq"] = s.mean_seq;
    js["req"] = s.mean_req;
    js["res"] = s.mean_res;
    js["retrieval_preservation"] = s.retrieval_preservation;
    js["formats"] = nlohmann::ordered_json::array();
    for (const FormatRow& f : s.formats) {
      js["formats"].push_back({{"format", format_name(f.format)},
                               {"count", f.count},
                               {"injection", f.injection},
                               {"asr", f.asr}});
    }
    js["cases"] = nlohmann::ordered_json::array();
    for (const CaseResult& c : s.cases) {
      nlohmann::ordered_json jc;
      jc["id"] = c.id;
      jc["format"] = format_name(c.format);
      jc["status"] = case_status_name(c.status);
      if (!c.reason.empty()) jc["reason"] = c.reason;
      jc["attack_success"] = c.attack_success;
      jc["conveyed"] = c.conveyed;
      jc["retrieval_preserved"] = c.retrieval_preserved;
      jc["success"] = c.success;
      jc["iterations"] = c.iterations;
      jc["seq_tokens"] = c.seq_tokens;
      jc["req_tokens"] = c.req_tokens;
      jc["res_tokens"] = c.res_tokens;
      jc["payload"] = c.payload;
      jc["response"] = c.response;
      jc["loss_trace"] = c.loss_trace;
      js["cases"].push_back(std::move(jc));
    }
    root["settings"].push_back(std::move(js));
  }
  return root.dump(2);
}

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %8s %8s %8s %8s %8s %12s\n", "Temperature", "ASR(%)", "Iter",
                "Seq", "Req", "Res", "Preserved(%)");
  out << line;
  for (const SettingReport& s : report.settings) {
    std::snprintf(line, sizeof line, "%-12.2f %8.2f %8.2f %8.2f %8.2f %8.2f %12.2f\n", s.temperature, s.asr,
                  s.mean_iterations, s.mean_seq, s.mean_req, s.mean_res, s.retrieval_preservation);
    out << line;
  }
  for (const SettingReport& s : report.settings) {
    std::snprintf(line, sizeof line, "\nTemperature %.2f\n%-8s %6s %13s %8s\n", s.temperature, "Format",
                  "Count", "Injection(%)", "ASR(%)");
    out << line;
    for (const FormatRow& f : s.formats) {
      std::snprintf(line, sizeof line, "%-8s %6zu %13.2f %8.2f\n", std::string(format_name(f.format)).c_str(),
                    f.count, f.injection, f.asr);
      out << line;
    }
  }
  return out.str();
}

TransferResult transfer_eval(const std::vector<CaseResult>& results, const PromptTemplate& alternate,
                             const Oracle& oracle, const GenerationConfig& gen) {
  TransferResult t;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const CaseResult& r = results[i];
    if (!r.success) continue;
    ++t.successful;
    const AugmentedRequest req = assemble(alternate, r.retrieved, r.question);
    GenerationConfig g = gen;
    g.seed = derive_seed(gen.seed, i);
    const std::string response = strip_eos(oracle.generate(tokenize(req.text, oracle.vocab()), g), oracle.vocab());
    if (success_check(response, r.target)) ++t.transferred;
  }
  if (t.successful == 0) {
    t.warning = "no successful sequences to transfer";
    return t;
  }
  t.asr = percent(t.transferred, t.successful);
  return t;
}

}  // namespace rpl
