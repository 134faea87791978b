#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rpl/attack.hpp"
#include "rpl/chunker.hpp"
#include "rpl/doc_model.hpp"
#include "rpl/oracle.hpp"
#include "rpl/prompter.hpp"
#include "rpl/toy_model.hpp"

namespace rpl {

struct AttackCase {
  std::string id;
  std::filesystem::path document;
  DocFormat format = DocFormat::Markdown;
  std::string category;
  std::string question;
  std::string answer;           // correct crucial string
  std::string response;         // benign answer sentence
  std::string target;           // malicious crucial string
  std::string target_response;  // malicious answer sentence
  bool attack = false;          // member of the attack subset

  // Throws Error(InvalidArgument) on an empty question, answer or target.
  void validate() const;
};

// JSON array of case objects; document paths are resolved against the
// manifest's directory.
std::vector<AttackCase> load_manifest(const std::filesystem::path& manifest);

struct PipelineConfig {
  SplitterConfig splitter{SplitterKind::LengthBased, 1000, 100};
  std::size_t top_k = 1;
  PromptTemplate prompt = qa_scenario_template();
  // Threads for independent cases in run_suite.
  std::size_t jobs = 1;
};

// Benign pipeline pass: chunks of the document retrieved for the question.
std::vector<Chunk> benign_retrieval(const Document& doc, const std::string& question,
                                    const PipelineConfig& pipeline);

// Vocabulary over every parser view, question, response and template text.
Vocab build_corpus_vocab(const std::vector<AttackCase>& cases, std::span<const PromptTemplate> templates,
                         const PipelineConfig& pipeline);

struct AugmentConfig {
  // Extra copies of every pair with a run of random tokens inserted at a
  // random point of the content slot. Teaches the model to ignore arbitrary
  // insertions, so an attack has to find tokens that actually steer it.
  std::size_t noisy_copies = 0;
  std::size_t noise_length = 32;
  std::uint64_t seed = 0;
};

// One (benign request, benign response + EOS) pair per case and template,
// plus the noisy copies.
std::vector<TrainingPair> build_training_pairs(const std::vector<AttackCase>& cases,
                                               std::span<const PromptTemplate> templates,
                                               const PipelineConfig& pipeline, const Vocab& vocab,
                                               const AugmentConfig& augment = {});

// Tokens whose text would break the format's carrier are excluded.
std::vector<bool> allowed_tokens(const Vocab& vocab, DocFormat format);

enum class CaseStatus { Completed, Infeasible, Failed };

std::string_view case_status_name(CaseStatus status);

struct CaseResult {
  std::string id;
  DocFormat format = DocFormat::Markdown;
  CaseStatus status = CaseStatus::Failed;
  std::string reason;
  bool attack_success = false;       // craft_sequence reached the target
  bool conveyed = false;             // payload inside a retrieved chunk
  bool retrieval_preserved = false;  // crucial chunk ranked first before and after
  bool success = false;              // end-to-end response hit the target
  std::size_t iterations = 0;
  std::size_t seq_tokens = 0;
  std::size_t req_tokens = 0;
  std::size_t res_tokens = 0;
  std::string payload;
  std::string response;
  std::vector<double> loss_trace;

  // Kept for transfer evaluation.
  std::string question;
  std::vector<Chunk> retrieved;
  TargetResponse target;
};

// Parse, plan, optimize against the assembled request, craft, re-ingest,
// retrieve, assemble, generate and check. Stage errors become a Failed or
// Infeasible row instead of an exception.
CaseResult run_case(const AttackCase& c, const Oracle& oracle, const PipelineConfig& pipeline,
                    const AttackConfig& attack, const GenerationConfig& gen);

struct FormatRow {
  DocFormat format = DocFormat::Markdown;
  std::size_t count = 0;
  double injection = 0.0;  // % conveyed
  double asr = 0.0;        // % end-to-end success
};

struct SettingReport {
  double temperature = 0.0;
  std::vector<CaseResult> cases;
  double asr = 0.0;
  double attack_asr = 0.0;
  double mean_iterations = 0.0;
  double mean_seq = 0.0;
  double mean_req = 0.0;
  double mean_res = 0.0;
  double retrieval_preservation = 0.0;
  std::vector<FormatRow> formats;
};

struct EvalReport {
  std::vector<SettingReport> settings;
};

// Recomputes every aggregate of a setting from its rows.
void aggregate(SettingReport& setting);

// Runs every case once per temperature. Case i of a setting uses attack seed
// derive_seed(attack.seed, i) and generation seed derive_seed(gen.seed, i).
EvalReport run_suite(const std::vector<AttackCase>& cases, const Oracle& oracle,
                     const PipelineConfig& pipeline, const AttackConfig& attack,
                     const GenerationConfig& gen, std::span<const double> temperatures);

std::string report_json(const EvalReport& report);
std::string report_table(const EvalReport& report);

struct TransferResult {
  double asr = 0.0;  // percent of the successful set still successful
  std::size_t successful = 0;
  std::size_t transferred = 0;
  std::string warning;
};

// Re-assembles each successful case under `alternate` and checks one fresh
// generation without re-optimizing.
TransferResult transfer_eval(const std::vector<CaseResult>& results, const PromptTemplate& alternate,
                             const Oracle& oracle, const GenerationConfig& gen);

}  // namespace rpl
