#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rpl/doc_model.hpp"
#include "rpl/inject.hpp"
#include "rpl/matrix.hpp"
#include "rpl/objective.hpp"
#include "rpl/oracle.hpp"
#include "rpl/prompter.hpp"
#include "rpl/rng.hpp"
#include "rpl/tokenizer.hpp"

namespace rpl {

struct AttackConfig {
  std::size_t k = 32;
  double w = 0.5;
  std::size_t max_step = 500;
  std::size_t top_b = 64;
  std::size_t init_length = 32;
  std::uint64_t seed = 0;
  // Initial sequence is init_length copies of this token (id 3 if absent).
  std::string filler = "!";
  // Threads used to score candidates. Results do not depend on it.
  std::size_t jobs = 1;
  // Optional per-token mask of replacements the mutation may pick. Empty
  // means every non-reserved token.
  std::vector<bool> allowed;

  void validate() const;
};

struct AttackResult {
  bool success = false;
  TokenSeq seq;
  std::size_t iterations = 0;
  std::vector<double> loss_trace;
  std::string response;
};

// Up to top_b tokens with the most negative gradient entries, most negative
// first, ties to the lower id. Skips `current`, reserved ids and tokens not in
// `allowed` (when non-empty).
std::vector<TokenId> shortlist(std::span<const double> grad_row, TokenId current, std::size_t top_b,
                               const std::vector<bool>& allowed = {});

// k single-position mutations. Each picks a position uniformly, then a token
// uniformly from that position's shortlist. A position with an empty
// shortlist is redrawn; if every shortlist is empty no candidates are made.
std::vector<TokenSeq> mutate_candidates(const TokenSeq& seq, const GradientMatrix& grad, std::size_t k,
                                        std::size_t top_b, Rng& rng, const std::vector<bool>& allowed = {});

// Index of the minimum score, or scores.size() when no candidate beats
// current_score strictly. Ties go to the lowest index.
std::size_t select_index(double current_score, std::span<const double> scores);

using SeqScorer = std::function<double(const TokenSeq&)>;

TokenSeq select(const TokenSeq& current, std::span<const TokenSeq> candidates, const SeqScorer& scorer);

// Substring test of the normalized crucial string in the normalized response.
bool success_check(std::string_view response, const TargetResponse& target);

// Runs the mutation loop with the attack sequence inserted into aReq.text at
// character offset insert_at, which must lie in aReq.content. Each iteration
// records the current loss, samples a response with seed
// derive_seed(gen.seed, iteration), stops on success or at max_step, and
// otherwise moves to the best of the current sequence and k mutations.
AttackResult craft_sequence(const Oracle& oracle, const AugmentedRequest& aReq, std::size_t insert_at,
                            const TargetResponse& target, const AttackConfig& config,
                            const GenerationConfig& gen);

// Detokenizes seq and hides it in the document.
Document craft_document(const Document& original, const TokenSeq& seq, const Vocab& vocab,
                        InvisibleFeature feature, InjectionPoint point);

}  // namespace rpl
