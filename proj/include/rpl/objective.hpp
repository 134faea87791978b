#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rpl/matrix.hpp"
#include "rpl/tokenizer.hpp"

namespace rpl {

// The attacker's desired response. `crucial` marks the target positions that
// carry the essential information (e.g. a download link).
struct TargetResponse {
  TokenSeq tokens;
  std::vector<bool> crucial;
  std::string crucial_string;

  // Throws Error(InvalidArgument) unless the mask matches the tokens and has
  // at least one set entry.
  void validate() const;

  // Tokenizes `response`, appends EOS, and marks the tokens of the first
  // occurrence of tokenize(crucial) as crucial.
  static TargetResponse from_text(std::string_view response, std::string_view crucial,
                                  const Vocab& vocab);
};

// Per-row coefficients c_i such that sum_i c_i * CE_i equals
// (1 - w) * mean(CE over all rows) + w * mean(CE over crucial rows).
std::vector<double> loss_row_weights(const TargetResponse& target, double w);

// Weighted cross-entropy of softmax(logits) against the target ids.
// Throws Error(ShapeMismatch) when logits.rows != target length.
double weighted_loss(const LogitMatrix& logits, const TargetResponse& target, double w);

// log(sum(exp(row))) computed stably.
double log_sum_exp(std::span<const double> row);

}  // namespace rpl
