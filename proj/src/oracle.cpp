#include "rpl/oracle.hpp"

#include "rpl/error.hpp"

namespace rpl {

double Oracle::loss(std::span<const TokenId> input, const TargetResponse& target, double w) const {
  return weighted_loss(logits(input, target.tokens, target.tokens.size()), target, w);
}

ToyOracle::ToyOracle(ToyModel model, Vocab vocab) : model_(std::move(model)), vocab_(std::move(vocab)) {
  if (model_.dims.vocab != vocab_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "model vocabulary size " + std::to_string(model_.dims.vocab) +
                                              " differs from vocab size " + std::to_string(vocab_.size()));
  }
}

TokenSeq ToyOracle::generate(std::span<const TokenId> input, const GenerationConfig& config) const {
  return rpl::generate(model_, input, config);
}

LogitMatrix ToyOracle::logits(std::span<const TokenId> input, std::span<const TokenId> forced,
                              std::size_t predict_count) const {
  return rpl::logits(model_, input, forced, predict_count);
}

GradientMatrix ToyOracle::grad_onehot(std::span<const TokenId> input,
                                      std::span<const std::size_t> positions,
                                      const TargetResponse& target, double w) const {
  return rpl::grad_onehot(model_, input, positions, target, w);
}

double ToyOracle::loss(std::span<const TokenId> input, const TargetResponse& target, double w) const {
  return target_loss(model_, input, target, w);
}

}  // namespace rpl
