#pragma once

#include <span>

#include "rpl/matrix.hpp"
#include "rpl/objective.hpp"
#include "rpl/tokenizer.hpp"
#include "rpl/toy_model.hpp"

namespace rpl {

// Model access needed by the attack loop. Implementations must be safe to
// call concurrently from several threads.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual const Vocab& vocab() const = 0;
  virtual TokenSeq generate(std::span<const TokenId> input, const GenerationConfig& config) const = 0;
  virtual LogitMatrix logits(std::span<const TokenId> input, std::span<const TokenId> forced,
                             std::size_t predict_count) const = 0;
  virtual GradientMatrix grad_onehot(std::span<const TokenId> input,
                                     std::span<const std::size_t> positions,
                                     const TargetResponse& target, double w) const = 0;

  // weighted_loss of the teacher-forced target.
  virtual double loss(std::span<const TokenId> input, const TargetResponse& target, double w) const;
};

class ToyOracle final : public Oracle {
 public:
  // Throws Error(ShapeMismatch) when the model and vocab sizes differ.
  ToyOracle(ToyModel model, Vocab vocab);

  const ToyModel& model() const { return model_; }
  const Vocab& vocab() const override { return vocab_; }
  TokenSeq generate(std::span<const TokenId> input, const GenerationConfig& config) const override;
  LogitMatrix logits(std::span<const TokenId> input, std::span<const TokenId> forced,
                     std::size_t predict_count) const override;
  GradientMatrix grad_onehot(std::span<const TokenId> input, std::span<const std::size_t> positions,
                             const TargetResponse& target, double w) const override;
  double loss(std::span<const TokenId> input, const TargetResponse& target, double w) const override;

 private:
  ToyModel model_;
  Vocab vocab_;
};

}  // namespace rpl
