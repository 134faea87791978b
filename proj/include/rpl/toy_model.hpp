#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rpl/matrix.hpp"
#include "rpl/objective.hpp"
#include "rpl/tokenizer.hpp"

namespace rpl {

struct ModelDims {
  std::size_t vocab = 4;
  std::size_t embed = 32;
  std::size_t context = 8;
  std::size_t hidden = 64;

  std::size_t window_width() const { return context * embed; }
  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

// Fixed-window MLP language model.
//
// The row predicting position t sees the embeddings of the last `context`
// tokens before t (zero-padded on the left) and, as one extra slot, the sum
// of the n prompt embeddings scaled by 1/sqrt(n):
//
//   a = W_win [e_{t-c} .. e_{t-1}] + W_pool pool(prompt) + b_hidden
//   logits = W_out tanh(a) + b_out
//
// The pooled slot lets the prompt content reach every prediction even when
// the window only covers the question.
struct ToyModel {
  ModelDims dims;
  Matrix embedding;                 // V x d
  Matrix hidden_window;             // h x (c*d)
  Matrix hidden_pool;               // h x d
  std::vector<double> hidden_bias;  // h
  Matrix output;                    // V x h
  std::vector<double> output_bias;  // V

  ToyModel() = default;
  // All weights zero.
  explicit ToyModel(const ModelDims& dims);
  // Every weight drawn uniformly from [-scale, scale] in storage order.
  static ToyModel seeded(const ModelDims& dims, std::uint64_t seed, double scale = 0.1);

  bool finite() const;

  // Binary layout: four little-endian uint64 {V, d, c, h}, then the arrays
  // above in declaration order as row-major float64.
  void save(const std::filesystem::path& path) const;
  static ToyModel load(const std::filesystem::path& path);

  bool operator==(const ToyModel&) const = default;

  template <class F>
  void for_each_array(F&& f) {
    f(embedding.data);
    f(hidden_window.data);
    f(hidden_pool.data);
    f(hidden_bias);
    f(output.data);
    f(output_bias);
  }
  template <class F>
  void for_each_array(F&& f) const {
    f(embedding.data);
    f(hidden_window.data);
    f(hidden_pool.data);
    f(hidden_bias);
    f(output.data);
    f(output_bias);
  }
};

struct GenerationConfig {
  double temperature = 0.7;
  std::size_t max_new_tokens = 24;
  std::uint64_t seed = 0;

  void validate() const;  // temperature > 0, max_new_tokens >= 1
};

// Temperatures below this decode greedily.
inline constexpr double kGreedyTemperature = 1e-6;

// Teacher-forced logits. Row i scores the token after input + forced[0..i).
// `forced` must hold at least predict_count - 1 tokens.
LogitMatrix logits(const ToyModel& model, std::span<const TokenId> input,
                   std::span<const TokenId> forced, std::size_t predict_count);

// Same, with input embeddings given directly (n x d). Used to probe the
// gradient with respect to the embedding mixture.
LogitMatrix logits_from_embeddings(const ToyModel& model, const Matrix& input_embeddings,
                                   std::span<const TokenId> forced, std::size_t predict_count);

// Autoregressive sampling from softmax(logits / T). Stops after EOS (which is
// kept) or max_new_tokens.
TokenSeq generate(const ToyModel& model, std::span<const TokenId> input,
                  const GenerationConfig& config);

double target_loss(const ToyModel& model, std::span<const TokenId> input,
                   const TargetResponse& target, double w);

// d weighted_loss / d one-hot(input[p]) for each p in positions. Row r, column
// v holds E[v] . g_p where g_p is the backpropagated gradient at the embedding
// of input[positions[r]].
GradientMatrix grad_onehot(const ToyModel& model, std::span<const TokenId> input,
                           std::span<const std::size_t> positions, const TargetResponse& target,
                           double w);

struct TrainingPair {
  TokenSeq prompt;
  TokenSeq completion;
};

struct TrainConfig {
  ModelDims dims;
  std::size_t epochs = 200;
  double learning_rate = 0.3;
  std::uint64_t seed = 0;
};

struct TrainReport {
  // Per epoch: mean over pairs of the per-token cross-entropy, each taken
  // just before that pair's update.
  std::vector<double> loss_curve;
};

// Per-example gradient descent on next-token cross-entropy, visiting the
// corpus in a seeded shuffled order each epoch. Throws Error(DivergedLoss) on
// a non-finite loss and Error(InvalidArgument) on an empty corpus.
ToyModel train_toy(std::span<const TrainingPair> corpus, const TrainConfig& config,
                   TrainReport* report = nullptr);

// Mean per-token cross-entropy of the completions given their prompts.
double corpus_loss(const ToyModel& model, std::span<const TrainingPair> corpus);

}  // namespace rpl
