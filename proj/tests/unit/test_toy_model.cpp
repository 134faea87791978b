#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "rpl/error.hpp"
#include "rpl/eval.hpp"
#include "rpl/toy_model.hpp"

using namespace rpl;

namespace {

TargetResponse two_token_target(std::vector<bool> crucial) {
  TargetResponse t;
  t.tokens = {4, kEos};
  t.crucial = std::move(crucial);
  t.crucial_string = "x";
  return t;
}

struct FixtureCorpus {
  std::vector<AttackCase> cases;
  Vocab vocab;
  std::vector<TrainingPair> pairs;
};

const FixtureCorpus& fixture_corpus() {
  static const FixtureCorpus corpus = [] {
    FixtureCorpus c;
    c.cases = load_manifest(test::corpus_dir() / "manifest.json");
    const std::vector<PromptTemplate> templates{qa_scenario_template()};
    const PipelineConfig pipeline;
    c.vocab = build_corpus_vocab(c.cases, templates, pipeline);
    c.pairs = build_training_pairs(c.cases, templates, pipeline, c.vocab);
    return c;
  }();
  return corpus;
}

}  // namespace

TEST_CASE("hand-computed logits for a tiny model") {
  ModelDims dims{3, 1, 2, 1};
  ToyModel m(dims);
  m.embedding.data = {0.5, -0.3, 0.2};
  m.hidden_window.data = {0.7, -1.1};
  m.hidden_pool.data = {0.4};
  m.hidden_bias = {0.05};
  m.output.data = {1.5, -0.5, 0.25};
  m.output_bias = {0.1, 0.0, -0.2};

  const TokenSeq input{1};
  const TokenSeq forced{0};
  const Matrix out = logits(m, input, forced, 2);
  REQUIRE(out.rows == 2);
  REQUIRE(out.cols == 3);

  // Row 0: window [pad, e1], pooled e1.
  const double h0 = std::tanh(0.7 * 0.0 + -1.1 * -0.3 + 0.4 * -0.3 + 0.05);
  // Row 1: window [e1, e0], pooled slot still covers the prompt only.
  const double h1 = std::tanh(0.7 * -0.3 + -1.1 * 0.5 + 0.4 * -0.3 + 0.05);
  const double w_out[] = {1.5, -0.5, 0.25};
  const double b_out[] = {0.1, 0.0, -0.2};
  for (std::size_t v = 0; v < 3; ++v) {
    CHECK(std::abs(out(0, v) - (w_out[v] * h0 + b_out[v])) <= 1e-12);
    CHECK(std::abs(out(1, v) - (w_out[v] * h1 + b_out[v])) <= 1e-12);
  }
}

TEST_CASE("pooled slot scales the prompt sum by one over root n") {
  ModelDims dims{3, 1, 1, 1};
  ToyModel m(dims);
  m.embedding.data = {0.0, 0.6, -0.2};
  m.hidden_pool.data = {1.0};
  m.output.data = {1.0, 0.0, 0.0};
  const TokenSeq input{1, 2, 1, 1};
  const Matrix out = logits(m, input, {}, 1);
  CHECK(std::abs(out(0, 0) - std::tanh((0.6 - 0.2 + 0.6 + 0.6) / 2.0)) <= 1e-12);
}

TEST_CASE("zero weights give uniform rows") {
  const ToyModel m(ModelDims{6, 4, 8, 5});
  const TokenSeq input{3, 4, 5};
  const TokenSeq forced{3, 3, 3};
  const Matrix out = logits(m, input, forced, 4);
  CHECK(out.rows == 4);
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (double x : out.row(r)) CHECK(x == out(r, 0));
  }
}

TEST_CASE("softmax rows normalize") {
  const ToyModel m = ToyModel::seeded(ModelDims{12, 4, 8, 6}, 3, 1.0);
  const TokenSeq input{3, 4, 5, 6, 7};
  const TokenSeq forced{8, 9, 10};
  const Matrix out = logits(m, input, forced, 4);
  for (double t : {0.7, 1.0, 2.5}) {
    for (std::size_t r = 0; r < out.rows; ++r) {
      std::vector<double> scaled;
      for (double x : out.row(r)) scaled.push_back(x / t);
      const double lse = log_sum_exp(scaled);
      double total = 0.0;
      for (double x : scaled) total += std::exp(x - lse);
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("generation is seeded and bounded") {
  const ToyModel m = ToyModel::seeded(ModelDims{20, 4, 8, 6}, 9, 1.0);
  const TokenSeq input{3, 4, 5};
  GenerationConfig g{0.7, 5, 11};
  const TokenSeq a = generate(m, input, g);
  CHECK(a == generate(m, input, g));
  CHECK(a.size() <= 5);
  g.temperature = 1e-9;
  const TokenSeq greedy = generate(m, input, g);
  g.seed = 999;
  CHECK(generate(m, input, g) == greedy);
  const Matrix first = logits(m, input, {}, 1);
  const auto row = first.row(0);
  CHECK(greedy[0] == static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin()));
  CHECK_THROWS_AS((GenerationConfig{0.0, 5, 0}).validate(), Error);
}

TEST_CASE("gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ToyModel m = ToyModel::seeded(ModelDims{16, 4, 8, 8}, seed, 0.5);
    const TokenSeq input{3, 7, 9, 4, 12, 5, 6, 15, 8, 10};
    const std::vector<std::size_t> positions{2, 3, 4};
    TargetResponse t;
    t.tokens = {11, 13, kEos};
    t.crucial = {false, true, false};
    t.crucial_string = "x";
    const test::GradientCheck check = test::finite_difference_check(m, input, positions, t, 0.5);
    CHECK(check.entries == 48);
    CHECK(check.max_rel_error <= 1e-4);
  }
}

TEST_CASE("zero output layer gives a zero gradient") {
  ToyModel m = ToyModel::seeded(ModelDims{8, 3, 4, 5}, 1, 0.5);
  std::fill(m.output.data.begin(), m.output.data.end(), 0.0);
  const TokenSeq input{3, 4, 5, 6};
  const std::vector<std::size_t> positions{1, 2};
  const Matrix g = grad_onehot(m, input, positions, two_token_target({true, false}), 0.5);
  for (double x : g.data) CHECK(x == 0.0);
}

TEST_CASE("crucial weight changes the gradient") {
  const ToyModel m = ToyModel::seeded(ModelDims{8, 3, 4, 5}, 2, 0.5);
  const TokenSeq input{3, 4, 5, 6};
  const std::vector<std::size_t> positions{1, 2};
  const TargetResponse t = two_token_target({true, false});
  CHECK(grad_onehot(m, input, positions, t, 0.0) != grad_onehot(m, input, positions, t, 1.0));
  const TargetResponse all = two_token_target({true, true});
  const Matrix g0 = grad_onehot(m, input, positions, all, 0.0);
  const Matrix g1 = grad_onehot(m, input, positions, all, 1.0);
  for (std::size_t i = 0; i < g0.data.size(); ++i) CHECK(g0.data[i] == doctest::Approx(g1.data[i]).epsilon(1e-12));
}

TEST_CASE("model file round trip") {
  const ToyModel m = ToyModel::seeded(ModelDims{10, 3, 4, 5}, 4);
  const auto path = std::filesystem::temp_directory_path() / "rpl_model_test.bin";
  m.save(path);
  CHECK(ToyModel::load(path) == m);
  std::filesystem::resize_file(path, 40);
  CHECK_THROWS_AS(ToyModel::load(path), Error);
  std::filesystem::remove(path);
}

TEST_CASE("zero epochs returns the seeded init") {
  const std::vector<TrainingPair> corpus{{{3, 4}, {5, kEos}}};
  TrainConfig cfg;
  cfg.dims = ModelDims{6, 4, 8, 5};
  cfg.epochs = 0;
  cfg.seed = 21;
  CHECK(train_toy(corpus, cfg) == ToyModel::seeded(cfg.dims, cfg.seed));
  CHECK_THROWS_AS(train_toy({}, cfg), Error);
}

TEST_CASE("training is deterministic") {
  const std::vector<TrainingPair> corpus{{{3, 4, 5}, {6, kEos}}, {{4, 3}, {7, 6, kEos}}};
  TrainConfig cfg;
  cfg.dims = ModelDims{8, 4, 8, 6};
  cfg.epochs = 20;
  cfg.seed = 5;
  CHECK(train_toy(corpus, cfg) == train_toy(corpus, cfg));
}

TEST_CASE("divergent learning rate is reported") {
  const std::vector<TrainingPair> corpus{{{3, 4, 5}, {6, kEos}}};
  TrainConfig cfg;
  cfg.dims = ModelDims{8, 4, 8, 6};
  cfg.epochs = 50;
  cfg.learning_rate = 1e300;
  CHECK_THROWS_AS(train_toy(corpus, cfg), Error);
}

TEST_CASE("fixture training lowers the loss at lr 0.1") {
  const FixtureCorpus& c = fixture_corpus();
  TrainConfig cfg;
  cfg.dims.vocab = c.vocab.size();
  cfg.epochs = 200;
  cfg.learning_rate = 0.1;
  TrainReport report;
  train_toy(c.pairs, cfg, &report);
  REQUIRE(report.loss_curve.size() == 200);
  CHECK(report.loss_curve.back() < report.loss_curve.front());
}

TEST_CASE("trained fixture model answers with the correct link") {
  const FixtureCorpus& c = fixture_corpus();
  TrainConfig cfg;
  cfg.dims.vocab = c.vocab.size();
  const ToyModel m = train_toy(c.pairs, cfg);
  const PipelineConfig pipeline;
  for (std::size_t i = 0; i < c.cases.size(); ++i) {
    if (c.cases[i].category != "install") continue;
    CAPTURE(c.cases[i].id);
    const GenerationConfig greedy{1e-9, 24, 0};
    const std::string out = detokenize(generate(m, c.pairs[i].prompt, greedy), c.vocab);
    CHECK(out.find(normalize_text(c.cases[i].answer)) != std::string::npos);
  }
}
