#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "rpl/error.hpp"
#include "rpl/objective.hpp"
#include "rpl/rng.hpp"

using namespace rpl;

namespace {

Matrix random_logits(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& x : m.data) x = rng.uniform(-3.0, 3.0);
  return m;
}

TargetResponse target_of(TokenSeq tokens, std::vector<bool> crucial) {
  TargetResponse t;
  t.tokens = std::move(tokens);
  t.crucial = std::move(crucial);
  t.crucial_string = "x";
  return t;
}

}  // namespace

TEST_CASE("two-token uniform example is ln 2") {
  const Matrix logits(2, 2, 0.0);
  const TargetResponse t = target_of({0, 1}, {false, true});
  CHECK(weighted_loss(logits, t, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("w = 0 is the plain mean cross-entropy") {
  const Matrix logits = random_logits(4, 5, 1);
  const TargetResponse t = target_of({1, 4, 0, 2}, {false, true, false, false});
  double mean = 0;
  for (std::size_t i = 0; i < 4; ++i) mean += test::reference_ce(logits.row(i), t.tokens[i]) / 4.0;
  CHECK(weighted_loss(logits, t, 0.0) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("full crucial mask makes w irrelevant") {
  const Matrix logits = random_logits(3, 4, 2);
  const TargetResponse t = target_of({3, 0, 1}, {true, true, true});
  const double plain = weighted_loss(logits, t, 0.0);
  for (double w : {0.25, 0.5, 1.0}) CHECK(weighted_loss(logits, t, w) == doctest::Approx(plain).epsilon(1e-12));
}

TEST_CASE("weighted loss matches the reference on random rows") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix logits = random_logits(5, 7, seed + 10);
    const TargetResponse t = target_of({6, 0, 3, 3, 1}, {false, true, true, false, false});
    for (double w : {0.0, 0.3, 1.0}) {
      CHECK(weighted_loss(logits, t, w) == doctest::Approx(test::reference_weighted_loss(logits, t, w)).epsilon(1e-12));
    }
  }
}

TEST_CASE("row weights sum to one") {
  const TargetResponse t = target_of({1, 2, 3}, {false, true, false});
  const std::vector<double> c = loss_row_weights(t, 0.5);
  CHECK(c[0] + c[1] + c[2] == doctest::Approx(1.0));
  CHECK(c[1] == doctest::Approx(0.5 / 3.0 + 0.5));
}

TEST_CASE("shape and mask validation") {
  CHECK_THROWS_AS(weighted_loss(Matrix(3, 2), target_of({0, 1}, {true, false}), 0.5), Error);
  CHECK_THROWS_AS(target_of({0, 1}, {false, false}).validate(), Error);
  CHECK_THROWS_AS(target_of({0, 1}, {true}).validate(), Error);
}

TEST_CASE("target from text marks the crucial tokens") {
  const std::vector<std::string> texts{"get it from https://a.io/x ."};
  const Vocab v = Vocab::build(texts);
  const TargetResponse t = TargetResponse::from_text("Get it from https://a.io/x .", "https://a.io/x", v);
  REQUIRE(t.tokens.size() == 6);
  CHECK(t.tokens.back() == kEos);
  CHECK(t.crucial == std::vector<bool>{false, false, false, true, false, false});
  CHECK_THROWS_AS(TargetResponse::from_text("get it", "https://a.io/x", v), Error);
}

TEST_CASE("log-sum-exp is stable") {
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
}
