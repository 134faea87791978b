#include "rpl/objective.hpp"

#include <algorithm>
#include <cmath>

#include "rpl/error.hpp"

namespace rpl {

void TargetResponse::validate() const {
  if (crucial.size() != tokens.size()) {
    throw Error(ErrorCode::InvalidArgument, "crucial mask length differs from target length");
  }
  if (std::find(crucial.begin(), crucial.end(), true) == crucial.end()) {
    throw Error(ErrorCode::InvalidArgument, "crucial mask has no set entry");
  }
}

TargetResponse TargetResponse::from_text(std::string_view response, std::string_view crucial,
                                         const Vocab& vocab) {
  TargetResponse t;
  t.tokens = tokenize(response, vocab);
  t.tokens.push_back(kEos);
  t.crucial.assign(t.tokens.size(), false);
  t.crucial_string = std::string(crucial);
  const TokenSeq needle = tokenize(crucial, vocab);
  if (!needle.empty()) {
    auto it = std::search(t.tokens.begin(), t.tokens.end(), needle.begin(), needle.end());
    if (it != t.tokens.end()) {
      const auto at = static_cast<std::size_t>(it - t.tokens.begin());
      for (std::size_t i = 0; i < needle.size(); ++i) t.crucial[at + i] = true;
    }
  }
  t.validate();
  return t;
}

std::vector<double> loss_row_weights(const TargetResponse& target, double w) {
  const std::size_t m = target.tokens.size();
  const auto crucial_count =
      static_cast<std::size_t>(std::count(target.crucial.begin(), target.crucial.end(), true));
  std::vector<double> c(m, m > 0 ? (1.0 - w) / static_cast<double>(m) : 0.0);
  if (crucial_count > 0) {
    for (std::size_t i = 0; i < m; ++i) {
      if (target.crucial[i]) c[i] += w / static_cast<double>(crucial_count);
    }
  }
  return c;
}

double log_sum_exp(std::span<const double> row) {
  const double hi = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

double weighted_loss(const LogitMatrix& logits, const TargetResponse& target, double w) {
  if (logits.rows != target.tokens.size() || target.crucial.size() != target.tokens.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                "logits have " + std::to_string(logits.rows) + " rows for a target of " +
                    std::to_string(target.tokens.size()) + " tokens");
  }
  const std::vector<double> coef = loss_row_weights(target, w);
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    if (coef[i] == 0.0) continue;
    const auto row = logits.row(i);
    loss += coef[i] * (log_sum_exp(row) - row[target.tokens[i]]);
  }
  return loss;
}

}  // namespace rpl
