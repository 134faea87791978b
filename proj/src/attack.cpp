#include "rpl/attack.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <thread>

#include "rpl/error.hpp"

namespace rpl {

void AttackConfig::validate() const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (top_b == 0) throw Error(ErrorCode::InvalidArgument, "top_b must be >= 1");
  if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorCode::InvalidArgument, "w must lie in [0, 1]");
  if (init_length == 0) throw Error(ErrorCode::InvalidArgument, "init_length must be >= 1");
  if (max_step == 0) throw Error(ErrorCode::InvalidArgument, "max_step must be >= 1");
}

std::vector<TokenId> shortlist(std::span<const double> grad_row, TokenId current, std::size_t top_b,
                               const std::vector<bool>& allowed) {
  std::vector<TokenId> ids;
  for (TokenId v = kFirstWordId; v < grad_row.size(); ++v) {
    if (v == current) continue;
    if (!allowed.empty() && (v >= allowed.size() || !allowed[v])) continue;
    ids.push_back(v);
  }
  const std::size_t n = std::min(top_b, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                    [&](TokenId a, TokenId b) {
                      if (grad_row[a] != grad_row[b]) return grad_row[a] < grad_row[b];
                      return a < b;
                    });
  ids.resize(n);
  return ids;
}

std::vector<TokenSeq> mutate_candidates(const TokenSeq& seq, const GradientMatrix& grad, std::size_t k,
                                        std::size_t top_b, Rng& rng, const std::vector<bool>& allowed) {
  if (grad.rows != seq.size()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient rows differ from sequence length");
  }
  std::vector<std::vector<TokenId>> lists(seq.size());
  bool any = false;
  for (std::size_t p = 0; p < seq.size(); ++p) {
    lists[p] = shortlist(grad.row(p), seq[p], top_b, allowed);
    any = any || !lists[p].empty();
  }
  std::vector<TokenSeq> out;
  if (!any) return out;
  out.reserve(k);
  while (out.size() < k) {
    const std::size_t p = rng.below(seq.size());
    if (lists[p].empty()) continue;
    TokenSeq cand = seq;
    cand[p] = lists[p][rng.below(lists[p].size())];
    out.push_back(std::move(cand));
  }
  return out;
}

std::size_t select_index(double current_score, std::span<const double> scores) {
  std::size_t best = scores.size();
  double best_score = current_score;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < best_score) {
      best = i;
      best_score = scores[i];
    }
  }
  return best;
}

TokenSeq select(const TokenSeq& current, std::span<const TokenSeq> candidates, const SeqScorer& scorer) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const TokenSeq& c : candidates) scores.push_back(scorer(c));
  const std::size_t i = select_index(scorer(current), scores);
  return i < candidates.size() ? candidates[i] : current;
}

bool success_check(std::string_view response, const TargetResponse& target) {
  return normalize_text(response).find(normalize_text(target.crucial_string)) != std::string::npos;
}

namespace {

std::string response_text(TokenSeq tokens, const Vocab& vocab) {
  if (!tokens.empty() && tokens.back() == kEos) tokens.pop_back();
  return detokenize(tokens, vocab);
}

// Scores every candidate; index i of the result belongs to candidate i
// whatever the thread schedule.
std::vector<double> score_all(const Oracle& oracle, const TokenSeq& base, std::size_t seq_begin,
                              std::span<const TokenSeq> candidates, const TargetResponse& target,
                              double w, std::size_t jobs) {
  std::vector<double> scores(candidates.size());
  auto work = [&](std::size_t start, std::size_t stride) {
    TokenSeq input = base;
    for (std::size_t i = start; i < candidates.size(); i += stride) {
      std::copy(candidates[i].begin(), candidates[i].end(),
                input.begin() + static_cast<std::ptrdiff_t>(seq_begin));
      scores[i] = oracle.loss(input, target, w);
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), candidates.size());
  if (threads <= 1) {
    work(0, 1);
    return scores;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        work(t, threads);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return scores;
}

}  // namespace

AttackResult craft_sequence(const Oracle& oracle, const AugmentedRequest& aReq, std::size_t insert_at,
                            const TargetResponse& target, const AttackConfig& config,
                            const GenerationConfig& gen) {
  config.validate();
  gen.validate();
  target.validate();
  if (insert_at < aReq.content.begin || insert_at > aReq.content.end) {
    throw Error(ErrorCode::InvalidArgument, "insertion offset lies outside the content slot");
  }
  const Vocab& vocab = oracle.vocab();
  const TokenId filler = vocab.find(config.filler).value_or(kFirstWordId);
  const std::string_view text = aReq.text;
  TokenSeq input = tokenize(text.substr(0, insert_at), vocab);
  const std::size_t seq_begin = input.size();
  TokenSeq seq(config.init_length, filler);
  input.insert(input.end(), seq.begin(), seq.end());
  const TokenSeq tail = tokenize(text.substr(insert_at), vocab);
  input.insert(input.end(), tail.begin(), tail.end());
  std::vector<std::size_t> positions(seq.size());
  std::iota(positions.begin(), positions.end(), seq_begin);

  AttackResult result;
  Rng rng(config.seed);
  for (std::size_t step = 1; step <= config.max_step; ++step) {
    const double loss = oracle.loss(input, target, config.w);
    result.loss_trace.push_back(loss);
    GenerationConfig g = gen;
    g.seed = derive_seed(gen.seed, step);
    result.response = response_text(oracle.generate(input, g), vocab);
    if (success_check(result.response, target)) {
      result.success = true;
      break;
    }
    if (step == config.max_step) break;
    const GradientMatrix grad = oracle.grad_onehot(input, positions, target, config.w);
    const std::vector<TokenSeq> candidates =
        mutate_candidates(seq, grad, config.k, config.top_b, rng, config.allowed);
    const std::vector<double> scores =
        score_all(oracle, input, seq_begin, candidates, target, config.w, config.jobs);
    const std::size_t pick = select_index(loss, scores);
    if (pick < candidates.size()) {
      seq = candidates[pick];
      std::copy(seq.begin(), seq.end(), input.begin() + static_cast<std::ptrdiff_t>(seq_begin));
    }
  }
  result.seq = seq;
  result.iterations = result.loss_trace.size();
  return result;
}

Document craft_document(const Document& original, const TokenSeq& seq, const Vocab& vocab,
                        InvisibleFeature feature, InjectionPoint point) {
  return inject(original, detokenize(seq, vocab), point, feature);
}

}  // namespace rpl
