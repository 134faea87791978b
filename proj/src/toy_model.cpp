#include "rpl/toy_model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "rpl/error.hpp"
#include "rpl/rng.hpp"
#include "rpl/simd.hpp"

namespace rpl {

void ModelDims::validate() const {
  if (vocab == 0 || embed == 0 || context == 0 || hidden == 0) {
    throw Error(ErrorCode::InvalidArgument, "model dimensions must be positive");
  }
}

ToyModel::ToyModel(const ModelDims& d)
    : dims(d),
      embedding(d.vocab, d.embed),
      hidden_window(d.hidden, d.window_width()),
      hidden_pool(d.hidden, d.embed),
      hidden_bias(d.hidden, 0.0),
      output(d.vocab, d.hidden),
      output_bias(d.vocab, 0.0) {
  d.validate();
}

ToyModel ToyModel::seeded(const ModelDims& d, std::uint64_t seed, double scale) {
  ToyModel m(d);
  Rng rng(seed);
  m.for_each_array([&](std::vector<double>& a) {
    for (double& v : a) v = rng.uniform(-scale, scale);
  });
  return m;
}

bool ToyModel::finite() const {
  bool ok = true;
  for_each_array([&](const std::vector<double>& a) {
    ok = ok && std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
  });
  return ok;
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (!in) throw Error(ErrorCode::Io, "truncated model file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void ToyModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  put_u64(out, dims.vocab);
  put_u64(out, dims.embed);
  put_u64(out, dims.context);
  put_u64(out, dims.hidden);
  for_each_array([&](const std::vector<double>& a) {
    for (double v : a) put_u64(out, std::bit_cast<std::uint64_t>(v));
  });
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

ToyModel ToyModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  ModelDims d;
  d.vocab = get_u64(in);
  d.embed = get_u64(in);
  d.context = get_u64(in);
  d.hidden = get_u64(in);
  constexpr std::uint64_t kLimit = 1u << 20;
  if (d.vocab > kLimit || d.embed > 4096 || d.context > 4096 || d.hidden > 4096) {
    throw Error(ErrorCode::Io, "implausible model header in " + path.string());
  }
  ToyModel m(d);
  m.for_each_array([&](std::vector<double>& a) {
    for (double& v : a) v = std::bit_cast<double>(get_u64(in));
  });
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::Io, "trailing bytes in model file " + path.string());
  }
  if (!m.finite()) throw Error(ErrorCode::Io, "non-finite weight in " + path.string());
  return m;
}

void GenerationConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  }
  if (max_new_tokens == 0) throw Error(ErrorCode::InvalidArgument, "max_new_tokens must be >= 1");
}

namespace {

// Prompt embeddings followed by forced continuation tokens.
struct Sequence {
  const ToyModel& m;
  const Matrix& prompt;
  std::span<const TokenId> forced;

  const double* at(std::size_t p) const {
    return p < prompt.rows ? prompt.row(p).data() : m.embedding.row(forced[p - prompt.rows]).data();
  }
};

void check_tokens(const ToyModel& m, std::span<const TokenId> tokens) {
  for (TokenId t : tokens) {
    if (t >= m.dims.vocab) throw Error(ErrorCode::InvalidArgument, "token id out of vocabulary");
  }
}

Matrix lookup(const ToyModel& m, std::span<const TokenId> tokens) {
  check_tokens(m, tokens);
  Matrix out(tokens.size(), m.dims.embed);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto src = m.embedding.row(tokens[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

double pool_scale(std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

// Prompt embeddings summed and scaled by 1/sqrt(n).
std::vector<double> pooled_sum(const ToyModel& m, const Matrix& prompt) {
  std::vector<double> pooled(m.dims.embed, 0.0);
  if (prompt.rows == 0) return pooled;
  const auto& k = simd::active();
  for (std::size_t p = 0; p < prompt.rows; ++p) k.axpy(1.0, prompt.row(p).data(), pooled.data(), pooled.size());
  const double scale = pool_scale(prompt.rows);
  for (double& v : pooled) v *= scale;
  return pooled;
}

// W_pool pooled + b_hidden, shared by every row.
std::vector<double> pool_preactivation(const ToyModel& m, std::span<const double> pooled) {
  std::vector<double> pre(m.dims.hidden);
  simd::active().gemv(m.hidden_pool.data.data(), m.dims.hidden, m.dims.embed, pooled.data(), pre.data());
  for (std::size_t j = 0; j < pre.size(); ++j) pre[j] += m.hidden_bias[j];
  return pre;
}

// One prediction row at sequence position t: fills x (window input), z
// (hidden activation) and out (logits).
void forward_row(const ToyModel& m, const Sequence& seq, std::size_t t,
                 std::span<const double> pool_pre, std::span<double> x, std::span<double> z,
                 std::span<double> out) {
  const auto& k = simd::active();
  const std::size_t c = m.dims.context;
  const std::size_t d = m.dims.embed;
  for (std::size_t s = 0; s < c; ++s) {
    double* slot = x.data() + s * d;
    if (t + s < c) {
      std::fill(slot, slot + d, 0.0);
    } else {
      const double* e = seq.at(t + s - c);
      std::copy(e, e + d, slot);
    }
  }
  k.gemv(m.hidden_window.data.data(), m.dims.hidden, x.size(), x.data(), z.data());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = std::tanh(z[j] + pool_pre[j]);
  k.gemv(m.output.data.data(), m.dims.vocab, m.dims.hidden, z.data(), out.data());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] += m.output_bias[v];
}

struct Pass {
  std::vector<double> pooled;
  Matrix x;
  Matrix z;
  LogitMatrix logits;
};

Pass forward(const ToyModel& m, const Sequence& seq, std::size_t rows) {
  Pass pass;
  pass.pooled = pooled_sum(m, seq.prompt);
  const std::vector<double> pre = pool_preactivation(m, pass.pooled);
  pass.x = Matrix(rows, m.dims.window_width());
  pass.z = Matrix(rows, m.dims.hidden);
  pass.logits = Matrix(rows, m.dims.vocab);
  for (std::size_t i = 0; i < rows; ++i) {
    forward_row(m, seq, seq.prompt.rows + i, pre, pass.x.row(i), pass.z.row(i), pass.logits.row(i));
  }
  return pass;
}

// Gradient of sum_i coef[i] * CE_i with respect to the logits.
Matrix logit_gradient(const LogitMatrix& logits, std::span<const TokenId> targets,
                      std::span<const double> coef, double* loss) {
  Matrix g(logits.rows, logits.cols);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    if (coef[i] == 0.0) continue;
    const auto row = logits.row(i);
    const double lse = log_sum_exp(row);
    total += coef[i] * (lse - row[targets[i]]);
    auto out = g.row(i);
    for (std::size_t v = 0; v < row.size(); ++v) out[v] = coef[i] * std::exp(row[v] - lse);
    out[targets[i]] -= coef[i];
  }
  if (loss) *loss = total;
  return g;
}

// Backpropagates dlogits. Always fills d_prompt (n x d); accumulates weight
// gradients into `grads` when given.
void backward(const ToyModel& m, const Sequence& seq, const Pass& pass, const Matrix& dlogits,
              Matrix& d_prompt, ToyModel* grads) {
  const auto& k = simd::active();
  const std::size_t c = m.dims.context;
  const std::size_t d = m.dims.embed;
  const std::size_t h = m.dims.hidden;
  const std::size_t n = seq.prompt.rows;
  d_prompt = Matrix(n, d);
  std::vector<double> dz(h);
  std::vector<double> dx(m.dims.window_width());
  std::vector<double> d_pool(d, 0.0);
  std::vector<double> da_sum(h, 0.0);
  for (std::size_t i = 0; i < dlogits.rows; ++i) {
    const auto dl = dlogits.row(i);
    if (std::all_of(dl.begin(), dl.end(), [](double v) { return v == 0.0; })) continue;
    const auto z = pass.z.row(i);
    const auto x = pass.x.row(i);
    if (grads) {
      k.ger(1.0, dl.data(), m.dims.vocab, z.data(), h, grads->output.data.data());
      k.axpy(1.0, dl.data(), grads->output_bias.data(), dl.size());
    }
    std::fill(dz.begin(), dz.end(), 0.0);
    k.gemv_t_acc(m.output.data.data(), m.dims.vocab, h, dl.data(), dz.data());
    for (std::size_t j = 0; j < h; ++j) dz[j] *= 1.0 - z[j] * z[j];
    if (grads) {
      k.ger(1.0, dz.data(), h, x.data(), x.size(), grads->hidden_window.data.data());
    }
    k.axpy(1.0, dz.data(), da_sum.data(), h);
    std::fill(dx.begin(), dx.end(), 0.0);
    k.gemv_t_acc(m.hidden_window.data.data(), h, dx.size(), dz.data(), dx.data());
    const std::size_t t = n + i;
    for (std::size_t s = 0; s < c; ++s) {
      if (t + s < c) continue;
      const std::size_t p = t + s - c;
      const double* g = dx.data() + s * d;
      if (p < n) {
        k.axpy(1.0, g, d_prompt.row(p).data(), d);
      } else if (grads) {
        k.axpy(1.0, g, grads->embedding.row(seq.forced[p - n]).data(), d);
      }
    }
  }
  // The pooled slot is shared, so its gradient is summed once over rows.
  k.gemv_t_acc(m.hidden_pool.data.data(), h, d, da_sum.data(), d_pool.data());
  if (grads) {
    k.ger(1.0, da_sum.data(), h, pass.pooled.data(), d, grads->hidden_pool.data.data());
    k.axpy(1.0, da_sum.data(), grads->hidden_bias.data(), h);
  }
  if (n > 0) {
    const double scale = pool_scale(n);
    for (std::size_t p = 0; p < n; ++p) k.axpy(scale, d_pool.data(), d_prompt.row(p).data(), d);
  }
}

void check_forced(std::span<const TokenId> forced, std::size_t predict_count) {
  if (predict_count == 0) throw Error(ErrorCode::InvalidArgument, "predict_count must be >= 1");
  if (forced.size() + 1 < predict_count) {
    throw Error(ErrorCode::InvalidArgument, "not enough forced tokens for predict_count");
  }
}

void check_weight(double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorCode::InvalidArgument, "w must lie in [0, 1]");
}

}  // namespace

LogitMatrix logits_from_embeddings(const ToyModel& m, const Matrix& input_embeddings,
                                   std::span<const TokenId> forced, std::size_t predict_count) {
  check_forced(forced, predict_count);
  check_tokens(m, forced);
  if (input_embeddings.cols != m.dims.embed) {
    throw Error(ErrorCode::ShapeMismatch, "input embeddings must have d columns");
  }
  return forward(m, Sequence{m, input_embeddings, forced}, predict_count).logits;
}

LogitMatrix logits(const ToyModel& m, std::span<const TokenId> input, std::span<const TokenId> forced,
                   std::size_t predict_count) {
  return logits_from_embeddings(m, lookup(m, input), forced, predict_count);
}

TokenSeq generate(const ToyModel& m, std::span<const TokenId> input, const GenerationConfig& config) {
  config.validate();
  const Matrix prompt = lookup(m, input);
  const std::vector<double> pooled = pooled_sum(m, prompt);
  const std::vector<double> pre = pool_preactivation(m, pooled);
  Rng rng(config.seed);
  TokenSeq out;
  std::vector<double> x(m.dims.window_width());
  std::vector<double> z(m.dims.hidden);
  std::vector<double> row(m.dims.vocab);
  const bool greedy = config.temperature < kGreedyTemperature;
  while (out.size() < config.max_new_tokens) {
    forward_row(m, Sequence{m, prompt, out}, prompt.rows + out.size(), pre, x, z, row);
    TokenId next = 0;
    if (greedy) {
      next = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
    } else {
      const double hi = *std::max_element(row.begin(), row.end());
      double total = 0.0;
      for (double& v : row) {
        v = std::exp((v - hi) / config.temperature);
        total += v;
      }
      const double u = rng.uniform() * total;
      double acc = 0.0;
      next = static_cast<TokenId>(row.size() - 1);
      for (std::size_t v = 0; v < row.size(); ++v) {
        acc += row[v];
        if (u < acc) {
          next = static_cast<TokenId>(v);
          break;
        }
      }
    }
    out.push_back(next);
    if (next == kEos) break;
  }
  return out;
}

double target_loss(const ToyModel& m, std::span<const TokenId> input, const TargetResponse& target,
                   double w) {
  check_weight(w);
  return weighted_loss(logits(m, input, target.tokens, target.tokens.size()), target, w);
}

GradientMatrix grad_onehot(const ToyModel& m, std::span<const TokenId> input,
                           std::span<const std::size_t> positions, const TargetResponse& target,
                           double w) {
  check_weight(w);
  if (target.tokens.empty()) throw Error(ErrorCode::InvalidArgument, "empty target");
  check_tokens(m, target.tokens);
  for (std::size_t p : positions) {
    if (p >= input.size()) throw Error(ErrorCode::InvalidArgument, "sequence position out of range");
  }
  const Matrix prompt = lookup(m, input);
  const Sequence seq{m, prompt, target.tokens};
  const Pass pass = forward(m, seq, target.tokens.size());
  const std::vector<double> coef = loss_row_weights(target, w);
  const Matrix dlogits = logit_gradient(pass.logits, target.tokens, coef, nullptr);
  Matrix d_prompt;
  backward(m, seq, pass, dlogits, d_prompt, nullptr);
  GradientMatrix g(positions.size(), m.dims.vocab);
  for (std::size_t r = 0; r < positions.size(); ++r) {
    simd::active().gemv(m.embedding.data.data(), m.dims.vocab, m.dims.embed,
                        d_prompt.row(positions[r]).data(), g.row(r).data());
  }
  return g;
}

namespace {

// Cross-entropy of one pair and, when grads is given, its gradient.
double pair_step(const ToyModel& m, const TrainingPair& pair, ToyModel* grads) {
  const Matrix prompt = lookup(m, pair.prompt);
  const Sequence seq{m, prompt, pair.completion};
  const std::size_t rows = pair.completion.size();
  const Pass pass = forward(m, seq, rows);
  const std::vector<double> coef(rows, 1.0 / static_cast<double>(rows));
  double loss = 0.0;
  const Matrix dlogits = logit_gradient(pass.logits, pair.completion, coef, &loss);
  if (grads) {
    Matrix d_prompt;
    backward(m, seq, pass, dlogits, d_prompt, grads);
    for (std::size_t p = 0; p < prompt.rows; ++p) {
      simd::active().axpy(1.0, d_prompt.row(p).data(), grads->embedding.row(pair.prompt[p]).data(),
                          m.dims.embed);
    }
  }
  return loss;
}

void check_corpus(const ToyModel& m, std::span<const TrainingPair> corpus) {
  if (corpus.empty()) throw Error(ErrorCode::InvalidArgument, "training corpus is empty");
  for (const TrainingPair& p : corpus) {
    if (p.completion.empty()) throw Error(ErrorCode::InvalidArgument, "training pair has empty completion");
    check_tokens(m, p.prompt);
    check_tokens(m, p.completion);
  }
}

}  // namespace

double corpus_loss(const ToyModel& m, std::span<const TrainingPair> corpus) {
  check_corpus(m, corpus);
  double total = 0.0;
  for (const TrainingPair& p : corpus) total += pair_step(m, p, nullptr);
  return total / static_cast<double>(corpus.size());
}

ToyModel train_toy(std::span<const TrainingPair> corpus, const TrainConfig& config,
                   TrainReport* report) {
  ToyModel model = ToyModel::seeded(config.dims, config.seed);
  check_corpus(model, corpus);
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  }
  if (report) report->loss_curve.clear();
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config.seed, 1));
  ToyModel grads(config.dims);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      grads.for_each_array([](std::vector<double>& a) { std::fill(a.begin(), a.end(), 0.0); });
      const double loss = pair_step(model, corpus[idx], &grads);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::DivergedLoss, "training loss became non-finite in epoch " +
                                                 std::to_string(epoch));
      }
      epoch_loss += loss;
      std::array<std::vector<double>*, 6> dst{};
      std::array<const std::vector<double>*, 6> src{};
      std::size_t a = 0;
      model.for_each_array([&](std::vector<double>& v) { dst[a++] = &v; });
      a = 0;
      grads.for_each_array([&](const std::vector<double>& v) { src[a++] = &v; });
      for (std::size_t j = 0; j < dst.size(); ++j) {
        simd::active().axpy(-config.learning_rate, src[j]->data(), dst[j]->data(), dst[j]->size());
      }
    }
    if (report) report->loss_curve.push_back(epoch_loss / static_cast<double>(corpus.size()));
  }
  if (!model.finite()) throw Error(ErrorCode::DivergedLoss, "training produced non-finite weights");
  return model;
}

}  // namespace rpl
