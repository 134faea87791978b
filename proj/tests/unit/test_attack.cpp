#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "rpl/attack.hpp"
#include "rpl/error.hpp"
#include "rpl/prompter.hpp"

using namespace rpl;

namespace {

struct Setup {
  Vocab vocab;
  ToyOracle oracle;
  AugmentedRequest req;
  std::size_t insert_at;
};

Setup make_setup(std::uint64_t seed) {
  Vocab vocab = test::numbered_vocab(16);
  ToyOracle oracle(ToyModel::seeded(ModelDims{16, 4, 8, 8}, seed, 1.0), vocab);
  const std::vector<Chunk> chunks{{"w103 w104 w105", {0, 14}, {}}};
  AugmentedRequest req = assemble(direct_template(), chunks, "w106 w107");
  const std::size_t at = req.chunks[0].begin + 4;
  return {vocab, std::move(oracle), std::move(req), at};
}

TargetResponse target_of(const Vocab& v, const std::string& text, const std::string& crucial) {
  return TargetResponse::from_text(text, crucial, v);
}

}  // namespace

TEST_CASE("shortlist matches a brute-force ranking") {
  Matrix grad(2, 6);
  grad.data = {0.0, 0.0, 0.0, -0.5, 0.2, -0.9,  //
               0.0, 0.0, 0.0, 0.3, -0.3, -0.3};
  for (std::size_t r = 0; r < 2; ++r) {
    for (TokenId current : {TokenId{3}, TokenId{4}}) {
      for (std::size_t b = 1; b <= 3; ++b) {
        std::vector<std::pair<double, TokenId>> all;
        for (TokenId v = kFirstWordId; v < 6; ++v) {
          if (v != current) all.push_back({grad(r, v), v});
        }
        std::sort(all.begin(), all.end());
        std::vector<TokenId> expected;
        for (std::size_t i = 0; i < std::min(b, all.size()); ++i) expected.push_back(all[i].second);
        CHECK(shortlist(grad.row(r), current, b) == expected);
      }
    }
  }
}

TEST_CASE("shortlist honors the allowed mask") {
  const std::vector<double> row{0.0, 0.0, 0.0, -3.0, -2.0, -1.0};
  const std::vector<bool> allowed{true, true, true, false, true, true};
  CHECK(shortlist(row, 5, 4, allowed) == std::vector<TokenId>{4});
}

TEST_CASE("degenerate mutation picks the argmin token") {
  Matrix grad(1, 6);
  grad.data = {0.0, 0.0, 0.0, 0.1, -0.4, 0.2};
  Rng rng(1);
  const std::vector<TokenSeq> c = mutate_candidates({3}, grad, 1, 1, rng);
  REQUIRE(c.size() == 1);
  CHECK(c[0] == TokenSeq{4});
}

TEST_CASE("mutations stay in vocabulary and length") {
  Rng rng(7);
  Matrix grad(4, 10);
  for (double& x : grad.data) x = rng.uniform(-1.0, 1.0);
  const TokenSeq seq{3, 4, 5, 6};
  const std::vector<TokenSeq> c = mutate_candidates(seq, grad, 50, 3, rng);
  CHECK(c.size() == 50);
  for (const TokenSeq& s : c) {
    CHECK(s.size() == seq.size());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i] >= kFirstWordId);
      CHECK(s[i] < 10);
      changed += s[i] != seq[i] ? 1 : 0;
    }
    CHECK(changed == 1);
  }
  CHECK_THROWS_AS(mutate_candidates(seq, Matrix(3, 10), 1, 1, rng), Error);
}

TEST_CASE("select keeps the best of current and candidates") {
  const std::vector<double> scores{0.9, 0.4, 0.7};
  CHECK(select_index(0.8, scores) == 1);
  CHECK(select_index(0.1, scores) == scores.size());
  CHECK(select_index(0.4, scores) == scores.size());

  const std::vector<TokenSeq> candidates{{5}, {6}, {7}};
  const SeqScorer scorer = [](const TokenSeq& s) { return s[0] == 6 ? 0.4 : s[0] == 5 ? 0.9 : 0.7; };
  CHECK(select({4}, candidates, [&](const TokenSeq& s) { return s[0] == 4 ? 0.8 : scorer(s); }) == TokenSeq{6});
  CHECK(select({4}, candidates, [&](const TokenSeq& s) { return s[0] == 4 ? 0.0 : scorer(s); }) == TokenSeq{4});
}

TEST_CASE("success check is a normalized substring test") {
  const std::vector<std::string> texts{"visit https://evil.io/x now"};
  const Vocab v = Vocab::build(texts);
  const TargetResponse t = target_of(v, "visit https://evil.io/x now", "https://evil.io/x");
  CHECK(success_check("Please VISIT https://evil.io/x now", t));
  CHECK_FALSE(success_check("", t));
  CHECK(success_check(detokenize(t.tokens, v), t));
  CHECK_FALSE(success_check("visit https://good.io/x", t));
}

TEST_CASE("pre-satisfied target succeeds at the first iteration") {
  const GenerationConfig gen{1e-9, 6, 0};
  AttackConfig cfg;
  cfg.init_length = 4;
  cfg.filler = "w110";
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Setup s = make_setup(seed);
    TokenSeq prompt = tokenize(s.req.text.substr(0, s.insert_at), s.vocab);
    for (int i = 0; i < 4; ++i) prompt.push_back(s.vocab.id("w110"));
    const TokenSeq tail = tokenize(s.req.text.substr(s.insert_at), s.vocab);
    prompt.insert(prompt.end(), tail.begin(), tail.end());
    const TokenSeq natural = s.oracle.generate(prompt, gen);
    const auto word = std::find_if(natural.begin(), natural.end(), [&](TokenId t) { return !s.vocab.reserved(t); });
    if (word == natural.end()) continue;
    TargetResponse t;
    t.tokens = natural;
    t.crucial.assign(natural.size(), false);
    t.crucial[static_cast<std::size_t>(word - natural.begin())] = true;
    t.crucial_string = s.vocab.word(*word);

    const AttackResult r = craft_sequence(s.oracle, s.req, s.insert_at, t, cfg, gen);
    CHECK(r.success);
    CHECK(r.iterations == 1);
    CHECK(r.seq == TokenSeq(4, s.vocab.id("w110")));
    CHECK(r.loss_trace.size() == 1);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("loss trace is non-increasing and runs are reproducible") {
  const Setup s = make_setup(5);
  const TargetResponse t = target_of(s.vocab, "w111 w112 w113", "w112");
  AttackConfig cfg;
  cfg.init_length = 6;
  cfg.max_step = 25;
  cfg.k = 8;
  cfg.top_b = 6;
  cfg.seed = 17;
  const GenerationConfig gen{0.7, 4, 3};
  const AttackResult a = craft_sequence(s.oracle, s.req, s.insert_at, t, cfg, gen);
  CHECK(a.loss_trace.size() == a.iterations);
  for (std::size_t i = 1; i < a.loss_trace.size(); ++i) CHECK(a.loss_trace[i] <= a.loss_trace[i - 1]);

  const AttackResult b = craft_sequence(s.oracle, s.req, s.insert_at, t, cfg, gen);
  CHECK(a.seq == b.seq);
  CHECK(a.loss_trace == b.loss_trace);
  cfg.jobs = 3;
  const AttackResult c = craft_sequence(s.oracle, s.req, s.insert_at, t, cfg, gen);
  CHECK(a.seq == c.seq);
  CHECK(a.loss_trace == c.loss_trace);
}

TEST_CASE("insertion point must lie in the content slot") {
  const Setup s = make_setup(1);
  const TargetResponse t = target_of(s.vocab, "w111", "w111");
  CHECK_THROWS_AS(craft_sequence(s.oracle, s.req, 0, t, AttackConfig{}, GenerationConfig{}), Error);
}

TEST_CASE("config validation") {
  AttackConfig cfg;
  cfg.w = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("craft_document hides the sequence") {
  const std::vector<std::string> words{"ok", "fine", "</"};
  const Vocab v = Vocab::from_words(words);
  const Document md = parse_document("```bash\necho hi\n```", DocFormat::Markdown);
  const TokenSeq seq{v.id("ok"), v.id("fine")};
  const Document out = craft_document(md, seq, v, InvisibleFeature::MdFenceInfo, {0, 0, {}});
  CHECK(render_view(out) == render_view(md));
  CHECK(verify_invisibility(md, out, "ok fine"));
  CHECK(craft_document(md, {}, v, InvisibleFeature::MdFenceInfo, {0, 0, {}}).source == md.source);

  const Document html = parse_document("<p>text</p>", DocFormat::Html);
  try {
    craft_document(html, {v.id("ok"), v.id("</")}, v, InvisibleFeature::HtmlHiddenSpan, {0, 0, {}});
    FAIL("expected PayloadBreaksCarrier");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PayloadBreaksCarrier);
  }
}
