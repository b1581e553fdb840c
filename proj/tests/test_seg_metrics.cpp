#include "doctest.h"
#include "segkit/error.hpp"
#include "segkit/seg_metrics.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace segkit;

namespace {

SegEvalCounts oracle_counts(const Boundaries& gold, const Boundaries& pred, std::size_t n) {
  SegEvalCounts c;
  auto gs = testing::span_set(gold, n), ps = testing::span_set(pred, n);
  for (const auto& s : ps) (gs.count(s) ? c.token_tp : c.token_fp)++;
  for (const auto& s : gs) if (!ps.count(s)) c.token_fn++;
  for (std::size_t k = 1; k < n; ++k) {
    bool g = std::find(gold.begin(), gold.end(), k) != gold.end();
    bool p = std::find(pred.begin(), pred.end(), k) != pred.end();
    if (g && p) c.boundary_tp++;
    if (!g && p) c.boundary_fp++;
    if (g && !p) c.boundary_fn++;
  }
  return c;
}

Boundaries random_boundaries(std::uint64_t& st, std::size_t n) {
  Boundaries b;
  std::size_t density = testing::below(st, 4);
  for (std::size_t k = 1; k < n; ++k) {
    if (testing::below(st, 4) < density) b.push_back(k);
  }
  return b;
}

}  // namespace

TEST_CASE("hand-counted sentence examples") {
  SegEvalCounts a = sentence_counts({3}, {3}, 7);
  CHECK(a == SegEvalCounts{2, 0, 0, 1, 0, 0});
  SegEvalCounts b = sentence_counts({3}, {}, 7);
  CHECK(b == SegEvalCounts{0, 1, 2, 0, 0, 1});
  SegEvalCounts c = sentence_counts({2, 5}, {2}, 7);
  CHECK(c == SegEvalCounts{1, 1, 2, 1, 0, 1});
  CHECK_THROWS_AS(sentence_counts({7}, {}, 7), DomainError);
}

TEST_CASE("prf conventions") {
  Prf p = prf(1, 0, 1);
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 0.5);
  CHECK(p.f1 == doctest::Approx(2.0 / 3).epsilon(1e-15));
  Prf e = prf(0, 0, 0);
  CHECK((e.precision == 1.0 && e.recall == 1.0 && e.f1 == 1.0));
  Prf z = prf(0, 5, 5);
  CHECK((z.precision == 0.0 && z.recall == 0.0 && z.f1 == 0.0));
  Prf r = prf(0, 0, 3);
  CHECK((r.precision == 0.0 && r.recall == 0.0 && r.f1 == 0.0));
}

TEST_CASE("sentence counts match span-set intersection") {
  std::uint64_t st = 77;
  for (int trial = 0; trial < 3000; ++trial) {
    std::size_t n = 1 + testing::below(st, 14);
    Boundaries g = random_boundaries(st, n), p = random_boundaries(st, n);
    SegEvalCounts got = sentence_counts(g, p, n);
    CHECK(got == oracle_counts(g, p, n));
    SegEvalCounts swapped = sentence_counts(p, g, n);
    CHECK(swapped.token_fp == got.token_fn);
    CHECK(swapped.boundary_fn == got.boundary_fp);
    // Every token hit sits between two boundary hits or sentence edges.
    std::uint64_t edge_ok = 0;
    auto gs = testing::span_set(g, n);
    for (auto [b, e] : testing::span_set(p, n)) {
      if (!gs.count({b, e})) continue;
      bool left = b == 0 || std::count(g.begin(), g.end(), b);
      bool right = e == n || std::count(g.begin(), g.end(), e);
      edge_ok += left && right;
    }
    CHECK(edge_ok == got.token_tp);
  }
}

TEST_CASE("corpus scores are micro-averaged") {
  std::uint64_t st = 5;
  std::vector<std::string> lines;
  for (int i = 0; i < 50; ++i) {
    std::string s = testing::random_word(st, 3, 1, 4);
    for (int w = 0; w < static_cast<int>(testing::below(st, 4)); ++w) {
      s += ' ' + testing::random_word(st, 3, 1, 4);
    }
    lines.push_back(s);
  }
  Corpus gold = corpus_from_lines(lines, SymbolKind::Character);
  std::vector<Boundaries> pred;
  SegEvalCounts sum;
  for (const auto& s : gold.sentences) {
    pred.push_back(random_boundaries(st, s.size()));
    sum += oracle_counts(*s.gold, pred.back(), s.size());
  }
  Corpus predicted = with_boundaries(strip_boundaries(gold), pred);
  SegScores scores = evaluate_corpus(gold, predicted);
  CHECK(scores.counts == sum);
  Prf tok = prf(sum.token_tp, sum.token_fp, sum.token_fn);
  CHECK(scores.token.f1 == tok.f1);
  CHECK(scores.boundary.precision ==
        static_cast<double>(sum.boundary_tp) / double(sum.boundary_tp + sum.boundary_fp));

  SegScores self = evaluate_corpus(gold, gold);
  CHECK((self.token.f1 == 1.0 && self.boundary.f1 == 1.0 && self.boundary.precision == 1.0));

  std::vector<Boundaries> none(gold.sentences.size());
  SegScores flat = evaluate_corpus(gold, with_boundaries(gold, none));
  CHECK(flat.boundary.recall == 0.0);
  CHECK(flat.boundary.f1 == 0.0);
}

TEST_CASE("misaligned corpora are rejected") {
  Corpus a = corpus_from_lines({"ab c", "d"}, SymbolKind::Character);
  Corpus b = corpus_from_lines({"ab c"}, SymbolKind::Character);
  CHECK_THROWS_AS(evaluate_corpus(a, b), AlignmentError);
  Corpus c = corpus_from_lines({"ab c", "de"}, SymbolKind::Character);
  CHECK_THROWS_AS(evaluate_corpus(a, c), AlignmentError);
}
