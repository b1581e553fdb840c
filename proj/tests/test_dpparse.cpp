#include <cmath>
#include <map>

#include "doctest.h"
#include "segkit/dpparse.hpp"
#include "segkit/error.hpp"
#include "segkit/seg_metrics.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace segkit;
using namespace segkit::dpparse;

namespace {

std::vector<SymbolId> ids(std::initializer_list<SymbolId> l) { return l; }

// Lexicon of random short tokens over `alphabet` symbols.
TokenLexicon random_lexicon(std::uint64_t& st, std::size_t alphabet) {
  TokenLexicon lex;
  std::size_t types = testing::below(st, 12);
  for (std::size_t t = 0; t < types; ++t) {
    std::vector<SymbolId> tok(1 + testing::below(st, 4));
    for (auto& x : tok) x = static_cast<SymbolId>(testing::below(st, alphabet));
    lex.add(tok, 1 + testing::below(st, 20));
  }
  return lex;
}

}  // namespace

TEST_CASE("base distribution values") {
  SymbolDistribution one({1.0});
  CHECK(base_prob(ids({0}), one, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  SymbolDistribution two({0.5, 0.5});
  CHECK(base_prob(ids({0, 1}), two, 0.5) == doctest::Approx(0.0625).epsilon(1e-15));
  std::uint64_t st = 3;
  for (int i = 0; i < 200; ++i) {
    std::vector<SymbolId> tok(1 + testing::below(st, 8));
    for (auto& x : tok) x = static_cast<SymbolId>(testing::below(st, 2));
    double p_hash = 0.05 + 0.9 * (testing::below(st, 1000) / 1000.0);
    CHECK(base_prob(tok, two, p_hash) <=
          p_hash * std::pow(1 - p_hash, static_cast<double>(tok.size() - 1)) + 1e-15);
  }
}

TEST_CASE("CRP token probability") {
  SymbolDistribution two({0.5, 0.5});
  TokenLexicon empty;
  CHECK(token_prob(ids({0, 1}), empty, 3.0, two, 0.5) == doctest::Approx(0.0625).epsilon(1e-14));

  TokenLexicon lex;
  lex.add(ids({0, 1}), 2);
  CHECK(lex.total() == 2);
  CHECK(token_prob(ids({0, 1}), lex, 1.0, two, 0.5) ==
        doctest::Approx((2 + 0.0625) / 3).epsilon(1e-14));

  // Both mixture components are lower bounds.
  std::uint64_t st = 5;
  for (int trial = 0; trial < 300; ++trial) {
    TokenLexicon l = random_lexicon(st, 2);
    std::vector<SymbolId> tok(1 + testing::below(st, 4));
    for (auto& x : tok) x = static_cast<SymbolId>(testing::below(st, 2));
    double a = 0.5 + testing::below(st, 50);
    double p = token_prob(tok, l, a, two, 0.5);
    double denom = static_cast<double>(l.total()) + a;
    CHECK(p >= a * base_prob(tok, two, 0.5) / denom * (1 - 1e-12));
    CHECK(p >= static_cast<double>(l.count(tok)) / denom * (1 - 1e-12));
  }

  // Monotone in the token's own count.
  double prev = 0;
  for (int n = 0; n < 30; ++n) {
    TokenLexicon l;
    l.add(ids({1}), 10);
    if (n) l.add(ids({0, 1}), static_cast<std::uint64_t>(n));
    double p = token_prob(ids({0, 1}), l, 5.0, two, 0.5);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("held-out counts equal a lexicon built without them") {
  std::uint64_t st = 41;
  SymbolDistribution three({0.2, 0.3, 0.5});
  for (int trial = 0; trial < 200; ++trial) {
    TokenLexicon rest = random_lexicon(st, 3);
    TokenLexicon own = random_lexicon(st, 3);
    TokenLexicon both = rest;
    for (const auto& [tok, n] : own.entries()) both.add(tok, n);
    std::vector<SymbolId> s(1 + testing::below(st, 8));
    for (auto& x : s) x = static_cast<SymbolId>(testing::below(st, 3));
    UnigramModel with{both, three, 7.0, 0.4, &own};
    UnigramModel plain{rest, three, 7.0, 0.4};
    auto a = nbest_parses(s, with, 64, 8);
    auto b = nbest_parses(s, plain, 64, 8);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].boundaries == b[i].boundaries);
      CHECK(a[i].neg_log_prob == doctest::Approx(b[i].neg_log_prob).epsilon(1e-12));
    }
    CHECK(with.cost(s) == doctest::Approx(plain.cost(s)).epsilon(1e-12));
  }
}

TEST_CASE("trie lexicon counts and entries") {
  TokenLexicon lex;
  lex.add(ids({1, 2}), 3);
  lex.add(ids({1}), 1);
  lex.add(ids({2}), 3);
  lex.add(ids({1, 2}));
  CHECK(lex.count(ids({1, 2})) == 4);
  CHECK(lex.count(ids({1})) == 1);
  CHECK(lex.count(ids({2, 1})) == 0);
  CHECK(lex.total() == 8);
  CHECK(lex.types() == 3);
  auto e = lex.entries();
  REQUIRE(e.size() == 3);
  CHECK(e[0] == std::pair{ids({1, 2}), std::uint64_t{4}});
  CHECK(e[1] == std::pair{ids({2}), std::uint64_t{3}});
  CHECK(e[2] == std::pair{ids({1}), std::uint64_t{1}});
  CHECK_THROWS_AS(lex.add(std::vector<SymbolId>{}), DomainError);
}

TEST_CASE("init lexicon keeps whole short sentences") {
  Corpus c = corpus_from_lines({"ab", "ab", "abcdefghijklmnopqrstuvwxy"}, SymbolKind::Character);
  TokenLexicon lex = init_lexicon(c, 20);
  CHECK(lex.total() == 2);
  CHECK(lex.types() == 1);
  CHECK(lex.count(c.sentences[0].symbols) == 2);

  Corpus one = corpus_from_lines({"a"}, SymbolKind::Character);
  CHECK(init_lexicon(one, 20).count(one.sentences[0].symbols) == 1);

  Corpus longs = corpus_from_lines({"abcdefghijklmnopqrstu"}, SymbolKind::Character);
  CHECK_THROWS_AS(init_lexicon(longs, 20), PreconditionError);
}

TEST_CASE("small N-best lists") {
  SymbolDistribution two({0.5, 0.5});
  TokenLexicon lex;
  lex.add(ids({0, 1}), 3);
  UnigramModel m{lex, two, 2.0, 0.5};

  auto one = nbest_parses(ids({1}), m, 10, 20);
  REQUIRE(one.size() == 1);
  CHECK(one[0].boundaries.empty());
  CHECK(one[0].neg_log_prob ==
        doctest::Approx(-std::log(token_prob(ids({1}), lex, 2.0, two, 0.5))).epsilon(1e-14));

  auto three = nbest_parses(ids({0, 1, 0}), m, 10, 20);
  CHECK(three.size() == 4);
  for (std::size_t i = 1; i < three.size(); ++i) {
    CHECK(three[i - 1].neg_log_prob <= three[i].neg_log_prob);
  }
  CHECK(three[0].boundaries == Boundaries{2});

  auto inverted = nbest_parses(ids({0, 1, 0}), m, 10, 20, true);
  REQUIRE(inverted.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(inverted[i].boundaries == three[3 - i].boundaries);
  }

  auto capped = nbest_parses(ids({0, 1, 0, 1}), m, 10, 1);
  REQUIRE(capped.size() == 1);
  CHECK(capped[0].boundaries == Boundaries{1, 2, 3});
}

TEST_CASE("N-best matches exhaustive enumeration") {
  std::uint64_t st = 17;
  for (int trial = 0; trial < 150; ++trial) {
    std::size_t alphabet = 2 + testing::below(st, 3);
    std::vector<double> probs(alphabet);
    double sum = 0;
    for (auto& p : probs) sum += (p = 1.0 + testing::below(st, 9));
    for (auto& p : probs) p /= sum;
    SymbolDistribution dist(probs);
    TokenLexicon lex = random_lexicon(st, alphabet);
    UnigramModel m{lex, dist, 0.5 + testing::below(st, 30), 0.1 + testing::below(st, 8) / 10.0};
    std::size_t n = 1 + testing::below(st, 9);
    std::vector<SymbolId> s(n);
    for (auto& x : s) x = static_cast<SymbolId>(testing::below(st, alphabet));

    std::vector<std::pair<double, Boundaries>> oracle;
    for (auto& b : testing::all_segmentations(n)) oracle.push_back({testing::direct_cost(s, b, m), b});
    std::stable_sort(oracle.begin(), oracle.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    auto got = nbest_parses(s, m, oracle.size(), n);
    REQUIRE(got.size() == oracle.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].neg_log_prob == doctest::Approx(oracle[i].first).epsilon(1e-12));
      CHECK(testing::direct_cost(s, got[i].boundaries, m) ==
            doctest::Approx(got[i].neg_log_prob).epsilon(1e-12));
    }

    auto best = nbest_parses(s, m, 1, n);
    CHECK(best[0].neg_log_prob == doctest::Approx(oracle[0].first).epsilon(1e-12));

    // A truncated beam is the prefix of the full ranking, cost-wise.
    std::size_t k = 1 + testing::below(st, oracle.size());
    auto part = nbest_parses(s, m, k, n);
    REQUIRE(part.size() == k);
    for (std::size_t i = 0; i < k; ++i) {
      CHECK(part[i].neg_log_prob == doctest::Approx(oracle[i].first).epsilon(1e-12));
    }
  }
}

TEST_CASE("uniform draw from the N-best list") {
  std::vector<Parse> nbest(4);
  for (std::size_t i = 0; i < 4; ++i) nbest[i].neg_log_prob = static_cast<double>(i);
  Rng rng(99);
  std::map<double, int> freq;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) freq[sample_parse(nbest, rng).neg_log_prob]++;
  for (const auto& [k, v] : freq) CHECK(std::abs(v / double(draws) - 0.25) < 0.01);

  Rng a(7), b(7);
  for (int i = 0; i < 50; ++i) CHECK(&sample_parse(nbest, a) == &sample_parse(nbest, b));
  std::vector<Parse> single(1);
  CHECK(&sample_parse(single, rng) == &single[0]);
  CHECK_THROWS_AS(sample_parse({}, rng), PreconditionError);
}

TEST_CASE("joint probability equals sequential CRP draws") {
  std::uint64_t st = 23;
  SymbolDistribution dist({0.25, 0.25, 0.5});
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<SymbolId>> tokens(1 + testing::below(st, 30));
    for (auto& t : tokens) {
      t.resize(1 + testing::below(st, 3));
      for (auto& x : t) x = static_cast<SymbolId>(testing::below(st, 3));
    }
    double alpha = 0.5 + testing::below(st, 20);
    TokenLexicon running, full;
    double nll = 0;
    for (const auto& t : tokens) {
      nll -= std::log(token_prob(t, running, alpha, dist, 0.4));
      running.add(t);
      full.add(t);
    }
    CHECK(joint_neg_log_prob(full, dist, alpha, 0.4) == doctest::Approx(nll).epsilon(1e-10));
  }
}

TEST_CASE("run is reproducible and never worsens the best NLL") {
  auto syn = testing::synthetic_corpus(200, 8);
  Corpus stripped = strip_boundaries(syn.corpus);
  Config cfg;
  cfg.seed = 4;
  Result a = run(stripped, cfg);
  cfg.threads = 3;
  Result b = run(stripped, cfg);
  CHECK(a.segmentation == b.segmentation);
  REQUIRE(a.stats.size() == b.stats.size());
  for (std::size_t i = 0; i < a.stats.size(); ++i) {
    CHECK(a.stats[i].corpus_nll == b.stats[i].corpus_nll);
    if (i) CHECK(a.stats[i].best_nll <= a.stats[i - 1].best_nll);
  }
  CHECK(a.stats[a.best_iteration - 1].corpus_nll == a.stats.back().best_nll);

  // Segmentations partition every sentence.
  for (std::size_t i = 0; i < stripped.sentences.size(); ++i) {
    CHECK_NOTHROW(validate_boundaries(a.segmentation[i], stripped.sentences[i].size()));
  }
  CHECK(a.segmented.sentences[0].visible_boundaries() != nullptr);

  cfg.seed = 5;
  Result c = run(stripped, cfg);
  CHECK(c.segmentation != a.segmentation);
}

TEST_CASE("repeated sentence converges to a dominant token") {
  Corpus c = corpus_from_lines(std::vector<std::string>(1000, "abab"), SymbolKind::Character);
  Config cfg;
  cfg.max_token_len = 4;
  cfg.seed = 1;
  Result r = run(c, cfg);
  for (std::size_t i = 1; i < r.stats.size(); ++i) {
    CHECK(r.stats[i].best_nll <= r.stats[i - 1].best_nll);
  }
  CHECK(r.lexicon.types() <= 4);
}

TEST_CASE("configuration and input checks") {
  Config cfg;
  cfg.p_hash = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = Config{};
  cfg.beam_n = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  Corpus empty;
  CHECK_THROWS_AS(run(empty, Config{}), PreconditionError);
}
