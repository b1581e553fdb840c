#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "segkit/balance.hpp"
#include "segkit/error.hpp"
#include "segkit/util.hpp"
#include "support/synthetic.hpp"

using namespace segkit;
using namespace segkit::balance;

namespace {

// Scorer reading a number embedded after ':' in the string.
double embedded(std::string_view s) {
  return std::stod(std::string(s.substr(s.find(':') + 1)));
}

}  // namespace

TEST_CASE("objective values") {
  std::vector<Scorer> one{embedded};
  std::vector<WordPair> even{{"w:2", "n:1"}, {"w:1", "n:2"}};
  CHECK(objective(even, one) == 0.0);
  std::vector<WordPair> all{{"w:2", "n:1"}, {"w:3", "n:1"}};
  CHECK(objective(all, one) == 0.5);
  std::vector<WordPair> three{{"w:2", "n:1"}, {"w:3", "n:1"}, {"w:4", "n:1"}, {"w:0", "n:1"}};
  CHECK(objective(three, one) == 0.25);
  std::vector<WordPair> tie{{"w:1", "n:1"}};
  CHECK(objective(tie, one) == 0.0);
}

TEST_CASE("forced choices with a single candidate") {
  std::vector<CandidateWord> words{{"w:1", "s", {"n:0"}}, {"w:2", "s", {"n:0"}}};
  auto sel = balance_wuggy(words, {embedded}, 1);
  REQUIRE(sel.pairs.size() == 2);
  CHECK(sel.pairs[0].nonword == "n:0");
  CHECK(sel.objective == 0.5);
}

TEST_CASE("wuggy balancing reaches balance when it exists") {
  // Each word has a lower- and a higher-scoring candidate, so a perfect
  // 50/50 split exists in every stratum.
  std::uint64_t st = 3;
  std::vector<CandidateWord> words;
  for (int i = 0; i < 400; ++i) {
    double w = static_cast<double>(testing::below(st, 100));
    CandidateWord c{"w" + std::to_string(i) + ":" + std::to_string(w),
                    i % 4 == 0 ? "short" : "long", {}};
    for (int k = 0; k < 6; ++k) {
      double d = 1 + static_cast<double>(testing::below(st, 20));
      c.candidates.push_back("n" + std::to_string(k) + ":" + std::to_string(k % 2 ? w + d : w - d));
    }
    words.push_back(c);
  }
  auto scorer2 = [](std::string_view s) { return -std::abs(embedded(s) - 50); };
  std::vector<Scorer> scorers{embedded, scorer2};
  auto sel = balance_wuggy(words, scorers, 7);
  REQUIRE(sel.pairs.size() == words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    CHECK(sel.pairs[i].word == words[i].word);
    const auto& cands = words[i].candidates;
    CHECK(std::find(cands.begin(), cands.end(), sel.pairs[i].nonword) != cands.end());
  }
  for (const auto& [stratum, obj] : sel.stratum_objective) CHECK(obj <= 0.02 * 2);

  // Accepted steps never raise the running objective.
  std::set<std::string> started;
  for (const auto& step : sel.trace) {
    bool first = started.insert(step.stratum).second;
    if (!first && !step.forced) CHECK(step.objective_after <= step.objective_before + 1e-15);
  }

  auto again = balance_wuggy(words, scorers, 7, 4);
  for (std::size_t i = 0; i < words.size(); ++i) CHECK(again.pairs[i].nonword == sel.pairs[i].nonword);
  CHECK(again.objective == sel.objective);

  // Better than picking candidates at random.
  double random_total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::uint64_t rs = seed + 1000;
    std::map<std::string, std::vector<WordPair>> by;
    for (const auto& w : words) {
      by[w.stratum].push_back({w.word, w.candidates[testing::below(rs, w.candidates.size())]});
    }
    for (const auto& [s, pairs] : by) random_total += objective(pairs, scorers);
  }
  double balanced_total = 0;
  for (const auto& [s, obj] : sel.stratum_objective) balanced_total += obj;
  CHECK(balanced_total <= random_total / 20);
}

TEST_CASE("blimp subset selection") {
  std::vector<ScoredPair> balanced{{{1}, {0}}, {{0}, {1}}, {{2}, {3}}, {{3}, {2}}};
  auto all = balance_blimp(balanced, 4, 1);
  CHECK(all.chosen.size() == 4);
  CHECK(all.objective == 0.0);
  auto one = balance_blimp(balanced, 1, 1);
  CHECK(one.chosen.size() == 1);
  CHECK(one.objective == 0.5);
  CHECK_THROWS_AS(balance_blimp(balanced, 5, 1), PreconditionError);

  // 100 pairs, 50 of which form a balanced subset; the rest favour the positive.
  std::vector<ScoredPair> pool;
  for (int i = 0; i < 100; ++i) {
    if (i < 50) {
      pool.push_back(i % 2 ? ScoredPair{{1, 1}, {0, 0}} : ScoredPair{{0, 0}, {1, 1}});
    } else {
      pool.push_back({{1, 1}, {0, 0}});
    }
  }
  double greedy = 0, random = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto sel = balance_blimp(pool, 50, seed);
    std::set<std::size_t> uniq(sel.chosen.begin(), sel.chosen.end());
    CHECK(uniq.size() == 50);
    CHECK(subset_objective(pool, sel.chosen) == doctest::Approx(sel.objective));
    greedy += sel.objective;
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    shuffle(idx, rng);
    idx.resize(50);
    random += subset_objective(pool, idx);
  }
  CHECK(greedy <= random);
}

TEST_CASE("strata and candidate files") {
  auto q = frequency_quartiles({0, 1, 2, 3, 4, 5, 6, 7, 8});
  REQUIRE(q.size() == 3);
  CHECK(q[0] <= q[1]);
  CHECK(q[1] <= q[2]);
  CHECK(stratum_label(0, 3, q, {4, 8}) == "oov/len1");
  CHECK(stratum_label(8, 9, q, {4, 8}).rfind("fq4/", 0) == 0);

  std::istringstream in("cat\tfq1/len1\tcaz,kat\ndog\tfq2/len1\tdoq\n");
  auto words = read_candidates(in);
  REQUIRE(words.size() == 2);
  CHECK(words[0].candidates == std::vector<std::string>{"caz", "kat"});
  std::istringstream bad("cat\tfq1\t\n");
  CHECK_THROWS_AS(read_candidates(bad), ParseError);
}
