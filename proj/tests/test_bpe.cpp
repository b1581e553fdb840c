#include <sstream>

#include "doctest.h"
#include "segkit/bpe.hpp"
#include "segkit/error.hpp"
#include "support/synthetic.hpp"

using namespace segkit;

TEST_CASE("first merge is the most frequent pair") {
  Corpus c = corpus_from_lines({"aaab aaab ab"}, SymbolKind::Character);
  BpeModel m = learn_bpe(c, 3);
  REQUIRE(m.merges().size() == 1);
  SymbolId a = *c.alphabet.find("a");
  CHECK(m.merges()[0] == std::pair<UnitId, UnitId>{a, a});
  CHECK(m.unit_surface(m.vocab_size() - 1) == "aa");
}

TEST_CASE("target equal to the alphabet gives the identity model") {
  Corpus c = corpus_from_lines({"abc abc"}, SymbolKind::Character);
  BpeModel m = learn_bpe(c, c.alphabet.size());
  CHECK(m.merges().empty());
  std::vector<SymbolId> w{0, 1, 2};
  auto units = m.encode(w);
  CHECK(units == std::vector<UnitId>{0, 1, 2});
}

TEST_CASE("ties go to the smallest pair and merges stay inside words") {
  // (a,b) and (c,d) both occur twice; no pair spans the boundary.
  Corpus c = corpus_from_lines({"ab cd", "ab cd", "ba"}, SymbolKind::Character);
  BpeModel m = learn_bpe(c, 100);
  REQUIRE(m.merges().size() >= 2);
  CHECK(m.merges()[0] == std::pair<UnitId, UnitId>{0, 1});
  CHECK(m.merges()[1] == std::pair<UnitId, UnitId>{2, 3});
  for (UnitId u = 0; u < m.vocab_size(); ++u) {
    CHECK(m.unit_surface(u).find(' ') == std::string::npos);
    CHECK(m.unit_surface(u) != "bc");
  }
  CHECK(m.merges().size() == 2);
}

TEST_CASE("round trip and merge monotonicity") {
  auto syn = testing::synthetic_corpus(400, 31, 200, 8, 2, 9, 1, 5);
  BpeModel full = learn_bpe(syn.corpus, 80);
  std::uint64_t st = 4;
  std::vector<std::vector<SymbolId>> words;
  for (int i = 0; i < 1000; ++i) {
    std::vector<SymbolId> w(1 + testing::below(st, 12));
    for (auto& x : w) x = static_cast<SymbolId>(testing::below(st, syn.corpus.alphabet.size()));
    words.push_back(w);
  }
  for (const auto& w : words) {
    auto units = full.encode(w);
    CHECK_FALSE(units.empty());
    CHECK(full.decode(units) == w);
    CHECK(full.encode(w) == units);
  }
  // Replaying a prefix of the merges never gives shorter encodings.
  std::size_t prev_total = SIZE_MAX;
  for (std::size_t k = 0; k <= full.merges().size(); k += 7) {
    BpeModel part(syn.corpus.alphabet);
    for (std::size_t i = 0; i < k; ++i) part.add_merge(full.merges()[i].first, full.merges()[i].second);
    std::size_t total = 0;
    for (const auto& w : words) total += part.encode(w).size();
    CHECK(total <= prev_total);
    prev_total = total;
  }
}

TEST_CASE("phoneme units and the end-of-word flag") {
  Corpus c = corpus_from_lines({"K AE T | K AE T", "K AE B"}, SymbolKind::Phoneme);
  BpeModel m = learn_bpe(c, 100, true);
  CHECK(m.end_of_word_marker());
  std::vector<SymbolId> w{0, 1, 2};
  auto units = m.encode(w);
  CHECK(m.ends_word(units.back()));
  CHECK(m.decode(units) == w);
  std::ostringstream out;
  m.write_tsv(out);
  std::istringstream in(out.str());
  BpeModel back = BpeModel::read_tsv(in);
  CHECK(back.encode(w) == units);
  CHECK(back.merges() == m.merges());
}

TEST_CASE("model file round trip and errors") {
  auto syn = testing::synthetic_corpus(50, 3);
  BpeModel m = learn_bpe(syn.corpus, 40);
  std::ostringstream out;
  m.write_tsv(out);
  std::istringstream in(out.str());
  BpeModel back = BpeModel::read_tsv(in);
  CHECK(back.merges() == m.merges());
  CHECK(back.vocab_size() == m.vocab_size());
  std::vector<SymbolId> bad{99};
  CHECK_THROWS_AS(m.encode(bad), DomainError);
  std::vector<UnitId> bad_unit{100000};
  CHECK_THROWS_AS(m.decode(bad_unit), DomainError);
  CHECK_THROWS_AS(learn_bpe(strip_boundaries(syn.corpus), 40), PreconditionError);
}

TEST_CASE("vocabulary hits the target when pairs keep repeating") {
  auto syn = testing::synthetic_corpus(2000, 6, 300, 12, 3, 10, 1, 6);
  for (std::size_t target : {20u, 60u, 150u}) {
    CHECK(learn_bpe(syn.corpus, target).vocab_size() == target);
  }
}
