#include "support/synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

namespace segkit::testing {

std::uint64_t next_u64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t below(std::uint64_t& state, std::size_t n) { return next_u64(state) % n; }

std::string random_word(std::uint64_t& state, std::size_t alphabet, std::size_t min_len,
                        std::size_t max_len) {
  std::size_t len = min_len + below(state, max_len - min_len + 1);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w += static_cast<char>('a' + below(state, alphabet));
  return w;
}

SyntheticCorpus synthetic_corpus(std::size_t sentences, std::uint64_t seed, std::size_t words,
                                 std::size_t alphabet, std::size_t min_len, std::size_t max_len,
                                 std::size_t min_words, std::size_t max_words) {
  std::uint64_t st = seed;
  SyntheticCorpus out;
  std::set<std::string> seen;
  while (out.lexicon.size() < words) {
    auto w = random_word(st, alphabet, min_len, max_len);
    if (seen.insert(w).second) out.lexicon.push_back(w);
  }
  for (std::size_t i = 0; i < sentences; ++i) {
    std::size_t n = min_words + below(st, max_words - min_words + 1);
    std::string line;
    for (std::size_t j = 0; j < n; ++j) {
      if (j) line += ' ';
      line += out.lexicon[below(st, words)];
    }
    out.lines.push_back(line);
  }
  out.corpus = corpus_from_lines(out.lines, SymbolKind::Character);
  return out;
}

std::vector<balance::CandidateWord> candidate_pool(const std::vector<std::string>& words,
                                                   std::size_t per_word, std::size_t alphabet,
                                                   std::uint64_t seed) {
  std::uint64_t st = seed;
  std::vector<balance::CandidateWord> pool;
  for (const auto& w : words) {
    balance::CandidateWord c;
    c.word = w;
    c.stratum = "len" + std::to_string(std::min<std::size_t>(w.size(), 6));
    std::set<std::string> seen{w};
    std::size_t guard = 0;
    while (c.candidates.size() < per_word && guard++ < 1000) {
      std::string nw = w;
      std::size_t edits = 1 + below(st, 2);
      for (std::size_t e = 0; e < edits; ++e) {
        nw[below(st, nw.size())] = static_cast<char>('a' + below(st, alphabet));
      }
      if (seen.insert(nw).second) c.candidates.push_back(nw);
    }
    pool.push_back(std::move(c));
  }
  return pool;
}

std::string temp_path(const std::string& name) {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("segkit-test-" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return (dir / name).string();
}

std::string write_temp(const std::string& name, const std::vector<std::string>& lines) {
  std::string path = temp_path(name);
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  for (const auto& l : lines) out << l << '\n';
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace segkit::testing

#include <cmath>

#include "support/fixtures.hpp"

namespace segkit::testing {

BenchFixture make_bench_fixture(const std::string& prefix, std::size_t sentences,
                                std::uint64_t seed) {
  SyntheticCorpus syn = synthetic_corpus(sentences, seed);
  BenchFixture f;
  f.corpus = write_temp(prefix + "/corpus.txt", syn.lines);

  std::uint64_t st = seed * 31 + 1;
  std::vector<std::string> wuggy, blimp;
  auto pool = candidate_pool(syn.lexicon, 1, 10, seed);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    wuggy.push_back("w" + std::to_string(i) + "\tlen" + std::to_string(syn.lexicon[i].size()) +
                    "\t" + pool[i].word + "\t" + pool[i].candidates[0]);
  }
  for (std::size_t i = 0; i < 30; ++i) {
    const auto& a = syn.lexicon[below(st, syn.lexicon.size())];
    const auto& b = syn.lexicon[below(st, syn.lexicon.size())];
    std::string good = a + " " + b, bad = b + a;
    if (good == bad) continue;
    blimp.push_back("b" + std::to_string(i) + "\t" + (i % 2 ? "order" : "merge") + "\t" + good +
                    "\t" + bad);
  }
  f.wuggy = write_temp(prefix + "/wuggy.tsv", wuggy);
  f.blimp = write_temp(prefix + "/blimp.tsv", blimp);

  std::vector<std::string> dev, test, emb{"layers=2 width=2"};
  for (std::size_t i = 0; i + 1 < syn.lexicon.size(); ++i) {
    const auto& a = syn.lexicon[i];
    const auto& b = syn.lexicon[i + 1];
    double human = 10.0 * static_cast<double>(i) / static_cast<double>(syn.lexicon.size());
    (i % 3 == 0 ? test : dev).push_back(a + "\t" + b + "\t" + std::to_string(human));
  }
  // Layer 1 gaps shrink with i, so cosine rises with the human score.
  double harmonic = 0;
  for (std::size_t i = 0; i < syn.lexicon.size(); ++i) {
    if (i > 0) harmonic += 1.0 / static_cast<double>(i);
    for (int layer = 0; layer < 2; ++layer) {
      double angle = layer == 0 ? 0.05 * static_cast<double>(i * i % 7) : harmonic;
      emb.push_back(syn.lexicon[i] + "\t" + std::to_string(layer) + "\t0\t" +
                    std::to_string(std::cos(angle)) + " " + std::to_string(std::sin(angle)));
    }
  }
  f.simi_dev = write_temp(prefix + "/simi_dev.tsv", dev);
  f.simi_test = write_temp(prefix + "/simi_test.tsv", test);
  f.embeddings = write_temp(prefix + "/emb.txt", emb);
  return f;
}

}  // namespace segkit::testing
