#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace segkit::balance {

using Scorer = std::function<double(std::string_view)>;

struct CandidateWord {
  std::string word;
  std::string stratum;
  std::vector<std::string> candidates;
};

struct WordPair {
  std::string word;
  std::string nonword;
};

// One decision of the word-level sampler, for auditing.
struct Step {
  std::string stratum;
  std::size_t word_index = 0;
  double objective_before = 0;
  double objective_after = 0;
  // No candidate kept the objective from rising; a random one was taken.
  bool forced = false;
};

struct BalancedSelection {
  // pairs[i] belongs to the i-th input word.
  std::vector<WordPair> pairs;
  double objective = 0;
  std::map<std::string, double> stratum_objective;
  std::vector<Step> trace;
};

// sum over scorers of |acc_m - 0.5|, acc_m being the share of pairs where the
// scorer ranks the word above the nonword (ties count half).
double objective(const std::vector<WordPair>& pairs, const std::vector<Scorer>& scorers);

// Chooses one nonword per word, stratum by stratum. Words are visited in a
// seeded random order; for each, candidates are tried in random order
// without replacement and the first that does not raise the stratum's running
// objective is kept. When every candidate raises it, one is drawn uniformly.
BalancedSelection balance_wuggy(const std::vector<CandidateWord>& words,
                                const std::vector<Scorer>& scorers,
                                std::uint64_t seed, unsigned threads = 1);

// Precomputed scores of one candidate pair, one entry per scorer.
struct ScoredPair {
  std::vector<double> positive;
  std::vector<double> negative;
};

struct SubsetSelection {
  // Indices into the pool, in the order they were added.
  std::vector<std::size_t> chosen;
  double objective = 0;
};

double subset_objective(const std::vector<ScoredPair>& pool,
                        const std::vector<std::size_t>& subset);

// Grows a subset of size k: passes over the unchosen pairs in random order,
// adding each pair that does not raise the objective. A pass that adds
// nothing adds its first sampled pair unconditionally.
SubsetSelection balance_blimp(const std::vector<ScoredPair>& pool, std::size_t k,
                              std::uint64_t seed);

// Stratum label from a training frequency and a length. Frequency 0 is its
// own "oov" stratum; other words fall into quartiles of `quartile_edges`
// (three ascending cut points); lengths bin by `length_edges` (ascending
// upper bounds, a final open bin above the last).
std::string stratum_label(std::uint64_t frequency, std::size_t length,
                          const std::vector<double>& quartile_edges,
                          const std::vector<std::size_t>& length_edges);

// Quartile cut points of the non-zero frequencies.
std::vector<double> frequency_quartiles(const std::vector<std::uint64_t>& frequencies);

// TSV: word, stratum, comma-separated candidates.
std::vector<CandidateWord> read_candidates(std::istream& in);
std::vector<CandidateWord> load_candidates(const std::string& path);

}  // namespace segkit::balance
