#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <unordered_map>
#include <vector>

#include "segkit/text.hpp"
#include "segkit/util.hpp"

namespace segkit::dpparse {

struct Config {
  // CRP concentration.
  double alpha0 = 20.0;
  // Probability of ending a word after each symbol in the base distribution.
  double p_hash = 0.5;
  // Size of the N-best list a parse is sampled from.
  std::size_t beam_n = 3;
  std::size_t max_token_len = 20;
  // Sentences shorter than this seed the initial lexicon.
  std::size_t init_max_len = 20;
  std::size_t max_iters = 10;
  double min_nll_improvement = 0.0;
  // Consecutive passes without improvement tolerated before stopping.
  std::size_t patience = 2;
  std::uint64_t seed = 0;
  // Base-distribution symbol probabilities: corpus frequencies, or uniform.
  bool uniform_symbols = false;
  // Keep the N *least* probable parses instead of the N most probable.
  bool invert_beam = false;
  // Score each sentence against the lexicon minus its own tokens from the
  // previous pass.
  bool exclude_own_tokens = true;
  unsigned threads = 1;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

// Token counts keyed by symbol sequence, stored as a trie so the lattice can
// read n_l for every span starting at a position in one walk.
class TokenLexicon {
 public:
  using Node = std::uint32_t;
  static constexpr Node kRoot = 0;
  static constexpr Node kNone = UINT32_MAX;

  TokenLexicon();

  void add(std::span<const SymbolId> token, std::uint64_t n = 1);
  std::uint64_t count(std::span<const SymbolId> token) const;
  // Sum of all counts: the number of tokens the lexicon was built from.
  std::uint64_t total() const noexcept { return total_; }
  // Number of distinct tokens.
  std::size_t types() const noexcept { return types_; }

  Node child(Node node, SymbolId symbol) const;
  std::uint64_t count_at(Node node) const noexcept { return counts_[node]; }

  // (token, count) pairs sorted by descending count, then token.
  std::vector<std::pair<std::vector<SymbolId>, std::uint64_t>> entries() const;

 private:
  static std::uint64_t edge_key(Node n, SymbolId s) {
    return (static_cast<std::uint64_t>(n) << 32) | s;
  }

  std::vector<std::uint64_t> counts_;
  std::vector<Node> parents_;
  std::vector<SymbolId> labels_;
  std::unordered_map<std::uint64_t, Node> edges_;
  std::uint64_t total_ = 0;
  std::size_t types_ = 0;
};

// Per-symbol probabilities P(x) of the base distribution.
class SymbolDistribution {
 public:
  SymbolDistribution() = default;
  // Relative frequency of each symbol over the corpus.
  static SymbolDistribution empirical(const Corpus& corpus);
  static SymbolDistribution uniform(std::size_t alphabet_size);
  // Explicit probabilities; must be positive and sum to 1 within 1e-9.
  explicit SymbolDistribution(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  // Throws DomainError for symbols without mass.
  double prob(SymbolId s) const;
  double log_prob(SymbolId s) const;
  bool contains(SymbolId s) const noexcept {
    return s < probs_.size() && probs_[s] > 0;
  }
  const std::vector<double>& probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
  std::vector<double> log_probs_;
};

// P0(token) = p_hash (1 - p_hash)^(M-1) prod_j P(x_j), and its log.
double log_base_prob(std::span<const SymbolId> token,
                     const SymbolDistribution& dist, double p_hash);
double base_prob(std::span<const SymbolId> token,
                 const SymbolDistribution& dist, double p_hash);

// CRP posterior predictive with the lexicon held fixed:
//   (n_token + alpha0 * P0(token)) / (total + alpha0)
double log_token_prob(std::span<const SymbolId> token,
                      const TokenLexicon& lexicon, double alpha0,
                      const SymbolDistribution& dist, double p_hash);
// Same, with the counts of `held_out` subtracted from `lexicon`.
double log_token_prob(std::span<const SymbolId> token,
                      const TokenLexicon& lexicon, const TokenLexicon& held_out,
                      double alpha0, const SymbolDistribution& dist, double p_hash);
double token_prob(std::span<const SymbolId> token, const TokenLexicon& lexicon,
                  double alpha0, const SymbolDistribution& dist, double p_hash);

// The frozen unigram model one iteration parses with.
struct UnigramModel {
  const TokenLexicon& lexicon;
  const SymbolDistribution& dist;
  double alpha0;
  double p_hash;
  // Tokens of the sentence being parsed, removed from `lexicon` so a
  // sentence is scored against the other tokens only.
  const TokenLexicon* held_out = nullptr;

  double cost(std::span<const SymbolId> token) const;
};

struct Parse {
  Boundaries boundaries;
  double neg_log_prob = 0.0;
};

// The beam_n best segmentations (lowest total cost first; highest first with
// invert_beam) using spans of at most max_token_len symbols.
std::vector<Parse> nbest_parses(std::span<const SymbolId> sentence,
                                const UnigramModel& model, std::size_t beam_n,
                                std::size_t max_token_len,
                                bool invert_beam = false);

// Uniform draw from an N-best list. Throws PreconditionError when empty.
const Parse& sample_parse(const std::vector<Parse>& nbest, Rng& rng);

// Lexicon of whole sentences shorter than init_max_len, with multiplicity.
TokenLexicon init_lexicon(const Corpus& corpus, std::size_t init_max_len);

// Lexicon of the tokens of a segmentation.
TokenLexicon lexicon_from_segmentation(const Corpus& corpus,
                                       const std::vector<Boundaries>& segmentation);

// -log P(segmentation): the tokens of `lexicon` drawn one after another,
// each with token_prob given the ones before. The product does not depend
// on the order.
double joint_neg_log_prob(const TokenLexicon& lexicon, const SymbolDistribution& dist,
                          double alpha0, double p_hash);

struct IterationStats {
  std::size_t iteration = 0;
  // joint_neg_log_prob of the sampled segmentation.
  double corpus_nll = 0.0;
  // Sum of the sampled parses' costs under the frozen model.
  double parse_nll = 0.0;
  // Lowest corpus_nll seen up to and including this iteration.
  double best_nll = 0.0;
  std::size_t lexicon_size = 0;
  std::uint64_t token_count = 0;
};

struct Result {
  // Input symbols with the selected segmentation as visible boundaries;
  // the input's reference boundaries are not kept.
  Corpus segmented;
  std::vector<Boundaries> segmentation;
  std::vector<IterationStats> stats;
  std::size_t best_iteration = 0;
  // Lexicon built from `segmentation`, for segmenting further text.
  TokenLexicon lexicon;
  SymbolDistribution dist;
};

// Iterates parse-and-sample passes with the lexicon frozen inside each pass,
// keeping the segmentation with the lowest corpus NLL. Stops once `patience`
// consecutive passes fail to lower the best NLL by more than
// min_nll_improvement, or after max_iters passes.
Result run(const Corpus& corpus, const Config& config);

// Most probable segmentation of one sentence under a trained lexicon.
Parse segment_sentence(std::span<const SymbolId> sentence,
                       const UnigramModel& model, std::size_t max_token_len);

}  // namespace segkit::dpparse
