#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "segkit/text.hpp"
#include "segkit/tokenize.hpp"

namespace segkit {

// Unigram or bigram model with add-k smoothing over a tokenizer's units.
//
// Each training sentence is read as `<EOS> u_1 ... u_n <EOS>`. The leading
// <EOS> is context only; the emitted stream is u_1 ... u_n <EOS>, and both
// unigram counts and bigram (context, unit) counts are taken over it, so
// bigram marginals equal unigram counts.
class NGramModel {
 public:
  enum class FileFormat { Tsv, Binary };

  NGramModel(Tokenizer tokenizer, int order, double add_k);

  int order() const noexcept { return order_; }
  double add_k() const noexcept { return add_k_; }
  const Tokenizer& tokenizer() const noexcept { return tokenizer_; }
  std::size_t vocab_size() const noexcept { return tokenizer_.vocab_size(); }

  // Adds one tokenized sentence (without <EOS>) to the counts.
  void observe(std::span<const UnitId> units);

  std::uint64_t total_tokens() const noexcept { return total_; }
  std::uint64_t unigram_count(UnitId u) const;
  std::uint64_t bigram_count(UnitId context, UnitId u) const;
  std::uint64_t context_count(UnitId context) const;

  // P(u) for unigram models, P(u | context) for bigram models. With add_k = 0
  // unseen events get probability 0.
  double prob(UnitId u, UnitId context) const;

  // Natural-log probability of the <EOS>-wrapped unit sequence.
  double log_prob(std::span<const UnitId> units) const;
  double score(const Sentence& sentence) const;
  double score_text(std::string_view line, std::string_view marker = "|") const;

  void save(std::ostream& out, FileFormat format = FileFormat::Tsv) const;
  void save(const std::string& path, FileFormat format = FileFormat::Tsv) const;
  // Detects the format from the first bytes.
  static NGramModel load(std::istream& in);
  static NGramModel load(const std::string& path);

 private:
  static std::uint64_t key(UnitId a, UnitId b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }
  void check_unit(UnitId u) const;

  Tokenizer tokenizer_;
  int order_;
  double add_k_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> unigrams_;
  std::vector<std::uint64_t> contexts_;
  std::unordered_map<std::uint64_t, std::uint64_t> bigrams_;
};

// Trains on every sentence of `corpus`; throws PreconditionError on an empty
// corpus and ConfigError/PreconditionError on mode mismatches.
NGramModel train_ngram(const Corpus& corpus, int order, const Tokenizer& tokenizer,
                       double add_k);
NGramModel train_ngram(const Corpus& corpus, int order,
                       const TokenizationMode& mode, double add_k,
                       const BpeModel* bpe = nullptr);

// Default add-k: 1 for symbol modes, 0.1 for word-level modes.
double default_add_k(UnitMode mode);

}  // namespace segkit
