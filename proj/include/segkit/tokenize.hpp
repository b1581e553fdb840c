#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segkit/bpe.hpp"
#include "segkit/text.hpp"

namespace segkit {

enum class UnitMode { Char, Phone, Word, WordFallback, Bpe };

std::string_view to_string(UnitMode mode);
UnitMode parse_unit_mode(std::string_view name);

struct TokenizationMode {
  UnitMode unit = UnitMode::Char;
  // Lexicon size for Word / WordFallback.
  std::size_t cap = 0;
  // Emit <SPACE> at interior word boundaries, when boundaries are visible.
  bool keep_space_marker = false;

  bool needs_boundaries() const noexcept {
    return unit == UnitMode::Word || unit == UnitMode::WordFallback ||
           unit == UnitMode::Bpe;
  }
};

// Symbol id used for surfaces that are not in a tokenizer's alphabet.
inline constexpr SymbolId kUnknownSymbol = std::numeric_limits<SymbolId>::max();

// Maps sentences to model units. Unit ids are laid out as
//   Char/Phone:    [symbols]
//   Word:          [lexicon words]
//   WordFallback:  [lexicon words][symbols]
//   Bpe:           [bpe units]
// followed by <EOS>, <UNK>, <SPACE> in that order.
class Tokenizer {
 public:
  static Tokenizer symbols(Alphabet alphabet, bool keep_space_marker);
  static Tokenizer words(Alphabet alphabet, WordLexicon lexicon, bool fallback,
                         bool keep_space_marker = false);
  static Tokenizer bpe(BpeModel model, bool keep_space_marker = false);

  const TokenizationMode& mode() const noexcept { return mode_; }
  const Alphabet& alphabet() const noexcept { return alphabet_; }
  const WordLexicon* lexicon() const noexcept {
    return lexicon_ ? &*lexicon_ : nullptr;
  }
  const BpeModel* bpe_model() const noexcept { return bpe_ ? &*bpe_ : nullptr; }

  std::size_t vocab_size() const noexcept { return reserved_base_ + 3; }
  UnitId eos() const noexcept { return static_cast<UnitId>(reserved_base_); }
  UnitId unk() const noexcept { return static_cast<UnitId>(reserved_base_ + 1); }
  UnitId space() const noexcept { return static_cast<UnitId>(reserved_base_ + 2); }
  bool is_reserved(UnitId u) const noexcept { return u >= reserved_base_; }

  std::string unit_surface(UnitId unit) const;
  // Symbols a unit stands for; reserved units expand to nothing.
  std::vector<SymbolId> expand(UnitId unit) const;

  // Sentence symbols are ids of alphabet(); ids outside it are unknown.
  // Throws PreconditionError when the mode needs boundaries the sentence
  // does not expose.
  std::vector<UnitId> tokenize(const Sentence& sentence) const;
  // Parses a raw line (same syntax as corpus files) against alphabet(),
  // mapping unseen symbols to kUnknownSymbol.
  Sentence parse_text(std::string_view line, std::string_view marker = "|") const;
  std::vector<UnitId> tokenize_text(std::string_view line,
                                    std::string_view marker = "|") const;

  // Key/value lines describing the unit inventory (see ngram model files).
  void write_description(std::ostream& out) const;
  // Consumes the description keys from `lines` (key, fields...).
  static Tokenizer from_description(
      const std::vector<std::vector<std::string>>& lines);

 private:
  Tokenizer(TokenizationMode mode, Alphabet alphabet);
  void emit_word(std::span<const SymbolId> word, std::vector<UnitId>& out) const;
  void emit_symbol(SymbolId s, UnitId offset, std::vector<UnitId>& out) const;

  TokenizationMode mode_;
  Alphabet alphabet_;
  std::optional<WordLexicon> lexicon_;
  std::optional<BpeModel> bpe_;
  std::size_t reserved_base_ = 0;
};

// Builds the tokenizer a mode needs from a training corpus: word modes derive
// their lexicon from it; Bpe mode requires `bpe`.
Tokenizer make_tokenizer(const Corpus& corpus, const TokenizationMode& mode,
                         const BpeModel* bpe = nullptr);

// One-shot form: tokenizes `sentence` under `mode` with the given resources.
// Throws ConfigError when the mode needs a lexicon or model that is missing.
std::vector<UnitId> tokenize(const Sentence& sentence,
                             const TokenizationMode& mode,
                             const Alphabet& alphabet,
                             const WordLexicon* lexicon = nullptr,
                             const BpeModel* bpe = nullptr);

}  // namespace segkit
