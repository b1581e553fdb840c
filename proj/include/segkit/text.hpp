#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace segkit {

using SymbolId = std::uint32_t;

// Sorted, duplicate-free interior positions. Position k separates symbol k-1
// from symbol k, so valid values are 1..len-1.
using Boundaries = std::vector<std::size_t>;

// Half-open [begin, end) symbol range.
using Span = std::pair<std::size_t, std::size_t>;

enum class SymbolKind { Character, Phoneme };

std::string_view to_string(SymbolKind kind);
SymbolKind parse_symbol_kind(std::string_view name);

inline constexpr std::string_view kEosMarker = "<EOS>";
inline constexpr std::string_view kUnkMarker = "<UNK>";
inline constexpr std::string_view kSpaceMarker = "<SPACE>";

bool is_reserved_marker(std::string_view surface);

// Ordered inventory of symbol surfaces; ids follow insertion order.
class Alphabet {
 public:
  explicit Alphabet(SymbolKind kind = SymbolKind::Character) : kind_(kind) {}

  SymbolKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return symbols_.size(); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }

  // Returns the id of `surface`, appending it if new. Throws DomainError for
  // empty surfaces, whitespace, or reserved markers.
  SymbolId intern(std::string_view surface);
  std::optional<SymbolId> find(std::string_view surface) const;
  const std::string& surface(SymbolId id) const;

  // Character symbols concatenate; phoneme labels are joined by one space.
  std::string render(std::span<const SymbolId> symbols) const;

  bool operator==(const Alphabet& other) const {
    return kind_ == other.kind_ && symbols_ == other.symbols_;
  }

 private:
  SymbolKind kind_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, SymbolId> index_;
};

struct Sentence {
  std::vector<SymbolId> symbols;
  // Reference segmentation, when the source carried one.
  std::optional<Boundaries> gold;
  // Cleared by strip_boundaries: gold stays available for evaluation only.
  bool boundaries_visible = true;

  std::size_t size() const noexcept { return symbols.size(); }
  // Boundaries a model may look at, or nullptr.
  const Boundaries* visible_boundaries() const noexcept {
    return boundaries_visible && gold ? &*gold : nullptr;
  }
  bool operator==(const Sentence&) const = default;
};

// Throws DomainError unless `b` is sorted, unique and strictly interior.
void validate_boundaries(const Boundaries& b, std::size_t length);

// Word spans induced by `b` over a sentence of `length` symbols.
std::vector<Span> boundaries_to_spans(const Boundaries& b, std::size_t length);
Boundaries spans_to_boundaries(const std::vector<Span>& spans);

struct CorpusMetadata {
  std::string source;
  std::size_t symbol_count = 0;
  std::size_t sentence_count = 0;
  bool operator==(const CorpusMetadata&) const = default;
};

struct Corpus {
  Alphabet alphabet;
  std::vector<Sentence> sentences;
  CorpusMetadata metadata;

  // True when every sentence exposes boundaries to models.
  bool has_visible_boundaries() const;
  bool operator==(const Corpus&) const = default;
};

struct ParsedLine {
  std::vector<std::string> symbols;
  Boundaries boundaries;
};

// Parses one corpus line. Character kind: each code point is a symbol and a
// single space marks a word boundary. Phoneme kind: single-space separated
// labels with `marker` tokens between words.
ParsedLine parse_line(std::string_view line, SymbolKind kind,
                      std::string_view marker = "|");

// Reads one sentence per line. Symbols are interned into a copy of `base`,
// so corpora that must share ids (gold vs. predicted, train vs. test) can be
// loaded against the same alphabet.
Corpus read_corpus(std::istream& in, const Alphabet& base,
                   std::string_view marker = "|",
                   std::string source = "<stream>");
Corpus load_corpus(const std::string& path, SymbolKind kind,
                   std::string_view marker = "|");
Corpus load_corpus(const std::string& path, const Alphabet& base,
                   std::string_view marker = "|");
Corpus corpus_from_lines(const std::vector<std::string>& lines,
                         SymbolKind kind, std::string_view marker = "|");

// Default marker written between words: a space for characters, `marker`
// surrounded by spaces for phonemes.
std::string format_sentence(const Alphabet& alphabet,
                            std::span<const SymbolId> symbols,
                            const Boundaries* boundaries,
                            std::string_view marker = "|");
// Writes visible boundaries only; a stripped corpus is written unsegmented.
void write_corpus(const Corpus& corpus, std::ostream& out,
                  std::string_view marker = "|");

Corpus strip_boundaries(Corpus corpus);
Corpus attach_boundaries(Corpus corpus);
// Same symbols, `boundaries[i]` installed as the visible segmentation of
// sentence i. Used to materialize a predicted segmentation.
Corpus with_boundaries(const Corpus& corpus,
                       const std::vector<Boundaries>& boundaries);

// Frequency-ranked word list; ties keep first-occurrence order.
class WordLexicon {
 public:
  struct Entry {
    std::string surface;
    std::uint64_t count = 0;
    bool operator==(const Entry&) const = default;
  };

  WordLexicon() = default;
  WordLexicon(std::vector<Entry> ranked, std::size_t cap, bool has_unk = true);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t cap() const noexcept { return cap_; }
  bool has_unk() const noexcept { return has_unk_; }
  std::optional<std::size_t> rank(std::string_view surface) const;

  void write_tsv(std::ostream& out) const;
  static WordLexicon read_tsv(std::istream& in, std::size_t cap,
                              bool has_unk = true);

 private:
  std::vector<Entry> entries_;
  std::size_t cap_ = 0;
  bool has_unk_ = true;
  std::unordered_map<std::string, std::size_t> index_;
};

WordLexicon build_word_lexicon(const Corpus& corpus, std::size_t cap,
                               bool has_unk = true);

}  // namespace segkit
