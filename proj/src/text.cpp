#include "segkit/text.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "segkit/error.hpp"
#include "segkit/util.hpp"

namespace segkit {

std::string_view to_string(SymbolKind kind) {
  return kind == SymbolKind::Character ? "char" : "phone";
}

SymbolKind parse_symbol_kind(std::string_view name) {
  if (name == "char" || name == "character") return SymbolKind::Character;
  if (name == "phone" || name == "phoneme") return SymbolKind::Phoneme;
  throw ConfigError("unknown symbol kind '" + std::string(name) +
                    "' (expected char or phone)");
}

bool is_reserved_marker(std::string_view surface) {
  return surface == kEosMarker || surface == kUnkMarker ||
         surface == kSpaceMarker;
}

namespace {

bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
           c == '\f';
  });
}

}  // namespace

SymbolId Alphabet::intern(std::string_view surface) {
  if (auto it = index_.find(std::string(surface)); it != index_.end()) {
    return it->second;
  }
  if (surface.empty()) throw DomainError("empty symbol");
  if (has_whitespace(surface)) {
    throw DomainError("symbol contains whitespace: '" + std::string(surface) +
                      "'");
  }
  if (is_reserved_marker(surface)) {
    throw DomainError("symbol is a reserved marker: " + std::string(surface));
  }
  auto id = static_cast<SymbolId>(symbols_.size());
  symbols_.emplace_back(surface);
  index_.emplace(symbols_.back(), id);
  return id;
}

std::optional<SymbolId> Alphabet::find(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Alphabet::surface(SymbolId id) const {
  if (id >= symbols_.size()) {
    throw DomainError("symbol id " + std::to_string(id) + " outside alphabet");
  }
  return symbols_[id];
}

std::string Alphabet::render(std::span<const SymbolId> symbols) const {
  std::string out;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i && kind_ == SymbolKind::Phoneme) out += ' ';
    out += surface(symbols[i]);
  }
  return out;
}

void validate_boundaries(const Boundaries& b, std::size_t length) {
  std::size_t prev = 0;
  for (std::size_t pos : b) {
    if (pos == 0 || pos >= length) {
      throw DomainError("boundary " + std::to_string(pos) +
                        " not interior to a sentence of length " +
                        std::to_string(length));
    }
    if (pos <= prev) throw DomainError("boundaries not sorted and unique");
    prev = pos;
  }
}

std::vector<Span> boundaries_to_spans(const Boundaries& b, std::size_t length) {
  std::vector<Span> spans;
  spans.reserve(b.size() + 1);
  std::size_t start = 0;
  for (std::size_t pos : b) {
    spans.emplace_back(start, pos);
    start = pos;
  }
  if (length > 0) spans.emplace_back(start, length);
  return spans;
}

Boundaries spans_to_boundaries(const std::vector<Span>& spans) {
  Boundaries b;
  for (std::size_t i = 1; i < spans.size(); ++i) b.push_back(spans[i].first);
  return b;
}

bool Corpus::has_visible_boundaries() const {
  return std::all_of(sentences.begin(), sentences.end(),
                     [](const Sentence& s) { return s.visible_boundaries(); });
}

ParsedLine parse_line(std::string_view line, SymbolKind kind,
                      std::string_view marker) {
  ParsedLine parsed;
  if (line.empty()) throw ParseError("empty sentence");
  if (kind == SymbolKind::Character) {
    auto points = split_code_points(line);
    bool pending = false;
    for (auto& cp : points) {
      if (cp == " ") {
        if (parsed.symbols.empty()) throw ParseError("boundary at line start");
        if (pending) throw ParseError("empty token (repeated space)");
        pending = true;
        continue;
      }
      if (has_whitespace(cp)) throw ParseError("whitespace other than space");
      if (pending) parsed.boundaries.push_back(parsed.symbols.size());
      pending = false;
      parsed.symbols.push_back(std::move(cp));
    }
    if (pending) throw ParseError("boundary at line end");
    return parsed;
  }

  split_code_points(line);  // encoding check only
  bool pending = false;
  for (auto token : split(line, ' ')) {
    if (token.empty()) throw ParseError("empty token");
    if (token == marker) {
      if (parsed.symbols.empty()) throw ParseError("boundary marker at line start");
      if (pending) throw ParseError("repeated boundary marker");
      pending = true;
      continue;
    }
    if (has_whitespace(token)) throw ParseError("whitespace inside a label");
    if (is_reserved_marker(token)) {
      throw ParseError("reserved marker used as a label: " + std::string(token));
    }
    if (pending) parsed.boundaries.push_back(parsed.symbols.size());
    pending = false;
    parsed.symbols.emplace_back(token);
  }
  if (pending) throw ParseError("boundary marker at line end");
  return parsed;
}

Corpus read_corpus(std::istream& in, const Alphabet& base,
                   std::string_view marker, std::string source) {
  Corpus corpus{base, {}, {}};
  corpus.metadata.source = std::move(source);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Sentence sentence;
    try {
      ParsedLine parsed = parse_line(line, base.kind(), marker);
      sentence.symbols.reserve(parsed.symbols.size());
      for (const auto& s : parsed.symbols) {
        sentence.symbols.push_back(corpus.alphabet.intern(s));
      }
      sentence.gold = std::move(parsed.boundaries);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    } catch (const IoError& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no);
    }
    corpus.metadata.symbol_count += sentence.size();
    corpus.sentences.push_back(std::move(sentence));
  }
  if (in.bad()) throw IoError("read failure on " + corpus.metadata.source);
  corpus.metadata.sentence_count = corpus.sentences.size();
  return corpus;
}

Corpus load_corpus(const std::string& path, const Alphabet& base,
                   std::string_view marker) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path);
  return read_corpus(in, base, marker, path);
}

Corpus load_corpus(const std::string& path, SymbolKind kind,
                   std::string_view marker) {
  return load_corpus(path, Alphabet(kind), marker);
}

Corpus corpus_from_lines(const std::vector<std::string>& lines,
                         SymbolKind kind, std::string_view marker) {
  std::string text;
  for (const auto& l : lines) {
    text += l;
    text += '\n';
  }
  std::istringstream in(text);
  return read_corpus(in, Alphabet(kind), marker, "<memory>");
}

std::string format_sentence(const Alphabet& alphabet,
                            std::span<const SymbolId> symbols,
                            const Boundaries* boundaries,
                            std::string_view marker) {
  std::string out;
  std::size_t next = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    bool at_boundary = boundaries && next < boundaries->size() &&
                       (*boundaries)[next] == i;
    if (at_boundary) ++next;
    if (alphabet.kind() == SymbolKind::Character) {
      if (at_boundary) out += ' ';
    } else if (i > 0) {
      out += ' ';
      if (at_boundary) {
        out += marker;
        out += ' ';
      }
    }
    out += alphabet.surface(symbols[i]);
  }
  return out;
}

void write_corpus(const Corpus& corpus, std::ostream& out,
                  std::string_view marker) {
  for (const auto& s : corpus.sentences) {
    out << format_sentence(corpus.alphabet, s.symbols, s.visible_boundaries(),
                           marker)
        << '\n';
  }
}

Corpus strip_boundaries(Corpus corpus) {
  for (auto& s : corpus.sentences) s.boundaries_visible = false;
  return corpus;
}

Corpus attach_boundaries(Corpus corpus) {
  for (auto& s : corpus.sentences) s.boundaries_visible = true;
  return corpus;
}

Corpus with_boundaries(const Corpus& corpus,
                       const std::vector<Boundaries>& boundaries) {
  if (boundaries.size() != corpus.sentences.size()) {
    throw AlignmentError("segmentation covers " +
                         std::to_string(boundaries.size()) + " sentences, corpus has " +
                         std::to_string(corpus.sentences.size()));
  }
  Corpus out = corpus;
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    validate_boundaries(boundaries[i], out.sentences[i].size());
    out.sentences[i].gold = boundaries[i];
    out.sentences[i].boundaries_visible = true;
  }
  return out;
}

WordLexicon::WordLexicon(std::vector<Entry> ranked, std::size_t cap,
                         bool has_unk)
    : entries_(std::move(ranked)), cap_(cap), has_unk_(has_unk) {
  if (entries_.size() > cap_) entries_.resize(cap_);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i].surface, i).second) {
      throw DomainError("duplicate lexicon entry: " + entries_[i].surface);
    }
  }
}

std::optional<std::size_t> WordLexicon::rank(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void WordLexicon::write_tsv(std::ostream& out) const {
  for (const auto& e : entries_) out << e.surface << '\t' << e.count << '\n';
}

WordLexicon WordLexicon::read_tsv(std::istream& in, std::size_t cap,
                                  bool has_unk) {
  std::vector<Entry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 2) throw ParseError("expected surface<TAB>count", line_no);
    try {
      entries.push_back({std::string(fields[0]), std::stoull(std::string(fields[1]))});
    } catch (const std::logic_error&) {
      throw ParseError("bad count", line_no);
    }
  }
  return WordLexicon(std::move(entries), cap, has_unk);
}

WordLexicon build_word_lexicon(const Corpus& corpus, std::size_t cap,
                               bool has_unk) {
  if (cap == 0) throw PreconditionError("lexicon cap must be positive");
  struct Tally {
    std::uint64_t count;
    std::size_t first;
  };
  std::unordered_map<std::string, Tally> tally;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& s = corpus.sentences[i];
    const Boundaries* b = s.visible_boundaries();
    if (!b) {
      throw PreconditionError("sentence " + std::to_string(i) +
                              " has no word boundaries; cannot build a word lexicon");
    }
    std::span<const SymbolId> all(s.symbols);
    for (auto [begin, end] : boundaries_to_spans(*b, s.size())) {
      std::string word = corpus.alphabet.render(all.subspan(begin, end - begin));
      auto [it, fresh] = tally.try_emplace(word, Tally{0, order.size()});
      if (fresh) order.push_back(word);
      ++it->second.count;
    }
  }
  std::vector<WordLexicon::Entry> entries;
  entries.reserve(order.size());
  for (auto& w : order) entries.push_back({w, tally[w].count});
  // Stable sort keeps first-occurrence order among equal counts.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  return WordLexicon(std::move(entries), cap, has_unk);
}

}  // namespace segkit
