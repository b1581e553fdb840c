#include "segkit/tokenize.hpp"

#include <algorithm>
#include <ostream>

#include "segkit/error.hpp"
#include "segkit/util.hpp"

namespace segkit {

std::string_view to_string(UnitMode mode) {
  switch (mode) {
    case UnitMode::Char: return "char";
    case UnitMode::Phone: return "phone";
    case UnitMode::Word: return "word";
    case UnitMode::WordFallback: return "word-fallback";
    case UnitMode::Bpe: return "bpe";
  }
  return "?";
}

UnitMode parse_unit_mode(std::string_view name) {
  if (name == "char") return UnitMode::Char;
  if (name == "phone") return UnitMode::Phone;
  if (name == "word") return UnitMode::Word;
  if (name == "word-fallback" || name == "fallback") return UnitMode::WordFallback;
  if (name == "bpe") return UnitMode::Bpe;
  throw ConfigError("unknown unit mode '" + std::string(name) + "'");
}

Tokenizer::Tokenizer(TokenizationMode mode, Alphabet alphabet)
    : mode_(mode), alphabet_(std::move(alphabet)) {}

Tokenizer Tokenizer::symbols(Alphabet alphabet, bool keep_space_marker) {
  UnitMode unit = alphabet.kind() == SymbolKind::Character ? UnitMode::Char
                                                           : UnitMode::Phone;
  Tokenizer t({unit, 0, keep_space_marker}, std::move(alphabet));
  t.reserved_base_ = t.alphabet_.size();
  return t;
}

Tokenizer Tokenizer::words(Alphabet alphabet, WordLexicon lexicon,
                           bool fallback, bool keep_space_marker) {
  TokenizationMode mode{fallback ? UnitMode::WordFallback : UnitMode::Word,
                        lexicon.cap(), keep_space_marker};
  Tokenizer t(mode, std::move(alphabet));
  t.reserved_base_ = lexicon.size() + (fallback ? t.alphabet_.size() : 0);
  t.lexicon_ = WordLexicon(lexicon.entries(), lexicon.cap(), !fallback);
  return t;
}

Tokenizer Tokenizer::bpe(BpeModel model, bool keep_space_marker) {
  Tokenizer t({UnitMode::Bpe, 0, keep_space_marker}, model.alphabet());
  t.reserved_base_ = model.vocab_size();
  t.bpe_ = std::move(model);
  return t;
}

std::string Tokenizer::unit_surface(UnitId unit) const {
  if (unit == eos()) return std::string(kEosMarker);
  if (unit == unk()) return std::string(kUnkMarker);
  if (unit == space()) return std::string(kSpaceMarker);
  if (unit > space()) throw DomainError("unit id " + std::to_string(unit) + " out of range");
  switch (mode_.unit) {
    case UnitMode::Char:
    case UnitMode::Phone:
      return alphabet_.surface(unit);
    case UnitMode::Word:
      return lexicon_->entries()[unit].surface;
    case UnitMode::WordFallback:
      if (unit < lexicon_->size()) return lexicon_->entries()[unit].surface;
      return alphabet_.surface(static_cast<SymbolId>(unit - lexicon_->size()));
    case UnitMode::Bpe:
      return bpe_->unit_surface(unit);
  }
  return {};
}

std::vector<SymbolId> Tokenizer::expand(UnitId unit) const {
  if (is_reserved(unit)) return {};
  switch (mode_.unit) {
    case UnitMode::Char:
    case UnitMode::Phone:
      return {static_cast<SymbolId>(unit)};
    case UnitMode::Word:
    case UnitMode::WordFallback: {
      if (unit >= lexicon_->size()) {
        return {static_cast<SymbolId>(unit - lexicon_->size())};
      }
      ParsedLine parsed = parse_line(lexicon_->entries()[unit].surface,
                                     alphabet_.kind(), "\x1f");
      std::vector<SymbolId> out;
      for (const auto& s : parsed.symbols) {
        auto id = alphabet_.find(s);
        out.push_back(id ? *id : kUnknownSymbol);
      }
      return out;
    }
    case UnitMode::Bpe:
      return bpe_->expansion(unit);
  }
  return {};
}

void Tokenizer::emit_symbol(SymbolId s, UnitId offset,
                            std::vector<UnitId>& out) const {
  out.push_back(s < alphabet_.size() ? offset + s : unk());
}

void Tokenizer::emit_word(std::span<const SymbolId> word,
                          std::vector<UnitId>& out) const {
  bool known = std::all_of(word.begin(), word.end(),
                           [&](SymbolId s) { return s < alphabet_.size(); });
  switch (mode_.unit) {
    case UnitMode::Char:
    case UnitMode::Phone:
      for (SymbolId s : word) emit_symbol(s, 0, out);
      return;
    case UnitMode::Word:
    case UnitMode::WordFallback: {
      if (known) {
        if (auto r = lexicon_->rank(alphabet_.render(word))) {
          out.push_back(static_cast<UnitId>(*r));
          return;
        }
      }
      if (mode_.unit == UnitMode::Word) {
        out.push_back(unk());
      } else {
        auto offset = static_cast<UnitId>(lexicon_->size());
        for (SymbolId s : word) emit_symbol(s, offset, out);
      }
      return;
    }
    case UnitMode::Bpe:
      if (!known) {
        out.push_back(unk());
        return;
      }
      for (UnitId u : bpe_->encode(word)) out.push_back(u);
      return;
  }
}

std::vector<UnitId> Tokenizer::tokenize(const Sentence& sentence) const {
  const Boundaries* b = sentence.visible_boundaries();
  if (mode_.needs_boundaries() && !b) {
    throw PreconditionError(std::string(to_string(mode_.unit)) +
                            " tokenization needs word boundaries");
  }
  std::vector<UnitId> out;
  out.reserve(sentence.size() + (b ? b->size() : 0));
  std::span<const SymbolId> all(sentence.symbols);
  if (!b) {
    emit_word(all, out);
    return out;
  }
  bool first = true;
  for (auto [begin, end] : boundaries_to_spans(*b, sentence.size())) {
    if (!first && mode_.keep_space_marker) out.push_back(space());
    first = false;
    emit_word(all.subspan(begin, end - begin), out);
  }
  return out;
}

Sentence Tokenizer::parse_text(std::string_view line,
                               std::string_view marker) const {
  ParsedLine parsed = parse_line(line, alphabet_.kind(), marker);
  Sentence s;
  s.symbols.reserve(parsed.symbols.size());
  for (const auto& sym : parsed.symbols) {
    auto id = alphabet_.find(sym);
    s.symbols.push_back(id ? *id : kUnknownSymbol);
  }
  s.gold = std::move(parsed.boundaries);
  return s;
}

std::vector<UnitId> Tokenizer::tokenize_text(std::string_view line,
                                             std::string_view marker) const {
  return tokenize(parse_text(line, marker));
}

void Tokenizer::write_description(std::ostream& out) const {
  out << "kind\t" << to_string(alphabet_.kind()) << '\n';
  out << "mode\t" << to_string(mode_.unit) << '\n';
  out << "keep_space\t" << (mode_.keep_space_marker ? 1 : 0) << '\n';
  out << "cap\t" << mode_.cap << '\n';
  for (const auto& s : alphabet_.symbols()) out << "symbol\t" << s << '\n';
  if (lexicon_) {
    for (const auto& e : lexicon_->entries()) {
      out << "word\t" << e.surface << '\t' << e.count << '\n';
    }
  }
  if (bpe_) {
    out << "bpe_eow\t" << (bpe_->end_of_word_marker() ? 1 : 0) << '\n';
    for (auto [l, r] : bpe_->merges()) {
      out << "merge\t" << bpe_->unit_surface(l) << '\t' << bpe_->unit_surface(r)
          << '\n';
    }
  }
}

Tokenizer Tokenizer::from_description(
    const std::vector<std::vector<std::string>>& lines) {
  std::optional<SymbolKind> kind;
  std::optional<UnitMode> unit;
  bool keep_space = false;
  bool eow = false;
  std::size_t cap = 0;
  std::vector<std::string> symbol_list;
  std::vector<WordLexicon::Entry> word_list;
  std::vector<std::pair<std::string, std::string>> merges;
  for (const auto& f : lines) {
    const std::string& key = f.at(0);
    auto need = [&](std::size_t n) {
      if (f.size() != n) throw ParseError("malformed '" + key + "' record");
    };
    if (key == "kind") {
      need(2);
      kind = parse_symbol_kind(f[1]);
    } else if (key == "mode") {
      need(2);
      unit = parse_unit_mode(f[1]);
    } else if (key == "keep_space") {
      need(2);
      keep_space = f[1] == "1";
    } else if (key == "cap") {
      need(2);
      cap = std::stoull(f[1]);
    } else if (key == "symbol") {
      need(2);
      symbol_list.push_back(f[1]);
    } else if (key == "word") {
      need(3);
      word_list.push_back({f[1], std::stoull(f[2])});
    } else if (key == "bpe_eow") {
      need(2);
      eow = f[1] == "1";
    } else if (key == "merge") {
      need(3);
      merges.emplace_back(f[1], f[2]);
    }
  }
  if (!kind || !unit) throw ParseError("tokenizer description lacks kind/mode");
  Alphabet alphabet(*kind);
  for (const auto& s : symbol_list) alphabet.intern(s);
  switch (*unit) {
    case UnitMode::Char:
    case UnitMode::Phone:
      return Tokenizer::symbols(std::move(alphabet), keep_space);
    case UnitMode::Word:
    case UnitMode::WordFallback:
      return Tokenizer::words(std::move(alphabet), WordLexicon(std::move(word_list), cap),
                   *unit == UnitMode::WordFallback, keep_space);
    case UnitMode::Bpe:
      return Tokenizer::bpe(BpeModel::from_merges(std::move(alphabet), eow, merges),
                 keep_space);
  }
  throw ParseError("unreachable tokenizer mode");
}

Tokenizer make_tokenizer(const Corpus& corpus, const TokenizationMode& mode,
                         const BpeModel* bpe) {
  switch (mode.unit) {
    case UnitMode::Char:
    case UnitMode::Phone: {
      bool want_char = mode.unit == UnitMode::Char;
      if (want_char != (corpus.alphabet.kind() == SymbolKind::Character)) {
        throw ConfigError(std::string(to_string(mode.unit)) +
                          " mode does not match a " +
                          std::string(to_string(corpus.alphabet.kind())) +
                          " corpus");
      }
      return Tokenizer::symbols(corpus.alphabet, mode.keep_space_marker);
    }
    case UnitMode::Word:
    case UnitMode::WordFallback: {
      if (mode.cap == 0) throw ConfigError("word modes need a positive lexicon cap");
      bool fallback = mode.unit == UnitMode::WordFallback;
      return Tokenizer::words(corpus.alphabet,
                              build_word_lexicon(corpus, mode.cap, !fallback),
                              fallback, mode.keep_space_marker);
    }
    case UnitMode::Bpe:
      if (!bpe) throw ConfigError("bpe mode needs a BPE model");
      if (!(bpe->alphabet() == corpus.alphabet)) {
        // Corpus symbols must carry the model's ids.
        for (SymbolId s = 0; s < corpus.alphabet.size(); ++s) {
          auto id = bpe->alphabet().find(corpus.alphabet.surface(s));
          if (!id || *id != s) {
            throw ConfigError("corpus alphabet is not compatible with the BPE model");
          }
        }
      }
      return Tokenizer::bpe(*bpe, mode.keep_space_marker);
  }
  throw ConfigError("unknown mode");
}

std::vector<UnitId> tokenize(const Sentence& sentence,
                             const TokenizationMode& mode,
                             const Alphabet& alphabet,
                             const WordLexicon* lexicon, const BpeModel* bpe) {
  switch (mode.unit) {
    case UnitMode::Char:
    case UnitMode::Phone:
      return Tokenizer::symbols(alphabet, mode.keep_space_marker).tokenize(sentence);
    case UnitMode::Word:
    case UnitMode::WordFallback:
      if (!lexicon) throw ConfigError("word modes need a lexicon");
      return Tokenizer::words(alphabet, *lexicon,
                              mode.unit == UnitMode::WordFallback,
                              mode.keep_space_marker)
          .tokenize(sentence);
    case UnitMode::Bpe:
      if (!bpe) throw ConfigError("bpe mode needs a BPE model");
      return Tokenizer::bpe(*bpe, mode.keep_space_marker).tokenize(sentence);
  }
  throw ConfigError("unknown mode");
}

}  // namespace segkit
