#include "segkit/bpe.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "segkit/error.hpp"
#include "segkit/util.hpp"

namespace segkit {

BpeModel::BpeModel(Alphabet alphabet, bool end_of_word_marker)
    : alphabet_(std::move(alphabet)), eow_(end_of_word_marker) {
  for (SymbolId s = 0; s < alphabet_.size(); ++s) intern_unit({{s}, false});
  if (eow_) intern_unit({{}, true});
}

std::size_t BpeModel::base_size() const noexcept {
  return alphabet_.size() + (eow_ ? 1 : 0);
}

UnitId BpeModel::intern_unit(Unit unit) {
  std::string surface = alphabet_.render(unit.symbols);
  if (unit.eow) surface += kEndOfWord;
  if (auto it = by_surface_.find(surface); it != by_surface_.end()) {
    return it->second;
  }
  auto id = static_cast<UnitId>(units_.size());
  units_.push_back(std::move(unit));
  by_surface_.emplace(std::move(surface), id);
  return id;
}

UnitId BpeModel::add_merge(UnitId left, UnitId right) {
  if (left >= units_.size() || right >= units_.size()) {
    throw DomainError("merge refers to an unknown unit");
  }
  if (units_[left].eow) throw DomainError("cannot merge after end-of-word");
  Unit merged = units_[left];
  merged.symbols.insert(merged.symbols.end(), units_[right].symbols.begin(),
                        units_[right].symbols.end());
  merged.eow = units_[right].eow;
  UnitId result = intern_unit(std::move(merged));
  auto rank = static_cast<std::uint32_t>(merges_.size());
  merge_rank_.try_emplace(pair_key(left, right), MergeInfo{rank, result});
  merges_.emplace_back(left, right);
  return result;
}

const std::vector<SymbolId>& BpeModel::expansion(UnitId unit) const {
  if (unit >= units_.size()) {
    throw DomainError("unknown BPE unit " + std::to_string(unit));
  }
  return units_[unit].symbols;
}

bool BpeModel::ends_word(UnitId unit) const {
  if (unit >= units_.size()) {
    throw DomainError("unknown BPE unit " + std::to_string(unit));
  }
  return units_[unit].eow;
}

std::string BpeModel::unit_surface(UnitId unit) const {
  std::string s = alphabet_.render(expansion(unit));
  if (units_[unit].eow) s += kEndOfWord;
  return s;
}

std::vector<UnitId> BpeModel::encode(std::span<const SymbolId> word) const {
  std::vector<UnitId> units;
  units.reserve(word.size() + 1);
  for (SymbolId s : word) {
    if (s >= alphabet_.size()) {
      throw DomainError("symbol id " + std::to_string(s) +
                        " outside the BPE alphabet");
    }
    units.push_back(s);
  }
  if (eow_) units.push_back(static_cast<UnitId>(alphabet_.size()));

  // Apply the lowest-ranked applicable merge until none applies; this is
  // equivalent to replaying the merge list in order.
  while (units.size() > 1) {
    const MergeInfo* best = nullptr;
    std::uint64_t best_key = 0;
    for (std::size_t i = 0; i + 1 < units.size(); ++i) {
      auto it = merge_rank_.find(pair_key(units[i], units[i + 1]));
      if (it != merge_rank_.end() && (!best || it->second.rank < best->rank)) {
        best = &it->second;
        best_key = it->first;
      }
    }
    if (!best) break;
    auto left = static_cast<UnitId>(best_key >> 32);
    auto right = static_cast<UnitId>(best_key & 0xffffffffu);
    std::vector<UnitId> next;
    next.reserve(units.size());
    for (std::size_t i = 0; i < units.size();) {
      if (i + 1 < units.size() && units[i] == left && units[i + 1] == right) {
        next.push_back(best->result);
        i += 2;
      } else {
        next.push_back(units[i++]);
      }
    }
    units.swap(next);
  }
  return units;
}

std::vector<SymbolId> BpeModel::decode(std::span<const UnitId> units) const {
  std::vector<SymbolId> out;
  for (UnitId u : units) {
    const auto& ex = expansion(u);
    out.insert(out.end(), ex.begin(), ex.end());
  }
  return out;
}

UnitId BpeModel::unit_by_surface(const std::string& surface) const {
  auto it = by_surface_.find(surface);
  if (it == by_surface_.end()) {
    throw ParseError("unknown BPE unit '" + surface + "'");
  }
  return it->second;
}

void BpeModel::write_tsv(std::ostream& out) const {
  out << "#!bpe\tkind=" << to_string(alphabet_.kind())
      << "\teow=" << (eow_ ? 1 : 0) << '\n';
  for (const auto& s : alphabet_.symbols()) out << "#!symbol\t" << s << '\n';
  for (auto [l, r] : merges_) {
    out << unit_surface(l) << '\t' << unit_surface(r) << '\n';
  }
}

BpeModel BpeModel::from_merges(
    Alphabet alphabet, bool end_of_word_marker,
    const std::vector<std::pair<std::string, std::string>>& merges) {
  BpeModel model(std::move(alphabet), end_of_word_marker);
  for (std::size_t i = 0; i < merges.size(); ++i) {
    try {
      model.add_merge(model.unit_by_surface(merges[i].first),
                      model.unit_by_surface(merges[i].second));
    } catch (const Error& e) {
      throw ParseError("merge " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return model;
}

BpeModel BpeModel::read_tsv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  SymbolKind kind = SymbolKind::Character;
  bool eow = false;
  bool saw_header = false;
  Alphabet alphabet;
  std::vector<std::pair<std::string, std::string>> merges;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (line_no == 1 && fields[0] == "#!bpe") {
      for (std::size_t i = 1; i < fields.size(); ++i) {
        auto kv = split(fields[i], '=');
        if (kv.size() != 2) throw ParseError("bad header field", line_no);
        if (kv[0] == "kind") {
          kind = parse_symbol_kind(kv[1]);
        } else if (kv[0] == "eow") {
          eow = kv[1] == "1";
        }
      }
      alphabet = Alphabet(kind);
      saw_header = true;
      continue;
    }
    if (fields.size() == 2 && fields[0] == "#!symbol" && merges.empty()) {
      if (!saw_header) alphabet = Alphabet(kind), saw_header = true;
      try {
        alphabet.intern(fields[1]);
      } catch (const DomainError& e) {
        throw ParseError(e.what(), line_no);
      }
      continue;
    }
    if (fields.size() != 2) throw ParseError("expected left<TAB>right", line_no);
    merges.emplace_back(std::string(fields[0]), std::string(fields[1]));
  }
  return from_merges(std::move(alphabet), eow, merges);
}

namespace {

struct PairStats {
  std::unordered_map<std::uint64_t, std::int64_t> counts;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> where;
  // Ordered by descending count, then ascending (left, right).
  std::set<std::pair<std::int64_t, std::uint64_t>> queue;

  void adjust(std::uint64_t key, std::int64_t delta, std::size_t word) {
    auto& c = counts[key];
    if (c > 0) queue.erase({-c, key});
    c += delta;
    if (c > 0) queue.insert({-c, key});
    if (delta > 0) where[key].push_back(word);
  }
};

std::uint64_t key_of(UnitId a, UnitId b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

BpeModel learn_bpe(const Corpus& corpus, std::size_t target,
                   bool end_of_word_marker) {
  BpeModel model(corpus.alphabet, end_of_word_marker);

  // Collapse the corpus into word types with counts, in first-seen order.
  std::map<std::vector<SymbolId>, std::size_t> type_index;
  std::vector<std::vector<UnitId>> words;
  std::vector<std::int64_t> freq;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& s = corpus.sentences[i];
    const Boundaries* b = s.visible_boundaries();
    if (!b) {
      throw PreconditionError("BPE needs word boundaries; sentence " +
                              std::to_string(i) + " has none");
    }
    for (auto [begin, end] : boundaries_to_spans(*b, s.size())) {
      std::vector<SymbolId> w(s.symbols.begin() + begin, s.symbols.begin() + end);
      auto [it, fresh] = type_index.try_emplace(w, words.size());
      if (fresh) {
        std::vector<UnitId> units(w.begin(), w.end());
        if (end_of_word_marker) {
          units.push_back(static_cast<UnitId>(corpus.alphabet.size()));
        }
        words.push_back(std::move(units));
        freq.push_back(0);
      }
      ++freq[it->second];
    }
  }

  PairStats stats;
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (std::size_t i = 0; i + 1 < words[w].size(); ++i) {
      stats.adjust(key_of(words[w][i], words[w][i + 1]), freq[w], w);
    }
  }

  while (model.vocab_size() < target && !stats.queue.empty()) {
    auto [neg_count, key] = *stats.queue.begin();
    if (-neg_count < 2) break;
    auto left = static_cast<UnitId>(key >> 32);
    auto right = static_cast<UnitId>(key & 0xffffffffu);
    UnitId merged = model.add_merge(left, right);

    std::vector<std::size_t> affected = std::move(stats.where[key]);
    stats.where.erase(key);
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
    for (std::size_t w : affected) {
      auto& units = words[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < units.size(); ++i) {
        if (units[i] == left && units[i + 1] == right) {
          present = true;
          break;
        }
      }
      if (!present) continue;
      for (std::size_t i = 0; i + 1 < units.size(); ++i) {
        stats.adjust(key_of(units[i], units[i + 1]), -freq[w], w);
      }
      std::vector<UnitId> next;
      next.reserve(units.size());
      for (std::size_t i = 0; i < units.size();) {
        if (i + 1 < units.size() && units[i] == left && units[i + 1] == right) {
          next.push_back(merged);
          i += 2;
        } else {
          next.push_back(units[i++]);
        }
      }
      units.swap(next);
      for (std::size_t i = 0; i + 1 < units.size(); ++i) {
        stats.adjust(key_of(units[i], units[i + 1]), freq[w], w);
      }
    }
    // Every occurrence was rewritten; drop the key outright in case a stale
    // count survived.
    if (auto& c = stats.counts[key]; c > 0) {
      stats.queue.erase({-c, key});
      c = 0;
    }
  }
  return model;
}

}  // namespace segkit
