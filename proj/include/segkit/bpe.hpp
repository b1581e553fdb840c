#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "segkit/text.hpp"

namespace segkit {

using UnitId = std::uint32_t;

// Byte-pair encoding over alphabet symbols rather than bytes: a phoneme label
// is one base unit. Base unit ids coincide with symbol ids; when the
// end-of-word marker is enabled it takes the next id. Merged units follow.
class BpeModel {
 public:
  static constexpr std::string_view kEndOfWord = "</w>";

  explicit BpeModel(Alphabet alphabet, bool end_of_word_marker = false);

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  bool end_of_word_marker() const noexcept { return eow_; }
  std::size_t base_size() const noexcept;
  std::size_t vocab_size() const noexcept { return units_.size(); }
  const std::vector<std::pair<UnitId, UnitId>>& merges() const noexcept {
    return merges_;
  }

  // Registers the next merge and returns the unit it produces. Merging into
  // an expansion that already exists reuses that unit.
  UnitId add_merge(UnitId left, UnitId right);

  // Symbols covered by a unit (the end-of-word marker covers none).
  const std::vector<SymbolId>& expansion(UnitId unit) const;
  bool ends_word(UnitId unit) const;
  std::string unit_surface(UnitId unit) const;

  // Throws DomainError on symbols outside the alphabet.
  std::vector<UnitId> encode(std::span<const SymbolId> word) const;
  // Throws DomainError on unknown unit ids.
  std::vector<SymbolId> decode(std::span<const UnitId> units) const;

  // `#!bpe` header, `#!symbol` lines for the base alphabet, then one
  // `left<TAB>right` line per merge in learned order.
  void write_tsv(std::ostream& out) const;
  static BpeModel read_tsv(std::istream& in);
  static BpeModel from_merges(
      Alphabet alphabet, bool end_of_word_marker,
      const std::vector<std::pair<std::string, std::string>>& merges);

 private:
  struct Unit {
    std::vector<SymbolId> symbols;
    bool eow = false;
  };
  struct MergeInfo {
    std::uint32_t rank;
    UnitId result;
  };

  static std::uint64_t pair_key(UnitId a, UnitId b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }
  UnitId intern_unit(Unit unit);
  UnitId unit_by_surface(const std::string& surface) const;

  Alphabet alphabet_;
  bool eow_;
  std::vector<Unit> units_;
  std::unordered_map<std::string, UnitId> by_surface_;
  std::vector<std::pair<UnitId, UnitId>> merges_;
  std::unordered_map<std::uint64_t, MergeInfo> merge_rank_;
};

// Learns merges from the words of a corpus with visible boundaries until the
// vocabulary reaches `target` units or no adjacent pair occurs twice. Ties in
// pair frequency go to the smallest (left, right) id pair.
BpeModel learn_bpe(const Corpus& corpus, std::size_t target,
                   bool end_of_word_marker = false);

}  // namespace segkit
