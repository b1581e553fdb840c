#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "segkit/dpparse.hpp"
#include "segkit/text.hpp"

namespace segkit::testing {

// Every segmentation of a length-n sentence, as boundary sets.
inline std::vector<Boundaries> all_segmentations(std::size_t n) {
  std::vector<Boundaries> out;
  for (std::uint64_t mask = 0; mask < (1ULL << (n - 1)); ++mask) {
    Boundaries b;
    for (std::size_t k = 1; k < n; ++k) {
      if (mask >> (k - 1) & 1) b.push_back(k);
    }
    out.push_back(b);
  }
  return out;
}

// Cost of a segmentation from direct per-token probabilities, no lattice.
inline double direct_cost(std::span<const SymbolId> s, const Boundaries& b,
                          const dpparse::UnigramModel& m) {
  double c = 0;
  std::size_t start = 0;
  auto add = [&](std::size_t end) {
    double p = dpparse::token_prob(s.subspan(start, end - start), m.lexicon, m.alpha0, m.dist,
                                   m.p_hash);
    c -= std::log(p);
    start = end;
  };
  for (auto k : b) add(k);
  add(s.size());
  return c;
}

// Token spans of a segmentation as a set of (begin, end).
inline std::set<std::pair<std::size_t, std::size_t>> span_set(const Boundaries& b,
                                                               std::size_t n) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  for (auto k : b) {
    out.insert({start, k});
    start = k;
  }
  out.insert({start, n});
  return out;
}

// Ranks by counting: rank(x) = #{y < x} + (#{y == x} + 1) / 2.
inline std::vector<double> counted_ranks(const std::vector<double>& xs) {
  std::vector<double> r(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double less = 0, equal = 0;
    for (double y : xs) {
      if (y < xs[i]) less += 1;
      if (y == xs[i]) equal += 1;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace segkit::testing
