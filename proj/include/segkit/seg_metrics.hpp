#pragma once

#include <cstdint>

#include "segkit/text.hpp"

namespace segkit {

// Token and boundary hit counts; add them to aggregate over sentences.
struct SegEvalCounts {
  std::uint64_t token_tp = 0, token_fp = 0, token_fn = 0;
  std::uint64_t boundary_tp = 0, boundary_fp = 0, boundary_fn = 0;

  SegEvalCounts& operator+=(const SegEvalCounts& o);
  bool operator==(const SegEvalCounts&) const = default;
};

struct Prf {
  double precision = 0, recall = 0, f1 = 0;
};

// Utterance edges are not scored as boundaries. A predicted token is a hit
// when its exact [begin, end) span is a gold token.
SegEvalCounts sentence_counts(const Boundaries& gold, const Boundaries& predicted,
                              std::size_t length);

// 0/0 counts as 0, except tp = fp = fn = 0, which is a perfect (1, 1, 1).
Prf prf(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

struct SegScores {
  Prf token;
  Prf boundary;
  SegEvalCounts counts;
};

// Micro-averaged scores. Both corpora must list the same sentences; the
// segmentation of each is read from Sentence::gold regardless of visibility.
// Throws AlignmentError naming the first mismatching sentence.
SegScores evaluate_corpus(const Corpus& gold, const Corpus& predicted);

}  // namespace segkit
