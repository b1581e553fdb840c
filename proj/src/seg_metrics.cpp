#include "segkit/seg_metrics.hpp"

#include <algorithm>
#include <iterator>

#include "segkit/error.hpp"

namespace segkit {

SegEvalCounts& SegEvalCounts::operator+=(const SegEvalCounts& o) {
  token_tp += o.token_tp;
  token_fp += o.token_fp;
  token_fn += o.token_fn;
  boundary_tp += o.boundary_tp;
  boundary_fp += o.boundary_fp;
  boundary_fn += o.boundary_fn;
  return *this;
}

SegEvalCounts sentence_counts(const Boundaries& gold, const Boundaries& predicted,
                              std::size_t length) {
  validate_boundaries(gold, length);
  validate_boundaries(predicted, length);
  SegEvalCounts c;

  // Both lists are sorted: a merge walk counts shared positions.
  std::size_t shared = 0;
  for (std::size_t i = 0, j = 0; i < gold.size() && j < predicted.size();) {
    if (gold[i] == predicted[j]) {
      ++shared, ++i, ++j;
    } else if (gold[i] < predicted[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  c.boundary_tp = shared;
  c.boundary_fp = predicted.size() - shared;
  c.boundary_fn = gold.size() - shared;

  auto gold_spans = boundaries_to_spans(gold, length);
  auto pred_spans = boundaries_to_spans(predicted, length);
  std::size_t hits = 0;
  for (std::size_t i = 0, j = 0; i < gold_spans.size() && j < pred_spans.size();) {
    if (gold_spans[i] == pred_spans[j]) {
      ++hits, ++i, ++j;
    } else if (gold_spans[i] < pred_spans[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  c.token_tp = hits;
  c.token_fp = pred_spans.size() - hits;
  c.token_fn = gold_spans.size() - hits;
  return c;
}

Prf prf(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  if (tp == 0 && fp == 0 && fn == 0) return {1.0, 1.0, 1.0};
  auto ratio = [](double num, double den) { return den == 0 ? 0.0 : num / den; };
  Prf r;
  r.precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  r.recall = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  r.f1 = ratio(2 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

SegScores evaluate_corpus(const Corpus& gold, const Corpus& predicted) {
  if (gold.sentences.size() != predicted.sentences.size()) {
    throw AlignmentError("gold has " + std::to_string(gold.sentences.size()) +
                         " sentences, prediction has " +
                         std::to_string(predicted.sentences.size()));
  }
  static const Boundaries kNone;
  SegScores scores;
  for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
    const auto& g = gold.sentences[i];
    const auto& p = predicted.sentences[i];
    if (g.size() != p.size()) {
      throw AlignmentError("sentence " + std::to_string(i) + ": gold length " +
                           std::to_string(g.size()) + " vs predicted length " +
                           std::to_string(p.size()));
    }
    scores.counts += sentence_counts(g.gold ? *g.gold : kNone,
                                     p.gold ? *p.gold : kNone, g.size());
  }
  const auto& c = scores.counts;
  scores.token = prf(c.token_tp, c.token_fp, c.token_fn);
  scores.boundary = prf(c.boundary_tp, c.boundary_fp, c.boundary_fn);
  return scores;
}

}  // namespace segkit
