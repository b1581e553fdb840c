#include "segkit/dpparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "segkit/error.hpp"

namespace segkit::dpparse {

void Config::validate() const {
  if (!(alpha0 > 0) || !std::isfinite(alpha0)) throw ConfigError("alpha0 must be > 0");
  if (!(p_hash > 0 && p_hash < 1)) throw ConfigError("p_hash must lie in (0, 1)");
  if (beam_n < 1) throw ConfigError("beam size must be >= 1");
  if (max_token_len < 1) throw ConfigError("max token length must be >= 1");
  if (init_max_len < 1) throw ConfigError("init_max_len must be >= 1");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(min_nll_improvement >= 0)) throw ConfigError("min_nll_improvement must be >= 0");
}

TokenLexicon::TokenLexicon() : counts_{0}, parents_{kNone}, labels_{0} {}

TokenLexicon::Node TokenLexicon::child(Node node, SymbolId symbol) const {
  auto it = edges_.find(edge_key(node, symbol));
  return it == edges_.end() ? kNone : it->second;
}

void TokenLexicon::add(std::span<const SymbolId> token, std::uint64_t n) {
  if (token.empty()) throw DomainError("empty token");
  if (n == 0) return;
  Node node = kRoot;
  for (SymbolId s : token) {
    auto [it, fresh] = edges_.try_emplace(edge_key(node, s),
                                          static_cast<Node>(counts_.size()));
    if (fresh) {
      counts_.push_back(0);
      parents_.push_back(node);
      labels_.push_back(s);
    }
    node = it->second;
  }
  if (counts_[node] == 0) ++types_;
  counts_[node] += n;
  total_ += n;
}

std::uint64_t TokenLexicon::count(std::span<const SymbolId> token) const {
  Node node = kRoot;
  for (SymbolId s : token) {
    node = child(node, s);
    if (node == kNone) return 0;
  }
  return token.empty() ? 0 : counts_[node];
}

std::vector<std::pair<std::vector<SymbolId>, std::uint64_t>>
TokenLexicon::entries() const {
  std::vector<std::pair<std::vector<SymbolId>, std::uint64_t>> out;
  out.reserve(types_);
  for (Node n = 1; n < counts_.size(); ++n) {
    if (!counts_[n]) continue;
    std::vector<SymbolId> token;
    for (Node m = n; m != kRoot; m = parents_[m]) token.push_back(labels_[m]);
    std::reverse(token.begin(), token.end());
    out.emplace_back(std::move(token), counts_[n]);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(b.second, a.first) < std::tie(a.second, b.first);
  });
  return out;
}

SymbolDistribution::SymbolDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  double sum = 0;
  for (double p : probs_) {
    if (!(p >= 0) || !std::isfinite(p)) throw DomainError("invalid symbol probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("symbol probabilities must sum to 1");
  log_probs_.reserve(probs_.size());
  for (double p : probs_) {
    log_probs_.push_back(p > 0 ? std::log(p) : -std::numeric_limits<double>::infinity());
  }
}

SymbolDistribution SymbolDistribution::empirical(const Corpus& corpus) {
  std::vector<double> counts(corpus.alphabet.size(), 0.0);
  double total = 0;
  for (const auto& s : corpus.sentences) {
    for (SymbolId x : s.symbols) {
      if (x >= counts.size()) throw DomainError("symbol outside corpus alphabet");
      counts[x] += 1;
      total += 1;
    }
  }
  if (total == 0) throw PreconditionError("corpus has no symbols");
  for (double& c : counts) c /= total;
  return SymbolDistribution(std::move(counts));
}

SymbolDistribution SymbolDistribution::uniform(std::size_t alphabet_size) {
  if (alphabet_size == 0) throw PreconditionError("empty alphabet");
  return SymbolDistribution(
      std::vector<double>(alphabet_size, 1.0 / static_cast<double>(alphabet_size)));
}

double SymbolDistribution::prob(SymbolId s) const {
  if (!contains(s)) throw DomainError("symbol " + std::to_string(s) + " not in distribution");
  return probs_[s];
}

double SymbolDistribution::log_prob(SymbolId s) const {
  if (!contains(s)) throw DomainError("symbol " + std::to_string(s) + " not in distribution");
  return log_probs_[s];
}

namespace {

// log P0 from the running sum of symbol log-probabilities of an M-symbol
// prefix. Shared by the direct and the incremental (lattice) paths so both
// produce identical bits.
double log_p0(double symbol_log_sum, std::size_t m, double log_p_hash,
              double log_p_cont) {
  return log_p_hash + static_cast<double>(m - 1) * log_p_cont + symbol_log_sum;
}

// log((n + alpha0 * P0) / (total + alpha0)).
double log_crp(std::uint64_t n, double lp0, double log_alpha0, double log_denom) {
  double log_new = log_alpha0 + lp0;
  if (n == 0) return log_new - log_denom;
  double log_n = std::log(static_cast<double>(n));
  return log_n + std::log1p(std::exp(log_new - log_n)) - log_denom;
}

}  // namespace

double log_base_prob(std::span<const SymbolId> token,
                     const SymbolDistribution& dist, double p_hash) {
  if (token.empty()) throw DomainError("empty token");
  double sum = 0;
  for (SymbolId s : token) sum += dist.log_prob(s);
  return log_p0(sum, token.size(), std::log(p_hash), std::log1p(-p_hash));
}

double base_prob(std::span<const SymbolId> token, const SymbolDistribution& dist,
                 double p_hash) {
  return std::exp(log_base_prob(token, dist, p_hash));
}

double log_token_prob(std::span<const SymbolId> token,
                      const TokenLexicon& lexicon, double alpha0,
                      const SymbolDistribution& dist, double p_hash) {
  double lp0 = log_base_prob(token, dist, p_hash);
  return log_crp(lexicon.count(token), lp0, std::log(alpha0),
                 std::log(static_cast<double>(lexicon.total()) + alpha0));
}

double log_token_prob(std::span<const SymbolId> token,
                      const TokenLexicon& lexicon, const TokenLexicon& held_out,
                      double alpha0, const SymbolDistribution& dist, double p_hash) {
  double lp0 = log_base_prob(token, dist, p_hash);
  std::uint64_t n = lexicon.count(token), own = held_out.count(token);
  if (own > n || held_out.total() > lexicon.total()) {
    throw PreconditionError("held-out tokens are not part of the lexicon");
  }
  return log_crp(n - own, lp0, std::log(alpha0),
                 std::log(static_cast<double>(lexicon.total() - held_out.total()) + alpha0));
}

double UnigramModel::cost(std::span<const SymbolId> token) const {
  if (held_out) return -log_token_prob(token, lexicon, *held_out, alpha0, dist, p_hash);
  return -log_token_prob(token, lexicon, alpha0, dist, p_hash);
}

double token_prob(std::span<const SymbolId> token, const TokenLexicon& lexicon,
                  double alpha0, const SymbolDistribution& dist, double p_hash) {
  return std::exp(log_token_prob(token, lexicon, alpha0, dist, p_hash));
}

std::vector<Parse> nbest_parses(std::span<const SymbolId> sentence,
                                const UnigramModel& model, std::size_t beam_n,
                                std::size_t max_token_len, bool invert_beam) {
  const std::size_t n = sentence.size();
  if (n == 0) throw PreconditionError("cannot parse an empty sentence");
  if (beam_n == 0 || max_token_len == 0) throw ConfigError("beam and span length must be positive");
  const std::size_t width = std::min(max_token_len, n);

  // cost[i * width + (len - 1)] = -log P(sentence[i, i + len)).
  const double log_alpha0 = std::log(model.alpha0);
  const std::uint64_t own_total = model.held_out ? model.held_out->total() : 0;
  if (own_total > model.lexicon.total()) {
    throw PreconditionError("held-out tokens are not part of the lexicon");
  }
  const double log_denom =
      std::log(static_cast<double>(model.lexicon.total() - own_total) + model.alpha0);
  const double log_p_hash = std::log(model.p_hash);
  const double log_p_cont = std::log1p(-model.p_hash);
  std::vector<double> cost(n * width, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    TokenLexicon::Node node = TokenLexicon::kRoot;
    TokenLexicon::Node own = model.held_out ? TokenLexicon::kRoot : TokenLexicon::kNone;
    double symbol_sum = 0;
    for (std::size_t len = 1; len <= width && i + len <= n; ++len) {
      SymbolId x = sentence[i + len - 1];
      symbol_sum += model.dist.log_prob(x);
      if (node != TokenLexicon::kNone) node = model.lexicon.child(node, x);
      if (own != TokenLexicon::kNone) own = model.held_out->child(own, x);
      std::uint64_t count = node == TokenLexicon::kNone ? 0 : model.lexicon.count_at(node);
      if (own != TokenLexicon::kNone) {
        std::uint64_t mine = model.held_out->count_at(own);
        if (mine > count) throw PreconditionError("held-out tokens are not part of the lexicon");
        count -= mine;
      }
      double lp0 = log_p0(symbol_sum, len, log_p_hash, log_p_cont);
      cost[i * width + len - 1] = -log_crp(count, lp0, log_alpha0, log_denom);
    }
  }

  struct Hyp {
    double cost;
    std::uint32_t prev_pos;
    std::uint32_t prev_rank;
  };
  const double sign = invert_beam ? -1.0 : 1.0;
  auto better = [sign](const Hyp& a, const Hyp& b) {
    double ka = sign * a.cost, kb = sign * b.cost;
    if (ka != kb) return ka < kb;
    if (a.prev_pos != b.prev_pos) return a.prev_pos < b.prev_pos;
    return a.prev_rank < b.prev_rank;
  };

  // beams[j]: best hypotheses covering sentence[0, j), sorted best first.
  std::vector<std::vector<Hyp>> beams(n + 1);
  beams[0].push_back({0.0, 0, 0});
  std::vector<Hyp> candidates;
  for (std::size_t j = 1; j <= n; ++j) {
    candidates.clear();
    for (std::size_t len = 1; len <= width && len <= j; ++len) {
      std::size_t i = j - len;
      double span = cost[i * width + len - 1];
      for (std::size_t r = 0; r < beams[i].size(); ++r) {
        candidates.push_back({beams[i][r].cost + span, static_cast<std::uint32_t>(i),
                              static_cast<std::uint32_t>(r)});
      }
    }
    std::size_t keep = std::min(beam_n, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(), better);
    beams[j].assign(candidates.begin(), candidates.begin() + keep);
  }

  std::vector<Parse> out;
  out.reserve(beams[n].size());
  for (std::size_t r = 0; r < beams[n].size(); ++r) {
    Parse parse;
    parse.neg_log_prob = beams[n][r].cost;
    std::size_t pos = n, rank = r;
    while (pos > 0) {
      const Hyp& h = beams[pos][rank];
      if (h.prev_pos > 0) parse.boundaries.push_back(h.prev_pos);
      pos = h.prev_pos;
      rank = h.prev_rank;
    }
    std::reverse(parse.boundaries.begin(), parse.boundaries.end());
    out.push_back(std::move(parse));
  }
  return out;
}

const Parse& sample_parse(const std::vector<Parse>& nbest, Rng& rng) {
  if (nbest.empty()) throw PreconditionError("cannot sample from an empty N-best list");
  return nbest[uniform_index(rng, nbest.size())];
}

TokenLexicon init_lexicon(const Corpus& corpus, std::size_t init_max_len) {
  if (corpus.sentences.empty()) throw PreconditionError("empty corpus");
  TokenLexicon lexicon;
  for (const auto& s : corpus.sentences) {
    if (!s.symbols.empty() && s.size() < init_max_len) lexicon.add(s.symbols);
  }
  if (lexicon.total() == 0) {
    throw PreconditionError("no sentence shorter than " + std::to_string(init_max_len) +
                            " symbols; the initial lexicon would be empty");
  }
  return lexicon;
}

TokenLexicon lexicon_from_segmentation(const Corpus& corpus,
                                       const std::vector<Boundaries>& segmentation) {
  TokenLexicon lexicon;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    std::span<const SymbolId> all(corpus.sentences[i].symbols);
    for (auto [b, e] : boundaries_to_spans(segmentation[i], all.size())) {
      lexicon.add(all.subspan(b, e - b));
    }
  }
  return lexicon;
}

double joint_neg_log_prob(const TokenLexicon& lexicon, const SymbolDistribution& dist,
                          double alpha0, double p_hash) {
  // Each type contributes prod_{j<n} (j + alpha0 P0) = Gamma(n + a) / Gamma(a).
  double nll = 0;
  for (const auto& [token, n] : lexicon.entries()) {
    double a = alpha0 * base_prob(token, dist, p_hash);
    nll -= std::lgamma(static_cast<double>(n) + a) - std::lgamma(a);
  }
  nll += std::lgamma(static_cast<double>(lexicon.total()) + alpha0) - std::lgamma(alpha0);
  return nll;
}

Result run(const Corpus& corpus, const Config& config) {
  config.validate();
  if (corpus.sentences.empty()) throw PreconditionError("empty corpus");
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    if (corpus.sentences[i].symbols.empty()) {
      throw PreconditionError("sentence " + std::to_string(i) + " is empty");
    }
  }

  Result result;
  result.dist = config.uniform_symbols
                    ? SymbolDistribution::uniform(corpus.alphabet.size())
                    : SymbolDistribution::empirical(corpus);
  TokenLexicon lexicon = init_lexicon(corpus, config.init_max_len);

  const std::size_t count = corpus.sentences.size();
  double best_nll = std::numeric_limits<double>::infinity();
  std::vector<Parse> chosen(count);
  std::vector<Boundaries> previous;
  std::size_t stale = 0;
  for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
    parallel_for(count, config.threads, [&](std::size_t i) {
      Rng rng(mix_seed(config.seed, iter, i));
      const auto& symbols = corpus.sentences[i].symbols;
      UnigramModel model{lexicon, result.dist, config.alpha0, config.p_hash};
      TokenLexicon own;
      if (config.exclude_own_tokens) {
        if (iter == 1) {
          if (symbols.size() < config.init_max_len) own.add(symbols);
        } else {
          std::span<const SymbolId> all(symbols);
          for (auto [b, e] : boundaries_to_spans(previous[i], all.size())) {
            own.add(all.subspan(b, e - b));
          }
        }
        model.held_out = &own;
      }
      auto nbest = nbest_parses(symbols, model, config.beam_n, config.max_token_len,
                                config.invert_beam);
      chosen[i] = sample_parse(nbest, rng);
    });

    double parse_nll = 0;
    std::vector<Boundaries> segmentation(count);
    for (std::size_t i = 0; i < count; ++i) {
      parse_nll += chosen[i].neg_log_prob;
      segmentation[i] = std::move(chosen[i].boundaries);
    }
    TokenLexicon next = lexicon_from_segmentation(corpus, segmentation);
    const double nll = joint_neg_log_prob(next, result.dist, config.alpha0, config.p_hash);

    bool improved = nll < best_nll - config.min_nll_improvement;
    if (improved) best_nll = nll;
    result.stats.push_back({iter, nll, parse_nll, best_nll, next.types(), next.total()});
    log::info("dp-parse iteration " + std::to_string(iter) + ": nll " +
              std::to_string(nll) + ", lexicon " + std::to_string(next.types()));
    if (improved) {
      stale = 0;
      result.best_iteration = iter;
      result.segmentation = segmentation;
      result.lexicon = next;
    } else if (++stale >= config.patience) {
      break;
    }
    previous = std::move(segmentation);
    lexicon = std::move(next);
  }
  result.segmented = with_boundaries(corpus, result.segmentation);
  return result;
}

Parse segment_sentence(std::span<const SymbolId> sentence,
                       const UnigramModel& model, std::size_t max_token_len) {
  return std::move(nbest_parses(sentence, model, 1, max_token_len).front());
}

}  // namespace segkit::dpparse
