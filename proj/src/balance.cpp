#include "segkit/balance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include "segkit/error.hpp"
#include "segkit/util.hpp"

namespace segkit::balance {

namespace {

double outcome(double word_score, double nonword_score) {
  return word_score > nonword_score ? 1.0 : (word_score == nonword_score ? 0.5 : 0.0);
}

// Running per-scorer win totals over a growing list of pairs.
struct Running {
  std::vector<double> wins;
  std::size_t n = 0;

  explicit Running(std::size_t m) : wins(m, 0.0) {}

  double value() const {
    if (n == 0) return 0.0;
    double obj = 0;
    for (double w : wins) obj += std::abs(w / static_cast<double>(n) - 0.5);
    return obj;
  }
  double value_with(const double* outcomes) const {
    double obj = 0;
    for (std::size_t m = 0; m < wins.size(); ++m) {
      obj += std::abs((wins[m] + outcomes[m]) / static_cast<double>(n + 1) - 0.5);
    }
    return obj;
  }
  void add(const double* outcomes) {
    for (std::size_t m = 0; m < wins.size(); ++m) wins[m] += outcomes[m];
    ++n;
  }
};

}  // namespace

double objective(const std::vector<WordPair>& pairs, const std::vector<Scorer>& scorers) {
  if (pairs.empty()) throw PreconditionError("objective of an empty pair list");
  Running run(scorers.size());
  std::vector<double> o(scorers.size());
  for (const auto& p : pairs) {
    for (std::size_t m = 0; m < scorers.size(); ++m) {
      o[m] = outcome(scorers[m](p.word), scorers[m](p.nonword));
    }
    run.add(o.data());
  }
  return run.value();
}

BalancedSelection balance_wuggy(const std::vector<CandidateWord>& words,
                                const std::vector<Scorer>& scorers,
                                std::uint64_t seed, unsigned threads) {
  if (scorers.empty()) throw PreconditionError("need at least one scorer");
  const std::size_t m_count = scorers.size();
  for (const auto& w : words) {
    if (w.candidates.empty()) {
      throw PreconditionError("word '" + w.word + "' has no nonword candidates");
    }
  }

  // outcomes[i][c * M + m]: does scorer m rank word i above candidate c.
  std::vector<std::vector<double>> outcomes(words.size());
  parallel_for(words.size(), threads, [&](std::size_t i) {
    const auto& w = words[i];
    auto& row = outcomes[i];
    row.resize(w.candidates.size() * m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
      double ws = scorers[m](w.word);
      for (std::size_t c = 0; c < w.candidates.size(); ++c) {
        row[c * m_count + m] = outcome(ws, scorers[m](w.candidates[c]));
      }
    }
  });

  // Strata in order of first appearance.
  std::vector<std::string> strata;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto [it, fresh] = members.try_emplace(words[i].stratum);
    if (fresh) strata.push_back(words[i].stratum);
    it->second.push_back(i);
  }

  std::vector<std::size_t> choice(words.size(), 0);
  std::vector<double> stratum_obj(strata.size(), 0.0);
  std::vector<std::vector<Step>> traces(strata.size());
  parallel_for(strata.size(), threads, [&](std::size_t s) {
    std::vector<std::size_t> order = members.at(strata[s]);
    if (order.empty()) {
      log::warn("empty stratum '" + strata[s] + "' skipped");
      return;
    }
    Rng rng(mix_seed(seed, s));
    shuffle(order, rng);
    Running run(m_count);
    for (std::size_t i : order) {
      const auto& row = outcomes[i];
      std::vector<std::size_t> cands(words[i].candidates.size());
      for (std::size_t c = 0; c < cands.size(); ++c) cands[c] = c;
      shuffle(cands, rng);
      double before = run.value();
      std::optional<std::size_t> pick;
      for (std::size_t c : cands) {
        // The first pair of a stratum has no objective to compare against.
        if (run.n == 0 || run.value_with(&row[c * m_count]) <= before) {
          pick = c;
          break;
        }
      }
      bool forced = !pick;
      if (forced) pick = uniform_index(rng, cands.size());
      choice[i] = *pick;
      run.add(&row[*pick * m_count]);
      traces[s].push_back({strata[s], i, before, run.value(), forced});
    }
    stratum_obj[s] = run.value();
  });

  BalancedSelection sel;
  sel.pairs.reserve(words.size());
  Running total(m_count);
  for (std::size_t i = 0; i < words.size(); ++i) {
    sel.pairs.push_back({words[i].word, words[i].candidates[choice[i]]});
    total.add(&outcomes[i][choice[i] * m_count]);
  }
  sel.objective = total.value();
  for (std::size_t s = 0; s < strata.size(); ++s) {
    sel.stratum_objective[strata[s]] = stratum_obj[s];
    sel.trace.insert(sel.trace.end(), traces[s].begin(), traces[s].end());
  }
  return sel;
}

double subset_objective(const std::vector<ScoredPair>& pool,
                        const std::vector<std::size_t>& subset) {
  if (subset.empty()) throw PreconditionError("objective of an empty subset");
  const std::size_t m_count = pool.at(subset[0]).positive.size();
  Running run(m_count);
  std::vector<double> o(m_count);
  for (std::size_t i : subset) {
    for (std::size_t m = 0; m < m_count; ++m) {
      o[m] = outcome(pool[i].positive[m], pool[i].negative[m]);
    }
    run.add(o.data());
  }
  return run.value();
}

SubsetSelection balance_blimp(const std::vector<ScoredPair>& pool, std::size_t k,
                              std::uint64_t seed) {
  if (k > pool.size()) {
    throw PreconditionError("cannot choose " + std::to_string(k) + " pairs from " +
                            std::to_string(pool.size()));
  }
  SubsetSelection sel;
  if (k == 0) return sel;
  const std::size_t m_count = pool[0].positive.size();
  if (m_count == 0) throw PreconditionError("need at least one scorer");
  std::vector<double> outcomes(pool.size() * m_count);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].positive.size() != m_count || pool[i].negative.size() != m_count) {
      throw PreconditionError("pair " + std::to_string(i) + " has the wrong number of scores");
    }
    for (std::size_t m = 0; m < m_count; ++m) {
      outcomes[i * m_count + m] = outcome(pool[i].positive[m], pool[i].negative[m]);
    }
  }

  Rng rng(mix_seed(seed, 0));
  Running run(m_count);
  std::vector<bool> taken(pool.size(), false);
  while (sel.chosen.size() < k) {
    std::vector<std::size_t> unchosen;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!taken[i]) unchosen.push_back(i);
    }
    shuffle(unchosen, rng);
    bool added = false;
    for (std::size_t i : unchosen) {
      if (sel.chosen.size() == k) break;
      const double* o = &outcomes[i * m_count];
      if (run.n == 0 || run.value_with(o) <= run.value()) {
        run.add(o);
        taken[i] = true;
        sel.chosen.push_back(i);
        added = true;
      }
    }
    if (!added) {
      std::size_t i = unchosen.front();
      run.add(&outcomes[i * m_count]);
      taken[i] = true;
      sel.chosen.push_back(i);
    }
  }
  sel.objective = run.value();
  return sel;
}

std::string stratum_label(std::uint64_t frequency, std::size_t length,
                          const std::vector<double>& quartile_edges,
                          const std::vector<std::size_t>& length_edges) {
  std::string freq;
  if (frequency == 0) {
    freq = "oov";
  } else {
    std::size_t q = 0;
    while (q < quartile_edges.size() &&
           static_cast<double>(frequency) > quartile_edges[q]) {
      ++q;
    }
    freq = "fq" + std::to_string(q + 1);
  }
  std::size_t bin = 0;
  while (bin < length_edges.size() && length > length_edges[bin]) ++bin;
  return freq + "/len" + std::to_string(bin + 1);
}

std::vector<double> frequency_quartiles(const std::vector<std::uint64_t>& frequencies) {
  std::vector<double> nz;
  for (auto f : frequencies) {
    if (f > 0) nz.push_back(static_cast<double>(f));
  }
  if (nz.empty()) return {};
  std::sort(nz.begin(), nz.end());
  std::vector<double> edges;
  for (int q = 1; q <= 3; ++q) {
    // Nearest-rank quantile.
    auto idx = static_cast<std::size_t>(
        std::ceil(q / 4.0 * static_cast<double>(nz.size()))) - 1;
    edges.push_back(nz[std::min(idx, nz.size() - 1)]);
  }
  return edges;
}

std::vector<CandidateWord> read_candidates(std::istream& in) {
  std::vector<CandidateWord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 3) throw ParseError("expected word<TAB>stratum<TAB>candidates", line_no);
    CandidateWord w{std::string(f[0]), std::string(f[1]), {}};
    if (w.word.empty()) throw ParseError("empty word", line_no);
    for (auto c : split(f[2], ',')) {
      if (c.empty()) throw ParseError("empty candidate", line_no);
      w.candidates.emplace_back(c);
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<CandidateWord> load_candidates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_candidates(in);
}

}  // namespace segkit::balance
