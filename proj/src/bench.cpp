#include "segkit/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "segkit/error.hpp"
#include "segkit/util.hpp"

namespace segkit::bench {

std::string_view to_string(Side side) {
  return side == Side::Positive ? "positive" : "negative";
}

Side parse_side(std::string_view name) {
  if (name == "positive" || name == "pos") return Side::Positive;
  if (name == "negative" || name == "neg") return Side::Negative;
  throw ParseError("unknown side '" + std::string(name) + "'");
}

void ScoreTable::set(const std::string& id, Side side, double score) {
  scores_[{id, side}] = score;
}

std::optional<double> ScoreTable::get(const std::string& id, Side side) const {
  auto it = scores_.find({id, side});
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

AccuracyReport pair_accuracy(const std::vector<MinimalPair>& pairs,
                             const ScoreTable& scores) {
  std::vector<std::string> missing;
  AccuracyReport report;
  std::map<std::string, double> credit;
  double total = 0;
  for (const auto& p : pairs) {
    auto pos = scores.get(p.id, Side::Positive);
    auto neg = scores.get(p.id, Side::Negative);
    if (!pos || !neg) {
      missing.push_back(p.id);
      continue;
    }
    double c = *pos > *neg ? 1.0 : (*pos == *neg ? 0.5 : 0.0);
    total += c;
    credit[p.category] += c;
    ++report.per_category[p.category].pairs;
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
      list += (i ? ", " : "") + missing[i];
    }
    if (missing.size() > 20) list += ", ...";
    throw CoverageError(std::to_string(missing.size()) +
                        " pairs lack scores: " + list);
  }
  report.pairs = pairs.size();
  report.accuracy = pairs.empty() ? 0.0 : total / static_cast<double>(pairs.size());
  for (auto& [cat, acc] : report.per_category) {
    acc.accuracy = credit[cat] / static_cast<double>(acc.pairs);
  }
  return report;
}

ScoreTable score_pairs(const std::vector<MinimalPair>& pairs,
                       const std::function<double(std::string_view)>& scorer) {
  ScoreTable table;
  for (const auto& p : pairs) {
    table.set(p.id, Side::Positive, scorer(p.positive));
    table.set(p.id, Side::Negative, scorer(p.negative));
  }
  return table;
}

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(line, line_no);
  }
}

double parse_number(std::string_view text, std::size_t line_no) {
  std::string s(text);
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(s, &used);
  } catch (const std::logic_error&) {
    throw ParseError("not a number: '" + s + "'", line_no);
  }
  if (used != s.size()) throw ParseError("not a number: '" + s + "'", line_no);
  if (!std::isfinite(v)) throw ParseError("non-finite value", line_no);
  return v;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

std::vector<MinimalPair> read_pairs(std::istream& in) {
  std::vector<MinimalPair> pairs;
  std::set<std::string> ids;
  for_each_line(in, [&](const std::string& line, std::size_t n) {
    auto f = split(line, '\t');
    if (f.size() != 4) throw ParseError("expected id<TAB>category<TAB>positive<TAB>negative", n);
    MinimalPair p{std::string(f[0]), std::string(f[1]), std::string(f[2]),
                  std::string(f[3])};
    if (p.id.empty() || p.positive.empty() || p.negative.empty()) {
      throw ParseError("empty field", n);
    }
    if (p.positive == p.negative) throw ParseError("positive equals negative", n);
    if (!ids.insert(p.id).second) throw ParseError("duplicate pair id " + p.id, n);
    pairs.push_back(std::move(p));
  });
  return pairs;
}

std::vector<MinimalPair> load_pairs(const std::string& path) {
  auto in = open_input(path);
  return read_pairs(in);
}

void write_pairs(const std::vector<MinimalPair>& pairs, std::ostream& out) {
  for (const auto& p : pairs) {
    out << p.id << '\t' << p.category << '\t' << p.positive << '\t' << p.negative << '\n';
  }
}

ScoreTable read_scores(std::istream& in) {
  ScoreTable table;
  for_each_line(in, [&](const std::string& line, std::size_t n) {
    auto f = split(line, '\t');
    if (f.size() != 3) throw ParseError("expected id<TAB>side<TAB>score", n);
    std::string id(f[0]);
    if (id.empty()) throw ParseError("empty id", n);
    Side side;
    try {
      side = parse_side(f[1]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), n);
    }
    double score = parse_number(f[2], n);
    if (table.get(id, side)) {
      log::warn("score file line " + std::to_string(n) + ": duplicate " + id + "/" +
                std::string(to_string(side)) + ", keeping the later value");
    }
    table.set(id, side, score);
  });
  return table;
}

ScoreTable load_scores(const std::string& path) {
  auto in = open_input(path);
  return read_scores(in);
}

void write_scores(const ScoreTable& table, std::ostream& out) {
  for (const auto& [key, score] : table.entries()) {
    out << key.first << '\t' << to_string(key.second) << '\t' << format_double(score)
        << '\n';
  }
}

std::string_view to_string(Pooling p) {
  switch (p) {
    case Pooling::Mean: return "mean";
    case Pooling::Max: return "max";
    case Pooling::Min: return "min";
  }
  return "?";
}

Vector pool(std::span<const Vector> positions, Pooling fn) {
  if (positions.empty()) throw DomainError("pooling needs at least one vector");
  Vector out = positions[0];
  for (std::size_t i = 1; i < positions.size(); ++i) {
    const Vector& v = positions[i];
    if (v.size() != out.size()) throw DomainError("vector width mismatch in pooling");
    for (std::size_t d = 0; d < v.size(); ++d) {
      switch (fn) {
        case Pooling::Mean: out[d] += v[d]; break;
        case Pooling::Max: out[d] = std::max(out[d], v[d]); break;
        case Pooling::Min: out[d] = std::min(out[d], v[d]); break;
      }
    }
  }
  if (fn == Pooling::Mean) {
    for (double& x : out) x /= static_cast<double>(positions.size());
  }
  return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DomainError("cosine of vectors with different widths");
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0 || nv == 0) {
    log::warn("cosine with a zero vector; similarity taken as 0");
    return 0.0;
  }
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean(i+1 .. j+1).
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("spearman: lists differ in length");
  if (xs.size() < 2) throw DomainError("spearman: need at least two items");
  auto rx = average_ranks(xs);
  auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mean = (n + 1.0) / 2.0;  // ranks always average to this
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    double dx = rx[i] - mean, dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw DomainError("spearman: constant list, correlation undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<SimilarityItem> read_similarity(std::istream& in) {
  struct Acc {
    SimilarityItem item;
    double sum = 0;
    int n = 0;
  };
  std::vector<Acc> items;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for_each_line(in, [&](const std::string& line, std::size_t n) {
    auto f = split(line, '\t');
    if (f.size() != 3) throw ParseError("expected word_a<TAB>word_b<TAB>score", n);
    std::string a(f[0]), b(f[1]);
    if (a.empty() || b.empty()) throw ParseError("empty word", n);
    double score = parse_number(f[2], n);
    if (score < 0 || score > 10) throw ParseError("similarity score outside [0, 10]", n);
    auto key = std::minmax(a, b);
    auto [it, fresh] = index.try_emplace({key.first, key.second}, items.size());
    if (fresh) items.push_back({{a, b, 0}, 0, 0});
    items[it->second].sum += score;
    ++items[it->second].n;
  });
  std::vector<SimilarityItem> out;
  out.reserve(items.size());
  for (auto& acc : items) {
    acc.item.human_score = acc.sum / acc.n;
    out.push_back(std::move(acc.item));
  }
  return out;
}

std::vector<SimilarityItem> load_similarity(const std::string& path) {
  auto in = open_input(path);
  return read_similarity(in);
}

EmbeddingSet::EmbeddingSet(std::size_t layers, std::size_t width)
    : layers_(layers), width_(width) {
  if (layers_ == 0) throw DomainError("embedding set needs at least one layer");
  if (width_ == 0) throw DomainError("embedding width must be positive");
}

void EmbeddingSet::set(const std::string& word, std::size_t layer,
                       std::size_t position, Vector v) {
  if (layer >= layers_) throw DomainError("layer index out of range");
  if (v.size() != width_) throw DomainError("embedding width mismatch");
  auto& per_layer = table_[word];
  if (per_layer.empty()) per_layer.resize(layers_);
  auto& slots = per_layer[layer];
  if (slots.size() <= position) slots.resize(position + 1);
  slots[position] = std::move(v);
}

bool EmbeddingSet::contains(const std::string& word) const {
  return table_.count(word) > 0;
}

const std::vector<Vector>& EmbeddingSet::positions(const std::string& word,
                                                   std::size_t layer) const {
  auto it = table_.find(word);
  if (it == table_.end()) throw CoverageError("no embeddings for '" + word + "'");
  if (layer >= layers_) throw DomainError("layer index out of range");
  return it->second[layer];
}

std::vector<std::string> EmbeddingSet::words() const {
  std::vector<std::string> out;
  for (const auto& [w, _] : table_) out.push_back(w);
  return out;
}

void EmbeddingSet::validate() const {
  for (const auto& [word, layers] : table_) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].empty()) {
        throw ParseError("'" + word + "' has no vectors at layer " + std::to_string(l));
      }
      for (std::size_t p = 0; p < layers[l].size(); ++p) {
        if (layers[l][p].size() != width_) {
          throw ParseError("'" + word + "' layer " + std::to_string(l) +
                           " misses position " + std::to_string(p));
        }
      }
    }
  }
}

EmbeddingSet read_embeddings(std::istream& in) {
  std::string header;
  std::size_t line_no = 0;
  while (header.empty() && std::getline(in, header)) {
    ++line_no;
    if (!header.empty() && header.back() == '\r') header.pop_back();
  }
  std::size_t layers = 0, width = 0;
  {
    std::istringstream hs(header);
    std::string field;
    while (hs >> field) {
      auto kv = split(field, '=');
      if (kv.size() != 2) throw ParseError("bad embedding header", line_no);
      auto value = static_cast<std::size_t>(parse_number(kv[1], line_no));
      if (kv[0] == "layers") layers = value;
      else if (kv[0] == "width") width = value;
      else throw ParseError("unknown header field " + std::string(kv[0]), line_no);
    }
  }
  if (layers == 0 || width == 0) throw ParseError("header must give layers=<L> width=<D>", line_no);
  EmbeddingSet set(layers, width);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 4) throw ParseError("expected word<TAB>layer<TAB>position<TAB>values", line_no);
    double layer = parse_number(f[1], line_no);
    double position = parse_number(f[2], line_no);
    if (layer < 0 || position < 0 || layer != std::floor(layer) || position != std::floor(position)) {
      throw ParseError("layer and position must be non-negative integers", line_no);
    }
    Vector v;
    v.reserve(width);
    for (auto tok : split(f[3], ' ')) {
      if (tok.empty()) continue;
      v.push_back(parse_number(tok, line_no));
    }
    try {
      set.set(std::string(f[0]), static_cast<std::size_t>(layer),
              static_cast<std::size_t>(position), std::move(v));
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  set.validate();
  return set;
}

EmbeddingSet load_embeddings(const std::string& path) {
  auto in = open_input(path);
  return read_embeddings(in);
}

void write_embeddings(const EmbeddingSet& set, std::ostream& out) {
  out << "layers=" << set.layers() << " width=" << set.width() << '\n';
  for (const auto& word : set.words()) {
    for (std::size_t l = 0; l < set.layers(); ++l) {
      const auto& pos = set.positions(word, l);
      for (std::size_t p = 0; p < pos.size(); ++p) {
        out << word << '\t' << l << '\t' << p << '\t';
        for (std::size_t d = 0; d < pos[p].size(); ++d) {
          if (d) out << ' ';
          out << format_double(pos[p][d]);
        }
        out << '\n';
      }
    }
  }
}

namespace {

std::optional<double> cell_rho(const std::vector<SimilarityItem>& items,
                               const EmbeddingSet& emb, std::size_t layer,
                               Pooling fn) {
  std::vector<double> model, human;
  model.reserve(items.size());
  human.reserve(items.size());
  for (const auto& it : items) {
    Vector a = pool(emb.positions(it.word_a, layer), fn);
    Vector b = pool(emb.positions(it.word_b, layer), fn);
    model.push_back(cosine(a, b));
    human.push_back(it.human_score);
  }
  try {
    return spearman(model, human);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

void check_coverage(const std::vector<SimilarityItem>& items, const EmbeddingSet& emb,
                    std::set<std::string>& missing) {
  for (const auto& it : items) {
    if (!emb.contains(it.word_a)) missing.insert(it.word_a);
    if (!emb.contains(it.word_b)) missing.insert(it.word_b);
  }
}

}  // namespace

PsimiResult psimi_eval(
    const std::vector<SimilarityItem>& dev,
    const std::vector<std::pair<std::string, std::vector<SimilarityItem>>>& tests,
    const EmbeddingSet& embeddings, unsigned threads) {
  std::set<std::string> missing;
  check_coverage(dev, embeddings, missing);
  for (const auto& [_, items] : tests) check_coverage(items, embeddings, missing);
  if (!missing.empty()) {
    std::string list;
    for (const auto& w : missing) list += (list.empty() ? "" : ", ") + w;
    throw CoverageError("words without embeddings: " + list);
  }
  if (dev.size() < 2) throw PreconditionError("dev set needs at least two items");

  PsimiResult result;
  for (std::size_t l = 0; l < embeddings.layers(); ++l) {
    for (Pooling p : kPoolings) result.grid.push_back({l, p, std::nullopt});
  }
  parallel_for(result.grid.size(), threads, [&](std::size_t i) {
    auto& cell = result.grid[i];
    cell.dev_rho = cell_rho(dev, embeddings, cell.layer, cell.pooling);
  });

  // Grid order is (layer asc, mean < max < min); strict improvement keeps
  // the earliest cell among ties.
  const GridCell* best = nullptr;
  for (const auto& cell : result.grid) {
    if (cell.dev_rho && (!best || *cell.dev_rho > *best->dev_rho)) best = &cell;
  }
  if (!best) throw DomainError("dev correlation undefined for every layer/pooling cell");
  result.layer = best->layer;
  result.pooling = best->pooling;
  result.dev_rho = *best->dev_rho;
  for (const auto& [name, items] : tests) {
    auto rho = cell_rho(items, embeddings, result.layer, result.pooling);
    if (!rho) throw DomainError("test set '" + name + "': correlation undefined");
    result.test_rho.emplace_back(name, *rho);
  }
  return result;
}

}  // namespace segkit::bench
