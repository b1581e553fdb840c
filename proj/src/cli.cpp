#include "segkit/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "segkit/balance.hpp"
#include "segkit/bench.hpp"
#include "segkit/bpe.hpp"
#include "segkit/dpparse.hpp"
#include "segkit/error.hpp"
#include "segkit/ngram.hpp"
#include "segkit/seg_metrics.hpp"
#include "segkit/text.hpp"
#include "segkit/tokenize.hpp"
#include "segkit/util.hpp"

namespace segkit::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Globals {
  unsigned threads = 0;
  std::string log_level = "warn";
  std::string out_dir;
  std::string report;
  bool json_stdout = false;
};

std::string resolve_out(const Globals& g, const std::string& path) {
  if (g.out_dir.empty() || path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(g.out_dir) / path).string();
}

std::ofstream open_output(const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw IoError("write failure on " + path);
}

json base_report(std::string_view command) {
  return json{{"tool", "segkit"}, {"version", std::string(kVersion)},
              {"command", std::string(command)}};
}

json input_entry(const std::string& path) {
  return json{{"path", path}, {"fnv1a64", file_fingerprint(path)}};
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

json prf_json(const Prf& p) {
  return json{{"p", p.precision},
              {"r", p.recall},
              {"f", p.f1},
              {"p_pct", round2(100 * p.precision)},
              {"r_pct", round2(100 * p.recall)},
              {"f_pct", round2(100 * p.f1)}};
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

void emit(const Globals& g, const json& report, const std::string& table,
          std::ostream& out) {
  if (!g.report.empty()) write_text(resolve_out(g, g.report), report.dump(2) + "\n");
  if (g.json_stdout) {
    out << report.dump(2) << '\n';
  } else {
    out << table;
  }
}

// ---------------------------------------------------------------- segment

struct SegmentOpts {
  std::string input;
  std::string kind = "char";
  std::string marker = "|";
  std::string output;
  std::string stats;
  std::string lexicon;
  bool eval = false;
  dpparse::Config dp;
};

void add_dp_options(CLI::App* app, dpparse::Config& dp) {
  app->add_option("--alpha0", dp.alpha0, "CRP concentration")->capture_default_str();
  app->add_option("--p-hash", dp.p_hash, "word-end probability of the base distribution")
      ->capture_default_str();
  app->add_option("--beam", dp.beam_n, "N-best list size")->capture_default_str();
  app->add_option("--max-token-len", dp.max_token_len, "longest token considered")
      ->capture_default_str();
  app->add_option("--init-max-len", dp.init_max_len,
                  "sentences shorter than this seed the lexicon")
      ->capture_default_str();
  app->add_option("--iters", dp.max_iters, "maximum iterations")->capture_default_str();
  app->add_option("--min-improvement", dp.min_nll_improvement,
                  "required corpus NLL decrease per iteration")
      ->capture_default_str();
  app->add_option("--patience", dp.patience,
                  "passes without improvement tolerated before stopping")
      ->capture_default_str();
  app->add_flag_callback("--keep-own-tokens", [&dp] { dp.exclude_own_tokens = false; },
                         "score each sentence against its own previous tokens too");
  app->add_option("--seed", dp.seed, "random seed")->envname("SEGKIT_SEED")->capture_default_str();
  app->add_flag("--uniform-symbols", dp.uniform_symbols,
                "uniform symbol probabilities in the base distribution");
  app->add_flag("--invert-beam", dp.invert_beam,
                "keep the N least probable parses instead of the most probable");
}

json dp_config_json(const dpparse::Config& dp) {
  return json{{"alpha0", dp.alpha0},
              {"p_hash", dp.p_hash},
              {"beam", dp.beam_n},
              {"max_token_len", dp.max_token_len},
              {"init_max_len", dp.init_max_len},
              {"iters", dp.max_iters},
              {"min_improvement", dp.min_nll_improvement},
              {"patience", dp.patience},
              {"exclude_own_tokens", dp.exclude_own_tokens},
              {"uniform_symbols", dp.uniform_symbols},
              {"invert_beam", dp.invert_beam}};
}

json stats_json(const dpparse::Result& r) {
  json iters = json::array();
  for (const auto& s : r.stats) {
    iters.push_back({{"iteration", s.iteration},
                     {"corpus_nll", s.corpus_nll},
                     {"parse_nll", s.parse_nll},
                     {"best_nll", s.best_nll},
                     {"lexicon_size", s.lexicon_size},
                     {"token_count", s.token_count}});
  }
  return iters;
}

void write_token_lexicon(const Corpus& corpus, const dpparse::TokenLexicon& lex,
                         const std::string& path) {
  auto out = open_output(path);
  for (const auto& [token, count] : lex.entries()) {
    out << corpus.alphabet.render(token) << '\t' << count << '\n';
  }
}

int cmd_segment(const SegmentOpts& o, const Globals& g, std::ostream& out) {
  dpparse::Config dp = o.dp;
  dp.threads = g.threads;
  Corpus corpus = load_corpus(o.input, parse_symbol_kind(o.kind), o.marker);
  Corpus stripped = strip_boundaries(corpus);
  dpparse::Result result = dpparse::run(stripped, dp);

  std::ostringstream seg_text;
  write_corpus(result.segmented, seg_text, o.marker);
  const std::string output = resolve_out(g, o.output);
  write_text(output, seg_text.str());

  json report = base_report("segment");
  report["config"] = dp_config_json(dp);
  report["config"]["kind"] = o.kind;
  report["config"]["marker"] = o.marker;
  report["seed"] = dp.seed;
  report["inputs"] = json{{"input", input_entry(o.input)}};
  report["best_iteration"] = result.best_iteration;
  report["iterations"] = stats_json(result);
  report["output_fnv1a64"] = fnv1a_hex(seg_text.str());
  std::ostringstream table;
  table << "iter  corpus_nll        best_nll          lexicon  tokens\n";
  for (const auto& s : result.stats) {
    table << std::setw(4) << s.iteration << "  " << std::setw(16) << fixed(s.corpus_nll, 3)
          << "  " << std::setw(16) << fixed(s.best_nll, 3) << "  " << std::setw(7)
          << s.lexicon_size << "  " << s.token_count << '\n';
  }
  table << "best iteration: " << result.best_iteration << '\n';
  if (o.eval) {
    SegScores scores = evaluate_corpus(corpus, result.segmented);
    report["evaluation"] = {{"token", prf_json(scores.token)},
                            {"boundary", prf_json(scores.boundary)}};
    table << "token F " << fixed(100 * scores.token.f1) << "  boundary F "
          << fixed(100 * scores.boundary.f1) << '\n';
  }
  const std::string stats_path =
      resolve_out(g, o.stats.empty() ? o.output + ".stats.json" : o.stats);
  write_text(stats_path, report.dump(2) + "\n");
  if (!o.lexicon.empty()) write_token_lexicon(corpus, result.lexicon, resolve_out(g, o.lexicon));
  emit(g, report, table.str(), out);
  return 0;
}

// --------------------------------------------------------------- eval-seg

struct EvalOpts {
  std::string gold, predicted, kind = "char", marker = "|";
};

int cmd_eval(const EvalOpts& o, const Globals& g, std::ostream& out) {
  Corpus gold = load_corpus(o.gold, parse_symbol_kind(o.kind), o.marker);
  Corpus pred = load_corpus(o.predicted, gold.alphabet, o.marker);
  SegScores s = evaluate_corpus(gold, pred);
  json report = base_report("eval-seg");
  report["config"] = {{"kind", o.kind}, {"marker", o.marker}};
  report["inputs"] = {{"gold", input_entry(o.gold)}, {"predicted", input_entry(o.predicted)}};
  report["token"] = prf_json(s.token);
  report["boundary"] = prf_json(s.boundary);
  report["counts"] = {{"token_tp", s.counts.token_tp},       {"token_fp", s.counts.token_fp},
                      {"token_fn", s.counts.token_fn},       {"boundary_tp", s.counts.boundary_tp},
                      {"boundary_fp", s.counts.boundary_fp}, {"boundary_fn", s.counts.boundary_fn}};
  std::ostringstream table;
  table << "          precision  recall  f-score\n";
  table << "token     " << std::setw(9) << fixed(100 * s.token.precision) << "  "
        << std::setw(6) << fixed(100 * s.token.recall) << "  " << std::setw(7)
        << fixed(100 * s.token.f1) << '\n';
  table << "boundary  " << std::setw(9) << fixed(100 * s.boundary.precision) << "  "
        << std::setw(6) << fixed(100 * s.boundary.recall) << "  " << std::setw(7)
        << fixed(100 * s.boundary.f1) << '\n';
  emit(g, report, table.str(), out);
  return 0;
}

// ------------------------------------------------------------ train-ngram

struct LmOpts {
  int order = 2;
  std::string mode = "char";
  std::size_t cap = 0;
  double smoothing_k = -1;
  bool no_space = false;
  std::string bpe;
};

struct TrainOpts {
  std::string input, kind = "char", marker = "|", out, format = "tsv";
  bool strip = false;
  LmOpts lm;
};

void add_lm_options(CLI::App* app, LmOpts& lm, const std::string& prefix = "") {
  app->add_option("--" + prefix + "order", lm.order, "1 (unigram) or 2 (bigram)")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  app->add_option("--" + prefix + "mode", lm.mode, "char|phone|word|word-fallback|bpe")
      ->capture_default_str();
  app->add_option("--" + prefix + "cap", lm.cap,
                  "lexicon cap for word modes (default 40000 word, 20000 fallback)");
  app->add_option("--" + prefix + "smoothing-k", lm.smoothing_k,
                  "add-k constant (default 1 for symbol modes, 0.1 for word modes)");
  app->add_flag("--" + prefix + "no-space", lm.no_space,
                "do not emit <SPACE> units at word boundaries");
  app->add_option("--" + prefix + "bpe", lm.bpe, "BPE merges file (bpe mode)");
}

TokenizationMode resolve_mode(const LmOpts& lm, SymbolKind kind) {
  TokenizationMode mode;
  mode.unit = parse_unit_mode(lm.mode);
  if (mode.unit == UnitMode::Char && kind == SymbolKind::Phoneme) mode.unit = UnitMode::Phone;
  if (mode.unit == UnitMode::Phone && kind == SymbolKind::Character) {
    throw ConfigError("phone mode on a character corpus");
  }
  mode.cap = lm.cap;
  if (mode.cap == 0) mode.cap = mode.unit == UnitMode::WordFallback ? 20000 : 40000;
  bool symbolic = mode.unit == UnitMode::Char || mode.unit == UnitMode::Phone;
  mode.keep_space_marker = symbolic && !lm.no_space;
  return mode;
}

double resolve_k(const LmOpts& lm, const TokenizationMode& mode) {
  return lm.smoothing_k >= 0 ? lm.smoothing_k : default_add_k(mode.unit);
}

json lm_config_json(const LmOpts& lm, const TokenizationMode& mode, double k) {
  return json{{"order", lm.order},
              {"mode", std::string(to_string(mode.unit))},
              {"cap", mode.cap},
              {"keep_space", mode.keep_space_marker},
              {"smoothing_k", k}};
}

NGramModel train_lm(const Corpus& corpus, const LmOpts& lm, TokenizationMode mode, double k) {
  std::optional<BpeModel> bpe;
  if (mode.unit == UnitMode::Bpe) {
    if (lm.bpe.empty()) throw ConfigError("bpe mode needs --bpe <merges file>");
    std::ifstream in(lm.bpe, std::ios::binary);
    if (!in) throw IoError("cannot open " + lm.bpe);
    bpe = BpeModel::read_tsv(in);
  }
  return train_ngram(corpus, lm.order, mode, k, bpe ? &*bpe : nullptr);
}

int cmd_train(const TrainOpts& o, const Globals& g, std::ostream& out) {
  SymbolKind kind = parse_symbol_kind(o.kind);
  Corpus corpus = load_corpus(o.input, kind, o.marker);
  if (o.strip) corpus = strip_boundaries(std::move(corpus));
  TokenizationMode mode = resolve_mode(o.lm, kind);
  double k = resolve_k(o.lm, mode);
  NGramModel model = train_lm(corpus, o.lm, mode, k);
  if (o.format != "tsv" && o.format != "binary") throw ConfigError("--format must be tsv or binary");
  model.save(resolve_out(g, o.out),
             o.format == "tsv" ? NGramModel::FileFormat::Tsv : NGramModel::FileFormat::Binary);

  json report = base_report("train-ngram");
  report["config"] = lm_config_json(o.lm, mode, k);
  report["config"]["kind"] = o.kind;
  report["config"]["strip"] = o.strip;
  report["inputs"] = {{"input", input_entry(o.input)}};
  report["vocab_size"] = model.vocab_size();
  report["tokens"] = model.total_tokens();
  std::ostringstream table;
  table << "order " << model.order() << ", mode " << to_string(mode.unit) << ", vocab "
        << model.vocab_size() << ", tokens " << model.total_tokens() << '\n';
  emit(g, report, table.str(), out);
  return 0;
}

// ------------------------------------------------------------------ score

struct ScoreOpts {
  std::string model, input, output, marker = "|";
};

int cmd_score(const ScoreOpts& o, const Globals& g, std::ostream& out) {
  NGramModel model = NGramModel::load(o.model);
  std::ifstream in(o.input, std::ios::binary);
  if (!in) throw IoError("cannot open " + o.input);
  std::vector<std::pair<std::string, std::string>> items;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      items.emplace_back(std::to_string(n), line);
    } else {
      items.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    ++n;
  }
  std::vector<double> scores(items.size());
  parallel_for(items.size(), g.threads, [&](std::size_t i) {
    scores[i] = model.score_text(items[i].second, o.marker);
  });
  std::ostringstream tsv;
  tsv.precision(17);
  for (std::size_t i = 0; i < items.size(); ++i) {
    tsv << items[i].first << '\t' << scores[i] << '\n';
  }
  if (o.output.empty() || o.output == "-") {
    out << tsv.str();
  } else {
    write_text(resolve_out(g, o.output), tsv.str());
    out << "scored " << items.size() << " lines\n";
  }
  return 0;
}

// ------------------------------------------------------- learn/apply-bpe

struct LearnBpeOpts {
  std::string input, kind = "char", marker = "|", out;
  std::size_t target = 20000;
  bool eow = false;
};

int cmd_learn_bpe(const LearnBpeOpts& o, const Globals& g, std::ostream& out) {
  Corpus corpus = load_corpus(o.input, parse_symbol_kind(o.kind), o.marker);
  BpeModel model = learn_bpe(corpus, o.target, o.eow);
  std::ostringstream text;
  model.write_tsv(text);
  write_text(resolve_out(g, o.out), text.str());
  json report = base_report("learn-bpe");
  report["config"] = {{"kind", o.kind}, {"target", o.target}, {"eow", o.eow}};
  report["inputs"] = {{"input", input_entry(o.input)}};
  report["base_units"] = model.base_size();
  report["merges"] = model.merges().size();
  report["vocab_size"] = model.vocab_size();
  std::ostringstream table;
  table << "base units " << model.base_size() << ", merges " << model.merges().size()
        << ", vocab " << model.vocab_size() << '\n';
  emit(g, report, table.str(), out);
  return 0;
}

struct ApplyBpeOpts {
  std::string model, input, output, marker = "|";
};

int cmd_apply_bpe(const ApplyBpeOpts& o, const Globals& g, std::ostream& out) {
  std::ifstream min(o.model, std::ios::binary);
  if (!min) throw IoError("cannot open " + o.model);
  BpeModel model = BpeModel::read_tsv(min);
  Corpus corpus = load_corpus(o.input, model.alphabet(), o.marker);
  if (corpus.alphabet.size() != model.alphabet().size()) {
    throw DomainError("input contains symbols outside the BPE alphabet");
  }
  const bool phone = model.alphabet().kind() == SymbolKind::Phoneme;
  std::ostringstream text;
  for (const auto& s : corpus.sentences) {
    std::span<const SymbolId> all(s.symbols);
    bool first_word = true;
    for (auto [b, e] : boundaries_to_spans(*s.visible_boundaries(), s.size())) {
      if (!first_word) text << " | ";
      first_word = false;
      auto units = model.encode(all.subspan(b, e - b));
      for (std::size_t i = 0; i < units.size(); ++i) {
        if (i) text << ' ';
        std::string surface = model.unit_surface(units[i]);
        if (phone) std::replace(surface.begin(), surface.end(), ' ', '+');
        text << surface;
      }
    }
    text << '\n';
  }
  if (o.output.empty() || o.output == "-") {
    out << text.str();
  } else {
    write_text(resolve_out(g, o.output), text.str());
  }
  return 0;
}

// ---------------------------------------------------------------- bench-*

struct PairBenchOpts {
  std::string pairs, scorer, scores, marker = "|";
};

std::string internal_model_path(const std::string& arg) {
  const std::string prefix = "internal:";
  if (arg.rfind(prefix, 0) == 0) return arg.substr(prefix.size());
  return arg;
}

json accuracy_json(const bench::AccuracyReport& r) {
  json cats = json::object();
  for (const auto& [cat, acc] : r.per_category) {
    cats[cat] = {{"accuracy", acc.accuracy}, {"pairs", acc.pairs}};
  }
  return json{{"accuracy", r.accuracy}, {"accuracy_pct", round2(100 * r.accuracy)},
              {"pairs", r.pairs}, {"per_category", cats}};
}

std::string accuracy_table(const bench::AccuracyReport& r) {
  std::ostringstream t;
  t << "overall  " << fixed(100 * r.accuracy) << "  (" << r.pairs << " pairs)\n";
  for (const auto& [cat, acc] : r.per_category) {
    t << "  " << cat << "  " << fixed(100 * acc.accuracy) << "  (" << acc.pairs << ")\n";
  }
  return t.str();
}

int cmd_pair_bench(std::string_view name, const PairBenchOpts& o, const Globals& g,
                   std::ostream& out) {
  if (o.scorer.empty() == o.scores.empty()) {
    throw ConfigError("give exactly one of --scorer internal:<model> or --scores <file>");
  }
  auto pairs = bench::load_pairs(o.pairs);
  json report = base_report(name);
  report["inputs"] = {{"pairs", input_entry(o.pairs)}};
  bench::ScoreTable table;
  if (!o.scores.empty()) {
    table = bench::load_scores(o.scores);
    report["inputs"]["scores"] = input_entry(o.scores);
  } else {
    std::string path = internal_model_path(o.scorer);
    NGramModel model = NGramModel::load(path);
    report["inputs"]["model"] = input_entry(path);
    std::vector<double> pos(pairs.size()), neg(pairs.size());
    parallel_for(pairs.size(), g.threads, [&](std::size_t i) {
      pos[i] = model.score_text(pairs[i].positive, o.marker);
      neg[i] = model.score_text(pairs[i].negative, o.marker);
    });
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      table.set(pairs[i].id, bench::Side::Positive, pos[i]);
      table.set(pairs[i].id, bench::Side::Negative, neg[i]);
    }
  }
  auto acc = bench::pair_accuracy(pairs, table);
  report["result"] = accuracy_json(acc);
  emit(g, report, accuracy_table(acc), out);
  return 0;
}

struct SimiOpts {
  std::string dev, embeddings;
  std::vector<std::string> tests;
};

std::vector<std::pair<std::string, std::vector<bench::SimilarityItem>>> load_tests(
    const std::vector<std::string>& test_args, json& inputs) {
  std::vector<std::pair<std::string, std::vector<bench::SimilarityItem>>> tests;
  for (const auto& arg : test_args) {
    auto eq = arg.find('=');
    std::string name = eq == std::string::npos ? fs::path(arg).stem().string() : arg.substr(0, eq);
    std::string path = eq == std::string::npos ? arg : arg.substr(eq + 1);
    tests.emplace_back(name, bench::load_similarity(path));
    inputs["test:" + name] = input_entry(path);
  }
  return tests;
}

json psimi_json(const bench::PsimiResult& r) {
  json grid = json::array();
  for (const auto& c : r.grid) {
    grid.push_back({{"layer", c.layer},
                    {"pooling", std::string(bench::to_string(c.pooling))},
                    {"dev_rho", c.dev_rho ? json(*c.dev_rho) : json(nullptr)}});
  }
  json tests = json::object();
  for (const auto& [name, rho] : r.test_rho) tests[name] = rho;
  return json{{"layer", r.layer},
              {"pooling", std::string(bench::to_string(r.pooling))},
              {"dev_rho", r.dev_rho},
              {"test_rho", tests},
              {"grid", grid}};
}

std::string psimi_table(const bench::PsimiResult& r) {
  std::ostringstream t;
  t << "selected layer " << r.layer << ", pooling " << bench::to_string(r.pooling)
    << ", dev rho " << fixed(100 * r.dev_rho) << '\n';
  for (const auto& [name, rho] : r.test_rho) t << "  " << name << "  " << fixed(100 * rho) << '\n';
  return t.str();
}

int cmd_simi(const SimiOpts& o, const Globals& g, std::ostream& out) {
  json report = base_report("bench-simi");
  report["inputs"] = {{"dev", input_entry(o.dev)}, {"embeddings", input_entry(o.embeddings)}};
  auto dev = bench::load_similarity(o.dev);
  auto tests = load_tests(o.tests, report["inputs"]);
  auto emb = bench::load_embeddings(o.embeddings);
  auto r = bench::psimi_eval(dev, tests, emb, g.threads);
  report["result"] = psimi_json(r);
  emit(g, report, psimi_table(r), out);
  return 0;
}

// ---------------------------------------------------------------- balance

struct BalanceOpts {
  std::string candidates, pairs, out, marker = "|";
  std::vector<std::string> scorers;
  std::uint64_t seed = 0;
  std::size_t per_category = 0;
};

int cmd_balance(const BalanceOpts& o, const Globals& g, std::ostream& out) {
  if (o.scorers.empty()) throw ConfigError("at least one --scorer is required");
  if (o.candidates.empty() == o.pairs.empty()) {
    throw ConfigError("give exactly one of --candidates or --pairs");
  }
  json report = base_report("balance");
  report["seed"] = o.seed;
  report["inputs"] = json::object();
  std::vector<NGramModel> models;
  for (const auto& arg : o.scorers) {
    std::string path = internal_model_path(arg);
    models.push_back(NGramModel::load(path));
    report["inputs"]["scorer:" + path] = input_entry(path);
  }
  std::vector<balance::Scorer> scorers;
  for (const auto& m : models) {
    scorers.push_back([&m, &o](std::string_view s) { return m.score_text(s, o.marker); });
  }

  std::vector<bench::MinimalPair> selected;
  std::ostringstream table;
  if (!o.candidates.empty()) {
    report["inputs"]["candidates"] = input_entry(o.candidates);
    auto words = balance::load_candidates(o.candidates);
    auto sel = balance::balance_wuggy(words, scorers, o.seed, g.threads);
    for (std::size_t i = 0; i < sel.pairs.size(); ++i) {
      selected.push_back({"w" + std::to_string(i + 1), words[i].stratum, sel.pairs[i].word,
                          sel.pairs[i].nonword});
    }
    report["objective"] = sel.objective;
    report["stratum_objective"] = sel.stratum_objective;
    table << "objective " << fixed(sel.objective, 4) << " over " << sel.pairs.size()
          << " words\n";
  } else {
    report["config"] = {{"per_category", o.per_category}};
    report["inputs"]["pairs"] = input_entry(o.pairs);
    auto pool = bench::load_pairs(o.pairs);
    std::vector<std::string> cats;
    std::map<std::string, std::vector<std::size_t>> by_cat;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      auto [it, fresh] = by_cat.try_emplace(pool[i].category);
      if (fresh) cats.push_back(pool[i].category);
      it->second.push_back(i);
    }
    json per_cat = json::object();
    for (std::size_t c = 0; c < cats.size(); ++c) {
      const auto& idx = by_cat[cats[c]];
      std::vector<balance::ScoredPair> scored;
      for (std::size_t i : idx) {
        balance::ScoredPair sp;
        for (const auto& s : scorers) {
          sp.positive.push_back(s(pool[i].positive));
          sp.negative.push_back(s(pool[i].negative));
        }
        scored.push_back(std::move(sp));
      }
      std::size_t k = o.per_category == 0 ? idx.size() : std::min(o.per_category, idx.size());
      if (k < o.per_category) {
        log::warn("category '" + cats[c] + "' has only " + std::to_string(idx.size()) + " pairs");
      }
      auto sel = balance::balance_blimp(scored, k, mix_seed(o.seed, c));
      std::vector<std::size_t> chosen = sel.chosen;
      std::sort(chosen.begin(), chosen.end());
      for (std::size_t j : chosen) selected.push_back(pool[idx[j]]);
      per_cat[cats[c]] = {{"pairs", k}, {"objective", sel.objective}};
      table << cats[c] << "  " << k << " pairs, objective " << fixed(sel.objective, 4) << '\n';
    }
    report["category_objective"] = per_cat;
  }

  json acc = json::array();
  for (std::size_t m = 0; m < scorers.size(); ++m) {
    bench::ScoreTable t = bench::score_pairs(selected, scorers[m]);
    double a = bench::pair_accuracy(selected, t).accuracy;
    acc.push_back(a);
    table << "scorer " << m + 1 << " accuracy " << fixed(100 * a) << '\n';
  }
  report["scorer_accuracy"] = acc;
  std::ostringstream tsv;
  bench::write_pairs(selected, tsv);
  write_text(resolve_out(g, o.out), tsv.str());
  report["output_fnv1a64"] = fnv1a_hex(tsv.str());
  emit(g, report, table.str(), out);
  return 0;
}

// --------------------------------------------------------------- pipeline

struct PipelineOpts {
  std::string input, kind = "char", marker = "|";
  std::string wuggy, blimp, simi_dev, embeddings;
  std::vector<std::string> simi_tests;
  dpparse::Config dp;
  LmOpts lm;
};

// Segments raw benchmark text with the learned lexicon. Symbols the
// segmenter has never seen stand alone as one-symbol tokens.
Sentence segment_text(const Tokenizer& tok, const dpparse::UnigramModel& model,
                      std::size_t max_len, std::string_view text, std::string_view marker) {
  Sentence s = tok.parse_text(text, marker);
  Boundaries b;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    if (end <= start) return;
    std::span<const SymbolId> piece(s.symbols.data() + start, end - start);
    auto parse = dpparse::segment_sentence(piece, model, max_len);
    for (auto p : parse.boundaries) b.push_back(start + p);
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!model.dist.contains(s.symbols[i])) {
      flush(i);
      if (i > 0) b.push_back(i);
      if (i + 1 < s.size()) b.push_back(i + 1);
      start = i + 1;
    }
  }
  flush(s.size());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  s.gold = std::move(b);
  s.boundaries_visible = true;
  return s;
}

int cmd_pipeline(const PipelineOpts& o, const Globals& g, std::ostream& out) {
  dpparse::Config dp = o.dp;
  dp.threads = g.threads;
  SymbolKind kind = parse_symbol_kind(o.kind);
  Corpus corpus = load_corpus(o.input, kind, o.marker);
  Corpus stripped = strip_boundaries(corpus);
  dpparse::Result seg = dpparse::run(stripped, dp);
  SegScores seg_scores = evaluate_corpus(corpus, seg.segmented);

  std::ostringstream seg_text;
  write_corpus(seg.segmented, seg_text, o.marker);
  write_text(resolve_out(g, "segmented.txt"), seg_text.str());

  TokenizationMode mode = resolve_mode(o.lm, kind);
  double k = resolve_k(o.lm, mode);
  NGramModel lm = train_lm(seg.segmented, o.lm, mode, k);
  std::ostringstream lm_text;
  lm.save(lm_text);
  write_text(resolve_out(g, "lm.tsv"), lm_text.str());

  json report = base_report("pipeline");
  report["config"] = {{"kind", o.kind}, {"marker", o.marker}, {"dpparse", dp_config_json(dp)},
                      {"lm", lm_config_json(o.lm, mode, k)}};
  report["seed"] = dp.seed;
  report["inputs"] = {{"input", input_entry(o.input)}};
  report["segmentation"] = {{"best_iteration", seg.best_iteration},
                            {"iterations", stats_json(seg)},
                            {"token", prf_json(seg_scores.token)},
                            {"boundary", prf_json(seg_scores.boundary)},
                            {"output_fnv1a64", fnv1a_hex(seg_text.str())}};
  std::ostringstream table;
  table << "segmentation  token F " << fixed(100 * seg_scores.token.f1) << "  boundary F "
        << fixed(100 * seg_scores.boundary.f1) << '\n';

  const dpparse::UnigramModel seg_model{seg.lexicon, seg.dist, dp.alpha0, dp.p_hash};
  auto scorer = [&](std::string_view text) {
    return lm.score(segment_text(lm.tokenizer(), seg_model, dp.max_token_len, text, o.marker));
  };
  json benches = json::object();
  for (auto [name, path] : {std::pair<std::string, std::string>{"wuggy", o.wuggy},
                            std::pair<std::string, std::string>{"blimp", o.blimp}}) {
    if (path.empty()) continue;
    auto pairs = bench::load_pairs(path);
    std::vector<double> pos(pairs.size()), neg(pairs.size());
    parallel_for(pairs.size(), g.threads, [&](std::size_t i) {
      pos[i] = scorer(pairs[i].positive);
      neg[i] = scorer(pairs[i].negative);
    });
    bench::ScoreTable t;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      t.set(pairs[i].id, bench::Side::Positive, pos[i]);
      t.set(pairs[i].id, bench::Side::Negative, neg[i]);
    }
    auto acc = bench::pair_accuracy(pairs, t);
    report["inputs"][name] = input_entry(path);
    benches[name] = accuracy_json(acc);
    table << name << "  " << fixed(100 * acc.accuracy) << '\n';
  }
  if (!o.simi_dev.empty()) {
    if (o.embeddings.empty()) throw ConfigError("--simi-dev needs --embeddings");
    report["inputs"]["simi_dev"] = input_entry(o.simi_dev);
    report["inputs"]["embeddings"] = input_entry(o.embeddings);
    auto dev = bench::load_similarity(o.simi_dev);
    auto tests = load_tests(o.simi_tests, report["inputs"]);
    auto r = bench::psimi_eval(dev, tests, bench::load_embeddings(o.embeddings), g.threads);
    benches["simi"] = psimi_json(r);
    table << "simi  " << psimi_table(r);
  }
  report["benchmarks"] = benches;
  write_text(resolve_out(g, "report.json"), report.dump(2) + "\n");
  emit(g, report, table.str(), out);
  return 0;
}

log::Level parse_level(const std::string& name) {
  if (name == "debug") return log::Level::Debug;
  if (name == "info") return log::Level::Info;
  if (name == "warn" || name == "warning") return log::Level::Warning;
  if (name == "error") return log::Level::Error;
  if (name == "silent" || name == "off") return log::Level::Silent;
  throw ConfigError("unknown log level '" + name + "'");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"segkit: unsupervised word segmentation and language-model evaluation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  g.threads = default_threads();
  app.add_option("--threads", g.threads, "worker threads")->envname("SEGKIT_THREADS");
  app.add_option("--log-level", g.log_level, "debug|info|warn|error|silent");
  app.add_option("--out-dir", g.out_dir, "directory for relative output paths");
  app.add_option("--report", g.report, "also write the JSON report to this file");
  app.add_flag("--json", g.json_stdout, "print the JSON report instead of a table");

  std::function<int()> action;

  SegmentOpts seg;
  auto* segment = app.add_subcommand("segment", "segment a corpus with DP-Parse");
  segment->add_option("--input", seg.input, "corpus file")->required()->check(CLI::ExistingFile);
  segment->add_option("--kind", seg.kind, "char|phone")->capture_default_str();
  segment->add_option("--marker", seg.marker, "phoneme word-boundary marker")->capture_default_str();
  segment->add_option("--output", seg.output, "segmented corpus")->required();
  segment->add_option("--stats", seg.stats, "iteration statistics JSON (default <output>.stats.json)");
  segment->add_option("--lexicon", seg.lexicon, "write the final token lexicon as TSV");
  segment->add_flag("--eval", seg.eval, "score against the boundaries present in the input");
  add_dp_options(segment, seg.dp);
  segment->callback([&] { action = [&] { return cmd_segment(seg, g, out); }; });

  EvalOpts ev;
  auto* eval = app.add_subcommand("eval-seg", "token and boundary precision/recall/F");
  eval->add_option("--gold", ev.gold)->required()->check(CLI::ExistingFile);
  eval->add_option("--predicted", ev.predicted)->required()->check(CLI::ExistingFile);
  eval->add_option("--kind", ev.kind)->capture_default_str();
  eval->add_option("--marker", ev.marker)->capture_default_str();
  eval->callback([&] { action = [&] { return cmd_eval(ev, g, out); }; });

  TrainOpts tr;
  auto* train = app.add_subcommand("train-ngram", "train a unigram/bigram model");
  train->add_option("--input", tr.input)->required()->check(CLI::ExistingFile);
  train->add_option("--kind", tr.kind)->capture_default_str();
  train->add_option("--marker", tr.marker)->capture_default_str();
  train->add_option("--out", tr.out, "model file")->required();
  train->add_option("--format", tr.format, "tsv|binary")->capture_default_str();
  train->add_flag("--strip", tr.strip, "train without word boundaries");
  add_lm_options(train, tr.lm);
  train->callback([&] { action = [&] { return cmd_train(tr, g, out); }; });

  ScoreOpts sc;
  auto* score = app.add_subcommand("score", "log-probability of each input line");
  score->add_option("--model", sc.model)->required()->check(CLI::ExistingFile);
  score->add_option("--input", sc.input, "lines of text, optionally id<TAB>text")
      ->required()
      ->check(CLI::ExistingFile);
  score->add_option("--output", sc.output, "TSV id<TAB>logprob (default stdout)");
  score->add_option("--marker", sc.marker)->capture_default_str();
  score->callback([&] { action = [&] { return cmd_score(sc, g, out); }; });

  LearnBpeOpts lb;
  auto* lbpe = app.add_subcommand("learn-bpe", "learn BPE merges over symbols");
  lbpe->add_option("--input", lb.input)->required()->check(CLI::ExistingFile);
  lbpe->add_option("--kind", lb.kind)->capture_default_str();
  lbpe->add_option("--marker", lb.marker)->capture_default_str();
  lbpe->add_option("--target", lb.target, "vocabulary size")->capture_default_str();
  lbpe->add_flag("--eow", lb.eow, "append an end-of-word unit to every word");
  lbpe->add_option("--out", lb.out, "merges TSV")->required();
  lbpe->callback([&] { action = [&] { return cmd_learn_bpe(lb, g, out); }; });

  ApplyBpeOpts ab;
  auto* abpe = app.add_subcommand("apply-bpe", "encode a segmented corpus with BPE");
  abpe->add_option("--model", ab.model)->required()->check(CLI::ExistingFile);
  abpe->add_option("--input", ab.input)->required()->check(CLI::ExistingFile);
  abpe->add_option("--output", ab.output, "default stdout");
  abpe->add_option("--marker", ab.marker)->capture_default_str();
  abpe->callback([&] { action = [&] { return cmd_apply_bpe(ab, g, out); }; });

  PairBenchOpts wug, blm;
  for (auto [name, opts] : {std::pair<const char*, PairBenchOpts*>{"bench-wuggy", &wug},
                            std::pair<const char*, PairBenchOpts*>{"bench-blimp", &blm}}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "bench-wuggy"
                                             ? "spot-the-word accuracy"
                                             : "acceptability accuracy");
    sub->add_option("--pairs", opts->pairs, "id<TAB>category<TAB>positive<TAB>negative")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--scorer", opts->scorer, "internal:<n-gram model file>");
    sub->add_option("--scores", opts->scores, "external score TSV");
    sub->add_option("--marker", opts->marker)->capture_default_str();
    std::string cmd = name;
    sub->callback([&, cmd, opts] { action = [&, cmd, opts] { return cmd_pair_bench(cmd, *opts, g, out); }; });
  }

  SimiOpts si;
  auto* simi = app.add_subcommand("bench-simi", "similarity correlation with layer/pooling selection");
  simi->add_option("--dev", si.dev)->required()->check(CLI::ExistingFile);
  simi->add_option("--test", si.tests, "[name=]file, repeatable");
  simi->add_option("--embeddings", si.embeddings)->required()->check(CLI::ExistingFile);
  simi->callback([&] { action = [&] { return cmd_simi(si, g, out); }; });

  BalanceOpts ba;
  auto* bal = app.add_subcommand("balance", "choose nonwords or pairs so n-gram scorers sit at chance");
  bal->add_option("--candidates", ba.candidates, "word<TAB>stratum<TAB>cand1,cand2,...");
  bal->add_option("--pairs", ba.pairs, "pair pool (subset mode)");
  bal->add_option("--per-category", ba.per_category, "pairs kept per category in subset mode");
  bal->add_option("--scorer", ba.scorers, "n-gram model file, repeatable")->required();
  bal->add_option("--seed", ba.seed)->envname("SEGKIT_SEED")->capture_default_str();
  bal->add_option("--out", ba.out, "selected pairs TSV")->required();
  bal->add_option("--marker", ba.marker)->capture_default_str();
  bal->callback([&] { action = [&] { return cmd_balance(ba, g, out); }; });

  PipelineOpts pl;
  auto* pipe = app.add_subcommand(
      "pipeline", "strip boundaries, segment, train an n-gram model, run the benchmarks");
  pipe->add_option("--input", pl.input, "corpus with reference boundaries")
      ->required()
      ->check(CLI::ExistingFile);
  pipe->add_option("--kind", pl.kind)->capture_default_str();
  pipe->add_option("--marker", pl.marker)->capture_default_str();
  pipe->add_option("--wuggy", pl.wuggy, "spot-the-word pairs");
  pipe->add_option("--blimp", pl.blimp, "acceptability pairs");
  pipe->add_option("--simi-dev", pl.simi_dev, "similarity dev set");
  pipe->add_option("--simi-test", pl.simi_tests, "[name=]file, repeatable");
  pipe->add_option("--embeddings", pl.embeddings, "embedding file for the similarity task");
  add_dp_options(pipe, pl.dp);
  pl.lm.mode = "word-fallback";
  add_lm_options(pipe, pl.lm, "lm-");
  pipe->callback([&] { action = [&] { return cmd_pipeline(pl, g, out); }; });

  try {
    // CLI11 consumes the argument list back to front, without argv[0]
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    log::set_level(parse_level(g.log_level));
    if (g.threads == 0) g.threads = 1;
    return action ? action() : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace segkit::cli
