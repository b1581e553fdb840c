#include "segkit/ngram.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "segkit/error.hpp"
#include "segkit/util.hpp"

namespace segkit {

namespace {

constexpr char kTsvMagic[] = "#segkit-ngram";
constexpr char kBinaryMagic[8] = {'S', 'G', 'K', 'N', 'G', 'R', 'M', '\x01'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 8);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), bytes);
  if (!in) throw ParseError("truncated binary n-gram model");
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

NGramModel::NGramModel(Tokenizer tokenizer, int order, double add_k)
    : tokenizer_(std::move(tokenizer)), order_(order), add_k_(add_k) {
  if (order_ != 1 && order_ != 2) throw ConfigError("n-gram order must be 1 or 2");
  if (!(add_k_ >= 0) || !std::isfinite(add_k_)) {
    throw ConfigError("add-k smoothing constant must be finite and >= 0");
  }
  unigrams_.assign(vocab_size(), 0);
  contexts_.assign(vocab_size(), 0);
}

void NGramModel::check_unit(UnitId u) const {
  if (u >= vocab_size()) {
    throw DomainError("unit id " + std::to_string(u) + " outside model vocabulary");
  }
}

void NGramModel::observe(std::span<const UnitId> units) {
  UnitId prev = tokenizer_.eos();
  auto emit = [&](UnitId u) {
    check_unit(u);
    ++unigrams_[u];
    ++total_;
    ++contexts_[prev];
    ++bigrams_[key(prev, u)];
    prev = u;
  };
  for (UnitId u : units) emit(u);
  emit(tokenizer_.eos());
}

std::uint64_t NGramModel::unigram_count(UnitId u) const {
  check_unit(u);
  return unigrams_[u];
}

std::uint64_t NGramModel::bigram_count(UnitId context, UnitId u) const {
  auto it = bigrams_.find(key(context, u));
  return it == bigrams_.end() ? 0 : it->second;
}

std::uint64_t NGramModel::context_count(UnitId context) const {
  check_unit(context);
  return contexts_[context];
}

double NGramModel::prob(UnitId u, UnitId context) const {
  check_unit(u);
  const double v = static_cast<double>(vocab_size());
  if (order_ == 1) {
    return (static_cast<double>(unigrams_[u]) + add_k_) /
           (static_cast<double>(total_) + add_k_ * v);
  }
  check_unit(context);
  const double denom = static_cast<double>(contexts_[context]) + add_k_ * v;
  if (denom == 0) return 0.0;
  return (static_cast<double>(bigram_count(context, u)) + add_k_) / denom;
}

double NGramModel::log_prob(std::span<const UnitId> units) const {
  double lp = 0;
  UnitId prev = tokenizer_.eos();
  for (UnitId u : units) {
    lp += std::log(prob(u, prev));
    prev = u;
  }
  lp += std::log(prob(tokenizer_.eos(), prev));
  return lp;
}

double NGramModel::score(const Sentence& sentence) const {
  return log_prob(tokenizer_.tokenize(sentence));
}

double NGramModel::score_text(std::string_view line,
                              std::string_view marker) const {
  return log_prob(tokenizer_.tokenize_text(line, marker));
}

void NGramModel::save(std::ostream& out, FileFormat format) const {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> bi(bigrams_.begin(),
                                                          bigrams_.end());
  std::sort(bi.begin(), bi.end());
  std::ostringstream header;
  header << "order\t" << order_ << '\n';
  header << "add_k\t" << format_double(add_k_) << '\n';
  tokenizer_.write_description(header);

  if (format == FileFormat::Tsv) {
    out << kTsvMagic << '\t' << kFormatVersion << '\n' << header.str();
    for (std::size_t u = 0; u < unigrams_.size(); ++u) {
      if (unigrams_[u]) out << "uni\t" << u << '\t' << unigrams_[u] << '\n';
    }
    for (auto [k, c] : bi) {
      out << "bi\t" << (k >> 32) << '\t' << (k & 0xffffffffu) << '\t' << c << '\n';
    }
    return;
  }
  out.write(kBinaryMagic, sizeof kBinaryMagic);
  put_u32(out, kFormatVersion);
  std::string h = header.str();
  put_u64(out, h.size());
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  put_u64(out, unigrams_.size());
  for (auto c : unigrams_) put_u64(out, c);
  put_u64(out, bi.size());
  for (auto [k, c] : bi) {
    put_u64(out, k);
    put_u64(out, c);
  }
}

void NGramModel::save(const std::string& path, FileFormat format) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  save(out, format);
  if (!out) throw IoError("write failure on " + path);
}

namespace {

NGramModel build_from_header(const std::vector<std::vector<std::string>>& lines) {
  int order = 0;
  double k = -1;
  for (const auto& f : lines) {
    if (f[0] == "order" && f.size() == 2) order = std::stoi(f[1]);
    if (f[0] == "add_k" && f.size() == 2) k = std::stod(f[1]);
  }
  if (order == 0 || k < 0) throw ParseError("n-gram model lacks order/add_k");
  return NGramModel(Tokenizer::from_description(lines), order, k);
}

std::vector<std::vector<std::string>> split_records(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    for (auto f : split(line, '\t')) fields.emplace_back(f);
    out.push_back(std::move(fields));
  }
  return out;
}

}  // namespace

NGramModel NGramModel::load(std::istream& in) {
  char magic[8] = {};
  in.read(magic, 8);
  if (in.gcount() == 8 && std::memcmp(magic, kBinaryMagic, 8) == 0) {
    auto version = get_le(in, 4);
    if (version != kFormatVersion) {
      throw ParseError("unsupported n-gram model version " + std::to_string(version));
    }
    auto hlen = get_le(in, 8);
    std::string header(hlen, '\0');
    in.read(header.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw ParseError("truncated binary n-gram model header");
    NGramModel model = build_from_header(split_records(header));
    auto v = get_le(in, 8);
    if (v != model.vocab_size()) throw ParseError("vocabulary size mismatch");
    for (std::size_t u = 0; u < v; ++u) {
      model.unigrams_[u] = get_le(in, 8);
      model.total_ += model.unigrams_[u];
    }
    auto nbi = get_le(in, 8);
    for (std::uint64_t i = 0; i < nbi; ++i) {
      auto k = get_le(in, 8);
      auto c = get_le(in, 8);
      model.bigrams_[k] = c;
      model.contexts_.at(k >> 32) += c;
    }
    return model;
  }

  auto got = static_cast<std::size_t>(in.gcount());
  in.clear();
  std::string rest((std::istreambuf_iterator<char>(in)), {});
  std::string text = std::string(magic, got) + rest;
  auto records = split_records(text);
  if (records.empty() || records[0][0] != kTsvMagic) {
    throw ParseError("not an n-gram model file");
  }
  std::vector<std::vector<std::string>> header;
  std::size_t i = 1;
  for (; i < records.size(); ++i) {
    if (records[i][0] == "uni" || records[i][0] == "bi") break;
    header.push_back(records[i]);
  }
  NGramModel model = build_from_header(header);
  for (; i < records.size(); ++i) {
    const auto& f = records[i];
    try {
      if (f[0] == "uni" && f.size() == 3) {
        auto u = std::stoul(f[1]);
        model.check_unit(static_cast<UnitId>(u));
        model.unigrams_[u] = std::stoull(f[2]);
        model.total_ += model.unigrams_[u];
      } else if (f[0] == "bi" && f.size() == 4) {
        auto a = static_cast<UnitId>(std::stoul(f[1]));
        auto b = static_cast<UnitId>(std::stoul(f[2]));
        model.check_unit(a);
        model.check_unit(b);
        auto c = std::stoull(f[3]);
        model.bigrams_[key(a, b)] = c;
        model.contexts_[a] += c;
      } else {
        throw ParseError("unexpected record '" + f[0] + "'", i + 1);
      }
    } catch (const std::logic_error&) {
      throw ParseError("bad count record", i + 1);
    }
  }
  return model;
}

NGramModel NGramModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open n-gram model " + path);
  return load(in);
}

NGramModel train_ngram(const Corpus& corpus, int order,
                       const Tokenizer& tokenizer, double add_k) {
  if (corpus.sentences.empty()) throw PreconditionError("cannot train on an empty corpus");
  NGramModel model(tokenizer, order, add_k);
  for (const auto& s : corpus.sentences) model.observe(tokenizer.tokenize(s));
  return model;
}

NGramModel train_ngram(const Corpus& corpus, int order,
                       const TokenizationMode& mode, double add_k,
                       const BpeModel* bpe) {
  if (corpus.sentences.empty()) throw PreconditionError("cannot train on an empty corpus");
  if (mode.needs_boundaries() && !corpus.has_visible_boundaries()) {
    throw ConfigError(std::string(to_string(mode.unit)) +
                      " mode needs a corpus with word boundaries");
  }
  return train_ngram(corpus, order, make_tokenizer(corpus, mode, bpe), add_k);
}

double default_add_k(UnitMode mode) {
  return mode == UnitMode::Char || mode == UnitMode::Phone ? 1.0 : 0.1;
}

}  // namespace segkit
