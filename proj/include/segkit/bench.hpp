#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace segkit::bench {

// One forced-choice item: a spot-the-word pair or an acceptability pair.
struct MinimalPair {
  std::string id;
  std::string category;
  std::string positive;
  std::string negative;
};

enum class Side { Positive, Negative };
std::string_view to_string(Side side);
Side parse_side(std::string_view name);

class ScoreTable {
 public:
  void set(const std::string& id, Side side, double score);
  std::optional<double> get(const std::string& id, Side side) const;
  std::size_t size() const noexcept { return scores_.size(); }
  const std::map<std::pair<std::string, Side>, double>& entries() const noexcept {
    return scores_;
  }

 private:
  std::map<std::pair<std::string, Side>, double> scores_;
};

struct CategoryAccuracy {
  double accuracy = 0;
  std::size_t pairs = 0;
};

struct AccuracyReport {
  double accuracy = 0;
  std::size_t pairs = 0;
  std::map<std::string, CategoryAccuracy> per_category;
};

// Mean of [score(positive) > score(negative)], ties credited 0.5.
// Throws CoverageError listing the ids without both scores.
AccuracyReport pair_accuracy(const std::vector<MinimalPair>& pairs,
                             const ScoreTable& scores);

// Scores both sides of every pair with an internal scorer.
ScoreTable score_pairs(const std::vector<MinimalPair>& pairs,
                       const std::function<double(std::string_view)>& scorer);

// TSV: id, category, positive, negative.
std::vector<MinimalPair> read_pairs(std::istream& in);
std::vector<MinimalPair> load_pairs(const std::string& path);
void write_pairs(const std::vector<MinimalPair>& pairs, std::ostream& out);

// TSV: id, side (positive|negative), score. Duplicates: the last line wins
// and a warning is logged.
ScoreTable read_scores(std::istream& in);
ScoreTable load_scores(const std::string& path);
void write_scores(const ScoreTable& table, std::ostream& out);

enum class Pooling { Mean, Max, Min };
inline constexpr Pooling kPoolings[] = {Pooling::Mean, Pooling::Max, Pooling::Min};
std::string_view to_string(Pooling p);

using Vector = std::vector<double>;

// Element-wise reduction across positions.
Vector pool(std::span<const Vector> positions, Pooling fn);

// Cosine similarity; 0 (with a warning) when either vector is all zeros.
double cosine(std::span<const double> u, std::span<const double> v);

// Ranks starting at 1; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks. Throws DomainError on unequal
// lengths, fewer than two items, or a constant list.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct SimilarityItem {
  std::string word_a;
  std::string word_b;
  double human_score = 0;
};

// TSV: word_a, word_b, score in [0, 10]. Pairs that repeat, in either
// order, are merged into one item with the mean score.
std::vector<SimilarityItem> read_similarity(std::istream& in);
std::vector<SimilarityItem> load_similarity(const std::string& path);

// Per-word, per-layer hidden vectors from an external model.
class EmbeddingSet {
 public:
  EmbeddingSet(std::size_t layers, std::size_t width);

  std::size_t layers() const noexcept { return layers_; }
  std::size_t width() const noexcept { return width_; }

  void set(const std::string& word, std::size_t layer, std::size_t position,
           Vector v);
  bool contains(const std::string& word) const;
  // Positions of `word` at `layer`, in order. Throws CoverageError if absent.
  const std::vector<Vector>& positions(const std::string& word, std::size_t layer) const;
  std::vector<std::string> words() const;

  // Throws ParseError if some (word, layer) has gaps in its positions or
  // misses a layer.
  void validate() const;

 private:
  std::size_t layers_;
  std::size_t width_;
  std::map<std::string, std::vector<std::vector<Vector>>> table_;
};

// Header `layers=<L> width=<D>`, then `word<TAB>layer<TAB>position<TAB>d0 ... d(D-1)`.
EmbeddingSet read_embeddings(std::istream& in);
EmbeddingSet load_embeddings(const std::string& path);
void write_embeddings(const EmbeddingSet& set, std::ostream& out);

struct GridCell {
  std::size_t layer = 0;
  Pooling pooling = Pooling::Mean;
  // Empty when the correlation is undefined (constant similarities).
  std::optional<double> dev_rho;
};

struct PsimiResult {
  std::size_t layer = 0;
  Pooling pooling = Pooling::Mean;
  double dev_rho = 0;
  std::vector<std::pair<std::string, double>> test_rho;
  std::vector<GridCell> grid;
};

// Picks the (layer, pooling) cell with the best dev correlation, ties going
// to the lower layer and then mean < max < min, and reports each test set at
// that cell only.
PsimiResult psimi_eval(
    const std::vector<SimilarityItem>& dev,
    const std::vector<std::pair<std::string, std::vector<SimilarityItem>>>& tests,
    const EmbeddingSet& embeddings, unsigned threads = 1);

}  // namespace segkit::bench
