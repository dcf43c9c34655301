#pragma once

// Word-embedding ingestion, decision-direction debiasing, and the bias
// metrics used to evaluate it (bias-by-neighbour, profession neighbour
// counts, kernel recoverability probe, WEAT).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "d4/d4.hpp"
#include "d4/linalg.hpp"

namespace d4 {

enum class EmbeddingFormat { word2vec_binary, text };

EmbeddingFormat embedding_format_from_string(const std::string& name);

class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  // Throws ConfigError on duplicate words or a vocab/row count mismatch.
  EmbeddingSet(std::vector<std::string> vocab, Matrix vectors);

  Index size() const { return vectors_.rows(); }
  Index dim() const { return vectors_.cols(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const Matrix& vectors() const { return vectors_; }
  const std::string& word(Index i) const { return vocab_[static_cast<std::size_t>(i)]; }

  std::optional<Index> find(const std::string& word) const;
  Index index_of(const std::string& word) const;  // throws MissingWord
  Vector vector(const std::string& word) const { return vectors_.row(index_of(word)); }

  // True when every row has unit norm within 1e-6.
  bool normalized() const;

  // Replace all vectors, keeping the vocabulary.
  EmbeddingSet with_vectors(Matrix vectors) const;

  // Layout details recorded by the loaders so that save reproduces the file.
  bool binary_record_newline = true;
  bool text_header = true;

 private:
  std::vector<std::string> vocab_;
  Matrix vectors_;
  std::unordered_map<std::string, Index> index_;
};

struct LoadReport {
  std::vector<std::string> duplicates;  // later occurrences, skipped
};

// word2vec binary: "<count> <dim>\n" then per record the word, one space,
// dim little-endian float32 values and an optional newline.
EmbeddingSet read_word2vec_binary(std::istream& in, LoadReport* report = nullptr);
void write_word2vec_binary(std::ostream& out, const EmbeddingSet& emb);

// Text: "word v1 ... vd" per line, optional "<count> <dim>" header line.
EmbeddingSet read_embedding_text(std::istream& in, LoadReport* report = nullptr);
void write_embedding_text(std::ostream& out, const EmbeddingSet& emb);

EmbeddingSet load_embeddings(const std::string& path, EmbeddingFormat format,
                             LoadReport* report = nullptr);
void save_embeddings(const std::string& path, const EmbeddingSet& emb, EmbeddingFormat format);

// Rows scaled to unit length; zero rows stay zero.
Matrix normalized_rows(const Matrix& X);

// --- word lists -------------------------------------------------------------

struct GenderLexicon {
  std::vector<std::string> masculine;
  std::vector<std::string> feminine;
  std::vector<std::pair<std::string, std::string>> pairs;  // (feminine, masculine)

  void validate() const;  // lists must be disjoint
};

struct WeatSpec {
  std::string name;
  std::vector<std::string> target_x;
  std::vector<std::string> target_y;
  std::vector<std::string> attribute_a;
  std::vector<std::string> attribute_b;

  void validate() const;  // all four sets non-empty
};

// Named word sets from either a JSON object of string arrays or a text file
// with "[name]" section headers, one entry per line and '#' comments. Words
// before the first header belong to the section "".
std::vector<std::pair<std::string, std::vector<std::string>>> read_word_sets(
    const std::string& path);

// Sections "masculine", "feminine" and optionally "pairs" (lines of two words).
GenderLexicon load_lexicon(const std::string& path);
// Sections "X", "Y", "A", "B" and optionally "name".
WeatSpec load_weat_spec(const std::string& path);
// All words of all sections, in file order.
std::vector<std::string> load_word_list(const std::string& path);

void write_lexicon(const std::string& path, const GenderLexicon& lex);
void write_weat_spec(const std::string& path, const WeatSpec& spec);
void write_word_list(const std::string& path, const std::vector<std::string>& words);

// --- debiasing --------------------------------------------------------------

// normalize(v_first - v_second), on unit-normalized vectors when `normalize`.
Vector gender_direction(const EmbeddingSet& emb, const std::pair<std::string, std::string>& pair,
                        bool normalize = true);

// Logistic learner (lambda = 1), 6 iterations, fixed stopping.
D4Config default_debias_config();

struct DebiasOptions {
  D4Config d4 = default_debias_config();
  bool normalize = true;  // fit directions on unit-normalized vectors
  int probe_folds = 5;    // linear probe CV reported per iteration
};

struct DebiasResult {
  EmbeddingSet embedding;  // every vector with the learned span removed
  D4Model model;
  std::vector<std::string> missing;
  Index masculine_used = 0;
  Index feminine_used = 0;
  // Linear-probe CV accuracy on the lexicon words after removing 0..k directions.
  std::vector<double> probe_cv;
};

// Labels masculine words -1 and feminine words +1, fits D4 on their vectors
// and projects the entire vocabulary. Missing lexicon words are skipped.
// Zero iterations return the embedding unchanged.
// Throws EmptyClass when a side has no vocabulary words.
DebiasResult debias(const EmbeddingSet& emb, const GenderLexicon& lex,
                    const DebiasOptions& options);

// --- metrics ----------------------------------------------------------------

struct BiasByNeighbourResult {
  double accuracy = 0.0;
  std::vector<Index> selected;  // word indices, top side first
  Vector side;                  // +1 for the positive extreme, -1 for the negative
  Vector dots;                  // projection of each selected word on the direction
  std::vector<int> assignment;  // two-means cluster of each selected word
};

struct BiasByNeighbourOptions {
  Index n_extreme = 500;
  std::uint64_t seed = 0;
  bool normalize = true;
  // Words are ranked in this embedding (same vocabulary) when given, e.g. the
  // original embedding when clustering a debiased one.
  const EmbeddingSet* ranking = nullptr;
  // Restrict candidates to the first N vocabulary entries (0 = all).
  Index top_n = 0;
};

// Ranks words by their dot product with `direction`, takes the n_extreme most
// positive and most negative, clusters them with two-means and reports how
// well the clusters recover the side labels. Throws ConfigError when fewer
// than 2 * n_extreme candidates exist.
BiasByNeighbourResult bias_by_neighbour(const EmbeddingSet& emb, const Vector& direction,
                                        const BiasByNeighbourOptions& options = {});

struct ProfessionRecord {
  std::string word;
  double dot = 0.0;
  bool positive = false;  // dot > 0: counted among the biased professions
  Index biased_neighbours = 0;
};

struct ProfessionReport {
  std::vector<ProfessionRecord> records;
  std::vector<std::string> missing;
};

// For each profession, the number of positively-biased professions among its
// k nearest profession neighbours by cosine (self excluded).
ProfessionReport profession_neighbour_counts(const EmbeddingSet& emb,
                                             const std::vector<std::string>& professions,
                                             const Vector& direction, Index k = 100,
                                             bool normalize = true);

struct WeatWordScore {
  std::string word;
  char set = 'X';  // 'X' or 'Y'
  double s = 0.0;
};

struct WeatResult {
  double effect_size = 0.0;
  double mean_diff = 0.0;  // mean_X s - mean_Y s
  std::vector<WeatWordScore> scores;
  std::vector<std::string> missing;
};

// s(w, A, B) = mean_a cos(w, a) - mean_b cos(w, b);
// effect = (mean_X s - mean_Y s) / std_{X u Y} s (sample std). Positive means
// X leans toward A. Throws EmptySetAfterLookup when a set has no known words.
WeatResult weat(const EmbeddingSet& emb, const WeatSpec& spec);

enum class ProbeKernel { rbf, linear };

ProbeKernel probe_kernel_from_string(const std::string& name);

struct ProbeOptions {
  ProbeKernel kernel = ProbeKernel::rbf;
  std::optional<double> gamma;  // RBF bandwidth; default 1 / (d * mean feature variance)
  double ridge_alpha = 1.0;
  int folds = 5;
  std::uint64_t seed = 0;
  bool normalize = true;
};

struct ProbeResult {
  double accuracy = 0.0;
  std::vector<double> fold_accuracy;
  Index n_positive = 0;
  Index n_negative = 0;
  std::vector<std::string> missing;
};

// Stratified k-fold accuracy of a kernel ridge classifier separating the
// feminine (+1) from the masculine (-1) lexicon vectors.
ProbeResult recoverability_probe(const EmbeddingSet& emb, const GenderLexicon& lex,
                                 const ProbeOptions& options = {});

// Top-k words by cosine similarity, self excluded, ties broken by index.
std::vector<std::pair<std::string, double>> nearest_neighbours(const EmbeddingSet& emb,
                                                               const std::string& word, Index k);

// --- planted fixture --------------------------------------------------------

struct PlantedConfig {
  Index dim = 50;
  Index masculine = 200;
  Index feminine = 200;
  Index professions = 300;
  Index weat_pairs = 40;
  Index neutral = 620;  // other bias-carrying neutral words
  double gender_offset = 1.0;
  double noise = 0.1;  // per-dimension std of the non-bias component
  std::uint64_t seed = 0;
};

// Synthetic embedding with a known bias direction: gendered words sit at
// +-gender_offset along it, professions and neutral words carry a weaker bias
// of random sign, and WEAT targets come in pairs that differ only along it.
struct PlantedEmbedding {
  EmbeddingSet embedding;
  GenderLexicon lexicon;
  WeatSpec weat;
  std::vector<std::string> professions;
  Vector bias_direction;  // unit; masculine words lie on the positive side
};

PlantedEmbedding make_planted_embedding(const PlantedConfig& config = {});

}  // namespace d4
