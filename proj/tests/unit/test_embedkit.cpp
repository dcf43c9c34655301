#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "d4/embedkit.hpp"
#include "d4/errors.hpp"
#include "test_util.hpp"

using namespace d4;
using d4::testing::read_bytes;
using d4::testing::TempDir;
using d4::testing::write_text;

namespace {

std::string le_floats(std::initializer_list<float> values) {
  std::string out;
  for (float v : values) {
    unsigned char b[4];
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.append(reinterpret_cast<const char*>(b), 4);
  }
  return out;
}

EmbeddingSet make_set(std::vector<std::string> words, const Matrix& M) {
  return EmbeddingSet(std::move(words), M);
}

const PlantedEmbedding& planted() {
  static const PlantedEmbedding p = [] {
    PlantedConfig c;
    c.seed = 3;
    return make_planted_embedding(c);
  }();
  return p;
}

DebiasOptions iterations(int k) {
  DebiasOptions o;
  o.d4.max_iterations = k;
  return o;
}

double variance(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

}  // namespace

// --- file formats -------------------------------------------------------------

TEST(Word2VecBinary, MinimalFile) {
  std::istringstream in("2 3\ncat " + le_floats({1, 2, 3}) + "\ndog " + le_floats({-1, 0.5f, 0}) + "\n");
  const EmbeddingSet e = read_word2vec_binary(in);
  ASSERT_EQ(e.size(), 2);
  ASSERT_EQ(e.dim(), 3);
  EXPECT_EQ(e.word(1), "dog");
  EXPECT_EQ(e.vector("cat"), Vector(Eigen::Vector3d(1, 2, 3)));
  EXPECT_DOUBLE_EQ(e.vector("dog")[1], 0.5);
  EXPECT_TRUE(e.binary_record_newline);
}

TEST(Word2VecBinary, RecordsWithoutNewlines) {
  std::istringstream in("2 1\na " + le_floats({1}) + "b " + le_floats({2}));
  const EmbeddingSet e = read_word2vec_binary(in);
  EXPECT_EQ(e.vocab(), (std::vector<std::string>{"a", "b"}));
  EXPECT_FALSE(e.binary_record_newline);
}

TEST(Word2VecBinary, TruncatedRecordNamesTheWord) {
  std::istringstream in("2 3\ncat " + le_floats({1, 2, 3}) + "\ndog " + le_floats({1}));
  try {
    read_word2vec_binary(in);
    FAIL() << "expected TruncatedRecord";
  } catch (const TruncatedRecord& e) {
    EXPECT_NE(std::string(e.what()).find("dog"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos);
  }
}

TEST(Word2VecBinary, BadHeader) {
  std::istringstream in("three 3\n");
  EXPECT_THROW(read_word2vec_binary(in), MalformedHeader);
}

TEST(Word2VecBinary, DuplicatesKeepFirst) {
  std::istringstream in("3 1\na " + le_floats({1}) + "\na " + le_floats({2}) + "\nb " + le_floats({3}) + "\n");
  LoadReport report;
  const EmbeddingSet e = read_word2vec_binary(in, &report);
  EXPECT_EQ(e.size(), 2);
  EXPECT_DOUBLE_EQ(e.vector("a")[0], 1.0);
  EXPECT_EQ(report.duplicates, std::vector<std::string>{"a"});
}

TEST(Word2VecBinary, ByteRoundTrip) {
  TempDir dir;
  const std::string bytes = "2 2\nx " + le_floats({0.1f, -7.25f}) + "\ny " + le_floats({3e-8f, 1e20f}) + "\n";
  write_text(dir.file("in.bin"), bytes);
  const EmbeddingSet e = load_embeddings(dir.file("in.bin"), EmbeddingFormat::word2vec_binary);
  save_embeddings(dir.file("out.bin"), e, EmbeddingFormat::word2vec_binary);
  EXPECT_EQ(read_bytes(dir.file("out.bin")), bytes);
}

TEST(TextEmbedding, HeaderlessLine) {
  std::istringstream in("the 0.1 -0.2 0.3\nof 1 2 3\n");
  const EmbeddingSet e = read_embedding_text(in);
  EXPECT_EQ(e.size(), 2);
  EXPECT_EQ(e.dim(), 3);
  EXPECT_DOUBLE_EQ(e.vector("the")[1], -0.2);
  EXPECT_FALSE(e.text_header);
}

TEST(TextEmbedding, HeaderCountEnforced) {
  std::istringstream in("3 2\na 1 2\nb 3 4\n");
  EXPECT_THROW(read_embedding_text(in), TruncatedRecord);
  std::istringstream ragged("a 1 2\nb 3\n");
  EXPECT_THROW(read_embedding_text(ragged), ParseError);
}

TEST(TextEmbedding, RoundTrip) {
  TempDir dir;
  const std::string text = "2 2\nx 0.1 -7.25\ny 3e-08 1e+20\n";
  write_text(dir.file("in.txt"), text);
  const EmbeddingSet e = load_embeddings(dir.file("in.txt"), EmbeddingFormat::text);
  save_embeddings(dir.file("out.txt"), e, EmbeddingFormat::text);
  const EmbeddingSet back = load_embeddings(dir.file("out.txt"), EmbeddingFormat::text);
  EXPECT_EQ(back.vectors(), e.vectors());
  EXPECT_EQ(back.vocab(), e.vocab());
}

TEST(LoadEmbeddings, MissingFileNamesPath) {
  try {
    load_embeddings("/nonexistent/emb.bin", EmbeddingFormat::word2vec_binary);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/emb.bin"), std::string::npos);
  }
}

TEST(EmbeddingSet, Lookup) {
  const EmbeddingSet e = make_set({"a", "b"}, Matrix::Identity(2, 2));
  EXPECT_EQ(e.index_of("b"), 1);
  EXPECT_FALSE(e.find("c"));
  EXPECT_THROW(e.index_of("c"), MissingWord);
  EXPECT_TRUE(e.normalized());
  EXPECT_THROW(make_set({"a", "a"}, Matrix::Identity(2, 2)), ConfigError);
}

// --- word lists -------------------------------------------------------------

TEST(WordSets, TextSections) {
  TempDir dir;
  write_text(dir.file("lex.txt"), "# comment\n[masculine]\nhe\nman\n\n[feminine]\nshe\nwoman\n[pairs]\nshe he\n");
  const GenderLexicon lex = load_lexicon(dir.file("lex.txt"));
  EXPECT_EQ(lex.masculine, (std::vector<std::string>{"he", "man"}));
  EXPECT_EQ(lex.feminine, (std::vector<std::string>{"she", "woman"}));
  ASSERT_EQ(lex.pairs.size(), 1u);
  EXPECT_EQ(lex.pairs[0].first, "she");
}

TEST(WordSets, Json) {
  TempDir dir;
  write_text(dir.file("w.json"), R"({"X": ["a"], "Y": ["b"], "A": ["c", "d"], "B": "e", "name": "t"})");
  const WeatSpec s = load_weat_spec(dir.file("w.json"));
  EXPECT_EQ(s.attribute_a.size(), 2u);
  EXPECT_EQ(s.attribute_b, std::vector<std::string>{"e"});
  EXPECT_EQ(s.name, "t");
  write_text(dir.file("list.json"), R"(["p", "q"])");
  EXPECT_EQ(load_word_list(dir.file("list.json")), (std::vector<std::string>{"p", "q"}));
}

TEST(WordSets, WriteAndReadBack) {
  TempDir dir;
  GenderLexicon lex;
  lex.masculine = {"he"};
  lex.feminine = {"she"};
  lex.pairs = {{"she", "he"}};
  write_lexicon(dir.file("l.txt"), lex);
  const GenderLexicon back = load_lexicon(dir.file("l.txt"));
  EXPECT_EQ(back.masculine, lex.masculine);
  EXPECT_EQ(back.pairs, lex.pairs);
}

TEST(WordSets, OverlappingLexiconRejected) {
  GenderLexicon lex;
  lex.masculine = {"x"};
  lex.feminine = {"x"};
  EXPECT_THROW(lex.validate(), ConfigError);
}

// --- debiasing ----------------------------------------------------------------

TEST(GenderDirection, AxisPair) {
  Matrix M(2, 3);
  M << 1, 0, 0,
      -1, 0, 0;
  const EmbeddingSet e = make_set({"she", "he"}, M);
  const Vector g = gender_direction(e, {"she", "he"});
  EXPECT_NEAR(g[0], 1.0, 1e-15);
  EXPECT_NEAR(g.tail(2).norm(), 0.0, 1e-15);
}

TEST(GenderDirection, IdenticalVectorsThrow) {
  const EmbeddingSet e = make_set({"a", "b"}, Matrix::Ones(2, 3));
  EXPECT_THROW(gender_direction(e, {"a", "b"}), ZeroVector);
}

TEST(Debias, ZeroIterationsUnchanged) {
  const auto& p = planted();
  const DebiasResult r = debias(p.embedding, p.lexicon, iterations(0));
  EXPECT_EQ(r.embedding.vectors(), p.embedding.vectors());
  EXPECT_EQ(r.model.size(), 0);
}

TEST(Debias, OneIterationRemovesLinearSignal) {
  const auto& p = planted();
  const DebiasResult r = debias(p.embedding, p.lexicon, iterations(1));
  ASSERT_EQ(r.probe_cv.size(), 2u);
  EXPECT_GT(r.probe_cv[0], 0.99);
  EXPECT_LE(r.probe_cv[1], 0.6);
  EXPECT_GT(std::abs(r.model.basis.vector(0).dot(p.bias_direction)), 0.9);
  EXPECT_EQ(r.masculine_used, 200);
  EXPECT_EQ(r.feminine_used, 200);
}

TEST(Debias, ProbeAccuracyNeverClimbsBack) {
  const auto& p = planted();
  const DebiasResult r = debias(p.embedding, p.lexicon, iterations(5));
  double envelope = r.probe_cv.front();
  for (double acc : r.probe_cv) {
    EXPECT_LE(acc, envelope + 0.03);
    envelope = std::min(envelope, acc);
  }
}

TEST(Debias, WordsOrthogonalToTheSpanAreUntouched) {
  const auto& p = planted();
  const DebiasResult first = debias(p.embedding, p.lexicon, iterations(3));
  // A vector orthogonal to every learned direction, appended as a new word.
  std::mt19937_64 rng(60);
  Vector u = d4::testing::gaussian(p.embedding.dim(), 1, rng).col(0);
  u = project_rows_orthogonal(u.transpose(), first.model.basis).transpose();
  std::vector<std::string> vocab = p.embedding.vocab();
  vocab.push_back("orthogonal_word");
  Matrix M(p.embedding.size() + 1, p.embedding.dim());
  M << p.embedding.vectors(), u.transpose();
  const DebiasResult second = debias(EmbeddingSet(vocab, M), p.lexicon, iterations(3));
  EXPECT_LE((second.embedding.vector("orthogonal_word") - u).norm(), 1e-10);
}

TEST(Debias, MissingWordsReported) {
  const auto& p = planted();
  GenderLexicon lex = p.lexicon;
  lex.masculine.push_back("not_a_word");
  const DebiasResult r = debias(p.embedding, lex, iterations(1));
  EXPECT_EQ(r.missing, std::vector<std::string>{"not_a_word"});
  lex.feminine = {"also_missing"};
  EXPECT_THROW(debias(p.embedding, lex, iterations(1)), EmptyClass);
}

// --- metrics ------------------------------------------------------------------

TEST(BiasByNeighbour, PlantedBeforeAndAfter) {
  const auto& p = planted();
  const Vector g = gender_direction(p.embedding, {"he", "she"});
  BiasByNeighbourOptions o;
  o.n_extreme = 100;
  EXPECT_GE(bias_by_neighbour(p.embedding, g, o).accuracy, 0.99);
  const DebiasResult r = debias(p.embedding, p.lexicon, iterations(3));
  o.ranking = &p.embedding;
  EXPECT_LE(bias_by_neighbour(r.embedding, g, o).accuracy, 0.6);
}

TEST(BiasByNeighbour, InsufficientVocabulary) {
  const EmbeddingSet e = make_set({"a", "b", "c"}, Matrix::Identity(3, 3));
  BiasByNeighbourOptions o;
  o.n_extreme = 2;
  try {
    bias_by_neighbour(e, Vector::Unit(3, 0), o);
    FAIL();
  } catch (const ConfigError& err) {
    EXPECT_NE(std::string(err.what()).find("insufficient vocabulary"), std::string::npos);
  }
}

TEST(Professions, SingleProfession) {
  const EmbeddingSet e = make_set({"nurse", "x"}, Matrix::Identity(2, 2));
  const ProfessionReport r = profession_neighbour_counts(e, {"nurse", "pilot"}, Vector::Unit(2, 0), 100);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].biased_neighbours, 0);
  EXPECT_EQ(r.missing, std::vector<std::string>{"pilot"});
  EXPECT_THROW(profession_neighbour_counts(e, {"pilot"}, Vector::Unit(2, 0)), EmptySetAfterLookup);
}

TEST(Professions, IdenticalPointsCapCounts) {
  const EmbeddingSet e = make_set({"a", "b", "c"}, Matrix::Ones(3, 2));
  const ProfessionReport r = profession_neighbour_counts(e, {"a", "b", "c"}, Vector::Unit(2, 0), 10);
  for (const auto& rec : r.records) EXPECT_EQ(rec.biased_neighbours, 2);
}

TEST(Professions, DebiasingFlattensCounts) {
  const auto& p = planted();
  const Vector g = gender_direction(p.embedding, {"he", "she"});
  auto spread = [&](const EmbeddingSet& e) {
    std::vector<double> counts;
    for (const auto& rec : profession_neighbour_counts(e, p.professions, g, 50).records) {
      counts.push_back(static_cast<double>(rec.biased_neighbours));
    }
    return variance(counts);
  };
  const double before = spread(p.embedding);
  const DebiasResult r = debias(p.embedding, p.lexicon, iterations(3));
  EXPECT_LE(spread(r.embedding), 0.5 * before);
}

TEST(Weat, DegenerateSets) {
  const auto& p = planted();
  WeatSpec s = p.weat;
  s.attribute_b = s.attribute_a;
  EXPECT_DOUBLE_EQ(weat(p.embedding, s).effect_size, 0.0);
  s = p.weat;
  s.target_y = s.target_x;
  EXPECT_NEAR(weat(p.embedding, s).effect_size, 0.0, 1e-12);
  s.target_x = {"nope"};
  EXPECT_THROW(weat(p.embedding, s), EmptySetAfterLookup);
}

TEST(Weat, PlantedEffectShrinks) {
  const auto& p = planted();
  const double before = weat(p.embedding, p.weat).effect_size;
  EXPECT_GE(before, 1.5);
  const DebiasResult r = debias(p.embedding, p.lexicon, iterations(3));
  const double after = weat(r.embedding, p.weat).effect_size;
  EXPECT_LE(std::abs(after), 0.2 * std::abs(before));
}

TEST(Weat, ScaleInvariant) {
  const auto& p = planted();
  const EmbeddingSet scaled = p.embedding.with_vectors(3.5 * p.embedding.vectors());
  EXPECT_NEAR(weat(scaled, p.weat).effect_size, weat(p.embedding, p.weat).effect_size, 1e-12);
}

TEST(RecoverabilityProbe, PlantedSignalThenChance) {
  const auto& p = planted();
  EXPECT_GT(recoverability_probe(p.embedding, p.lexicon).accuracy, 0.99);
  const DebiasResult r = debias(p.embedding, p.lexicon, iterations(3));
  EXPECT_LE(recoverability_probe(r.embedding, p.lexicon).accuracy, 0.6);
  ProbeOptions lin;
  lin.kernel = ProbeKernel::linear;
  EXPECT_LE(recoverability_probe(r.embedding, p.lexicon, lin).accuracy, 0.6);
}

TEST(RecoverabilityProbe, ZeroVectorsGiveMajority) {
  std::vector<std::string> words;
  GenderLexicon lex;
  for (int i = 0; i < 30; ++i) {
    words.push_back("m" + std::to_string(i));
    lex.masculine.push_back(words.back());
  }
  for (int i = 0; i < 10; ++i) {
    words.push_back("f" + std::to_string(i));
    lex.feminine.push_back(words.back());
  }
  const EmbeddingSet e = make_set(words, Matrix::Zero(40, 4));
  ProbeOptions o;
  o.kernel = ProbeKernel::linear;
  const ProbeResult r = recoverability_probe(e, lex, o);
  EXPECT_NEAR(r.accuracy, 0.75, 1e-12);
  EXPECT_EQ(r.n_positive, 10);
  EXPECT_EQ(r.n_negative, 30);
}

TEST(NearestNeighbours, OrderAndTies) {
  Matrix M(4, 2);
  M << 1, 0,
       2, 0,
       0, 1,
       1, 0;
  const EmbeddingSet e = make_set({"a", "b", "c", "d"}, M);
  EXPECT_TRUE(nearest_neighbours(e, "a", 0).empty());
  const auto nn = nearest_neighbours(e, "a", 3);
  ASSERT_EQ(nn.size(), 3u);
  EXPECT_EQ(nn[0].first, "b");
  EXPECT_EQ(nn[1].first, "d");
  EXPECT_EQ(nn[2].first, "c");
  EXPECT_NEAR(nn[2].second, 0.0, 1e-15);
  EXPECT_THROW(nearest_neighbours(e, "z", 1), MissingWord);
}

TEST(Planted, Composition) {
  const auto& p = planted();
  EXPECT_EQ(p.embedding.size(), 1400);
  EXPECT_EQ(p.embedding.dim(), 50);
  EXPECT_TRUE(p.embedding.find("he"));
  EXPECT_TRUE(p.embedding.find("she"));
  EXPECT_NEAR(p.bias_direction.norm(), 1.0, 1e-12);
  EXPECT_GT(p.embedding.vector("he").dot(p.bias_direction), 0.0);
}
