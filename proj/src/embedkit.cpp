#include "d4/embedkit.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "d4/errors.hpp"
#include "d4/io.hpp"
#include "d4/random.hpp"

namespace d4 {

namespace {

float float_from_le(const unsigned char* bytes) {
  std::uint32_t bits = 0;
  for (int b = 3; b >= 0; --b) bits = (bits << 8) | bytes[b];
  return std::bit_cast<float>(bits);
}

void float_to_le(float v, unsigned char* bytes) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) {
    bytes[b] = static_cast<unsigned char>(bits & 0xff);
    bits >>= 8;
  }
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool parse_long(const std::string& s, long long& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  if (!s.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Dedupes indices, reports missing words.
std::vector<Index> resolve(const EmbeddingSet& emb, const std::vector<std::string>& words,
                           std::vector<std::string>& missing) {
  std::vector<Index> out;
  std::set<Index> seen;
  for (const auto& w : words) {
    if (auto idx = emb.find(w)) {
      if (seen.insert(*idx).second) out.push_back(*idx);
    } else {
      missing.push_back(w);
    }
  }
  return out;
}

Matrix gather(const Matrix& X, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = X.row(rows[r]);
  return out;
}

void labeled_lexicon(const EmbeddingSet& emb, const GenderLexicon& lex, bool normalize,
                     Matrix& features, Vector& labels, Index& n_masc, Index& n_fem,
                     std::vector<std::string>& missing) {
  const auto masc = resolve(emb, lex.masculine, missing);
  const auto fem = resolve(emb, lex.feminine, missing);
  n_masc = static_cast<Index>(masc.size());
  n_fem = static_cast<Index>(fem.size());
  if (masc.empty() || fem.empty()) {
    throw EmptyClass("lexicon lookup left " + std::to_string(n_masc) + " masculine and " +
                     std::to_string(n_fem) + " feminine words");
  }
  std::vector<Index> rows = masc;
  rows.insert(rows.end(), fem.begin(), fem.end());
  features = gather(emb.vectors(), rows);
  if (normalize) features = normalized_rows(features);
  labels.resize(static_cast<Index>(rows.size()));
  labels.head(n_masc).setConstant(-1.0);
  labels.tail(n_fem).setConstant(1.0);
}

void check_direction(const EmbeddingSet& emb, const Vector& direction) {
  if (direction.size() != emb.dim()) {
    throw DimensionMismatch("direction length " + std::to_string(direction.size()) +
                            " does not match embedding dimension " + std::to_string(emb.dim()));
  }
}

}  // namespace

EmbeddingFormat embedding_format_from_string(const std::string& name) {
  if (name == "bin" || name == "binary" || name == "word2vec") return EmbeddingFormat::word2vec_binary;
  if (name == "txt" || name == "text") return EmbeddingFormat::text;
  throw ConfigError("unknown embedding format '" + name + "' (expected bin or txt)");
}

EmbeddingSet::EmbeddingSet(std::vector<std::string> vocab, Matrix vectors)
    : vocab_(std::move(vocab)), vectors_(std::move(vectors)) {
  if (static_cast<Index>(vocab_.size()) != vectors_.rows()) {
    throw DimensionMismatch("vocabulary size does not match the number of vectors");
  }
  index_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<Index>(i)).second) {
      throw ConfigError("duplicate word '" + vocab_[i] + "' in vocabulary");
    }
  }
}

std::optional<Index> EmbeddingSet::find(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Index EmbeddingSet::index_of(const std::string& word) const {
  if (auto idx = find(word)) return *idx;
  throw MissingWord("word '" + word + "' is not in the vocabulary");
}

bool EmbeddingSet::normalized() const {
  if (size() == 0) return false;
  return ((vectors_.rowwise().norm().array() - 1.0).abs() <= 1e-6).all();
}

EmbeddingSet EmbeddingSet::with_vectors(Matrix vectors) const {
  if (vectors.rows() != size()) {
    throw DimensionMismatch("replacement vectors do not match the vocabulary size");
  }
  EmbeddingSet out;
  out.vocab_ = vocab_;
  out.index_ = index_;
  out.vectors_ = std::move(vectors);
  out.binary_record_newline = binary_record_newline;
  out.text_header = text_header;
  return out;
}

Matrix normalized_rows(const Matrix& X) {
  Matrix out = X;
  for (Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0) out.row(i) /= norm;
  }
  return out;
}

// --- word2vec binary ----------------------------------------------------------

EmbeddingSet read_word2vec_binary(std::istream& in, LoadReport* report) {
  std::string header;
  if (!std::getline(in, header)) throw MalformedHeader("empty embedding file");
  const auto tokens = split_ws(header);
  long long count = 0, dim = 0;
  if (tokens.size() != 2 || !parse_long(tokens[0], count) || !parse_long(tokens[1], dim) ||
      count < 0 || dim < 1) {
    throw MalformedHeader("expected '<vocab_size> <dim>' header, got '" + header + "'");
  }

  std::vector<std::string> vocab;
  vocab.reserve(static_cast<std::size_t>(count));
  Matrix vectors(count, dim);
  std::vector<unsigned char> buf(static_cast<std::size_t>(dim) * 4);
  std::set<std::string> seen;
  bool record_newline = true;
  Index kept = 0;

  for (long long i = 0; i < count; ++i) {
    std::string word;
    for (;;) {
      const int c = in.get();
      if (c == std::char_traits<char>::eof()) {
        throw TruncatedRecord("record " + std::to_string(i) + " ends inside its word");
      }
      if (c == ' ') break;
      if (c == '\n' && word.empty()) continue;  // separator left by the previous record
      word.push_back(static_cast<char>(c));
    }
    if (word.empty()) throw ParseError("record " + std::to_string(i) + " has an empty word");
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
      std::ostringstream os;
      os << "record " << i << " ('" << word << "') is truncated: expected " << buf.size()
         << " bytes of vector data, got " << in.gcount();
      throw TruncatedRecord(os.str());
    }
    const bool newline = in.peek() == '\n';
    if (newline) in.get();
    if (i == 0) record_newline = newline;

    if (!seen.insert(word).second) {
      if (report) report->duplicates.push_back(word);
      continue;
    }
    for (long long d = 0; d < dim; ++d) {
      vectors(kept, d) = static_cast<double>(float_from_le(&buf[static_cast<std::size_t>(d) * 4]));
    }
    vocab.push_back(std::move(word));
    ++kept;
  }
  vectors.conservativeResize(kept, Eigen::NoChange);
  EmbeddingSet emb(std::move(vocab), std::move(vectors));
  emb.binary_record_newline = record_newline;
  return emb;
}

void write_word2vec_binary(std::ostream& out, const EmbeddingSet& emb) {
  out << emb.size() << ' ' << emb.dim() << '\n';
  std::vector<unsigned char> buf(static_cast<std::size_t>(emb.dim()) * 4);
  for (Index i = 0; i < emb.size(); ++i) {
    out << emb.word(i) << ' ';
    for (Index d = 0; d < emb.dim(); ++d) {
      float_to_le(static_cast<float>(emb.vectors()(i, d)), &buf[static_cast<std::size_t>(d) * 4]);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (emb.binary_record_newline) out << '\n';
  }
}

// --- text ----------------------------------------------------------------------

EmbeddingSet read_embedding_text(std::istream& in, LoadReport* report) {
  std::vector<std::string> vocab;
  std::vector<std::vector<double>> rows;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  long long declared_count = -1;
  Index dim = -1;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    long long a = 0, b = 0;
    if (first && tokens.size() == 2 && parse_long(tokens[0], a) && parse_long(tokens[1], b)) {
      if (a < 0 || b < 1) throw MalformedHeader("line 1: invalid header '" + trim(line) + "'");
      declared_count = a;
      dim = static_cast<Index>(b);
      first = false;
      continue;
    }
    first = false;
    if (dim < 0) dim = static_cast<Index>(tokens.size()) - 1;
    if (dim < 1 || static_cast<Index>(tokens.size()) != dim + 1) {
      std::ostringstream os;
      os << "line " << line_no << ": expected a word and " << dim << " values, got "
         << tokens.size() << " fields";
      throw ParseError(os.str());
    }
    std::vector<double> values(static_cast<std::size_t>(dim));
    for (Index d = 0; d < dim; ++d) {
      if (!parse_double(tokens[static_cast<std::size_t>(d) + 1], values[static_cast<std::size_t>(d)])) {
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" +
                         tokens[static_cast<std::size_t>(d) + 1] + "'");
      }
    }
    if (!seen.insert(tokens[0]).second) {
      if (report) report->duplicates.push_back(tokens[0]);
      continue;
    }
    vocab.push_back(tokens[0]);
    rows.push_back(std::move(values));
  }
  if (dim < 1) throw MalformedHeader("embedding file has no vectors");
  if (declared_count >= 0 &&
      static_cast<long long>(rows.size() + (report ? report->duplicates.size() : 0)) < declared_count) {
    throw TruncatedRecord("header declares " + std::to_string(declared_count) +
                          " words but the file holds " + std::to_string(rows.size()));
  }
  Matrix vectors(static_cast<Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Index d = 0; d < dim; ++d) vectors(static_cast<Index>(r), d) = rows[r][static_cast<std::size_t>(d)];
  }
  EmbeddingSet emb(std::move(vocab), std::move(vectors));
  emb.text_header = declared_count >= 0;
  return emb;
}

void write_embedding_text(std::ostream& out, const EmbeddingSet& emb) {
  if (emb.text_header) out << emb.size() << ' ' << emb.dim() << '\n';
  for (Index i = 0; i < emb.size(); ++i) {
    out << emb.word(i);
    for (Index d = 0; d < emb.dim(); ++d) out << ' ' << format_double(emb.vectors()(i, d));
    out << '\n';
  }
}

EmbeddingSet load_embeddings(const std::string& path, EmbeddingFormat format, LoadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file '" + path + "'");
  try {
    return format == EmbeddingFormat::word2vec_binary ? read_word2vec_binary(in, report)
                                                      : read_embedding_text(in, report);
  } catch (const ParseError& e) {
    // Keep the concrete type so callers can still distinguish the failure.
    if (dynamic_cast<const TruncatedRecord*>(&e)) throw TruncatedRecord(path + ": " + e.what());
    if (dynamic_cast<const MalformedHeader*>(&e)) throw MalformedHeader(path + ": " + e.what());
    throw ParseError(path + ": " + e.what());
  }
}

void save_embeddings(const std::string& path, const EmbeddingSet& emb, EmbeddingFormat format) {
  write_file_atomic(path, [&](std::ostream& out) {
    if (format == EmbeddingFormat::word2vec_binary) {
      write_word2vec_binary(out, emb);
    } else {
      write_embedding_text(out, emb);
    }
  });
}

// --- word lists ---------------------------------------------------------------

std::vector<std::pair<std::string, std::vector<std::string>>> read_word_sets(
    const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::pair<std::string, std::vector<std::string>>> sets;
  const auto first = text.find_first_not_of(" \t\r\n");
  // "[name]" opens a text section; a JSON array starts with '[' followed by '"', '[' or ']'.
  bool json = first != std::string::npos && text[first] == '{';
  if (first != std::string::npos && text[first] == '[') {
    const auto next = text.find_first_not_of(" \t\r\n", first + 1);
    json = next != std::string::npos && (text[next] == '"' || text[next] == '[' || text[next] == ']');
  }
  if (json) {
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": invalid JSON: " + e.what());
    }
    auto entries = [&](const nlohmann::ordered_json& value, const std::string& key) {
      std::vector<std::string> words;
      if (value.is_string()) {
        words.push_back(value.get<std::string>());
      } else if (value.is_array()) {
        for (const auto& item : value) {
          if (item.is_string()) {
            words.push_back(item.get<std::string>());
          } else if (item.is_array() && item.size() == 2 && item[0].is_string() &&
                     item[1].is_string()) {
            words.push_back(item[0].get<std::string>() + " " + item[1].get<std::string>());
          } else {
            throw ParseError(path + ": set '" + key + "' holds a non-string entry");
          }
        }
      } else {
        throw ParseError(path + ": set '" + key + "' must be a string or an array");
      }
      return words;
    };
    if (j.is_array()) {
      sets.emplace_back("", entries(j, ""));
    } else {
      for (auto it = j.begin(); it != j.end(); ++it) sets.emplace_back(it.key(), entries(it.value(), it.key()));
    }
    return sets;
  }

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      sets.emplace_back(trim(std::string_view(t).substr(1, t.size() - 2)), std::vector<std::string>{});
      continue;
    }
    if (sets.empty()) sets.emplace_back("", std::vector<std::string>{});
    sets.back().second.push_back(t);
  }
  return sets;
}

namespace {

const std::vector<std::string>* find_set(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& sets,
    std::initializer_list<const char*> names) {
  for (const char* name : names) {
    for (const auto& [key, words] : sets) {
      if (key == name) return &words;
    }
  }
  return nullptr;
}

void write_sections(const std::string& path,
                    const std::vector<std::pair<std::string, std::vector<std::string>>>& sets) {
  write_file_atomic(path, [&](std::ostream& out) {
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (i) out << '\n';
      if (!sets[i].first.empty()) out << '[' << sets[i].first << "]\n";
      for (const auto& w : sets[i].second) out << w << '\n';
    }
  });
}

}  // namespace

void GenderLexicon::validate() const {
  const std::set<std::string> masc(masculine.begin(), masculine.end());
  for (const auto& w : feminine) {
    if (masc.count(w)) throw ConfigError("word '" + w + "' is both masculine and feminine");
  }
}

void WeatSpec::validate() const {
  if (target_x.empty() || target_y.empty() || attribute_a.empty() || attribute_b.empty()) {
    throw ConfigError("WEAT spec '" + name + "' needs non-empty X, Y, A and B sets");
  }
}

GenderLexicon load_lexicon(const std::string& path) {
  const auto sets = read_word_sets(path);
  GenderLexicon lex;
  const auto* masc = find_set(sets, {"masculine", "male"});
  const auto* fem = find_set(sets, {"feminine", "female"});
  if (!masc || !fem) throw ParseError(path + ": lexicon needs 'masculine' and 'feminine' sets");
  lex.masculine = *masc;
  lex.feminine = *fem;
  if (const auto* pairs = find_set(sets, {"pairs", "definitional_pairs"})) {
    for (const auto& entry : *pairs) {
      const auto tokens = split_ws(entry);
      if (tokens.size() != 2) throw ParseError(path + ": pair '" + entry + "' must hold two words");
      lex.pairs.emplace_back(tokens[0], tokens[1]);
    }
  }
  lex.validate();
  return lex;
}

WeatSpec load_weat_spec(const std::string& path) {
  const auto sets = read_word_sets(path);
  WeatSpec spec;
  const auto* x = find_set(sets, {"X", "targets_x", "target_x"});
  const auto* y = find_set(sets, {"Y", "targets_y", "target_y"});
  const auto* a = find_set(sets, {"A", "attributes_a", "attribute_a"});
  const auto* b = find_set(sets, {"B", "attributes_b", "attribute_b"});
  if (!x || !y || !a || !b) throw ParseError(path + ": WEAT spec needs X, Y, A and B sets");
  spec.target_x = *x;
  spec.target_y = *y;
  spec.attribute_a = *a;
  spec.attribute_b = *b;
  if (const auto* name = find_set(sets, {"name"}); name && !name->empty()) spec.name = name->front();
  spec.validate();
  return spec;
}

std::vector<std::string> load_word_list(const std::string& path) {
  std::vector<std::string> words;
  for (const auto& [key, set] : read_word_sets(path)) words.insert(words.end(), set.begin(), set.end());
  return words;
}

void write_lexicon(const std::string& path, const GenderLexicon& lex) {
  std::vector<std::string> pairs;
  for (const auto& [f, m] : lex.pairs) pairs.push_back(f + " " + m);
  write_sections(path, {{"masculine", lex.masculine}, {"feminine", lex.feminine}, {"pairs", pairs}});
}

void write_weat_spec(const std::string& path, const WeatSpec& spec) {
  write_sections(path, {{"name", {spec.name}},
                        {"X", spec.target_x},
                        {"Y", spec.target_y},
                        {"A", spec.attribute_a},
                        {"B", spec.attribute_b}});
}

void write_word_list(const std::string& path, const std::vector<std::string>& words) {
  write_sections(path, {{"", words}});
}

// --- debiasing ----------------------------------------------------------------

Vector gender_direction(const EmbeddingSet& emb, const std::pair<std::string, std::string>& pair,
                        bool normalize) {
  Vector a = emb.vector(pair.first);
  Vector b = emb.vector(pair.second);
  if (normalize) {
    if (a.norm() > 0) a.normalize();
    if (b.norm() > 0) b.normalize();
  }
  return d4::normalize(a - b);
}

D4Config default_debias_config() {
  D4Config c;
  c.learner.kind = LearnerKind::logistic;
  c.learner.regularization = 1.0;
  c.max_iterations = 6;
  return c;
}

DebiasResult debias(const EmbeddingSet& emb, const GenderLexicon& lex,
                    const DebiasOptions& options) {
  lex.validate();
  DebiasResult result;
  Matrix features;
  Vector labels;
  labeled_lexicon(emb, lex, options.normalize, features, labels, result.masculine_used,
                  result.feminine_used, result.missing);

  if (options.d4.max_iterations == 0) {
    result.model.basis = OrthonormalBasis(emb.dim());
    result.model.task = Task::binary;
    result.embedding = emb;
  } else {
    result.model = d4_fit(features, labels, Task::binary, options.d4);
    result.embedding = emb.with_vectors(project_rows_orthogonal(emb.vectors(), result.model.basis));
  }

  if (options.probe_folds >= 2) {
    const std::uint64_t cv_seed = derive_seed(options.d4.seed, 0xc5);
    for (Index k = 0; k <= result.model.size(); ++k) {
      const Matrix Fk = project_rows_orthogonal(features, result.model.basis.prefix(k));
      result.probe_cv.push_back(
          cross_validate(Fk, labels, Task::binary, options.d4.learner, options.probe_folds, cv_seed));
    }
  }
  return result;
}

// --- metrics ------------------------------------------------------------------

BiasByNeighbourResult bias_by_neighbour(const EmbeddingSet& emb, const Vector& direction,
                                        const BiasByNeighbourOptions& options) {
  check_direction(emb, direction);
  const EmbeddingSet& ranking = options.ranking ? *options.ranking : emb;
  if (ranking.size() != emb.size() || ranking.dim() != emb.dim() ||
      ranking.vocab() != emb.vocab()) {
    throw DimensionMismatch("ranking embedding must share the vocabulary and dimension");
  }
  if (options.n_extreme < 1) throw ConfigError("n_extreme must be at least 1");
  const Index candidates = options.top_n > 0 ? std::min(options.top_n, emb.size()) : emb.size();
  if (candidates < 2 * options.n_extreme) {
    std::ostringstream os;
    os << "insufficient vocabulary: " << candidates << " candidate words for 2 x "
       << options.n_extreme << " extremes";
    throw ConfigError(os.str());
  }

  Matrix R = ranking.vectors().topRows(candidates);
  if (options.normalize) R = normalized_rows(R);
  const Vector dots = R * direction;
  std::vector<Index> order(static_cast<std::size_t>(candidates));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return dots[a] > dots[b]; });

  BiasByNeighbourResult out;
  const auto n = static_cast<std::size_t>(options.n_extreme);
  out.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  // Most negative first on the other side, ties by index.
  std::vector<Index> bottom(order.end() - static_cast<std::ptrdiff_t>(n), order.end());
  std::stable_sort(bottom.begin(), bottom.end(), [&](Index a, Index b) { return dots[a] < dots[b]; });
  out.selected.insert(out.selected.end(), bottom.begin(), bottom.end());

  const auto m = static_cast<Index>(out.selected.size());
  out.side.resize(m);
  out.dots.resize(m);
  for (Index i = 0; i < m; ++i) {
    out.side[i] = i < options.n_extreme ? 1.0 : -1.0;
    out.dots[i] = dots[out.selected[static_cast<std::size_t>(i)]];
  }
  Matrix points = gather(emb.vectors(), out.selected);
  if (options.normalize) points = normalized_rows(points);
  out.assignment = kmeans2(points, options.seed);
  out.accuracy = cluster_label_accuracy(out.assignment, out.side);
  return out;
}

ProfessionReport profession_neighbour_counts(const EmbeddingSet& emb,
                                             const std::vector<std::string>& professions,
                                             const Vector& direction, Index k, bool normalize) {
  check_direction(emb, direction);
  if (k < 0) throw ConfigError("neighbour count k must be non-negative");
  ProfessionReport report;
  const auto rows = resolve(emb, professions, report.missing);
  if (rows.empty()) throw EmptySetAfterLookup("insufficient professions: none are in the vocabulary");

  const Matrix raw = gather(emb.vectors(), rows);
  const Matrix unit = normalized_rows(raw);
  const Vector dots = (normalize ? unit : raw) * direction;
  const Matrix cos = unit * unit.transpose();
  const auto m = static_cast<Index>(rows.size());

  std::vector<Index> others;
  for (Index i = 0; i < m; ++i) {
    others.clear();
    for (Index j = 0; j < m; ++j) {
      if (j != i) others.push_back(j);
    }
    const auto take = static_cast<std::ptrdiff_t>(std::min<Index>(k, m - 1));
    std::partial_sort(others.begin(), others.begin() + take, others.end(), [&](Index a, Index b) {
      return cos(i, a) > cos(i, b) || (cos(i, a) == cos(i, b) && a < b);
    });
    ProfessionRecord rec;
    rec.word = emb.word(rows[static_cast<std::size_t>(i)]);
    rec.dot = dots[i];
    rec.positive = dots[i] > 0;
    for (std::ptrdiff_t t = 0; t < take; ++t) rec.biased_neighbours += dots[others[static_cast<std::size_t>(t)]] > 0;
    report.records.push_back(std::move(rec));
  }
  return report;
}

WeatResult weat(const EmbeddingSet& emb, const WeatSpec& spec) {
  spec.validate();
  WeatResult result;
  auto lookup = [&](const std::vector<std::string>& words, const char* name) {
    std::vector<Index> rows;
    for (const auto& w : words) {
      if (auto idx = emb.find(w)) {
        rows.push_back(*idx);
      } else {
        result.missing.push_back(w);
      }
    }
    if (rows.empty()) {
      throw EmptySetAfterLookup(std::string("WEAT set ") + name + " has no words in the vocabulary");
    }
    return normalized_rows(gather(emb.vectors(), rows));
  };
  std::vector<std::string> x_words, y_words;
  for (const auto& w : spec.target_x) if (emb.find(w)) x_words.push_back(w);
  for (const auto& w : spec.target_y) if (emb.find(w)) y_words.push_back(w);
  const Matrix X = lookup(spec.target_x, "X");
  const Matrix Y = lookup(spec.target_y, "Y");
  const Matrix A = lookup(spec.attribute_a, "A");
  const Matrix B = lookup(spec.attribute_b, "B");

  auto association = [&](const Matrix& W) -> Vector {
    return (W * A.transpose()).rowwise().mean() - (W * B.transpose()).rowwise().mean();
  };
  const Vector sx = association(X);
  const Vector sy = association(Y);
  result.mean_diff = sx.mean() - sy.mean();

  Vector all(sx.size() + sy.size());
  all << sx, sy;
  const double mean = all.mean();
  const double var = (all.array() - mean).square().sum() / static_cast<double>(all.size() - 1);
  const double sd = std::sqrt(var);
  // Zero spread means every s is equal, so the numerator is zero as well.
  result.effect_size = sd > 0 ? result.mean_diff / sd : 0.0;

  for (Index i = 0; i < sx.size(); ++i) result.scores.push_back({x_words[static_cast<std::size_t>(i)], 'X', sx[i]});
  for (Index i = 0; i < sy.size(); ++i) result.scores.push_back({y_words[static_cast<std::size_t>(i)], 'Y', sy[i]});
  return result;
}

ProbeKernel probe_kernel_from_string(const std::string& name) {
  if (name == "rbf") return ProbeKernel::rbf;
  if (name == "linear") return ProbeKernel::linear;
  throw ConfigError("unknown probe kernel '" + name + "' (expected rbf or linear)");
}

ProbeResult recoverability_probe(const EmbeddingSet& emb, const GenderLexicon& lex,
                                 const ProbeOptions& options) {
  if (options.folds < 2) throw ConfigError("recoverability probe needs at least 2 folds");
  ProbeResult result;
  Matrix F;
  Vector y;
  labeled_lexicon(emb, lex, options.normalize, F, y, result.n_negative, result.n_positive,
                  result.missing);

  const auto fold_of = stratified_folds(y, Task::binary, options.folds, options.seed);
  double total = 0.0;
  for (int f = 0; f < options.folds; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < y.size(); ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    const Matrix Ftr = gather(F, train);
    const Matrix Fte = gather(F, test);
    Vector ytr(static_cast<Index>(train.size())), yte(static_cast<Index>(test.size()));
    for (std::size_t i = 0; i < train.size(); ++i) ytr[static_cast<Index>(i)] = y[train[i]];
    for (std::size_t i = 0; i < test.size(); ++i) yte[static_cast<Index>(i)] = y[test[i]];

    Matrix K, cross;
    if (options.kernel == ProbeKernel::rbf) {
      const double gamma = options.gamma ? *options.gamma : default_rbf_gamma(Ftr);
      K = rbf_kernel(Ftr, Ftr, gamma);
      cross = rbf_kernel(Fte, Ftr, gamma);
    } else {
      K = linear_kernel(Ftr, Ftr);
      cross = linear_kernel(Fte, Ftr);
    }
    const Vector dual = fit_kernel_ridge_probe(K, ytr, options.ridge_alpha);
    const Vector scores = kernel_predict(cross, dual);
    const double fallback = (ytr.array() > 0).count() * 2 >= ytr.size() ? 1.0 : -1.0;
    Vector pred(scores.size());
    for (Index i = 0; i < scores.size(); ++i) {
      pred[i] = scores[i] > 0 ? 1.0 : (scores[i] < 0 ? -1.0 : fallback);
    }
    const double acc = accuracy(pred, yte);
    result.fold_accuracy.push_back(acc);
    total += acc;
  }
  result.accuracy = total / options.folds;
  return result;
}

std::vector<std::pair<std::string, double>> nearest_neighbours(const EmbeddingSet& emb,
                                                               const std::string& word, Index k) {
  const Index self = emb.index_of(word);
  if (k < 0) throw ConfigError("k must be non-negative");
  std::vector<std::pair<std::string, double>> out;
  if (k == 0) return out;
  const Matrix unit = normalized_rows(emb.vectors());
  const Vector sims = unit * unit.row(self).transpose();
  std::vector<Index> order;
  for (Index i = 0; i < emb.size(); ++i) {
    if (i != self) order.push_back(i);
  }
  const auto take = static_cast<std::ptrdiff_t>(std::min<Index>(k, static_cast<Index>(order.size())));
  std::partial_sort(order.begin(), order.begin() + take, order.end(), [&](Index a, Index b) {
    return sims[a] > sims[b] || (sims[a] == sims[b] && a < b);
  });
  for (std::ptrdiff_t t = 0; t < take; ++t) {
    const Index idx = order[static_cast<std::size_t>(t)];
    out.emplace_back(emb.word(idx), sims[idx]);
  }
  return out;
}

// --- planted fixture ------------------------------------------------------------

PlantedEmbedding make_planted_embedding(const PlantedConfig& config) {
  if (config.dim < 4) throw ConfigError("planted embedding needs at least 4 dimensions");
  if (config.masculine < 1 || config.feminine < 1) {
    throw ConfigError("planted embedding needs masculine and feminine words");
  }
  Rng rng = make_rng(config.seed, 0x91a7);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Index d = config.dim;

  Vector bias(d);
  for (Index i = 0; i < d; ++i) bias[i] = normal(rng);
  bias.normalize();
  auto noise = [&]() {
    Vector v(d);
    for (Index i = 0; i < d; ++i) v[i] = config.noise * normal(rng);
    return v;
  };
  Vector profession_centre = noise();

  PlantedEmbedding out;
  out.bias_direction = bias;
  std::vector<std::string> vocab;
  std::vector<Vector> rows;
  auto add = [&](std::string word, Vector v) {
    vocab.push_back(std::move(word));
    rows.push_back(std::move(v));
  };
  char name[64];

  for (Index i = 0; i < config.masculine; ++i) {
    std::snprintf(name, sizeof name, "masc_%03ld", static_cast<long>(i));
    const std::string word = i == 0 ? "he" : name;
    add(word, config.gender_offset * bias + noise());
    out.lexicon.masculine.push_back(word);
  }
  for (Index i = 0; i < config.feminine; ++i) {
    std::snprintf(name, sizeof name, "fem_%03ld", static_cast<long>(i));
    const std::string word = i == 0 ? "she" : name;
    add(word, -config.gender_offset * bias + noise());
    out.lexicon.feminine.push_back(word);
  }
  out.lexicon.pairs.emplace_back("she", "he");

  for (Index i = 0; i < config.professions; ++i) {
    std::snprintf(name, sizeof name, "prof_%03ld", static_cast<long>(i));
    const double sign = i % 2 == 0 ? 1.0 : -1.0;
    const double strength = 0.4 + 0.4 * uniform(rng);
    add(name, profession_centre + sign * strength * config.gender_offset * bias + noise());
    out.professions.push_back(name);
  }

  out.weat.name = "planted-career-family";
  for (Index i = 0; i < config.weat_pairs; ++i) {
    const Vector base = noise();
    std::snprintf(name, sizeof name, "career_%02ld", static_cast<long>(i));
    add(name, base + 0.5 * config.gender_offset * bias);
    out.weat.target_x.push_back(name);
    std::snprintf(name, sizeof name, "family_%02ld", static_cast<long>(i));
    add(name, base - 0.5 * config.gender_offset * bias);
    out.weat.target_y.push_back(name);
  }
  const Index n_attr = std::min<Index>(40, std::min(config.masculine, config.feminine));
  out.weat.attribute_a.assign(out.lexicon.masculine.begin(), out.lexicon.masculine.begin() + n_attr);
  out.weat.attribute_b.assign(out.lexicon.feminine.begin(), out.lexicon.feminine.begin() + n_attr);

  for (Index i = 0; i < config.neutral; ++i) {
    std::snprintf(name, sizeof name, "word_%04ld", static_cast<long>(i));
    const double sign = uniform(rng) < 0.5 ? 1.0 : -1.0;
    const double strength = 0.3 + 0.6 * uniform(rng);
    add(name, sign * strength * config.gender_offset * bias + noise());
  }

  Matrix vectors(static_cast<Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) vectors.row(static_cast<Index>(i)) = rows[i];
  out.embedding = EmbeddingSet(std::move(vocab), std::move(vectors));
  return out;
}

}  // namespace d4
