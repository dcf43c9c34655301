#include "d4/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "d4/errors.hpp"

namespace d4 {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&v, bytes, sizeof(T));
  }
  return v;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_double(const std::string& token, double& out) {
  if (token.empty()) return false;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

MatrixFormat matrix_format_for_path(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".csv" || ext == ".txt" || ext == ".tsv") return MatrixFormat::csv;
  return MatrixFormat::binary;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return ss.str();
}

Matrix read_matrix_csv(std::istream& in, const std::string& name) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split_csv(t);
    std::vector<double> values(cells.size());
    bool numeric = true;
    for (std::size_t c = 0; c < cells.size() && numeric; ++c) numeric = parse_double(cells[c], values[c]);
    if (!numeric) {
      if (!seen_data && rows.empty()) {
        seen_data = true;  // header row
        continue;
      }
      throw ParseError(name + ":" + std::to_string(line_no) + ": non-numeric value");
    }
    seen_data = true;
    if (!rows.empty() && values.size() != rows.front().size()) {
      std::ostringstream os;
      os << name << ":" << line_no << ": row has " << values.size() << " columns, expected "
         << rows.front().size();
      throw ParseError(os.str());
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(name + ": no numeric rows");
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      M(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return M;
}

Matrix read_matrix_binary(std::istream& in, const std::string& name) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMatrixMagic, 8) != 0) {
    throw ParseError(name + ": missing D4MAT1 magic bytes");
  }
  std::uint64_t dims[2];
  if (!in.read(reinterpret_cast<char*>(dims), sizeof dims)) {
    throw ParseError(name + ": truncated matrix header");
  }
  const std::uint64_t rows = to_little(dims[0]);
  const std::uint64_t cols = to_little(dims[1]);
  if (rows > (1ULL << 40) || cols > (1ULL << 40) || (cols != 0 && rows > (1ULL << 40) / cols)) {
    throw ParseError(name + ": implausible matrix dimensions");
  }
  Matrix M(static_cast<Index>(rows), static_cast<Index>(cols));
  std::vector<double> row(cols);
  for (std::uint64_t r = 0; r < rows; ++r) {
    if (cols > 0 &&
        !in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(cols * 8))) {
      std::ostringstream os;
      os << name << ": payload ends in row " << r << " (declared " << rows << "x" << cols << ")";
      throw ParseError(os.str());
    }
    for (std::uint64_t c = 0; c < cols; ++c) {
      M(static_cast<Index>(r), static_cast<Index>(c)) = to_little(row[c]);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(name + ": trailing bytes after the declared payload");
  }
  return M;
}

Matrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  char head[8] = {};
  in.read(head, 8);
  const bool binary = in.gcount() == 8 && std::memcmp(head, kMatrixMagic, 8) == 0;
  in.clear();
  in.seekg(0);
  return binary ? read_matrix_binary(in, path) : read_matrix_csv(in, path);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_double17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_csv(std::ostream& out, const Matrix& M) {
  for (Index r = 0; r < M.rows(); ++r) {
    for (Index c = 0; c < M.cols(); ++c) {
      if (c) out << ',';
      out << format_double(M(r, c));
    }
    out << '\n';
  }
}

void write_matrix_binary(std::ostream& out, const Matrix& M) {
  out.write(kMatrixMagic, 8);
  const std::uint64_t dims[2] = {to_little(static_cast<std::uint64_t>(M.rows())),
                                 to_little(static_cast<std::uint64_t>(M.cols()))};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  std::vector<double> row(static_cast<std::size_t>(M.cols()));
  for (Index r = 0; r < M.rows(); ++r) {
    for (Index c = 0; c < M.cols(); ++c) row[static_cast<std::size_t>(c)] = to_little(M(r, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

void write_matrix(const std::string& path, const Matrix& M, MatrixFormat format) {
  write_file_atomic(path, [&](std::ostream& out) {
    if (format == MatrixFormat::csv) {
      write_matrix_csv(out, M);
    } else {
      write_matrix_binary(out, M);
    }
  });
}

Vector read_targets(const std::string& path) {
  const Matrix M = read_matrix(path);
  if (M.cols() != 1) {
    throw ParseError(path + ": targets must be a single column (got " + std::to_string(M.cols()) +
                     ")");
  }
  return M.col(0);
}

void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
      writer(out);
      out.flush();
      if (!out) throw IoError("error while writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot move output into place at '" + path + "': " + ec.message());
  } catch (...) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw;
  }
}

// --- models -----------------------------------------------------------------

nlohmann::ordered_json config_to_json(const D4Config& config) {
  nlohmann::ordered_json j;
  j["learner"] = to_string(config.learner.kind);
  j["regularization"] = config.learner.regularization;
  j["fit_intercept"] = config.learner.fit_intercept;
  j["learner_max_iterations"] = config.learner.max_iterations;
  j["learner_tolerance"] = config.learner.tolerance;
  j["max_iterations"] = config.max_iterations;
  j["mode"] = to_string(config.mode);
  j["stopping"] = to_string(config.stopping);
  j["tau"] = config.tau;
  j["patience"] = config.patience;
  j["validation_fraction"] = config.validation_fraction;
  j["seed"] = config.seed;
  return j;
}

D4Config config_from_json(const nlohmann::json& j) {
  D4Config c;
  c.learner.kind = learner_from_string(j.value("learner", "ridge"));
  c.learner.regularization = j.value("regularization", c.learner.regularization);
  c.learner.fit_intercept = j.value("fit_intercept", c.learner.fit_intercept);
  c.learner.max_iterations = j.value("learner_max_iterations", c.learner.max_iterations);
  c.learner.tolerance = j.value("learner_tolerance", c.learner.tolerance);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.mode = mode_from_string(j.value("mode", "projector"));
  c.stopping = stop_rule_from_string(j.value("stopping", "fixed"));
  c.tau = j.value("tau", c.tau);
  c.patience = j.value("patience", c.patience);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::string model_to_json_text(const D4Model& model, const nlohmann::ordered_json& config_echo) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"format\": \"d4-model\",\n";
  os << "  \"tool_version\": " << nlohmann::json(kToolVersion).dump() << ",\n";
  os << "  \"dim\": " << model.dim() << ",\n";
  os << "  \"iterations\": " << model.size() << ",\n";
  os << "  \"task\": \"" << to_string(model.task) << "\",\n";
  os << "  \"status\": \"" << to_string(model.status) << "\",\n";
  os << "  \"message\": " << nlohmann::json(model.message).dump() << ",\n";
  os << "  \"config\": " << config_echo.dump() << ",\n";
  os << "  \"diagnostics\": [";
  for (std::size_t i = 0; i < model.diagnostics.size(); ++i) {
    const auto& d = model.diagnostics[i];
    os << (i ? ",\n" : "\n") << "    {\"iteration\": " << d.iteration
       << ", \"train_metric\": " << format_double17(d.train_metric) << ", \"validation_metric\": "
       << (d.validation_metric ? format_double17(*d.validation_metric) : std::string("null"))
       << "}";
  }
  os << (model.diagnostics.empty() ? "],\n" : "\n  ],\n");
  os << "  \"basis\": [";
  for (Index j = 0; j < model.size(); ++j) {
    os << (j ? ",\n" : "\n") << "    [";
    for (Index i = 0; i < model.dim(); ++i) {
      if (i) os << ", ";
      os << format_double17(model.basis.columns()(i, j));
    }
    os << "]";
  }
  os << (model.size() == 0 ? "]\n" : "\n  ]\n");
  os << "}\n";
  return os.str();
}

void write_model(const std::string& path, const D4Model& model,
                 const nlohmann::ordered_json& config_echo) {
  const std::string text = model_to_json_text(model, config_echo);
  write_file_atomic(path, [&](std::ostream& out) { out << text; });
}

D4Model model_from_json_text(const std::string& text, const std::string& name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(name + ": invalid JSON: " + e.what());
  }
  try {
    if (j.value("format", "") != "d4-model") throw ParseError(name + ": not a d4-model document");
    const auto dim = j.at("dim").get<Index>();
    const auto iterations = j.at("iterations").get<Index>();
    const auto& basis_json = j.at("basis");
    if (dim < 1) throw ParseError(name + ": dim must be positive");
    if (!basis_json.is_array() || static_cast<Index>(basis_json.size()) != iterations) {
      throw ParseError(name + ": basis length does not match iterations");
    }
    std::vector<Vector> vectors;
    for (const auto& row : basis_json) {
      if (!row.is_array() || static_cast<Index>(row.size()) != dim) {
        throw ParseError(name + ": basis vector length does not match dim");
      }
      Vector v(dim);
      for (Index i = 0; i < dim; ++i) v[i] = row[static_cast<std::size_t>(i)].get<double>();
      vectors.push_back(std::move(v));
    }
    D4Model model;
    try {
      model.basis = OrthonormalBasis::from_vectors(dim, vectors);
    } catch (const Error& e) {
      throw ParseError(name + ": basis is not orthonormal: " + e.what());
    }
    model.task = task_from_string(j.value("task", "binary"));
    model.status = status_from_string(j.value("status", "completed"));
    model.message = j.value("message", "");
    if (j.contains("diagnostics")) {
      for (const auto& d : j.at("diagnostics")) {
        IterationDiagnostics diag;
        diag.iteration = d.at("iteration").get<int>();
        diag.train_metric = d.at("train_metric").get<double>();
        if (d.contains("validation_metric") && !d.at("validation_metric").is_null()) {
          diag.validation_metric = d.at("validation_metric").get<double>();
        }
        model.diagnostics.push_back(diag);
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(name + ": malformed model document: " + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(name + ": " + e.what());
  }
}

D4Model read_model(const std::string& path) { return model_from_json_text(read_file(path), path); }

}  // namespace d4
