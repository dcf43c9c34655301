#pragma once

// File formats used by the command-line tool.
//
// Matrix files are CSV (optional header row) or binary:
//   "D4MAT1\0\0" | u64 rows | u64 cols | rows*cols f64, all little-endian, row-major.
// Model files are JSON documents with the basis written at 17 significant digits.

#include <functional>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "d4/d4.hpp"
#include "d4/linalg.hpp"

namespace d4 {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr char kMatrixMagic[8] = {'D', '4', 'M', 'A', 'T', '1', '\0', '\0'};

enum class MatrixFormat { csv, binary };

// .csv / .txt / .tsv map to CSV, everything else to binary.
MatrixFormat matrix_format_for_path(const std::string& path);

// Sniffs the magic bytes to choose the parser. Throws IoError / ParseError.
Matrix read_matrix(const std::string& path);
Matrix read_matrix_csv(std::istream& in, const std::string& name = "<stream>");
Matrix read_matrix_binary(std::istream& in, const std::string& name = "<stream>");

void write_matrix(const std::string& path, const Matrix& M, MatrixFormat format);
void write_matrix_csv(std::ostream& out, const Matrix& M);
void write_matrix_binary(std::ostream& out, const Matrix& M);

// A single-column matrix file read as a vector.
Vector read_targets(const std::string& path);

// Shortest decimal text that round-trips the double.
std::string format_double(double v);
// printf("%.17g").
std::string format_double17(double v);

std::string read_file(const std::string& path);

// Writes through a temporary sibling file and renames it over `path` only if
// `writer` returns normally, so failed commands leave no partial output.
void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer);

nlohmann::ordered_json config_to_json(const D4Config& config);
D4Config config_from_json(const nlohmann::json& j);

std::string model_to_json_text(const D4Model& model, const nlohmann::ordered_json& config_echo);
void write_model(const std::string& path, const D4Model& model,
                 const nlohmann::ordered_json& config_echo);

// Validates the basis on load; throws ParseError for malformed documents.
D4Model model_from_json_text(const std::string& text, const std::string& name = "<model>");
D4Model read_model(const std::string& path);

}  // namespace d4
