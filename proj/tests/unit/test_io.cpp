#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "d4/errors.hpp"
#include "d4/io.hpp"
#include "test_util.hpp"

using namespace d4;
using d4::testing::TempDir;

TEST(MatrixCsv, HeaderAndComments) {
  std::istringstream in("a,b\n# note\n1,2\n3.5,-4e-3\n");
  const Matrix M = read_matrix_csv(in);
  ASSERT_EQ(M.rows(), 2);
  EXPECT_DOUBLE_EQ(M(1, 1), -4e-3);
}

TEST(MatrixCsv, RaggedRowNamesLine) {
  std::istringstream in("1,2\n3\n");
  try {
    read_matrix_csv(in, "x.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("x.csv:2"), std::string::npos);
  }
  std::istringstream text("1,2\nfoo,3\n");
  EXPECT_THROW(read_matrix_csv(text), ParseError);
}

TEST(MatrixCsv, RoundTripIsExact) {
  Matrix M(2, 3);
  M << 0.1, 1.0 / 3.0, -2e-300,
       1e300, 5, -0.0;
  std::stringstream s;
  write_matrix_csv(s, M);
  EXPECT_EQ(read_matrix_csv(s), M);
}

TEST(MatrixBinary, RoundTripAndBytes) {
  Matrix M(2, 2);
  M << 1, 2, 3, 4;
  std::stringstream s;
  write_matrix_binary(s, M);
  const std::string bytes = s.str();
  ASSERT_EQ(bytes.size(), 8u + 16u + 32u);
  EXPECT_EQ(bytes.substr(0, 6), "D4MAT1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2);
  EXPECT_EQ(read_matrix_binary(s), M);
}

TEST(MatrixBinary, TruncationAndTrailingBytes) {
  Matrix M = Matrix::Ones(3, 2);
  std::stringstream s;
  write_matrix_binary(s, M);
  const std::string bytes = s.str();
  std::istringstream shorter(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_matrix_binary(shorter), ParseError);
  std::istringstream longer(bytes + "x");
  EXPECT_THROW(read_matrix_binary(longer), ParseError);
  std::istringstream bad("NOTMAGIC");
  EXPECT_THROW(read_matrix_binary(bad), ParseError);
}

TEST(MatrixFiles, FormatFromPathAndSniffing) {
  EXPECT_EQ(matrix_format_for_path("a.CSV"), MatrixFormat::csv);
  EXPECT_EQ(matrix_format_for_path("a.bin"), MatrixFormat::binary);
  TempDir dir;
  // A binary payload under a .csv name is still read by its magic bytes.
  write_matrix(dir.file("m.csv"), Matrix::Identity(2, 2), MatrixFormat::binary);
  EXPECT_EQ(read_matrix(dir.file("m.csv")), Matrix::Identity(2, 2));
  EXPECT_THROW(read_matrix(dir.file("missing.csv")), IoError);
}

TEST(Targets, SingleColumnRequired) {
  TempDir dir;
  d4::testing::write_text(dir.file("y.csv"), "1\n-1\n");
  EXPECT_EQ(read_targets(dir.file("y.csv")).size(), 2);
  d4::testing::write_text(dir.file("bad.csv"), "1,2\n");
  EXPECT_THROW(read_targets(dir.file("bad.csv")), ParseError);
}

TEST(Format, DoubleText) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double17(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(AtomicWrite, FailureLeavesNoFile) {
  TempDir dir;
  const std::string path = dir.file("out.txt");
  EXPECT_THROW(write_file_atomic(path,
                                 [](std::ostream& out) {
                                   out << "partial";
                                   throw IoError("boom");
                                 }),
               IoError);
  EXPECT_FALSE(std::filesystem::exists(path));
  EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
  write_file_atomic(path, [](std::ostream& out) { out << "ok"; });
  EXPECT_EQ(d4::testing::read_bytes(path), "ok");
}

TEST(Model, JsonRoundTrip) {
  D4Model m;
  std::mt19937_64 rng(70);
  m.basis = OrthonormalBasis::from_columns(d4::testing::random_orthonormal(5, 2, rng));
  m.diagnostics = {{1, 0.9, 0.85}, {2, 0.6, std::nullopt}};
  m.status = D4Status::converged;
  m.message = "done";
  D4Config c;
  c.max_iterations = 2;
  const D4Model back = model_from_json_text(model_to_json_text(m, config_to_json(c)));
  EXPECT_EQ(back.basis.columns(), m.basis.columns());
  EXPECT_EQ(back.status, D4Status::converged);
  ASSERT_EQ(back.diagnostics.size(), 2u);
  EXPECT_EQ(*back.diagnostics[0].validation_metric, 0.85);
  EXPECT_FALSE(back.diagnostics[1].validation_metric);
  EXPECT_EQ(config_from_json(config_to_json(c)).max_iterations, 2);
}

TEST(Model, RejectsMalformedDocuments) {
  EXPECT_THROW(model_from_json_text("{"), ParseError);
  EXPECT_THROW(model_from_json_text(R"({"format": "other"})"), ParseError);
  EXPECT_THROW(model_from_json_text(R"({"format": "d4-model", "dim": 2, "iterations": 1, "basis": [[1, 0, 0]]})"),
               ParseError);
  // Not orthonormal.
  EXPECT_THROW(model_from_json_text(R"({"format": "d4-model", "dim": 2, "iterations": 2, "basis": [[1, 0], [1, 0]]})"),
               ParseError);
  const D4Model ok = model_from_json_text(R"({"format": "d4-model", "dim": 2, "iterations": 1, "basis": [[0, 1]]})");
  EXPECT_EQ(ok.size(), 1);
}
