#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "d4/embedkit.hpp"
#include "d4/io.hpp"
#include "test_util.hpp"

using namespace d4;
using d4::testing::read_bytes;
using d4::testing::TempDir;
using d4::testing::write_text;

namespace {

struct RunResult {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run(const TempDir& dir, const std::string& args) {
  const std::string log = dir.file("cli.log");
  const std::string cmd = std::string("\"") + D4_CLI_PATH + "\" " + args + " > \"" + log + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = read_bytes(log);
  return r;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

void write_worked_example(const TempDir& dir) {
  write_matrix(dir.file("X.csv"), d4::testing::worked_x(), MatrixFormat::csv);
  write_text(dir.file("y.csv"), "1\n1\n-1\n-1\n");
}

}  // namespace

TEST(Cli, VersionAndHelp) {
  TempDir dir;
  EXPECT_EQ(run(dir, "--version").code, 0);
  EXPECT_EQ(run(dir, "--help").code, 0);
  EXPECT_EQ(run(dir, "fit --bogus").code, 2);
}

TEST(Cli, WorkedExampleFit) {
  TempDir dir;
  write_worked_example(dir);
  const RunResult r = run(dir, "fit --features " + dir.file("X.csv") + " --targets " +
                                   dir.file("y.csv") + " --out " + dir.file("m.json"));
  ASSERT_EQ(r.code, 0) << r.output;
  const D4Model m = read_model(dir.file("m.json"));
  ASSERT_EQ(m.size(), 1);
  EXPECT_NEAR(std::abs(m.basis.vector(0)[2]), 1.0, 1e-12);

  const RunResult t = run(dir, "transform --features " + dir.file("X.csv") + " --model " +
                                   dir.file("m.json") + " --out-perp " + dir.file("perp.csv"));
  ASSERT_EQ(t.code, 0) << t.output;
  EXPECT_LT((read_matrix(dir.file("perp.csv")) - d4::testing::worked_x_perp()).norm(), 1e-12);
}

TEST(Cli, ZeroIterationsRejected) {
  TempDir dir;
  write_worked_example(dir);
  const RunResult r = run(dir, "fit --features " + dir.file("X.csv") + " --targets " +
                                   dir.file("y.csv") + " --iterations 0 --out " + dir.file("m.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.output, "at least 1 iteration required")) << r.output;
  EXPECT_FALSE(std::filesystem::exists(dir.file("m.json")));
}

TEST(Cli, MissingFileNamesPath) {
  TempDir dir;
  const std::string missing = dir.file("nope.csv");
  const RunResult r = run(dir, "fit --features " + missing + " --targets " + missing + " --out " +
                                   dir.file("m.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.output, missing)) << r.output;
}

TEST(Cli, DimensionMismatchExitCode) {
  TempDir dir;
  write_worked_example(dir);
  write_text(dir.file("y5.csv"), "1\n1\n-1\n-1\n1\n");
  const RunResult r = run(dir, "fit --features " + dir.file("X.csv") + " --targets " +
                                   dir.file("y5.csv") + " --out " + dir.file("m.json"));
  EXPECT_EQ(r.code, 3) << r.output;
}

TEST(Cli, NumericalErrorExitCode) {
  TempDir dir;
  write_worked_example(dir);
  write_text(dir.file("ones.csv"), "1\n1\n1\n1\n");
  const RunResult r = run(dir, "fit --learner logistic --task binary --features " + dir.file("X.csv") +
                                   " --targets " + dir.file("ones.csv") + " --out " + dir.file("m.json"));
  EXPECT_EQ(r.code, 4) << r.output;
}

TEST(Cli, TransformZeroIsBitIdentical) {
  TempDir dir;
  std::mt19937_64 rng(80);
  const Matrix X = d4::testing::gaussian(20, 4, rng);
  write_matrix(dir.file("X.bin"), X, MatrixFormat::binary);
  Vector y = X.col(1).array().sign().matrix();
  write_matrix(dir.file("y.csv"), y, MatrixFormat::csv);
  ASSERT_EQ(run(dir, "fit --iterations 4 --features " + dir.file("X.bin") + " --targets " +
                         dir.file("y.csv") + " --out " + dir.file("m.json")).code, 0);
  const RunResult t = run(dir, "transform --k 0 --features " + dir.file("X.bin") + " --model " +
                                   dir.file("m.json") + " --out-perp " + dir.file("perp.bin"));
  ASSERT_EQ(t.code, 0) << t.output;
  EXPECT_EQ(read_bytes(dir.file("perp.bin")), read_bytes(dir.file("X.bin")));

  const RunResult full = run(dir, "transform --reduced --k 4 --features " + dir.file("X.bin") +
                                      " --model " + dir.file("m.json") + " --out-perp " + dir.file("red.bin"));
  ASSERT_EQ(full.code, 0) << full.output;
  EXPECT_TRUE(contains(full.output, "warning")) << full.output;
  const Matrix R = read_matrix(dir.file("red.bin"));
  EXPECT_EQ(R.rows(), 20);
  EXPECT_EQ(R.cols(), 0);
}

TEST(Cli, SynthRejectsPerfectCorrelation) {
  TempDir dir;
  EXPECT_EQ(run(dir, "synth --n 100 --p 5 --corr 1.0").code, 2);
}

TEST(Cli, WeatWithIdenticalAttributes) {
  TempDir dir;
  ASSERT_EQ(run(dir, "planted --out-dir " + dir.file("fx")).code, 0);
  write_text(dir.file("w.txt"), "[X]\ncareer_00\ncareer_01\n[Y]\nfamily_00\nfamily_01\n[A]\nhe\n[B]\nhe\n");
  const RunResult r = run(dir, "eval weat --embedding " + dir.file("fx/embedding.bin") + " --weat " +
                                   dir.file("w.txt") + " --report " + dir.file("r.json"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(read_bytes(dir.file("r.json")));
  EXPECT_EQ(j["effect_size"].get<double>(), 0.0);
}

TEST(Cli, SingleProfession) {
  TempDir dir;
  ASSERT_EQ(run(dir, "planted --out-dir " + dir.file("fx")).code, 0);
  write_text(dir.file("p.txt"), "prof_000\n");
  const RunResult r = run(dir, "eval professions --embedding " + dir.file("fx/embedding.bin") +
                                   " --professions " + dir.file("p.txt") + " --out " + dir.file("p.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string csv = read_bytes(dir.file("p.csv"));
  EXPECT_TRUE(contains(csv, "prof_000,")) << csv;
  EXPECT_EQ(csv.substr(csv.size() - 3), ",0\n");
}
