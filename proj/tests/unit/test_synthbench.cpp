#include <gtest/gtest.h>

#include <sstream>

#include "d4/errors.hpp"
#include "d4/synthbench.hpp"

using namespace d4;

namespace {

SynthConfig small(double corr, std::uint64_t seed = 1) {
  SynthConfig c;
  c.n = 20000;
  c.p = 20;
  c.corr = corr;
  c.seed = seed;
  return c;
}

double correlation(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return ac.dot(bc) / (ac.norm() * bc.norm());
}

double stddev(const Vector& a) {
  const Vector ac = a.array() - a.mean();
  return std::sqrt(ac.squaredNorm() / static_cast<double>(a.size() - 1));
}

}  // namespace

TEST(SynthConfig, Validation) {
  SynthConfig c;
  c.corr = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.corr = 0.5;
  c.std2 = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.std2 = 2;
  c.flip_prob = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c.flip_prob = 0.1;
  c.p = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Synth, GroundTruthIsOrthonormal) {
  Vector w1, w2;
  draw_ground_truth(300, 9, w1, w2);
  EXPECT_NEAR(w1.norm(), 1.0, 1e-14);
  EXPECT_NEAR(w2.norm(), 1.0, 1e-14);
  EXPECT_LE(std::abs(w1.dot(w2)), 1e-10);
}

TEST(Synth, LatentStatistics) {
  const SynthDataset d = generate(small(0.9));
  const Vector t1 = d.X * d.w_star_1;
  const Vector t2 = d.X * d.w_star_2;
  EXPECT_NEAR(correlation(t1, t2), 0.9, 0.01);
  EXPECT_NEAR(stddev(t2) / stddev(t1), 2.0, 0.05);
  EXPECT_NEAR(stddev(t1), 1.0, 0.03);
}

TEST(Synth, ZeroCorrelation) {
  const SynthDataset d = generate(small(0.0));
  EXPECT_NEAR(correlation(d.X * d.w_star_1, d.X * d.w_star_2), 0.0, 0.03);
}

TEST(Synth, LabelFlipRate) {
  const SynthDataset d = generate(small(0.9));
  const Vector t1 = d.X * d.w_star_1;
  Index agree = 0;
  for (Index i = 0; i < t1.size(); ++i) agree += (t1[i] >= 0 ? 1.0 : -1.0) == d.y1[i];
  EXPECT_NEAR(static_cast<double>(agree) / static_cast<double>(t1.size()), 0.9, 0.01);
}

TEST(Synth, Deterministic) {
  const SynthDataset a = generate(small(0.9, 5));
  const SynthDataset b = generate(small(0.9, 5));
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.y1, b.y1);
  EXPECT_EQ(a.y2, b.y2);
  const SynthDataset c = generate(small(0.9, 6));
  EXPECT_NE(a.X, c.X);
}

TEST(Experiment, UncorrelatedTrainingGeneralizes) {
  SynthConfig train = small(0.0, 2);
  train.n = 5000;
  SynthConfig test = small(0.0, 3);
  test.n = 5000;
  const ExperimentTable t = run_experiment(train, test, table1_learner());
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_GE(t.at(0, "y1").test_acc, 0.8);
  EXPECT_GE(t.at(1, "y1").test_acc, 0.8);
  EXPECT_LE(t.at(1, "y2").test_acc, 0.6);
  EXPECT_NEAR(t.removed_direction.norm(), 1.0, 1e-12);
  EXPECT_THROW(t.at(2, "y1"), ConfigError);
}

TEST(Experiment, CsvLayout) {
  SynthConfig train = small(0.9, 4);
  train.n = 2000;
  SynthConfig test = small(-0.9, 5);
  test.n = 2000;
  const ExperimentTable t = run_experiment(train, test, table1_learner());
  std::ostringstream os;
  write_csv(os, t);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,target,train_acc,test_acc,load_w1,load_w2");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  }
  EXPECT_EQ(rows, 4);
}

TEST(Experiment, PresetConfigs) {
  const SynthConfig tr = table1_train_config(0);
  const SynthConfig te = table1_test_config(0);
  EXPECT_EQ(tr.n, 100000);
  EXPECT_EQ(tr.p, 300);
  EXPECT_DOUBLE_EQ(tr.corr, 0.9);
  EXPECT_DOUBLE_EQ(te.corr, -0.9);
  EXPECT_NE(tr.seed, te.seed);
  EXPECT_EQ(table1_learner().kind, LearnerKind::logistic);
}
