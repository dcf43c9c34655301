#pragma once

// Spurious-correlation benchmark. Two orthogonal ground-truth directions w1,
// w2 define noisy labels y_j = eps * sign(x^T w_j). In training data the
// projections onto w1 and w2 are strongly correlated; the test set reverses
// the sign of that correlation, so a classifier for y1 that leans on w2
// generalizes badly until w2's decision direction is removed.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "d4/learners.hpp"
#include "d4/linalg.hpp"

namespace d4 {

struct SynthConfig {
  Index n = 100000;
  Index p = 300;
  double corr = 0.9;   // correlation of (x.w1, x.w2)
  double std1 = 1.0;   // std of x.w1
  double std2 = 2.0;   // std of x.w2
  double flip_prob = 0.1;  // P(eps = -1), drawn independently per instance and target
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthDataset {
  Matrix X;
  Vector y1;
  Vector y2;
  Vector w_star_1;
  Vector w_star_2;
};

// Two orthonormal directions in R^p drawn from the seed.
void draw_ground_truth(Index p, std::uint64_t seed, Vector& w1, Vector& w2);

// Samples with the given ground-truth directions (unit, orthogonal).
SynthDataset generate(const SynthConfig& config, const Vector& w_star_1, const Vector& w_star_2);
// Draws the directions from the config seed first.
SynthDataset generate(const SynthConfig& config);

struct ExperimentRow {
  int iteration = 0;
  std::string target;  // "y1" or "y2"
  double train_acc = 0.0;
  double test_acc = 0.0;
  double load_w1 = 0.0;  // cosine between the learned weights and w*_1
  double load_w2 = 0.0;
};

struct ExperimentTable {
  std::vector<ExperimentRow> rows;
  Vector removed_direction;  // the direction learned for y2 and removed at iteration 1

  const ExperimentRow& at(int iteration, const std::string& target) const;
};

// Iteration 0 fits classifiers for y1 and y2 on raw training data; iteration
// 1 removes the y2 decision direction (learned on training data only) from
// both sets and refits. The test set shares the training directions.
ExperimentTable run_experiment(const SynthConfig& train, const SynthConfig& test,
                               const LearnerSpec& learner);

// Benchmark settings: n = 100000, p = 300, corr 0.9 / -0.9, stds 1 and 2,
// flip probability 0.1, ridge logistic with lambda = 1.
SynthConfig table1_train_config(std::uint64_t seed);
SynthConfig table1_test_config(std::uint64_t seed);
LearnerSpec table1_learner();

void write_csv(std::ostream& os, const ExperimentTable& table);
void write_pretty(std::ostream& os, const ExperimentTable& table);

}  // namespace d4
