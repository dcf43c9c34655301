#pragma once

// Linear learners that produce decision vectors, plus the small amount of
// clustering and kernel machinery the evaluation suites need.

#include <cstdint>
#include <string>
#include <vector>

#include "d4/linalg.hpp"

namespace d4 {

enum class Task { binary, regression };

const char* to_string(Task task);
Task task_from_string(const std::string& name);

// Binary when every target is exactly -1 or +1.
Task detect_task(const Vector& y);

struct LabeledDataset {
  Matrix X;
  Vector y;
  Task task = Task::binary;

  // Length agreement, finiteness, +-1 labels for binary tasks.
  void validate() const;
};

void validate_targets(const Matrix& X, const Vector& y, Task task);

enum class LearnerKind { ridge_ls, logistic };

const char* to_string(LearnerKind kind);
LearnerKind learner_from_string(const std::string& name);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::ridge_ls;
  double regularization = 1.0;  // alpha for ridge-ls, lambda for logistic
  bool fit_intercept = true;
  int max_iterations = 1000;
  double tolerance = 1e-8;

  void validate() const;
};

struct LinearModel {
  Vector weights;
  double intercept = 0.0;
  int iterations = 0;
};

// (X^T X + alpha I)^{-1} X^T y, on column-centred data when fit_intercept is
// set; the intercept is then mean(y) - mean(x)^T w.
LinearModel fit_ridge_ls(const Matrix& X, const Vector& y, double alpha, bool fit_intercept = true);

// Minimizes (1/n) sum log(1 + exp(-y_i (x_i^T w + b))) + (lambda/2) ||w||^2 by
// damped Newton iterations. The intercept is unpenalized. Throws
// NonConvergence when the gradient norm is still above tolerance after
// max_iterations, EmptyClass if only one label is present.
LinearModel fit_logistic(const Matrix& X, const Vector& y, const LearnerSpec& spec);

// Regularized logistic objective at (w, b), as minimized by fit_logistic.
double logistic_objective(const Matrix& X, const Vector& y, const Vector& w, double b,
                          double lambda);

LinearModel fit(const Matrix& X, const Vector& y, Task task, const LearnerSpec& spec);

Vector predict_scores(const Matrix& X, const LinearModel& model);
Vector predict_scores(const Matrix& X, const Vector& w, double intercept);
// +1 for non-negative scores, -1 otherwise.
Vector classify(const Vector& scores);
double accuracy(const Vector& predicted, const Vector& truth);
double mean_absolute_error(const Vector& predicted, const Vector& truth);
// Fraction of the most frequent class in a +-1 vector.
double majority_baseline(const Vector& labels);

// Accuracy for binary tasks, MAE for regression.
double task_metric(Task task, const Vector& scores, const Vector& truth);

// Stratified fold ids in [0, folds): each class is shuffled with the seed and
// dealt round-robin. Regression targets are treated as one stratum.
std::vector<int> stratified_folds(const Vector& y, Task task, int folds, std::uint64_t seed);

// Mean held-out metric of `spec` over stratified folds.
double cross_validate(const Matrix& X, const Vector& y, Task task, const LearnerSpec& spec,
                      int folds, std::uint64_t seed);

// Two-means clustering: k-means++ seeding, Lloyd iterations, 10 restarts,
// lowest within-cluster sum of squares wins. Returns labels in {0, 1}.
std::vector<int> kmeans2(const Matrix& points, std::uint64_t seed);

// max over both cluster-to-label matchings of the agreement fraction.
double cluster_label_accuracy(const std::vector<int>& assignment, const Vector& labels);

// --- kernels --------------------------------------------------------------

Matrix linear_kernel(const Matrix& A, const Matrix& B);
Matrix rbf_kernel(const Matrix& A, const Matrix& B, double gamma);
Matrix polynomial_kernel(const Matrix& A, const Matrix& B, int degree, double coef0);
// 1 / (p * mean per-feature variance).
double default_rbf_gamma(const Matrix& X);

// (K + alpha I)^{-1} y. Throws NonSymmetric when K is not symmetric.
Vector fit_kernel_ridge_probe(const Matrix& K, const Vector& y, double alpha);
// Scores for held-out rows given their kernel values against the training set.
Vector kernel_predict(const Matrix& cross, const Vector& dual);

}  // namespace d4
