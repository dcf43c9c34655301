#include "d4/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "d4/errors.hpp"
#include "d4/random.hpp"

namespace d4 {

namespace {

// Rows per block when accumulating X^T D X.
constexpr Index kHessianBlock = 4096;

void check_lengths(Index a, Index b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": length mismatch (" << a << " vs " << b << ")";
    throw DimensionMismatch(os.str());
  }
}

// log(1 + exp(-m)) without overflow.
double log1pexp_neg(double m) {
  if (m > 0) return std::log1p(std::exp(-m));
  return -m + std::log1p(std::exp(m));
}

// 1 / (1 + exp(m)), i.e. sigmoid(-m).
double sigmoid_neg(double m) {
  if (m >= 0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

void count_classes(const Vector& y, Index& pos, Index& neg) {
  pos = (y.array() > 0).count();
  neg = y.size() - pos;
}

}  // namespace

const char* to_string(Task task) { return task == Task::binary ? "binary" : "regression"; }

Task task_from_string(const std::string& name) {
  if (name == "binary") return Task::binary;
  if (name == "regression") return Task::regression;
  throw ConfigError("unknown task '" + name + "' (expected binary or regression)");
}

Task detect_task(const Vector& y) {
  for (Index i = 0; i < y.size(); ++i) {
    if (y[i] != 1.0 && y[i] != -1.0) return Task::regression;
  }
  return Task::binary;
}

void validate_targets(const Matrix& X, const Vector& y, Task task) {
  check_feature_matrix(X);
  if (y.size() != X.rows()) {
    std::ostringstream os;
    os << "targets have " << y.size() << " entries but the feature matrix has " << X.rows()
       << " rows";
    throw DimensionMismatch(os.str());
  }
  if (!y.allFinite()) throw ConfigError("targets contain NaN or Inf");
  if (task == Task::binary) {
    for (Index i = 0; i < y.size(); ++i) {
      if (y[i] != 1.0 && y[i] != -1.0) {
        throw ConfigError("binary target " + std::to_string(i) + " is not -1 or +1");
      }
    }
  }
}

void LabeledDataset::validate() const { validate_targets(X, y, task); }

const char* to_string(LearnerKind kind) {
  return kind == LearnerKind::ridge_ls ? "ridge" : "logistic";
}

LearnerKind learner_from_string(const std::string& name) {
  if (name == "ridge" || name == "ridge-ls" || name == "ls-svm") return LearnerKind::ridge_ls;
  if (name == "logistic") return LearnerKind::logistic;
  throw ConfigError("unknown learner '" + name + "' (expected ridge or logistic)");
}

void LearnerSpec::validate() const {
  if (!(regularization > 0.0) || !std::isfinite(regularization)) {
    throw ConfigError("regularization must be a positive finite number");
  }
  if (max_iterations < 1) throw ConfigError("learner iteration cap must be at least 1");
  if (!(tolerance > 0.0)) throw ConfigError("learner tolerance must be positive");
}

LinearModel fit_ridge_ls(const Matrix& X, const Vector& y, double alpha, bool fit_intercept) {
  if (!(alpha > 0.0)) throw SingularSystem("ridge regularization must be positive");
  check_lengths(X.rows(), y.size(), "fit_ridge_ls");
  const Index p = X.cols();
  const double n = static_cast<double>(X.rows());

  Matrix gram = Matrix::Zero(p, p);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  Vector rhs = X.transpose() * y;
  Vector x_mean = Vector::Zero(p);
  double y_mean = 0.0;
  if (fit_intercept) {
    x_mean = X.colwise().mean().transpose();
    y_mean = y.mean();
    // Centred Gram and moment without materializing the centred matrix.
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x_mean, -n);
    rhs -= n * y_mean * x_mean;
  }
  gram.diagonal().array() += alpha;

  Eigen::LLT<Matrix, Eigen::Lower> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw SingularSystem("ridge normal equations are not positive definite");
  }
  LinearModel model;
  model.weights = llt.solve(rhs);
  model.intercept = fit_intercept ? y_mean - x_mean.dot(model.weights) : 0.0;
  model.iterations = 1;
  return model;
}

double logistic_objective(const Matrix& X, const Vector& y, const Vector& w, double b,
                          double lambda) {
  const Vector margins = (y.array() * ((X * w).array() + b)).matrix();
  double loss = 0.0;
  for (Index i = 0; i < margins.size(); ++i) loss += log1pexp_neg(margins[i]);
  return loss / static_cast<double>(X.rows()) + 0.5 * lambda * w.squaredNorm();
}

LinearModel fit_logistic(const Matrix& X, const Vector& y, const LearnerSpec& spec) {
  spec.validate();
  check_lengths(X.rows(), y.size(), "fit_logistic");
  Index pos = 0, neg = 0;
  count_classes(y, pos, neg);
  if (pos == 0 || neg == 0) {
    throw EmptyClass("logistic regression needs both classes (got " + std::to_string(pos) +
                     " positive, " + std::to_string(neg) + " negative)");
  }

  const Index n = X.rows();
  const Index p = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double lambda = spec.regularization;
  const bool icpt = spec.fit_intercept;
  const Index dim = p + (icpt ? 1 : 0);

  Vector w = Vector::Zero(p);
  double b = 0.0;
  Vector margins(n);
  auto compute_margins = [&](const Vector& ww, double bb) {
    margins.noalias() = X * ww;
    margins.array() += bb;
    margins.array() *= y.array();
  };
  auto objective_from_margins = [&](const Vector& ww) {
    double loss = 0.0;
    for (Index i = 0; i < n; ++i) loss += log1pexp_neg(margins[i]);
    return loss * inv_n + 0.5 * lambda * ww.squaredNorm();
  };

  compute_margins(w, b);
  double objective = objective_from_margins(w);

  Vector residual(n);  // y_i * sigmoid(-m_i)
  Vector curvature(n);  // sigmoid(m_i) sigmoid(-m_i)
  Vector grad(dim);
  Matrix hessian(dim, dim);
  Matrix block;

  LinearModel model;
  for (int iter = 0; iter < spec.max_iterations; ++iter) {
    for (Index i = 0; i < n; ++i) {
      const double s = sigmoid_neg(margins[i]);
      residual[i] = y[i] * s;
      curvature[i] = s * (1.0 - s);
    }
    grad.head(p).noalias() = -(X.transpose() * residual) * inv_n;
    grad.head(p) += lambda * w;
    if (icpt) grad[p] = -residual.sum() * inv_n;

    const double gnorm = grad.norm();
    if (gnorm <= spec.tolerance) {
      model.iterations = iter;
      model.weights = w;
      model.intercept = b;
      return model;
    }

    hessian.setZero();
    for (Index start = 0; start < n; start += kHessianBlock) {
      const Index rows = std::min(kHessianBlock, n - start);
      const auto sqrt_c = curvature.segment(start, rows).array().sqrt();
      block.resize(rows, dim);
      block.leftCols(p) = X.middleRows(start, rows).array().colwise() * sqrt_c;
      if (icpt) block.col(p) = sqrt_c.matrix();
      hessian.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose(), inv_n);
    }
    hessian.diagonal().head(p).array() += lambda;

    Eigen::LDLT<Matrix, Eigen::Lower> ldlt(hessian);
    Vector step = -ldlt.solve(grad);
    if (!step.allFinite()) {
      throw NonConvergence("logistic Newton step is not finite");
    }

    // Backtracking on the objective; a full Newton step is accepted near the optimum.
    const double slope = grad.dot(step);
    double t = 1.0;
    Vector w_new;
    double b_new = b;
    double obj_new = objective;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      w_new = w + t * step.head(p);
      b_new = icpt ? b + t * step[p] : 0.0;
      compute_margins(w_new, b_new);
      obj_new = objective_from_margins(w_new);
      // The absolute slack absorbs rounding in the objective near the optimum.
      if (obj_new <= objective + 1e-4 * t * slope + 1e-14 * std::abs(objective)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No decrease is representable: the iterate sits at the optimum to
      // working precision even if the gradient is slightly above tolerance.
      compute_margins(w, b);
      if (step.norm() <= 1e-10 * (1.0 + w.norm())) {
        model.iterations = iter;
        model.weights = w;
        model.intercept = b;
        return model;
      }
      std::ostringstream os;
      os << "logistic line search failed at iteration " << iter << " (gradient norm " << gnorm
         << ")";
      throw NonConvergence(os.str());
    }
    w = std::move(w_new);
    b = b_new;
    objective = obj_new;
  }
  std::ostringstream os;
  os << "logistic regression did not reach gradient norm " << spec.tolerance << " within "
     << spec.max_iterations << " iterations";
  throw NonConvergence(os.str());
}

LinearModel fit(const Matrix& X, const Vector& y, Task task, const LearnerSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case LearnerKind::ridge_ls:
      return fit_ridge_ls(X, y, spec.regularization, spec.fit_intercept);
    case LearnerKind::logistic:
      if (task != Task::binary) {
        throw ConfigError("logistic learner requires a binary (+-1) target");
      }
      return fit_logistic(X, y, spec);
  }
  throw ConfigError("unknown learner kind");
}

Vector predict_scores(const Matrix& X, const Vector& w, double intercept) {
  if (X.cols() != w.size()) {
    throw DimensionMismatch("weight vector length does not match feature columns");
  }
  Vector scores = X * w;
  scores.array() += intercept;
  return scores;
}

Vector predict_scores(const Matrix& X, const LinearModel& model) {
  return predict_scores(X, model.weights, model.intercept);
}

Vector classify(const Vector& scores) {
  return scores.unaryExpr([](double s) { return s >= 0.0 ? 1.0 : -1.0; });
}

double accuracy(const Vector& predicted, const Vector& truth) {
  check_lengths(predicted.size(), truth.size(), "accuracy");
  if (truth.size() == 0) throw ConfigError("accuracy of an empty prediction set");
  Index hits = 0;
  for (Index i = 0; i < truth.size(); ++i) hits += (predicted[i] == truth[i]);
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double mean_absolute_error(const Vector& predicted, const Vector& truth) {
  check_lengths(predicted.size(), truth.size(), "mean_absolute_error");
  if (truth.size() == 0) throw ConfigError("MAE of an empty prediction set");
  return (predicted - truth).cwiseAbs().mean();
}

double majority_baseline(const Vector& labels) {
  if (labels.size() == 0) throw ConfigError("majority baseline of an empty label set");
  Index pos = 0, neg = 0;
  count_classes(labels, pos, neg);
  return static_cast<double>(std::max(pos, neg)) / static_cast<double>(labels.size());
}

double task_metric(Task task, const Vector& scores, const Vector& truth) {
  return task == Task::binary ? accuracy(classify(scores), truth)
                              : mean_absolute_error(scores, truth);
}

std::vector<int> stratified_folds(const Vector& y, Task task, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (y.size() < folds) throw ConfigError("fewer instances than folds");
  std::vector<std::vector<Index>> strata(task == Task::binary ? 2 : 1);
  for (Index i = 0; i < y.size(); ++i) {
    const std::size_t s = (task == Task::binary && y[i] > 0) ? 1 : 0;
    strata[s].push_back(i);
  }
  std::vector<int> fold_of(static_cast<std::size_t>(y.size()), 0);
  Rng rng = make_rng(seed, 0xf01d);
  int next = 0;
  for (auto& members : strata) {
    std::shuffle(members.begin(), members.end(), rng);
    for (Index idx : members) {
      fold_of[static_cast<std::size_t>(idx)] = next;
      next = (next + 1) % folds;
    }
  }
  return fold_of;
}

namespace {

Matrix take_rows(const Matrix& X, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = X.row(rows[r]);
  return out;
}

Vector take(const Vector& y, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Index>(r)] = y[rows[r]];
  return out;
}

}  // namespace

double cross_validate(const Matrix& X, const Vector& y, Task task, const LearnerSpec& spec,
                      int folds, std::uint64_t seed) {
  validate_targets(X, y, task);
  const auto fold_of = stratified_folds(y, task, folds, seed);
  double total = 0.0;
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < y.size(); ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    const Matrix Xtr = take_rows(X, train);
    const Vector ytr = take(y, train);
    const LinearModel model = fit(Xtr, ytr, task, spec);
    total += task_metric(task, predict_scores(take_rows(X, test), model), take(y, test));
  }
  return total / folds;
}

// --- two-means ------------------------------------------------------------

namespace {

struct Clustering {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

Clustering lloyd2(const Matrix& points, Rng& rng) {
  const Index n = points.rows();
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // k-means++ seeding for two centres.
  Matrix centres(2, points.cols());
  centres.row(0) = points.row(pick(rng));
  Vector d2 = (points.rowwise() - centres.row(0)).rowwise().squaredNorm();
  const double total = d2.sum();
  Index second = 0;
  if (total > 0) {
    double target = unit(rng) * total;
    for (second = 0; second < n - 1; ++second) {
      target -= d2[second];
      if (target <= 0) break;
    }
    while (d2[second] == 0.0 && second > 0) --second;
  }
  centres.row(1) = points.row(second);

  Clustering out;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    const Vector to0 = (points.rowwise() - centres.row(0)).rowwise().squaredNorm();
    const Vector to1 = (points.rowwise() - centres.row(1)).rowwise().squaredNorm();
    for (Index i = 0; i < n; ++i) {
      const int lab = to1[i] < to0[i] ? 1 : 0;
      if (out.labels[static_cast<std::size_t>(i)] != lab) {
        out.labels[static_cast<std::size_t>(i)] = lab;
        changed = true;
      }
    }
    Matrix sums = Matrix::Zero(2, points.cols());
    Index counts[2] = {0, 0};
    for (Index i = 0; i < n; ++i) {
      const int lab = out.labels[static_cast<std::size_t>(i)];
      sums.row(lab) += points.row(i);
      ++counts[lab];
    }
    for (int c = 0; c < 2; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty cluster at the point farthest from the other centre.
        const Vector far = (points.rowwise() - centres.row(1 - c)).rowwise().squaredNorm();
        Index idx = 0;
        far.maxCoeff(&idx);
        centres.row(c) = points.row(idx);
        changed = true;
      } else {
        centres.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      }
    }
    if (!changed) break;
  }
  out.inertia = 0.0;
  for (Index i = 0; i < n; ++i) {
    out.inertia += (points.row(i) - centres.row(out.labels[static_cast<std::size_t>(i)]))
                       .squaredNorm();
  }
  return out;
}

}  // namespace

std::vector<int> kmeans2(const Matrix& points, std::uint64_t seed) {
  if (points.rows() < 2) throw DegenerateData("two-means needs at least two points");
  check_feature_matrix(points, "clustering input");
  bool identical = true;
  for (Index i = 1; i < points.rows() && identical; ++i) {
    identical = (points.row(i) == points.row(0));
  }
  if (identical) throw DegenerateData("all points are identical; two clusters are undefined");

  Clustering best;
  for (int restart = 0; restart < 10; ++restart) {
    Rng rng = make_rng(seed, 0x6b6d0000ULL + static_cast<std::uint64_t>(restart));
    Clustering c = lloyd2(points, rng);
    if (c.inertia < best.inertia) best = std::move(c);
  }
  return best.labels;
}

double cluster_label_accuracy(const std::vector<int>& assignment, const Vector& labels) {
  check_lengths(static_cast<Index>(assignment.size()), labels.size(), "cluster_label_accuracy");
  if (assignment.empty()) throw ConfigError("cluster accuracy of an empty assignment");
  Index agree = 0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const double as_label = assignment[i] == 1 ? 1.0 : -1.0;
    agree += (as_label == labels[static_cast<Index>(i)]);
  }
  const double frac = static_cast<double>(agree) / static_cast<double>(assignment.size());
  return std::max(frac, 1.0 - frac);
}

// --- kernels --------------------------------------------------------------

Matrix linear_kernel(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.cols()) throw DimensionMismatch("kernel inputs differ in width");
  return A * B.transpose();
}

Matrix rbf_kernel(const Matrix& A, const Matrix& B, double gamma) {
  if (A.cols() != B.cols()) throw DimensionMismatch("kernel inputs differ in width");
  if (!(gamma > 0)) throw ConfigError("RBF gamma must be positive");
  Matrix K = A * B.transpose();
  const Vector a2 = A.rowwise().squaredNorm();
  const Vector b2 = B.rowwise().squaredNorm();
  for (Index j = 0; j < K.cols(); ++j) {
    for (Index i = 0; i < K.rows(); ++i) {
      const double d2 = std::max(0.0, a2[i] + b2[j] - 2.0 * K(i, j));
      K(i, j) = std::exp(-gamma * d2);
    }
  }
  return K;
}

Matrix polynomial_kernel(const Matrix& A, const Matrix& B, int degree, double coef0) {
  if (A.cols() != B.cols()) throw DimensionMismatch("kernel inputs differ in width");
  if (degree < 1) throw ConfigError("polynomial degree must be at least 1");
  Matrix K = A * B.transpose();
  K.array() += coef0;
  return K.array().pow(degree).matrix();
}

double default_rbf_gamma(const Matrix& X) {
  const Vector mean = X.colwise().mean().transpose();
  const double var = (X.rowwise() - mean.transpose()).array().square().colwise().mean().mean();
  if (!(var > 0)) return 1.0 / static_cast<double>(X.cols());
  return 1.0 / (static_cast<double>(X.cols()) * var);
}

Vector fit_kernel_ridge_probe(const Matrix& K, const Vector& y, double alpha) {
  if (K.rows() != K.cols()) throw DimensionMismatch("kernel matrix is not square");
  check_lengths(K.rows(), y.size(), "fit_kernel_ridge_probe");
  if (!(alpha > 0)) throw SingularSystem("kernel ridge regularization must be positive");
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NonSymmetric("kernel matrix is not symmetric");
  }
  Matrix A = K;
  A.diagonal().array() += alpha;
  Eigen::LDLT<Matrix> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw SingularSystem("kernel ridge system is singular");
  return ldlt.solve(y);
}

Vector kernel_predict(const Matrix& cross, const Vector& dual) {
  if (cross.cols() != dual.size()) {
    throw DimensionMismatch("cross-kernel width does not match the dual coefficients");
  }
  return cross * dual;
}

}  // namespace d4
