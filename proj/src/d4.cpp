#include "d4/d4.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "d4/errors.hpp"
#include "d4/random.hpp"

namespace d4 {

const char* to_string(D4Mode mode) {
  return mode == D4Mode::projector ? "projector" : "fullrank";
}

D4Mode mode_from_string(const std::string& name) {
  if (name == "projector") return D4Mode::projector;
  if (name == "fullrank" || name == "full-rank") return D4Mode::full_rank;
  throw ConfigError("unknown mode '" + name + "' (expected projector or fullrank)");
}

const char* to_string(StopRule rule) {
  return rule == StopRule::fixed ? "fixed" : "converge";
}

StopRule stop_rule_from_string(const std::string& name) {
  if (name == "fixed") return StopRule::fixed;
  if (name == "converge" || name == "probe-convergence") return StopRule::probe_convergence;
  throw ConfigError("unknown stopping rule '" + name + "' (expected fixed or converge)");
}

const char* to_string(D4Status status) {
  switch (status) {
    case D4Status::completed:
      return "completed";
    case D4Status::converged:
      return "converged";
    case D4Status::zero_direction:
      return "zero_direction";
    case D4Status::linearly_dependent:
      return "linearly_dependent";
  }
  return "completed";
}

D4Status status_from_string(const std::string& name) {
  for (auto s : {D4Status::completed, D4Status::converged, D4Status::zero_direction,
                 D4Status::linearly_dependent}) {
    if (name == to_string(s)) return s;
  }
  throw ParseError("unknown model status '" + name + "'");
}

void D4Config::validate(Index dim) const {
  learner.validate();
  if (max_iterations < 1) throw ConfigError("at least 1 iteration required");
  if (max_iterations > dim) {
    std::ostringstream os;
    os << "max iterations " << max_iterations << " exceeds the feature dimension " << dim;
    throw ConfigError(os.str());
  }
  if (stopping == StopRule::probe_convergence) {
    if (!(tau > 0)) throw ConfigError("convergence tolerance tau must be positive");
    if (patience < 1) throw ConfigError("convergence patience must be at least 1");
    if (!(validation_fraction > 0 && validation_fraction < 1)) {
      throw ConfigError("validation fraction must lie strictly between 0 and 1");
    }
  }
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

// Stratified hold-out split for the convergence rule.
void split_validation(const Vector& y, Task task, double fraction, std::uint64_t seed,
                      std::vector<Index>& train, std::vector<Index>& val) {
  std::vector<std::vector<Index>> strata(task == Task::binary ? 2 : 1);
  for (Index i = 0; i < y.size(); ++i) {
    strata[(task == Task::binary && y[i] > 0) ? 1 : 0].push_back(i);
  }
  Rng rng = make_rng(seed, 0x7a11d);
  for (auto& members : strata) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::llround(fraction * members.size()));
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < n_val ? val : train).push_back(members[i]);
    }
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  if (train.empty() || val.empty()) {
    throw ConfigError("validation split leaves an empty training or validation set");
  }
}

}  // namespace

D4Model d4_fit(const Matrix& X, const Vector& y, Task task, const D4Config& config) {
  validate_targets(X, y, task);
  const Index p = X.cols();
  config.validate(p);

  const bool converge = config.stopping == StopRule::probe_convergence;
  Matrix X_train_split, X_val;
  Vector y_train_split, y_val;
  double baseline = 0.0;
  if (converge) {
    std::vector<Index> train, val;
    split_validation(y, task, config.validation_fraction, config.seed, train, val);
    X_train_split = take_rows(X, train);
    y_train_split = take(y, train);
    X_val = take_rows(X, val);
    y_val = take(y, val);
    baseline = task == Task::binary
                   ? majority_baseline(y_val)
                   : (y_val.array() - y_train_split.mean()).abs().mean();
  }
  const Matrix& Xtr = converge ? X_train_split : X;
  const Vector& ytr = converge ? y_train_split : y;

  D4Model model;
  model.basis = OrthonormalBasis(p);
  model.task = task;
  Projector omega(p);
  int streak = 0;
  const double x_scale = Xtr.norm();

  for (int it = 1; it <= config.max_iterations; ++it) {
    Matrix features;
    Matrix lift;  // full-rank mode: p x (p - i + 1) completion
    if (config.mode == D4Mode::projector) {
      features.noalias() = Xtr * omega.matrix();
    } else {
      lift = complete_basis(model.basis).columns;
      features.noalias() = Xtr * lift;
    }
    const LinearModel fitted = fit(features, ytr, task, config.learner);
    const Vector w = config.mode == D4Mode::projector ? fitted.weights : lift * fitted.weights;

    IterationDiagnostics diag;
    diag.iteration = it;
    diag.train_metric = task_metric(task, predict_scores(features, fitted), ytr);
    if (converge) {
      const Matrix val_features =
          config.mode == D4Mode::projector ? Matrix(X_val * omega.matrix()) : Matrix(X_val * lift);
      diag.validation_metric = task_metric(task, predict_scores(val_features, fitted), y_val);
    }

    // A learner fitted to rounding noise (projected data numerically zero)
    // returns a w that moves no score.
    const double spread = (features * fitted.weights).norm();
    if (!(spread > 1e-10 * x_scale * fitted.weights.norm())) {
      model.status = D4Status::zero_direction;
      model.message = "iteration " + std::to_string(it) + ": decision direction does not move any score";
      break;
    }

    Vector unit;
    try {
      unit = model.basis.append(w);
    } catch (const ZeroVector& e) {
      model.status = D4Status::zero_direction;
      model.message = "iteration " + std::to_string(it) + ": " + e.what();
      break;
    } catch (const LinearlyDependent& e) {
      model.status = D4Status::linearly_dependent;
      model.message = "iteration " + std::to_string(it) + ": " + e.what();
      break;
    }
    omega.remove(unit);
    model.diagnostics.push_back(diag);

    if (converge) {
      const double v = *diag.validation_metric;
      // Regression compares MAE against the mean predictor relative to its size.
      const double gap = task == Task::binary ? std::abs(v - baseline)
                                              : std::abs(v - baseline) / std::max(baseline, 1e-300);
      streak = gap <= config.tau ? streak + 1 : 0;
      if (streak >= config.patience) {
        model.status = D4Status::converged;
        break;
      }
    }
  }
  return model;
}

D4Model d4_fit(const LabeledDataset& data, const D4Config& config) {
  return d4_fit(data.X, data.y, data.task, config);
}

namespace {

void check_k(const Matrix& X, const D4Model& model, Index k) {
  if (X.cols() != model.dim()) {
    std::ostringstream os;
    os << "feature matrix has " << X.cols() << " columns, model dimension is " << model.dim();
    throw DimensionMismatch(os.str());
  }
  if (k < 0 || k > model.size()) {
    std::ostringstream os;
    os << "k = " << k << " is outside [0, " << model.size() << "]";
    throw ConfigError(os.str());
  }
}

}  // namespace

Decomposition d4_transform(const Matrix& X, const D4Model& model, Index k) {
  check_k(X, model, k);
  Decomposition out;
  out.perp = project_rows_orthogonal(X, model.basis.prefix(k));
  out.par = X - out.perp;
  return out;
}

Matrix d4_reduce(const Matrix& X, const D4Model& model, Index k, bool allow_empty) {
  check_k(X, model, k);
  if (k == model.dim()) {
    if (!allow_empty) throw BasisFull("all directions removed; the reduced form has width 0");
    return Matrix(X.rows(), 0);
  }
  return X * complete_basis(model.basis.prefix(k)).columns;
}

std::vector<ProbePoint> probe_trajectory(const Matrix& X, const Vector& y, Task task,
                                         const D4Model& model, const LearnerSpec& probe,
                                         std::optional<HeldOut> heldout) {
  validate_targets(X, y, task);
  check_k(X, model, 0);
  if (heldout) {
    validate_targets(heldout->X, heldout->y, task);
    check_k(heldout->X, model, 0);
  }
  std::vector<ProbePoint> out;
  for (Index k = 0; k <= model.size(); ++k) {
    const OrthonormalBasis removed = model.basis.prefix(k);
    const Matrix Xk = project_rows_orthogonal(X, removed);
    const LinearModel fitted = fit(Xk, y, task, probe);
    ProbePoint point;
    point.removed = k;
    point.train_metric = task_metric(task, predict_scores(Xk, fitted), y);
    if (heldout) {
      const Matrix Hk = project_rows_orthogonal(heldout->X, removed);
      point.heldout_metric = task_metric(task, predict_scores(Hk, fitted), heldout->y);
    }
    out.push_back(point);
  }
  return out;
}

}  // namespace d4
