#pragma once

// Decision-directed decomposition: repeatedly fit a linear learner, take its
// weight direction, and remove that direction from the rows of X.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "d4/learners.hpp"
#include "d4/linalg.hpp"

namespace d4 {

// projector: learn on X * Omega (rank-deficient p columns).
// full_rank: learn on X * P (p - i columns) and lift w = P * w~.
enum class D4Mode { projector, full_rank };

enum class StopRule { fixed, probe_convergence };

const char* to_string(D4Mode mode);
D4Mode mode_from_string(const std::string& name);
const char* to_string(StopRule rule);
StopRule stop_rule_from_string(const std::string& name);

struct D4Config {
  LearnerSpec learner;
  int max_iterations = 1;
  D4Mode mode = D4Mode::projector;
  StopRule stopping = StopRule::fixed;
  // probe_convergence: stop once the validation metric has been within
  // `tau` of the trivial baseline for `patience` consecutive iterations.
  double tau = 0.02;
  int patience = 2;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;

  // Throws ConfigError; max_iterations must lie in [1, dim].
  void validate(Index dim) const;
};

enum class D4Status {
  completed,           // ran max_iterations
  converged,           // probe-convergence rule fired
  zero_direction,      // learner returned a numerically zero w
  linearly_dependent,  // new direction fell inside the current span
};

const char* to_string(D4Status status);
D4Status status_from_string(const std::string& name);

struct IterationDiagnostics {
  int iteration = 0;  // 1-based
  // Training accuracy (binary) or MAE (regression) of the learner whose
  // direction was removed at this iteration.
  double train_metric = 0.0;
  std::optional<double> validation_metric;
};

struct D4Model {
  OrthonormalBasis basis;
  std::vector<IterationDiagnostics> diagnostics;
  D4Status status = D4Status::completed;
  Task task = Task::binary;
  std::string message;  // detail for early stops

  Index dim() const { return basis.dim(); }
  Index size() const { return basis.size(); }
};

D4Model d4_fit(const Matrix& X, const Vector& y, Task task, const D4Config& config);
D4Model d4_fit(const LabeledDataset& data, const D4Config& config);

struct Decomposition {
  Matrix perp;  // X * Omega(k)
  Matrix par;   // X - perp
};

// Throws DimensionMismatch, or ConfigError when k is outside [0, basis size].
Decomposition d4_transform(const Matrix& X, const D4Model& model, Index k);

// X * P for the completion P of the first k directions: an n x (p - k)
// representation with the same Gram matrix as the projected data. When
// k == p this throws BasisFull unless allow_empty is set, in which case an
// n x 0 matrix is returned.
Matrix d4_reduce(const Matrix& X, const D4Model& model, Index k, bool allow_empty = false);

struct ProbePoint {
  Index removed = 0;  // directions removed before refitting the probe
  double train_metric = 0.0;
  std::optional<double> heldout_metric;
};

struct HeldOut {
  const Matrix& X;
  const Vector& y;
};

// Refits `probe` on the data with 0, 1, ..., size() directions removed.
std::vector<ProbePoint> probe_trajectory(const Matrix& X, const Vector& y, Task task,
                                         const D4Model& model, const LearnerSpec& probe,
                                         std::optional<HeldOut> heldout = std::nullopt);

}  // namespace d4
