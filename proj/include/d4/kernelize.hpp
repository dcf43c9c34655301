#pragma once

// Direction removal in the implicit feature space of a kernel. A direction
// is represented by dual coefficients alpha (v = Phi^T alpha); removing it
// replaces the Gram matrix by that of the features projected orthogonal to v:
//
//   K' = K - (K alpha)(K alpha)^T / (alpha^T K alpha)
//
// Held-out rows are carried along through their cross-kernel block.

#include <optional>
#include <string>
#include <vector>

#include "d4/linalg.hpp"

namespace d4 {

struct KernelMatrix {
  Matrix gram;                 // n x n, symmetric PSD
  std::optional<Matrix> cross;  // m x n, held-out rows vs training rows

  Index size() const { return gram.rows(); }

  // Square, symmetric within 1e-10 (relative), smallest eigenvalue at least
  // -1e-8 * ||K||. Throws NonSymmetric / DimensionMismatch / ConfigError.
  void validate() const;
};

struct DualDirection {
  Vector alpha;
};

// alpha^T K alpha, the squared feature-space norm of the direction.
double feature_norm_sq(const Matrix& K, const Vector& alpha);

// Throws DegenerateDirection when alpha^T K alpha < 1e-12 ||K||.
KernelMatrix kernel_d4_step(const KernelMatrix& K, const DualDirection& direction);

enum class KernelD4Status { completed, degenerate_direction };

struct KernelD4Result {
  std::vector<DualDirection> directions;
  // Gram before each step: deflations[0] is the input, deflations[i] the
  // kernel after i steps. Length = directions.size() + 1.
  std::vector<KernelMatrix> deflations;
  KernelD4Status status = KernelD4Status::completed;
  std::string message;

  const KernelMatrix& deflated() const { return deflations.back(); }
};

// Each step fits kernel ridge alpha = (K + a I)^{-1} y on the current kernel
// and removes the resulting direction. Steps run on a spectral factor of K, so
// directions at the rounding level of the spectrum (below 1e-10 of the largest
// eigenvalue) are treated as absent.
KernelD4Result kernel_d4_fit(const KernelMatrix& K, const Vector& y, int iterations,
                             double ridge_alpha);

}  // namespace d4
