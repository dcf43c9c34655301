#pragma once

// Projection operators and basis maintenance for decision-direction removal.
//
// Conventions: a feature matrix holds one instance per row (n x p). Removed
// directions are unit p-vectors stored as the columns of an OrthonormalBasis.
// Removing a set of directions maps every row x to (I - sum w w^T) x.

#include <Eigen/Dense>

#include <vector>

namespace d4 {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Process-wide numeric thresholds. Defaults are the documented ones; tests
// and callers with unusual scaling may adjust them through set_tolerances().
struct Tolerances {
  double zero_norm = 1e-12;     // below this a vector counts as zero
  double unit_norm = 1e-10;     // | ||w|| - 1 | allowed for basis vectors
  double orthogonality = 1e-8;  // |w_i . w_j| allowed between basis vectors
  double dependence = 1e-8;     // residual norm below which a new direction is rejected
};

const Tolerances& tolerances();
void set_tolerances(const Tolerances& t);

// Throws DimensionMismatch / ConfigError if X is empty or has non-finite entries.
void check_feature_matrix(const Matrix& X, const char* what = "feature matrix");

// w / ||w||. Throws ZeroVector when ||w|| is below the zero-norm tolerance.
Vector normalize(const Vector& w);

// Ordered set of mutually orthogonal unit vectors in R^p, stored column-wise.
class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(Index dim = 0);

  // Validates unit norm and pairwise orthogonality; throws LinearlyDependent
  // (or DimensionMismatch for ragged input) when the invariants fail.
  static OrthonormalBasis from_vectors(Index dim, const std::vector<Vector>& vectors);
  static OrthonormalBasis from_columns(const Matrix& columns);

  Index dim() const { return columns_.rows(); }
  Index size() const { return columns_.cols(); }
  bool empty() const { return size() == 0; }
  bool full() const { return size() == dim(); }

  const Matrix& columns() const { return columns_; }
  Vector vector(Index i) const { return columns_.col(i); }

  // Appends the direction of w after removing its components along the
  // current vectors and renormalizing. Returns the stored unit vector.
  // Throws BasisFull, DimensionMismatch, ZeroVector, or LinearlyDependent
  // when the residual norm (relative to ||w||) is below the dependence tolerance.
  Vector append(const Vector& w);

  // First k vectors.
  OrthonormalBasis prefix(Index k) const;

 private:
  Matrix columns_;
};

// Symmetric idempotent matrix I - sum_j w_j w_j^T.
class Projector {
 public:
  explicit Projector(Index dim);

  Index dim() const { return matrix_.rows(); }
  const Matrix& matrix() const { return matrix_; }

  // In-place rank-one update: Omega <- Omega - w w^T. O(p^2).
  void remove(const Vector& unit_direction);

 private:
  Matrix matrix_;
};

Projector projector_from_basis(const OrthonormalBasis& basis);

// X (I - B B^T) for the basis B. Rows of the result are orthogonal to every
// basis vector.
Matrix project_rows_orthogonal(const Matrix& X, const OrthonormalBasis& basis);

// Orthonormal p x (p - k) columns spanning the complement of the basis.
struct BasisCompletion {
  Index dim = 0;
  Index kept = 0;
  Matrix columns;
};

// Trailing columns of the full Q factor of a Householder QR of the basis.
// Throws BasisFull when the basis already spans R^p.
BasisCompletion complete_basis(const OrthonormalBasis& basis);

// Column deflation (I - (Xw)(Xw)^T / ||Xw||^2) X. Agrees with row projection
// only when X has orthonormal columns. Throws DegenerateDirection if Xw ~ 0.
Matrix schur_deflate(const Matrix& X, const Vector& omega);

}  // namespace d4
