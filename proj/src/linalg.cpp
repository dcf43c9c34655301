#include "d4/linalg.hpp"

#include <cmath>
#include <sstream>

#include "d4/errors.hpp"

namespace d4 {

namespace {

Tolerances g_tolerances;

}  // namespace

const Tolerances& tolerances() { return g_tolerances; }

void set_tolerances(const Tolerances& t) { g_tolerances = t; }

void check_feature_matrix(const Matrix& X, const char* what) {
  if (X.rows() < 1 || X.cols() < 1) {
    std::ostringstream os;
    os << what << " must have at least one row and one column (got " << X.rows() << "x"
       << X.cols() << ")";
    throw DimensionMismatch(os.str());
  }
  if (!X.allFinite()) {
    throw ConfigError(std::string(what) + " contains NaN or Inf entries");
  }
}

Vector normalize(const Vector& w) {
  const double norm = w.norm();
  if (!(norm >= tolerances().zero_norm)) {
    throw ZeroVector("cannot normalize a vector of norm " + std::to_string(norm));
  }
  return w / norm;
}

OrthonormalBasis::OrthonormalBasis(Index dim) : columns_(dim, 0) {}

OrthonormalBasis OrthonormalBasis::from_vectors(Index dim, const std::vector<Vector>& vectors) {
  Matrix columns(dim, static_cast<Index>(vectors.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != dim) {
      std::ostringstream os;
      os << "basis vector " << i << " has length " << vectors[i].size() << ", expected " << dim;
      throw DimensionMismatch(os.str());
    }
    columns.col(static_cast<Index>(i)) = vectors[i];
  }
  return from_columns(columns);
}

OrthonormalBasis OrthonormalBasis::from_columns(const Matrix& columns) {
  const auto& tol = tolerances();
  if (columns.cols() > columns.rows()) {
    throw BasisFull("more basis vectors than dimensions");
  }
  if (!columns.allFinite()) {
    throw ConfigError("basis contains NaN or Inf entries");
  }
  const Matrix gram = columns.transpose() * columns;
  for (Index i = 0; i < gram.rows(); ++i) {
    if (std::abs(std::sqrt(gram(i, i)) - 1.0) > tol.unit_norm) {
      throw LinearlyDependent("basis vector " + std::to_string(i) + " is not unit length");
    }
    for (Index j = 0; j < i; ++j) {
      if (std::abs(gram(i, j)) > tol.orthogonality) {
        std::ostringstream os;
        os << "basis vectors " << j << " and " << i << " are not orthogonal (dot " << gram(i, j)
           << ")";
        throw LinearlyDependent(os.str());
      }
    }
  }
  OrthonormalBasis basis(columns.rows());
  basis.columns_ = columns;
  return basis;
}

Vector OrthonormalBasis::append(const Vector& w) {
  if (w.size() != dim()) {
    throw DimensionMismatch("direction has length " + std::to_string(w.size()) +
                            ", basis dimension is " + std::to_string(dim()));
  }
  if (full()) {
    throw BasisFull("basis already spans all " + std::to_string(dim()) + " dimensions");
  }
  Vector residual = normalize(w);
  // Two passes of classical Gram-Schmidt are enough to reach working precision.
  for (int pass = 0; pass < 2 && size() > 0; ++pass) {
    residual -= columns_ * (columns_.transpose() * residual);
  }
  const double norm = residual.norm();
  if (norm < tolerances().dependence) {
    std::ostringstream os;
    os << "direction lies in the span of the existing " << size()
       << " basis vectors (residual " << norm << ")";
    throw LinearlyDependent(os.str());
  }
  residual /= norm;
  columns_.conservativeResize(Eigen::NoChange, size() + 1);
  columns_.col(size() - 1) = residual;
  return residual;
}

OrthonormalBasis OrthonormalBasis::prefix(Index k) const {
  if (k < 0 || k > size()) {
    throw ConfigError("prefix length " + std::to_string(k) + " outside [0, " +
                      std::to_string(size()) + "]");
  }
  OrthonormalBasis out(dim());
  out.columns_ = columns_.leftCols(k);
  return out;
}

Projector::Projector(Index dim) : matrix_(Matrix::Identity(dim, dim)) {}

void Projector::remove(const Vector& unit_direction) {
  if (unit_direction.size() != dim()) {
    throw DimensionMismatch("projector update with a vector of the wrong length");
  }
  matrix_.selfadjointView<Eigen::Lower>().rankUpdate(unit_direction, -1.0);
  matrix_.triangularView<Eigen::StrictlyUpper>() = matrix_.transpose();
}

Projector projector_from_basis(const OrthonormalBasis& basis) {
  Projector omega(basis.dim());
  for (Index j = 0; j < basis.size(); ++j) {
    omega.remove(basis.columns().col(j));
  }
  return omega;
}

Matrix project_rows_orthogonal(const Matrix& X, const OrthonormalBasis& basis) {
  if (X.cols() != basis.dim()) {
    std::ostringstream os;
    os << "feature matrix has " << X.cols() << " columns, basis dimension is " << basis.dim();
    throw DimensionMismatch(os.str());
  }
  if (basis.empty()) return X;
  const Matrix& B = basis.columns();
  Matrix out = X;
  out.noalias() -= (X * B) * B.transpose();
  return out;
}

BasisCompletion complete_basis(const OrthonormalBasis& basis) {
  const Index p = basis.dim();
  const Index k = basis.size();
  if (k >= p) {
    throw BasisFull("basis spans R^" + std::to_string(p) + "; no complement to complete");
  }
  BasisCompletion out;
  out.dim = p;
  out.kept = k;
  if (k == 0) {
    out.columns = Matrix::Identity(p, p);
    return out;
  }
  Eigen::HouseholderQR<Matrix> qr(basis.columns());
  // Q = H_1 ... H_k; apply it to the trailing identity columns.
  Matrix tail = Matrix::Zero(p, p - k);
  tail.bottomRows(p - k).setIdentity();
  out.columns = qr.householderQ() * tail;
  return out;
}

Matrix schur_deflate(const Matrix& X, const Vector& omega) {
  if (X.cols() != omega.size()) {
    throw DimensionMismatch("direction length does not match feature columns");
  }
  const Vector u = X * omega;
  const double uu = u.squaredNorm();
  if (std::sqrt(uu) < tolerances().zero_norm) {
    throw DegenerateDirection("X w is numerically zero; deflation undefined");
  }
  Matrix out = X;
  out.noalias() -= u * ((u.transpose() * X) / uu);
  return out;
}

}  // namespace d4
