#include "d4/kernelize.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "d4/errors.hpp"
#include "d4/learners.hpp"

namespace d4 {

namespace {

double scale_of(const Matrix& K) { return std::max(K.cwiseAbs().maxCoeff(), 1e-300); }

}  // namespace

void KernelMatrix::validate() const {
  if (gram.rows() != gram.cols()) throw DimensionMismatch("kernel matrix is not square");
  if (gram.rows() == 0) throw DimensionMismatch("kernel matrix is empty");
  if (!gram.allFinite()) throw ConfigError("kernel matrix has non-finite entries");
  const double scale = scale_of(gram);
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NonSymmetric("kernel matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8 * gram.norm()) {
    throw ConfigError("kernel matrix is not positive semidefinite");
  }
  if (cross && cross->cols() != gram.cols()) {
    throw DimensionMismatch("cross-kernel block width does not match the kernel size");
  }
}

double feature_norm_sq(const Matrix& K, const Vector& alpha) { return alpha.dot(K * alpha); }

KernelMatrix kernel_d4_step(const KernelMatrix& K, const DualDirection& direction) {
  if (direction.alpha.size() != K.size()) {
    throw DimensionMismatch("dual coefficients do not match the kernel size");
  }
  const Vector k_alpha = K.gram * direction.alpha;
  const double norm_sq = direction.alpha.dot(k_alpha);
  if (!(norm_sq >= 1e-12 * K.gram.norm())) {
    std::ostringstream os;
    os << "direction has feature-space norm^2 " << norm_sq << "; cannot deflate";
    throw DegenerateDirection(os.str());
  }
  KernelMatrix out;
  out.gram = K.gram;
  out.gram.selfadjointView<Eigen::Lower>().rankUpdate(k_alpha, -1.0 / norm_sq);
  out.gram.triangularView<Eigen::StrictlyUpper>() = out.gram.transpose();
  if (K.cross) {
    const Vector cross_alpha = *K.cross * direction.alpha;
    out.cross = *K.cross - cross_alpha * (k_alpha.transpose() / norm_sq);
  }
  return out;
}

KernelD4Result kernel_d4_fit(const KernelMatrix& K, const Vector& y, int iterations,
                             double ridge_alpha) {
  K.validate();
  if (y.size() != K.size()) throw DimensionMismatch("targets do not match the kernel size");
  if (iterations < 0 || iterations > K.size()) {
    throw ConfigError("kernel iterations must lie in [0, n]");
  }
  KernelD4Result result;
  result.deflations.push_back(K);
  if (iterations == 0) return result;

  // Work on explicit coordinates K = Z Z^T from the spectrum. Eigenvalues at
  // rounding level are dropped: the ridge dual weights them by 1 / a, and the
  // noise they carry would otherwise grow with every step. Held-out rows map
  // into the same coordinates through C U diag(lambda^{-1/2}).
  Eigen::SelfAdjointEigenSolver<Matrix> eig(K.gram);
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = 1e-10 * std::max(lambda.maxCoeff(), 0.0);
  Index first = 0;
  while (first < lambda.size() && !(lambda[first] > cutoff)) ++first;
  const Index rank = lambda.size() - first;
  const Matrix U = eig.eigenvectors().rightCols(rank);
  const Vector root = lambda.tail(rank).cwiseSqrt();
  const Matrix Z0 = U * root.asDiagonal();
  Matrix C0;
  if (K.cross) C0 = (*K.cross * U) * root.cwiseInverse().asDiagonal();

  const double threshold = 1e-12 * K.gram.norm();
  Matrix V(rank, 0);  // removed directions, orthonormal in these coordinates
  Matrix Z = Z0;
  for (int it = 0; it < iterations; ++it) {
    const KernelMatrix& current = result.deflations.back();
    DualDirection dir{fit_kernel_ridge_probe(current.gram, y, ridge_alpha)};
    Vector v = Z.transpose() * dir.alpha;
    const double norm_sq = v.squaredNorm();
    for (int pass = 0; pass < 2; ++pass) v -= V * (V.transpose() * v);
    if (!(norm_sq >= threshold) || !(v.squaredNorm() >= threshold)) {
      std::ostringstream os;
      os << "step " << it + 1 << ": direction has feature-space norm^2 " << norm_sq
         << "; cannot deflate";
      result.status = KernelD4Status::degenerate_direction;
      result.message = os.str();
      break;
    }
    V.conservativeResize(Eigen::NoChange, V.cols() + 1);
    V.col(V.cols() - 1) = v.normalized();

    Z = Z0 - (Z0 * V) * V.transpose();
    KernelMatrix next;
    next.gram = Z * Z.transpose();
    if (K.cross) next.cross = (C0 - (C0 * V) * V.transpose()) * Z.transpose();
    result.directions.push_back(std::move(dir));
    result.deflations.push_back(std::move(next));
  }
  return result;
}

}  // namespace d4
