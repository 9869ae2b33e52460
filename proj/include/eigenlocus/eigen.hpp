#pragma once

#include <cmath>

#include <Eigen/Eigenvalues>

#include "eigenlocus/types.hpp"

namespace eigenlocus {

template <typename Scalar>
struct EigenPair {
  Scalar value = 0;
  Vector<Scalar> vector;
  Index iterations = 0;
  Scalar residual = 0;  // ||Qv - value v||
};

/// Dominant eigenpair of a symmetric positive semidefinite matrix by power iteration.
/// Stops once ||Qv - lambda v|| <= tol * lambda.
template <typename Derived>
EigenPair<typename Derived::Scalar> principal_eigpair(const Eigen::MatrixBase<Derived>& q,
                                                      typename Derived::Scalar tol = 1e-10,
                                                      Index max_iter = 100000) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::sqrt;
  if (q.rows() != q.cols()) throw DimensionMismatch("principal_eigpair: matrix not square");
  if (q.rows() == 0) throw InvalidInput("principal_eigpair: empty matrix");
  if (!(tol > Scalar(0))) throw InvalidInput("principal_eigpair: tol must be positive");

  const Index n = q.rows();
  EigenPair<Scalar> out;
  // Deterministic start that is not orthogonal to anything structured: uneven positive weights.
  Vector<Scalar> v(n);
  for (Index i = 0; i < n; ++i) v(i) = Scalar(1) + Scalar(i + 1) / Scalar(n + 1) * Scalar(0.5);
  v.normalize();

  Vector<Scalar> qv = q * v;
  Scalar lambda = v.dot(qv);
  Scalar residual = (qv - lambda * v).norm();
  const Scalar scale = q.cwiseAbs().maxCoeff();
  for (Index it = 0; it < max_iter; ++it) {
    if (residual <= tol * abs(lambda) || scale == Scalar(0)) {
      out.value = lambda;
      out.vector = v;
      out.iterations = it;
      out.residual = residual;
      return out;
    }
    const Scalar norm = qv.norm();
    if (norm == Scalar(0)) break;
    v = qv / norm;
    qv = q * v;
    lambda = v.dot(qv);
    residual = (qv - lambda * v).norm();
  }
  if (residual <= tol * abs(lambda)) {
    out.value = lambda;
    out.vector = v;
    out.iterations = max_iter;
    out.residual = residual;
    return out;
  }
  throw ConvergenceError("power iteration did not converge", static_cast<double>(residual));
}

/// |x'Qx - sum_i lambda_i (v_i'x)^2| using a full symmetric eigendecomposition of q.
template <typename DerivedQ, typename DerivedX>
typename DerivedQ::Scalar principal_axes_identity_check(const Eigen::MatrixBase<DerivedQ>& q,
                                                        const Eigen::MatrixBase<DerivedX>& x) {
  using Scalar = typename DerivedQ::Scalar;
  using std::abs;
  if (q.rows() != q.cols()) throw DimensionMismatch("identity check: matrix not square");
  if (x.size() != q.rows()) throw DimensionMismatch("identity check: vector length mismatch");
  const Matrix<Scalar> qm = q;
  const Vector<Scalar> xv = x;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(qm);
  if (es.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver failed", 0.0);
  const Scalar quad = xv.dot(qm * xv);
  const Vector<Scalar> coords = es.eigenvectors().transpose() * xv;
  Scalar expansion(0);
  for (Index i = 0; i < coords.size(); ++i)
    expansion += es.eigenvalues()(i) * coords(i) * coords(i);
  return abs(quad - expansion);
}

}  // namespace eigenlocus
