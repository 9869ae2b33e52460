#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "eigenlocus/types.hpp"

namespace eigenlocus {

enum class KernelFamily { linear, poly2, gaussian };

/// Reproducing kernel k_x(s). `gamma` is only read for the gaussian family.
struct KernelSpec {
  KernelFamily family = KernelFamily::linear;
  double gamma = 0.05;

  static KernelSpec linear() { return {KernelFamily::linear, 0.05}; }
  static KernelSpec poly2() { return {KernelFamily::poly2, 0.05}; }
  static KernelSpec gaussian(double gamma = 0.05) { return {KernelFamily::gaussian, gamma}; }

  friend bool operator==(const KernelSpec& a, const KernelSpec& b) {
    if (a.family != b.family) return false;
    return a.family != KernelFamily::gaussian || a.gamma == b.gamma;
  }
};

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::linear: return "linear";
    case KernelFamily::poly2: return "poly2";
    case KernelFamily::gaussian: return "gaussian";
  }
  return "unknown";
}

inline KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "linear") return KernelFamily::linear;
  if (name == "poly2") return KernelFamily::poly2;
  if (name == "gaussian") return KernelFamily::gaussian;
  throw InvalidInput("unknown kernel family '" + std::string(name) + "'");
}

/// Gaussian widths outside [0.01, 0.1] are accepted but reported.
inline std::optional<std::string> kernel_warning(const KernelSpec& spec) {
  if (spec.family == KernelFamily::gaussian && (spec.gamma < 0.01 || spec.gamma > 0.1))
    return "gaussian gamma " + std::to_string(spec.gamma) + " lies outside [0.01, 0.1]";
  return std::nullopt;
}

inline void validate(const KernelSpec& spec) {
  if (spec.family == KernelFamily::gaussian && !(spec.gamma > 0))
    throw InvalidInput("gaussian gamma must be positive");
}

/// Evaluates k_x(s). Row or column vectors are accepted; summation runs left to right.
template <typename DerivedS, typename DerivedX>
typename DerivedS::Scalar eval_kernel(const KernelSpec& spec,
                                      const Eigen::MatrixBase<DerivedS>& s,
                                      const Eigen::MatrixBase<DerivedX>& x) {
  using Scalar = typename DerivedS::Scalar;
  if (s.size() != x.size()) throw DimensionMismatch("kernel arguments differ in dimension");
  const Index d = s.size();
  switch (spec.family) {
    case KernelFamily::linear: {
      Scalar dot(0);
      for (Index k = 0; k < d; ++k) dot += s(k) * x(k);
      return dot;
    }
    case KernelFamily::poly2: {
      Scalar dot(0);
      for (Index k = 0; k < d; ++k) dot += s(k) * x(k);
      const Scalar t = dot + Scalar(1);
      return t * t;
    }
    case KernelFamily::gaussian: {
      using std::exp;
      Scalar dist2(0);
      for (Index k = 0; k < d; ++k) {
        const Scalar diff = s(k) - x(k);
        dist2 += diff * diff;
      }
      return exp(-Scalar(spec.gamma) * dist2);
    }
  }
  return Scalar(0);
}

/// K(i, j) = k(a_i, b_j) for row-sample matrices `a` and `b`.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> kernel_matrix(const KernelSpec& spec,
                                                const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.cols()) throw DimensionMismatch("kernel_matrix: dimension mismatch");
  Matrix<typename DerivedA::Scalar> k(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) k(i, j) = eval_kernel(spec, a.row(i), b.row(j));
  return k;
}

/// Symmetric kernel matrix of one sample set; the upper triangle is mirrored so the
/// result is exactly symmetric.
template <typename Derived>
Matrix<typename Derived::Scalar> kernel_matrix(const KernelSpec& spec,
                                               const Eigen::MatrixBase<Derived>& a) {
  const Index n = a.rows();
  Matrix<typename Derived::Scalar> k(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      k(i, j) = eval_kernel(spec, a.row(i), a.row(j));
      k(j, i) = k(i, j);
    }
  }
  return k;
}

/// The joint covariance matrix Q = eps*I + D_y K D_y of a labeled sample set.
template <typename Scalar>
struct GramMatrix {
  Matrix<Scalar> entries;
  Scalar epsilon = 0;
  Vector<Scalar> labels;

  Index size() const { return entries.rows(); }
};

using GramMatrixd = GramMatrix<double>;

/// Ridge used when the caller does not choose one: 1/C with C = 50 when the sample
/// count exceeds the dimension, otherwise zero (C infinite).
inline double default_epsilon(Index n_samples, Index dimension) {
  return n_samples > dimension ? 0.02 : 0.0;
}

template <typename Scalar>
GramMatrix<Scalar> build_gram(const SampleSet<Scalar>& samples, const KernelSpec& spec,
                              Scalar epsilon) {
  validate(spec);
  if (samples.size() == 0) throw InvalidInput("build_gram: empty sample set");
  check_binary_labels(samples);
  if (!(epsilon >= Scalar(0))) throw InvalidInput("build_gram: epsilon must be nonnegative");
  const auto [pos, neg] = class_counts(samples.labels);
  if (pos == 0 || neg == 0) throw InvalidInput("build_gram: both classes must be present");

  GramMatrix<Scalar> g;
  g.entries = kernel_matrix(spec, samples.points);
  const Index n = samples.size();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      Scalar v = samples.labels(i) * samples.labels(j) * g.entries(i, j);
      if (i == j) v += epsilon;
      g.entries(i, j) = v;
      g.entries(j, i) = v;
    }
  }
  g.epsilon = epsilon;
  g.labels = samples.labels;
  return g;
}

}  // namespace eigenlocus
