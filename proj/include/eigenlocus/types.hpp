#pragma once

#include <Eigen/Dense>

#include <limits>

#include "eigenlocus/errors.hpp"

namespace eigenlocus {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Labeled feature vectors, one sample per row of `points`. Labels are +1 (class one)
/// or -1 (class two) stored in the scalar type so they enter arithmetic directly.
template <typename Scalar>
struct SampleSet {
  Matrix<Scalar> points;
  Vector<Scalar> labels;

  Index size() const { return points.rows(); }
  Index dimension() const { return points.cols(); }
};

using SampleSetd = SampleSet<double>;

template <typename Scalar>
Scalar infinity() {
  return std::numeric_limits<Scalar>::infinity();
}

/// Throws unless every label is exactly +1 or -1 and the shapes agree.
template <typename Scalar>
void check_binary_labels(const SampleSet<Scalar>& samples) {
  if (samples.labels.size() != samples.points.rows())
    throw DimensionMismatch("label count does not match sample count");
  for (Index i = 0; i < samples.labels.size(); ++i) {
    const Scalar y = samples.labels(i);
    if (y != Scalar(1) && y != Scalar(-1))
      throw InvalidInput("labels must be +1 or -1");
  }
}

/// Counts of class-one and class-two labels.
template <typename Derived>
std::pair<Index, Index> class_counts(const Eigen::MatrixBase<Derived>& labels) {
  Index pos = 0;
  for (Index i = 0; i < labels.size(); ++i)
    if (labels(i) > 0) ++pos;
  return {pos, labels.size() - pos};
}

}  // namespace eigenlocus
