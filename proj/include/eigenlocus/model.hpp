#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "eigenlocus/dual_solver.hpp"

namespace eigenlocus {

/// Trained binary classifier d(s) = sum_i y_i psi_i k(x_i, s) + kappa0 over the
/// extreme points only. Class one (+1) is decided when d(s) >= 0.
template <typename Scalar>
struct Eigenlocus {
  KernelSpec kernel;
  Scalar C = infinity<Scalar>();
  Matrix<Scalar> extreme_points;  // one extreme point per row
  Vector<Scalar> labels;
  Vector<Scalar> psi;
  Vector<Scalar> xi;  // psi / C, zero when C is infinite
  Scalar kappa0 = 0;
  std::vector<Index> source_indices;  // rows of the training set, empty after loading
  Index l1 = 0;
  Index l2 = 0;

  Index size() const { return extreme_points.rows(); }
  Index dimension() const { return extreme_points.cols(); }
};

using Eigenlocusd = Eigenlocus<double>;

/// Unsigned kernel matrix between the model's extreme points.
template <typename Scalar>
Matrix<Scalar> extreme_kernel_matrix(const Eigenlocus<Scalar>& m) {
  return kernel_matrix(m.kernel, m.extreme_points);
}

/// k_{x_i} . kappa for every extreme point, i.e. sum_j y_j psi_j k(x_j, x_i).
template <typename Scalar>
Vector<Scalar> extreme_projections(const Eigenlocus<Scalar>& m, const Matrix<Scalar>& kernel) {
  return kernel * m.labels.cwiseProduct(m.psi);
}

template <typename Scalar>
struct LocusStatistics {
  Scalar average_risk_projection = 0;  // ((1/l) sum_i k_{x_i}) . kappa
  Scalar expected_likelihood = 0;      // (1/l) sum_i y_i (1 - xi_i)
};

template <typename Scalar>
LocusStatistics<Scalar> locus_statistics(const Eigenlocus<Scalar>& m) {
  const Index l = m.size();
  if (l == 0) throw InvalidInput("locus_statistics: model has no extreme points");
  const Vector<Scalar> proj = extreme_projections(m, extreme_kernel_matrix(m));
  LocusStatistics<Scalar> s;
  Scalar lab(0);
  for (Index i = 0; i < l; ++i) lab += m.labels(i) * (Scalar(1) - m.xi(i));
  s.average_risk_projection = proj.sum() / Scalar(l);
  s.expected_likelihood = lab / Scalar(l);
  return s;
}

/// kappa0 = (1/l) sum y_i (1 - xi_i) - ((1/l) sum k_{x_i}) . kappa
template <typename Scalar>
Scalar compute_locus_offset(const Eigenlocus<Scalar>& m) {
  const auto s = locus_statistics(m);
  return s.expected_likelihood - s.average_risk_projection;
}

template <typename Scalar>
void check_model_input(const Eigenlocus<Scalar>& m, Index dim) {
  if (dim != m.dimension()) throw DimensionMismatch("feature vector does not match model dimension");
}

template <typename Scalar, typename Derived>
Scalar discriminant_value(const Eigenlocus<Scalar>& m, const Eigen::MatrixBase<Derived>& s) {
  check_model_input(m, s.size());
  Scalar acc(0);
  for (Index i = 0; i < m.size(); ++i)
    acc += m.labels(i) * m.psi(i) * eval_kernel(m.kernel, m.extreme_points.row(i), s);
  return acc + m.kappa0;
}

/// Same discriminant written around the mean extreme kernel image:
/// (k_s - (1/l) sum k_{x_i}) . kappa + (1/l) sum y_i (1 - xi_i).
template <typename Scalar, typename Derived>
Scalar discriminant_value_centered(const Eigenlocus<Scalar>& m,
                                   const Eigen::MatrixBase<Derived>& s,
                                   const LocusStatistics<Scalar>& stats) {
  check_model_input(m, s.size());
  Scalar ks(0);
  for (Index i = 0; i < m.size(); ++i)
    ks += m.labels(i) * m.psi(i) * eval_kernel(m.kernel, m.extreme_points.row(i), s);
  return (ks - stats.average_risk_projection) + stats.expected_likelihood;
}

/// Discriminant at every row of `points`.
template <typename Scalar, typename Derived>
Vector<Scalar> discriminant_values(const Eigenlocus<Scalar>& m,
                                   const Eigen::MatrixBase<Derived>& points) {
  check_model_input(m, points.cols());
  Vector<Scalar> out(points.rows());
  for (Index r = 0; r < points.rows(); ++r) out(r) = discriminant_value(m, points.row(r));
  return out;
}

template <typename Scalar, typename Derived>
int classify(const Eigenlocus<Scalar>& m, const Eigen::MatrixBase<Derived>& s) {
  return discriminant_value(m, s) >= Scalar(0) ? 1 : -1;
}

template <typename Scalar>
Eigenlocus<Scalar> assemble_eigenaxis(const SampleSet<Scalar>& samples,
                                      const DualSolution<Scalar>& dual, const ExtremeSet& extreme,
                                      const KernelSpec& kernel, Scalar C) {
  if (dual.psi.size() != samples.size())
    throw DimensionMismatch("assemble_eigenaxis: solution does not match the samples");
  if (extreme.side1.empty() || extreme.side2.empty())
    throw InvalidInput("assemble_eigenaxis: one-sided extreme set, boundary undefined");

  Eigenlocus<Scalar> m;
  m.kernel = kernel;
  m.C = C;
  const Index l = extreme.size();
  m.extreme_points.resize(l, samples.dimension());
  m.labels.resize(l);
  m.psi.resize(l);
  m.xi.resize(l);
  const bool finite = C < infinity<Scalar>();
  for (Index a = 0; a < l; ++a) {
    const Index i = extreme.indices[a];
    m.extreme_points.row(a) = samples.points.row(i);
    m.labels(a) = samples.labels(i);
    m.psi(a) = dual.psi(i);
    m.xi(a) = finite ? dual.psi(i) / C : Scalar(0);
  }
  m.source_indices = extreme.indices;
  m.l1 = static_cast<Index>(extreme.side1.size());
  m.l2 = static_cast<Index>(extreme.side2.size());
  m.kappa0 = compute_locus_offset(m);
  return m;
}

template <typename Scalar>
struct TrainResult {
  Eigenlocus<Scalar> model;
  DualProblem<Scalar> problem;
  DualSolution<Scalar> solution;
  ExtremeSet extreme;
};

/// Ridge epsilon for a given C; infinity maps to zero.
template <typename Scalar>
Scalar epsilon_for(Scalar C) {
  if (!(C > Scalar(0))) throw InvalidInput("C must be positive");
  return C < infinity<Scalar>() ? Scalar(1) / C : Scalar(0);
}

template <typename Scalar>
TrainResult<Scalar> train_detailed(const SampleSet<Scalar>& samples, const KernelSpec& kernel,
                                   Scalar C, const SolverOptions& opt = {},
                                   double extreme_threshold = 1e-6) {
  TrainResult<Scalar> r;
  r.problem = make_dual_problem(build_gram(samples, kernel, epsilon_for(C)));
  r.solution = solve_dual(r.problem, opt);
  r.extreme = extract_extreme_set(r.solution, samples.labels, extreme_threshold);
  r.model = assemble_eigenaxis(samples, r.solution, r.extreme, kernel, r.problem.C);
  return r;
}

template <typename Scalar>
Eigenlocus<Scalar> train(const SampleSet<Scalar>& samples, const KernelSpec& kernel, Scalar C,
                         const SolverOptions& opt = {}) {
  return train_detailed(samples, kernel, C, opt).model;
}

/// C chosen from the sample count and dimension (50 when n > d, otherwise infinite).
template <typename Scalar>
Scalar default_C(Index n_samples, Index dimension) {
  const double eps = default_epsilon(n_samples, dimension);
  return eps > 0 ? Scalar(1.0 / eps) : infinity<Scalar>();
}

/// One-vs-rest ensemble. models[k] separates classes[k] (+1) from the rest (-1).
template <typename Scalar>
struct MulticlassModel {
  std::vector<int> classes;
  std::vector<Eigenlocus<Scalar>> models;

  Index class_count() const { return static_cast<Index>(classes.size()); }
};

/// Labels must cover 1..M with every class present, M >= 2.
template <typename Scalar>
MulticlassModel<Scalar> train_multiclass(const Matrix<Scalar>& points,
                                         const std::vector<int>& labels,
                                         const KernelSpec& kernel, Scalar C,
                                         const SolverOptions& opt = {}) {
  if (static_cast<Index>(labels.size()) != points.rows())
    throw DimensionMismatch("train_multiclass: label count does not match sample count");
  if (labels.empty()) throw InvalidInput("train_multiclass: empty sample set");
  const int max_label = *std::max_element(labels.begin(), labels.end());
  const int min_label = *std::min_element(labels.begin(), labels.end());
  if (min_label < 1) throw InvalidInput("train_multiclass: labels must be 1..M");
  if (max_label < 2) throw InvalidInput("train_multiclass: need at least two classes");
  std::vector<Index> counts(static_cast<std::size_t>(max_label) + 1, 0);
  for (int c : labels) ++counts[static_cast<std::size_t>(c)];
  for (int c = 1; c <= max_label; ++c)
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw InvalidInput("train_multiclass: class " + std::to_string(c) + " has no samples");

  MulticlassModel<Scalar> mc;
  for (int c = 1; c <= max_label; ++c) {
    SampleSet<Scalar> s;
    s.points = points;
    s.labels.resize(points.rows());
    for (Index i = 0; i < points.rows(); ++i)
      s.labels(i) = labels[static_cast<std::size_t>(i)] == c ? Scalar(1) : Scalar(-1);
    mc.classes.push_back(c);
    mc.models.push_back(train(s, kernel, C, opt));
  }
  return mc;
}

/// Class whose one-vs-rest discriminant is largest; ties go to the lowest class.
template <typename Scalar, typename Derived>
int classify_multiclass(const MulticlassModel<Scalar>& mc, const Eigen::MatrixBase<Derived>& s) {
  if (mc.models.empty()) throw InvalidInput("classify_multiclass: empty model");
  int best = mc.classes.front();
  Scalar best_d = discriminant_value(mc.models.front(), s);
  for (std::size_t k = 1; k < mc.models.size(); ++k) {
    const Scalar d = discriminant_value(mc.models[k], s);
    if (d > best_d) {
      best_d = d;
      best = mc.classes[k];
    }
  }
  return best;
}

}  // namespace eigenlocus
