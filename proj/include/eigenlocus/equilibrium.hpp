#pragma once

#include <cmath>
#include <utility>

#include "eigenlocus/eigen.hpp"
#include "eigenlocus/model.hpp"

namespace eigenlocus {

/// Residuals of the balance identities a trained model is expected to satisfy, plus
/// diagnostics. Every residual is relative and nonnegative.
template <typename Scalar>
struct EquilibriumReport {
  Scalar dual_equilibrium = 0;     // |sum psi_1 - sum psi_2| / sum psi
  Scalar primal_equilibrium = 0;   // |(sum k_1 + sum k_2) . kappa| / (||kappa|| sum ||k_i||)
  Scalar eigenenergy_identity = 0; // | ||kappa||^2 - sum psi (1 - xi) | / sum psi (1 - xi)
  Scalar class1_energy = 0;
  Scalar class2_energy = 0;
  Scalar energy_split = 0;         // the two class energies add up to the total
  Scalar cosine_balance_1 = 0;
  Scalar cosine_balance_2 = 0;
  Scalar eigen_relation = 0;       // || psi_A - (Q psi)_A / lambda1 || / ||psi_A||
  Scalar eigen_alignment = 0;      // |cos| between psi and the dominant eigenvector of Q
  Scalar side_norm_gap = 0;        // | ||kappa_1|| - ||kappa_2|| | / ||kappa||
  Scalar delta_y = 0;              // (1/l) sum y_i (1 - xi_i)
  Scalar lambda1 = 0;              // dominant eigenvalue of Q
  Scalar integration_constant_1 = 0;  // -kappa_1 . kappa_2
  Scalar integration_constant_2 = 0;  // -kappa_2 . kappa_1
};

using EquilibriumReportd = EquilibriumReport<double>;

/// Inner products between the two sides of kappa, through the kernel only.
template <typename Scalar>
struct SideGeometry {
  Scalar k11 = 0, k12 = 0, k22 = 0;  // ||kappa_1||^2, kappa_1 . kappa_2, ||kappa_2||^2
  // The differences below are accumulated directly rather than formed from k11, k12,
  // k22: the sides can be many orders of magnitude longer than kappa itself.
  Scalar side1_energy = 0;            // kappa_1 . kappa = ||kappa_1||^2 - kappa_1 . kappa_2
  Scalar side2_energy = 0;            // -kappa_2 . kappa = ||kappa_2||^2 - kappa_2 . kappa_1
  Scalar psi1 = 0, psi2 = 0;          // per-side sums of psi
  Scalar energy1 = 0, energy2 = 0;    // per-side sums of psi (1 - xi)
  Vector<Scalar> projections;         // k_{x_i} . kappa for each extreme point
  Vector<Scalar> self_norms;          // ||k_{x_i}|| = sqrt(k(x_i, x_i))
  Scalar kappa_norm_sq = 0;           // ||kappa||^2

  Scalar kappa_sq() const { return kappa_norm_sq; }
  Scalar energy() const { return energy1 + energy2; }
};

template <typename Scalar>
SideGeometry<Scalar> side_geometry(const Eigenlocus<Scalar>& m) {
  using std::sqrt;
  const Index l = m.size();
  const Matrix<Scalar> k = extreme_kernel_matrix(m);
  Vector<Scalar> p1 = Vector<Scalar>::Zero(l), p2 = Vector<Scalar>::Zero(l);
  SideGeometry<Scalar> g;
  for (Index i = 0; i < l; ++i) {
    const Scalar e = m.psi(i) * (Scalar(1) - m.xi(i));
    if (m.labels(i) > 0) {
      p1(i) = m.psi(i);
      g.psi1 += m.psi(i);
      g.energy1 += e;
    } else {
      p2(i) = m.psi(i);
      g.psi2 += m.psi(i);
      g.energy2 += e;
    }
  }
  // Wide accumulation: kappa is often a small difference of two large sides.
  using W = detail::Wide<Scalar>;
  W k11(0), k12(0), k22(0), s1(0), s2(0);
  g.projections.resize(l);
  for (Index i = 0; i < l; ++i) {
    W row1(0), row2(0), row(0);
    for (Index j = 0; j < l; ++j) {
      row1 += W(k(i, j)) * W(p1(j));
      row2 += W(k(i, j)) * W(p2(j));
      row += W(k(i, j)) * (W(p1(j)) - W(p2(j)));
    }
    k11 += W(p1(i)) * row1;
    k12 += W(p1(i)) * row2;
    k22 += W(p2(i)) * row2;
    s1 += W(p1(i)) * row;
    s2 -= W(p2(i)) * row;
    g.projections(i) = Scalar(row);
  }
  g.k11 = Scalar(k11);
  g.k12 = Scalar(k12);
  g.k22 = Scalar(k22);
  g.side1_energy = Scalar(s1);
  g.side2_energy = Scalar(s2);
  g.kappa_norm_sq = Scalar(s1 + s2);
  g.self_norms = k.diagonal().cwiseSqrt();
  return g;
}

namespace detail {
template <typename Scalar>
Scalar safe_ratio(Scalar num, Scalar den) {
  using std::abs;
  return den != Scalar(0) ? abs(num) / abs(den) : abs(num);
}
}  // namespace detail

template <typename Scalar>
Scalar check_dual_equilibrium(const Eigenlocus<Scalar>& m) {
  Scalar s1(0), s2(0);
  for (Index i = 0; i < m.size(); ++i) (m.labels(i) > 0 ? s1 : s2) += m.psi(i);
  return detail::safe_ratio(s1 - s2, s1 + s2);
}

template <typename Scalar>
Scalar check_primal_equilibrium(const Eigenlocus<Scalar>&, const SideGeometry<Scalar>& g) {
  using std::sqrt;
  const Scalar norm = sqrt(std::max(g.kappa_sq(), Scalar(0)));
  return detail::safe_ratio(g.projections.sum(), norm * g.self_norms.sum());
}

template <typename Scalar>
Scalar check_primal_equilibrium(const Eigenlocus<Scalar>& m) {
  return check_primal_equilibrium(m, side_geometry(m));
}

template <typename Scalar>
Scalar check_eigenenergy_identity(const Eigenlocus<Scalar>&, const SideGeometry<Scalar>& g) {
  return detail::safe_ratio(g.kappa_sq() - g.energy(), g.energy());
}

template <typename Scalar>
Scalar check_eigenenergy_identity(const Eigenlocus<Scalar>& m) {
  return check_eigenenergy_identity(m, side_geometry(m));
}

/// Per-side energies against their KKT sums:
///   kappa_1 . kappa            = sum_1 psi (1 - xi - kappa0)
///   ||kappa_2||^2 - k_2 . k_1  = sum_2 psi (1 - xi + kappa0)
/// Both residuals are divided by the total energy sum psi (1 - xi), which does not
/// depend on kappa0.
template <typename Scalar>
std::pair<Scalar, Scalar> check_class_energy_split(const Eigenlocus<Scalar>& m,
                                                   const SideGeometry<Scalar>& g) {
  const Scalar lhs1 = g.side1_energy;
  const Scalar lhs2 = g.side2_energy;
  const Scalar rhs1 = g.energy1 - m.kappa0 * g.psi1;
  const Scalar rhs2 = g.energy2 + m.kappa0 * g.psi2;
  return {detail::safe_ratio(lhs1 - rhs1, g.energy()), detail::safe_ratio(lhs2 - rhs2, g.energy())};
}

template <typename Scalar>
std::pair<Scalar, Scalar> check_class_energy_split(const Eigenlocus<Scalar>& m) {
  return check_class_energy_split(m, side_geometry(m));
}

template <typename Scalar>
Scalar delta_y(const Eigenlocus<Scalar>& m) {
  return locus_statistics(m).expected_likelihood;
}

struct CosineBalance {
  double balance1 = 0;
  double balance2 = 0;
  double side_norm_gap = 0;
};

/// ||k_1||^2 - k_1.k_2 + delta sum psi_1 = ||kappa||^2 / 2 = ||k_2||^2 - k_2.k_1 - delta sum psi_2,
/// each side measured against ||kappa||^2 / 2, and the side-length gap.
template <typename Scalar>
CosineBalance check_cosine_balance(const Eigenlocus<Scalar>& m, const SideGeometry<Scalar>& g) {
  using std::abs;
  using std::sqrt;
  const Scalar delta = delta_y(m);
  const Scalar half = Scalar(0.5) * g.kappa_sq();
  const Scalar lhs1 = g.side1_energy + delta * g.psi1;
  const Scalar lhs2 = g.side2_energy - delta * g.psi2;
  CosineBalance out;
  out.balance1 = static_cast<double>(detail::safe_ratio(lhs1 - half, half));
  out.balance2 = static_cast<double>(detail::safe_ratio(lhs2 - half, half));
  const Scalar n1 = sqrt(std::max(g.k11, Scalar(0))), n2 = sqrt(std::max(g.k22, Scalar(0)));
  out.side_norm_gap =
      static_cast<double>(detail::safe_ratio(n1 - n2, sqrt(std::max(g.kappa_sq(), Scalar(0)))));
  return out;
}

template <typename Scalar>
CosineBalance check_cosine_balance(const Eigenlocus<Scalar>& m) {
  return check_cosine_balance(m, side_geometry(m));
}

/// Rows of `gram` that hold the model's extreme points. Uses the recorded training
/// indices when they fit, otherwise expects `gram` to be built on the extreme points.
template <typename Scalar>
std::vector<Index> gram_rows_of(const Eigenlocus<Scalar>& m, const GramMatrix<Scalar>& gram) {
  std::vector<Index> rows = m.source_indices;
  if (rows.empty() && gram.size() == m.size())
    for (Index i = 0; i < m.size(); ++i) rows.push_back(i);
  if (static_cast<Index>(rows.size()) != m.size())
    throw DimensionMismatch("model extreme points cannot be located in the Gram matrix");
  for (Index r : rows)
    if (r < 0 || r >= gram.size()) throw DimensionMismatch("extreme point index outside the Gram matrix");
  return rows;
}

struct EigenRelation {
  double residual = 0;
  double alignment = 0;
};

/// psi restricted to the extreme points against (Q psi) / lambda1 on the same rows.
template <typename Scalar>
EigenRelation check_eigen_relation(const Eigenlocus<Scalar>& m, const GramMatrix<Scalar>& gram,
                                   Scalar lambda1, const Vector<Scalar>& v) {
  using std::abs;
  const auto rows = gram_rows_of(m, gram);
  Vector<Scalar> psi_full = Vector<Scalar>::Zero(gram.size());
  for (Index a = 0; a < m.size(); ++a) psi_full(rows[static_cast<std::size_t>(a)]) = m.psi(a);
  const Vector<Scalar> qpsi = gram.entries * psi_full;
  Scalar num(0), den(0);
  for (Index a = 0; a < m.size(); ++a) {
    const Index r = rows[static_cast<std::size_t>(a)];
    const Scalar diff = m.psi(a) - qpsi(r) / lambda1;
    num += diff * diff;
    den += m.psi(a) * m.psi(a);
  }
  EigenRelation out;
  out.residual = static_cast<double>(detail::safe_ratio(std::sqrt(num), std::sqrt(den)));
  if (v.size() == psi_full.size())
    out.alignment =
        static_cast<double>(detail::safe_ratio(psi_full.dot(v), psi_full.norm() * v.norm()));
  return out;
}

template <typename Scalar>
EquilibriumReport<Scalar> full_report(const Eigenlocus<Scalar>& m, const GramMatrix<Scalar>& gram) {
  const auto g = side_geometry(m);
  EquilibriumReport<Scalar> r;
  r.dual_equilibrium = check_dual_equilibrium(m);
  r.primal_equilibrium = check_primal_equilibrium(m, g);
  r.eigenenergy_identity = check_eigenenergy_identity(m, g);
  std::tie(r.class1_energy, r.class2_energy) = check_class_energy_split(m, g);
  {
    const Scalar split = g.side1_energy + g.side2_energy;
    const Scalar sums =
        (g.energy1 - m.kappa0 * g.psi1) + (g.energy2 + m.kappa0 * g.psi2);
    r.energy_split = detail::safe_ratio(split - sums, g.energy());
  }
  const auto cb = check_cosine_balance(m, g);
  r.cosine_balance_1 = Scalar(cb.balance1);
  r.cosine_balance_2 = Scalar(cb.balance2);
  r.side_norm_gap = Scalar(cb.side_norm_gap);
  r.delta_y = delta_y(m);
  // Dense solve: the top two eigenvalues of Q can be close enough to stall power iteration.
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(gram.entries);
  if (es.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver failed", 0.0);
  const Index top = gram.size() - 1;
  r.lambda1 = es.eigenvalues()(top);
  const Vector<Scalar> v = es.eigenvectors().col(top);
  const auto er = check_eigen_relation(m, gram, r.lambda1, v);
  r.eigen_relation = Scalar(er.residual);
  r.eigen_alignment = Scalar(er.alignment);
  r.integration_constant_1 = -g.k12;
  r.integration_constant_2 = -g.k12;
  return r;
}

/// Report against the Gram matrix of the extreme points alone (used when the
/// training set is not at hand).
template <typename Scalar>
EquilibriumReport<Scalar> full_report(const Eigenlocus<Scalar>& m) {
  SampleSet<Scalar> s{m.extreme_points, m.labels};
  Eigenlocus<Scalar> local = m;
  local.source_indices.clear();
  const Scalar eps = m.C < infinity<Scalar>() ? Scalar(1) / m.C : Scalar(0);
  return full_report(local, build_gram(s, m.kernel, eps));
}

}  // namespace eigenlocus
