#pragma once

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <type_traits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "eigenlocus/kernel.hpp"

namespace eigenlocus {

struct SolverOptions {
  double tol = 1e-8;
  Index max_iter = 100000;
  bool record_objective = false;  // keep the objective after every pair update
};

/// maximize 1'psi - psi'Q psi / 2  subject to  psi'y = 0, psi >= 0.
/// C is 1/epsilon, or infinity for an unregularized Gram matrix.
template <typename Scalar>
struct DualProblem {
  GramMatrix<Scalar> gram;
  Vector<Scalar> labels;
  Scalar C = infinity<Scalar>();

  Index size() const { return gram.size(); }
};

using DualProblemd = DualProblem<double>;

template <typename Scalar>
DualProblem<Scalar> make_dual_problem(GramMatrix<Scalar> gram) {
  DualProblem<Scalar> p;
  p.labels = gram.labels;
  p.C = gram.epsilon > Scalar(0) ? Scalar(1) / gram.epsilon : infinity<Scalar>();
  p.gram = std::move(gram);
  return p;
}

template <typename Scalar>
struct DualSolution {
  Vector<Scalar> psi;
  Scalar objective = 0;
  Scalar kkt_stationarity = 0;
  Scalar kkt_feasibility = 0;
  Scalar kkt_complementarity = 0;
  Scalar multiplier = 0;  // least-squares lambda0 over the active set
  Index iterations = 0;
  bool converged = false;
  std::vector<Scalar> objective_trace;
};

using DualSolutiond = DualSolution<double>;

template <typename Scalar>
struct KktResiduals {
  Scalar stationarity = 0;
  Scalar feasibility = 0;
  Scalar complementarity = 0;
  Scalar multiplier = 0;
};

namespace detail {

// Accumulator wider than Scalar where the platform has one.
template <typename Scalar>
using Wide = std::conditional_t<(sizeof(Scalar) < sizeof(long double)), long double, Scalar>;

/// A x - b with every row accumulated in the wide type. Used wherever a residual must
/// resolve below the round-off of a plain double product (large kernel values).
template <typename Scalar, typename DerivedA, typename DerivedX, typename DerivedB>
Vector<Scalar> wide_residual(const Eigen::MatrixBase<DerivedA>& a,
                             const Eigen::MatrixBase<DerivedX>& x,
                             const Eigen::MatrixBase<DerivedB>& b) {
  using W = Wide<Scalar>;
  Vector<Scalar> r(a.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    W acc = -W(b(i));
    for (Index j = 0; j < a.cols(); ++j) acc += W(a(i, j)) * W(x(j));
    r(i) = Scalar(acc);
  }
  return r;
}

/// Q psi - 1, accumulated wide.
template <typename Scalar, typename Derived>
Vector<Scalar> dual_gradient(const Matrix<Scalar>& q, const Eigen::MatrixBase<Derived>& psi) {
  return wide_residual<Scalar>(q, psi, Vector<Scalar>::Ones(q.rows()));
}

}  // namespace detail

/// 1'psi - psi'Q psi / 2 evaluated directly.
template <typename Scalar, typename Derived>
Scalar dual_objective(const DualProblem<Scalar>& p, const Eigen::MatrixBase<Derived>& psi) {
  const Vector<Scalar> qpsi = p.gram.entries * psi;
  return psi.sum() - Scalar(0.5) * psi.dot(qpsi);
}

template <typename Scalar, typename Derived>
KktResiduals<Scalar> kkt_residuals(const DualProblem<Scalar>& p,
                                   const Eigen::MatrixBase<Derived>& psi) {
  using std::abs;
  const Index n = p.size();
  if (psi.size() != n || p.labels.size() != n)
    throw DimensionMismatch("kkt_residuals: size mismatch");
  const Vector<Scalar> grad = detail::dual_gradient(p.gram.entries, psi);

  Index active = 0;
  Scalar acc(0);
  for (Index i = 0; i < n; ++i) {
    if (psi(i) > Scalar(0)) {
      acc += p.labels(i) * grad(i);
      ++active;
    }
  }
  if (active == 0) throw EmptyActiveSet();

  KktResiduals<Scalar> r;
  r.multiplier = -acc / Scalar(active);
  r.feasibility = abs(psi.dot(p.labels));
  for (Index i = 0; i < n; ++i) {
    const Scalar res = grad(i) + r.multiplier * p.labels(i);
    if (psi(i) > Scalar(0))
      r.stationarity = std::max(r.stationarity, abs(res));
    else
      r.complementarity = std::max(r.complementarity, std::max(Scalar(0), -res));
  }
  return r;
}

template <typename Scalar>
KktResiduals<Scalar> kkt_residuals(const DualProblem<Scalar>& p, const DualSolution<Scalar>& s) {
  return kkt_residuals(p, s.psi);
}

namespace detail {

// Maximal violating value over the "up" set and minimal over the "low" set, in the
// -y_t G_t ordering. No upper bound on psi, so only the zero bound restricts membership.
template <typename Scalar>
struct Violation {
  Scalar up = -std::numeric_limits<Scalar>::infinity();
  Scalar low = std::numeric_limits<Scalar>::infinity();
  Index i = -1;
};

template <typename Scalar>
Violation<Scalar> max_violation(const Vector<Scalar>& psi, const Vector<Scalar>& y,
                                const Vector<Scalar>& grad) {
  Violation<Scalar> v;
  for (Index t = 0; t < psi.size(); ++t) {
    const Scalar f = -y(t) * grad(t);
    const bool in_up = y(t) > 0 || psi(t) > Scalar(0);
    const bool in_low = y(t) < 0 || psi(t) > Scalar(0);
    if (in_up && f > v.up) {
      v.up = f;
      v.i = t;
    }
    if (in_low && f < v.low) v.low = f;
  }
  return v;
}

/// Equality-constrained subproblem on the free set F:
///   [Q_FF  y_F] [psi_F ]   [1]
///   [y_F'   0 ] [lambda] = [0]
/// solved by partial-pivot LU with one step of iterative refinement. Returns false if
/// the saddle matrix is numerically singular.
template <typename Scalar>
bool solve_free_block(const Matrix<Scalar>& q, const Vector<Scalar>& y,
                      const std::vector<Index>& free, Vector<Scalar>& psi_f, Scalar& lambda) {
  const Index m = static_cast<Index>(free.size());
  Matrix<Scalar> kkt(m + 1, m + 1);
  Vector<Scalar> rhs = Vector<Scalar>::Ones(m + 1);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b < m; ++b) kkt(a, b) = q(free[a], free[b]);
    kkt(a, m) = y(free[a]);
    kkt(m, a) = y(free[a]);
  }
  kkt(m, m) = 0;
  rhs(m) = 0;
  Eigen::PartialPivLU<Matrix<Scalar>> lu(kkt);
  Vector<Scalar> sol = lu.solve(rhs);
  for (int pass = 0; pass < 3; ++pass) sol -= lu.solve(wide_residual<Scalar>(kkt, sol, rhs));
  const Scalar scale = kkt.cwiseAbs().maxCoeff() * sol.cwiseAbs().maxCoeff() + Scalar(1);
  if (!sol.allFinite() ||
      wide_residual<Scalar>(kkt, sol, rhs).template lpNorm<Eigen::Infinity>() > Scalar(1e-9) * scale)
    return false;
  psi_f = sol.head(m);
  lambda = sol(m);
  return true;
}

/// Primal active-set iterations for the same QP, started from a feasible psi. Each step
/// either moves to the minimizer on the current free set or stops at the first bound
/// hit, so the objective never decreases. Returns true once no fixed variable has a
/// negative multiplier.
template <typename Scalar>
bool active_set_refine(const Matrix<Scalar>& q, const Vector<Scalar>& y, Vector<Scalar>& psi,
                       Scalar tol, Index max_steps, Index& steps,
                       const std::function<void(const Vector<Scalar>&)>& on_step) {
  const Index n = psi.size();
  std::vector<bool> is_free(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) is_free[static_cast<std::size_t>(i)] = psi(i) > Scalar(0);

  Vector<Scalar> grad(n);
  for (steps = 0; steps < max_steps; ++steps) {
    std::vector<Index> free;
    bool pos = false, neg = false;
    for (Index i = 0; i < n; ++i) {
      if (is_free[static_cast<std::size_t>(i)]) {
        free.push_back(i);
        (y(i) > 0 ? pos : neg) = true;
      }
    }
    if (!pos || !neg) return false;

    Vector<Scalar> target;
    Scalar lambda(0);
    if (!solve_free_block(q, y, free, target, lambda)) return false;

    // Ratio test toward the subproblem minimizer.
    Scalar alpha(1);
    Index blocking = -1;
    for (std::size_t a = 0; a < free.size(); ++a) {
      const Index i = free[a];
      const Scalar t = target(static_cast<Index>(a));
      if (t < psi(i) && t <= Scalar(0)) {
        const Scalar ratio = psi(i) / (psi(i) - t);
        if (ratio < alpha) {
          alpha = ratio;
          blocking = i;
        }
      }
    }
    for (std::size_t a = 0; a < free.size(); ++a) {
      const Index i = free[a];
      psi(i) += alpha * (target(static_cast<Index>(a)) - psi(i));
    }
    if (blocking >= 0) {
      psi(blocking) = 0;
      is_free[static_cast<std::size_t>(blocking)] = false;
      for (Index i : free)
        if (psi(i) < Scalar(0)) psi(i) = 0;
      if (on_step) on_step(psi);
      continue;
    }
    if (on_step) on_step(psi);

    // At the free-set minimizer: release the fixed variable with the most negative
    // multiplier, or stop.
    grad = dual_gradient(q, psi);
    Index enter = -1;
    Scalar worst = -tol;
    for (Index i = 0; i < n; ++i) {
      if (is_free[static_cast<std::size_t>(i)]) continue;
      const Scalar mu = grad(i) + lambda * y(i);
      if (mu < worst) {
        worst = mu;
        enter = i;
      }
    }
    if (enter < 0) return true;
    is_free[static_cast<std::size_t>(enter)] = true;
  }
  return false;
}

}  // namespace detail

/// Pairwise (SMO) ascent with second-order working-set selection, Q used as stored
/// (labels folded in). After max(2000, 20n) pair updates, and each time that count
/// doubles, a primal active-set refinement is tried from the SMO iterate and kept only
/// if it reaches the KKT tolerance. SMO alone crawls when Q is badly conditioned (large
/// polynomial kernel values); the refinement finishes those. If neither closes the
/// gap within max_iter pair updates (refinement only runs below the cap), the last SMO iterate is returned with
/// converged = false; that is also the outcome when the dual is unbounded (C infinite
/// and the classes not separable in feature space).
template <typename Scalar>
DualSolution<Scalar> solve_dual(const DualProblem<Scalar>& p, const SolverOptions& opt = {}) {
  using std::abs;
  const Index n = p.size();
  if (n == 0) throw InvalidInput("solve_dual: empty problem");
  if (p.labels.size() != n || p.gram.entries.cols() != n)
    throw DimensionMismatch("solve_dual: labels do not match the Gram matrix");
  if (!(opt.tol > 0)) throw InvalidInput("solve_dual: tol must be positive");
  const auto [pos, neg] = class_counts(p.labels);
  if (pos == 0 || neg == 0) throw InvalidInput("solve_dual: both classes must be present");

  const Matrix<Scalar>& q = p.gram.entries;
  const Vector<Scalar>& y = p.labels;
  const Scalar tol(opt.tol);
  const Scalar tau(1e-12);
  const Index polish_every = std::max<Index>(2000, 20 * n);

  DualSolution<Scalar> sol;
  Vector<Scalar> psi = Vector<Scalar>::Zero(n);
  Vector<Scalar> grad = -Vector<Scalar>::Ones(n);
  auto objective_of = [&](const Vector<Scalar>& x, const Vector<Scalar>& g) {
    return Scalar(0.5) * x.sum() - Scalar(0.5) * x.dot(g);
  };
  auto exact_gap = [&](const Vector<Scalar>& x, Vector<Scalar>& g) {
    g = detail::dual_gradient(q, x);
    const auto v = detail::max_violation(x, y, g);
    return v.up - v.low;
  };

  Index iter = 0;
  Index next_polish = polish_every;
  bool converged = false;
  while (true) {
    auto v = detail::max_violation(psi, y, grad);
    if (v.up - v.low <= tol) {
      // Confirm against an exactly recomputed gradient before stopping.
      if (exact_gap(psi, grad) <= tol) {
        converged = true;
        break;
      }
      v = detail::max_violation(psi, y, grad);
    }
    if (iter >= opt.max_iter) break;
    if (iter >= next_polish) {
      next_polish *= 2;
      Vector<Scalar> trial = psi;
      std::vector<Scalar> trace;
      Index steps = 0;
      const std::function<void(const Vector<Scalar>&)> record = [&](const Vector<Scalar>& x) {
        if (opt.record_objective) trace.push_back(dual_objective(p, x));
      };
      if (detail::active_set_refine(q, y, trial, tol, 2 * n + 50, steps, record)) {
        Vector<Scalar> g(n);
        if (exact_gap(trial, g) <= tol) {
          const Scalar before = objective_of(psi, grad);
          const Scalar after = objective_of(trial, g);
          // Keep the refined point only if it does not lose objective beyond round-off.
          if (after >= before - Scalar(1e-12) * (abs(before) + Scalar(1))) {
            psi = trial;
            grad = g;
            iter += steps;
            sol.objective_trace.insert(sol.objective_trace.end(), trace.begin(), trace.end());
            converged = true;
            break;
          }
        }
      }
    }

    const Index i = v.i;
    const Scalar fi = v.up;
    Index j = -1;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index t = 0; t < n; ++t) {
      const bool in_low = y(t) < 0 || psi(t) > Scalar(0);
      if (!in_low) continue;
      const Scalar ft = -y(t) * grad(t);
      const Scalar b = fi - ft;
      if (b <= Scalar(0)) continue;
      Scalar a = q(i, i) + q(t, t) - Scalar(2) * y(i) * y(t) * q(i, t);
      if (a <= Scalar(0)) a = tau;
      const Scalar score = -(b * b) / a;
      if (score < best) {
        best = score;
        j = t;
      }
    }
    if (j < 0) break;  // cannot happen while the gap exceeds tol

    const Scalar old_i = psi(i);
    const Scalar old_j = psi(j);
    if (y(i) != y(j)) {
      Scalar quad = q(i, i) + q(j, j) + Scalar(2) * q(i, j);
      if (quad <= Scalar(0)) quad = tau;
      const Scalar delta = (-grad(i) - grad(j)) / quad;
      const Scalar diff = psi(i) - psi(j);
      psi(i) += delta;
      psi(j) += delta;
      if (diff > Scalar(0)) {
        if (psi(j) < Scalar(0)) {
          psi(j) = 0;
          psi(i) = diff;
        }
      } else if (psi(i) < Scalar(0)) {
        psi(i) = 0;
        psi(j) = -diff;
      }
    } else {
      Scalar quad = q(i, i) + q(j, j) - Scalar(2) * q(i, j);
      if (quad <= Scalar(0)) quad = tau;
      const Scalar delta = (grad(i) - grad(j)) / quad;
      const Scalar sum = psi(i) + psi(j);
      psi(i) -= delta;
      psi(j) += delta;
      if (psi(j) < Scalar(0)) {
        psi(j) = 0;
        psi(i) = sum;
      }
      if (psi(i) < Scalar(0)) {
        psi(i) = 0;
        psi(j) = sum;
      }
    }

    const Scalar di = psi(i) - old_i;
    const Scalar dj = psi(j) - old_j;
    grad.noalias() += di * q.col(i) + dj * q.col(j);
    ++iter;
    if (opt.record_objective) sol.objective_trace.push_back(objective_of(psi, grad));
  }

  sol.psi = psi;
  sol.iterations = iter;
  sol.converged = converged;
  sol.objective = dual_objective(p, psi);
  if ((psi.array() > Scalar(0)).any()) {
    const auto r = kkt_residuals(p, psi);
    sol.kkt_stationarity = r.stationarity;
    sol.kkt_feasibility = r.feasibility;
    sol.kkt_complementarity = r.complementarity;
    sol.multiplier = r.multiplier;
  }
  return sol;
}

struct ExtremeSet {
  std::vector<Index> indices;
  std::vector<Index> side1;  // label +1
  std::vector<Index> side2;  // label -1
  double threshold = 1e-6;

  Index size() const { return static_cast<Index>(indices.size()); }
  bool empty() const { return indices.empty(); }
};

/// Indices with psi_i > threshold * max(psi).
template <typename Scalar, typename DerivedL>
ExtremeSet extract_extreme_set(const DualSolution<Scalar>& s,
                               const Eigen::MatrixBase<DerivedL>& labels,
                               double threshold = 1e-6) {
  if (!(threshold > 0 && threshold < 1))
    throw InvalidInput("extract_extreme_set: threshold must lie in (0, 1)");
  if (labels.size() != s.psi.size()) throw DimensionMismatch("extract_extreme_set: size mismatch");
  ExtremeSet e;
  e.threshold = threshold;
  if (s.psi.size() == 0) return e;
  const Scalar peak = s.psi.maxCoeff();
  if (!(peak > Scalar(0))) return e;
  const Scalar cut = Scalar(threshold) * peak;
  for (Index i = 0; i < s.psi.size(); ++i) {
    if (s.psi(i) > cut) {
      e.indices.push_back(i);
      (labels(i) > 0 ? e.side1 : e.side2).push_back(i);
    }
  }
  return e;
}

template <typename Scalar>
struct LagrangianRelation {
  Scalar residual = 0;       // ||Q_AA psi_A - (1 - lambda0 y_A)||_inf
  Scalar solution_gap = 0;   // ||Q_AA^{-1}(1 - lambda0 y_A) - psi_A||_inf, when solvable
  bool singular = false;     // the active block could not be factored reliably
};

/// Checks that the active-set scale factors solve their own linear system.
template <typename Scalar>
LagrangianRelation<Scalar> lagrangian_relation_check(const DualProblem<Scalar>& p,
                                                     const DualSolution<Scalar>& s) {
  if (!(p.gram.epsilon > Scalar(0)))
    throw InvalidInput("lagrangian_relation_check: needs a regularized Gram matrix");
  const auto r = kkt_residuals(p, s.psi);  // throws on an empty active set

  std::vector<Index> active;
  for (Index i = 0; i < s.psi.size(); ++i)
    if (s.psi(i) > Scalar(0)) active.push_back(i);
  const Index m = static_cast<Index>(active.size());
  Matrix<Scalar> block(m, m);
  Vector<Scalar> rhs(m), psi_a(m);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b < m; ++b) block(a, b) = p.gram.entries(active[a], active[b]);
    rhs(a) = Scalar(1) - r.multiplier * p.labels(active[a]);
    psi_a(a) = s.psi(active[a]);
  }

  LagrangianRelation<Scalar> out;
  out.residual = detail::wide_residual<Scalar>(block, psi_a, rhs).template lpNorm<Eigen::Infinity>();
  Eigen::LDLT<Matrix<Scalar>> ldlt(block);
  const Scalar dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
  const Scalar dmin = ldlt.vectorD().cwiseAbs().minCoeff();
  if (ldlt.info() != Eigen::Success || !(dmin > dmax * Scalar(1e-14))) {
    out.singular = true;
    return out;
  }
  out.solution_gap = (ldlt.solve(rhs) - psi_a).template lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace eigenlocus
