#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include "obstacle/linalg.hpp"

namespace obstacle {

/// Jacobi-preconditioned conjugate gradients: ||A x - rhs|| <= tol ||rhs||.
/// Throws NonConvergence (carrying the last iterate) after max_iter steps;
/// max_iter <= 0 means 10 * dim.
Vector spd_solve(const SparseMatrix &a, const Vector &rhs, double tol, int max_iter = 0);

/// Direct sparse LDL^T solve. Throws ContractViolation if the factorization fails.
Vector spd_solve_direct(const SparseMatrix &a, const Vector &rhs);

/// min 1/2 w^T A w - g^T w  subject to  w_i <= b_i for i in `constrained`.
/// An infinite bound leaves its component free.
struct BoundQP {
  SparseMatrix A;
  Vector g;
  std::vector<int> constrained; ///< ascending component indices
  Vector bounds;                ///< one entry per constrained component

  int size() const noexcept { return static_cast<int>(g.size()); }
  double objective(const Vector &w) const;
  /// Largest bound excess, -inf without constraints.
  double max_violation(const Vector &w) const;
  /// Throws DimensionMismatch / InvalidParameter on malformed data.
  void validate() const;
};

struct PdasOptions {
  double tol = 1e-12; ///< relative A-norm increment, used when the active set keeps moving
  int max_iter = 500;
  double c = 1.0;
};

struct PdasResult {
  Vector w;
  Vector lambda;            ///< per constrained component, >= 0 on exit
  std::vector<char> active; ///< per constrained component
  int iterations = 0;
  int factorizations = 0;
};

/// Primal-dual active set method with a factorization cache: repeated solves
/// with the same matrix and an unchanged active set reuse the last LDL^T.
class PdasSolver {
public:
  PdasSolver() = default;
  explicit PdasSolver(SparseMatrix a) { set_matrix(std::move(a)); }

  void set_matrix(SparseMatrix a);
  const SparseMatrix &matrix() const noexcept { return a_; }

  /// Initial active set {lambda0_i + c (w0_i - b_i) > 0}; lambda0 = 0 when null.
  /// Throws NonConvergence after max_iter active-set changes.
  PdasResult solve(const Vector &g, const std::vector<int> &constrained, const Vector &bounds,
                   const Vector &w0, const Vector *lambda0 = nullptr,
                   const PdasOptions &options = {});

private:
  void factorize(const std::vector<char> &fixed);

  SparseMatrix a_;
  std::vector<char> cached_fixed_;
  std::vector<int> free_idx_;
  std::vector<int> free_pos_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool has_factor_ = false;
};

PdasResult pdas_solve(const BoundQP &qp, const Vector &w0, double tol = 1e-12);

struct FbsOptions {
  double tol = 1e-12;
  int max_iter = 1000000;
  int power_iterations = 50;
  double safety = 1.05;
};

struct FbsResult {
  Vector w;
  int iterations = 0;
  double lipschitz = 0.0;
};

/// Projected forward-backward splitting with step 1/L. An infeasible w0 is
/// projected first. Throws NonConvergence at the iteration cap.
FbsResult fbs_solve(const BoundQP &qp, const Vector &w0, const FbsOptions &options = {});

/// Estimate of lambda_max of an SPD operator y = op(x): power iterations from a
/// fixed start vector times a safety factor.
template <class Op>
double lipschitz_estimate(Op &&op, Eigen::Index dim, int iterations, double safety);

/// min 1/2 w^T A w - g^T w  subject to  G w <= c, solved through its dual
///   min_{lambda >= 0} 1/2 (G^T lambda - g)^T A^{-1} (G^T lambda - g) + c^T lambda
/// by projected forward-backward steps, with w = A^{-1} (g - G^T lambda).
struct DualQP {
  const DenseMatrix *A = nullptr;
  const Eigen::LLT<DenseMatrix> *factor = nullptr;
  const SparseMatrix *G = nullptr;
  const SparseMatrix *Gt = nullptr;
  /// Optional L^{-1} G^T for A = L L^T; computed on demand when null.
  const DenseMatrix *Linv_Gt = nullptr;
  Vector g;
  Vector c; ///< slack, >= 0

  double primal_objective(const Vector &w) const;
  /// 1/2 w^T A w + c^T lambda with w = w(lambda).
  double dual_objective(const Vector &w, const Vector &lambda) const;
  void validate() const;
};

struct DualOptions {
  double tol = 1e-10;
  int max_iter = 200000;
  /// Return the last iterate instead of throwing at the iteration cap.
  bool allow_inexact = false;
  /// Record (primal objective of the feasibility-scaled w, -dual objective) per iteration.
  bool record_history = false;
};

struct DualResult {
  Vector w;
  Vector lambda;
  int iterations = 0;
  bool converged = false;
  double violation = 0.0; ///< max (G w - c), clipped at 0
  double gap = 0.0;       ///< lambda^T (c - G w)
  double lipschitz = 0.0;
  std::vector<std::pair<double, double>> history;
};

DualResult dual_coarse_solve(const DualQP &qp, const DualOptions &options = {},
                             const Vector *lambda0 = nullptr);

/// Same dual, solved exactly by a dual active-set method: starting from
/// lambda = 0 the most violated constraint enters, multipliers that would turn
/// negative leave, and w = A^{-1} (g - G^T lambda) throughout. Active rows stay
/// linearly independent, so at most dim(w) multipliers are nonzero.
DualResult dual_active_set_solve(const DualQP &qp, const DualOptions &options = {});

/// Largest theta in [0, 1] with G (theta w) <= c, for c >= 0. Rows exceeding
/// c by at most `slack_tol` are treated as satisfied (rounding in an exact solve
/// must not zero the whole step).
double feasibility_scale(const SparseMatrix &g, const Vector &w, const Vector &c,
                         double slack_tol = 0.0);

// --- implementation ---------------------------------------------------------

template <class Op>
double lipschitz_estimate(Op &&op, Eigen::Index dim, int iterations, double safety) {
  if (dim == 0)
    return 0.0;
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    v[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double rayleigh = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector av = op(v);
    rayleigh = v.dot(av);
    const double nrm = av.norm();
    if (nrm == 0.0)
      break;
    v = av / nrm;
  }
  return rayleigh * safety;
}

} // namespace obstacle
