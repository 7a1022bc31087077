#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "obstacle/assembly.hpp"
#include "obstacle/grid.hpp"
#include "obstacle/linalg.hpp"
#include "obstacle/qp_solvers.hpp"
#include "obstacle/space_decomposition.hpp"

namespace obstacle {

enum class LocalSolver { pdas, fbs };
enum class CoarseSolver { dual_active_set, dual_fbs };

struct SchwarzConfig {
  int levels = 1;
  double tau = 0.2;
  int max_outer = 1000;
  double tol_rel_energy = 1e-6;
  LocalSolver local_solver = LocalSolver::pdas;
  double local_tol = 1e-12;
  CoarseSolver coarse_solver = CoarseSolver::dual_active_set;
  double coarse_tol = 1e-10;
  int coarse_max_iter = 20000;
  int threads = 1;
  /// F_h(u_h); without it the stopping test uses the relative energy decrease.
  std::optional<double> reference_energy;
  /// Called after every recorded iteration, including iteration 0.
  std::function<void(const struct IterationRecord &)> on_iteration;
};

struct IterationRecord {
  int iter = 0;
  double energy = 0.0;
  bool feasible = true;
  double max_violation = 0.0;
  double elapsed_ms = 0.0;
  /// (F - F_ref) / |F_ref| with a reference, else (F_prev - F) / |F| (NaN at iteration 0).
  double rel_energy_error = 0.0;
};

struct ConvergenceRecord {
  std::vector<IterationRecord> iterations;
  Vector u;
  bool converged = false;
  std::vector<std::string> warnings;

  int outer_iterations() const noexcept {
    return iterations.empty() ? 0 : iterations.back().iter;
  }
};

/// Local problem about u: A_k = R_k A R_k^T (passed in, it does not depend on u),
/// g_k = R_k (f - A u), bounds (psi - J u) at the value DOFs of space k.
/// Throws ContractViolation if u is infeasible.
BoundQP local_subproblem(const DiscreteProblem &p, const Vector &u, const LocalSpace &space,
                         const SparseMatrix &a_k);

/// Coarse problem about u: A_0 = P^T A P, g_0 = P^T (f - A u), G = J P, slack psi - J u.
DualQP coarse_subproblem(const DiscreteProblem &p, const Vector &u, const CoarseSpace &coarse);

/// Additive Schwarz iteration u <- u + tau sum_k R_k^T w_k. The coarse space
/// is used when config.levels == 2 (and must then be given). u0 defaults to 0.
/// Throws ContractViolation for an infeasible start and ConfigError for
/// inconsistent settings; subsolver failures are rethrown with the outer
/// iteration and subspace attached.
ConvergenceRecord schwarz_solve(const DiscreteProblem &p, const DomainDecomposition &dd,
                                const std::vector<LocalSpace> &spaces, const CoarseSpace *coarse,
                                const SchwarzConfig &config, const Vector *u0 = nullptr);

/// Full-problem PDAS reference solution with the 1e-12 stopping rule.
Vector solve_reference(const DiscreteProblem &p, double tol = 1e-12);

} // namespace obstacle
