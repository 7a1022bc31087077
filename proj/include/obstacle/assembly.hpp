#pragma once

#include <vector>

#include "obstacle/bfs_element.hpp"
#include "obstacle/grid.hpp"
#include "obstacle/linalg.hpp"

namespace obstacle {

/// Continuous data of an obstacle problem min { a(v,v)/2 - (f,v) : v <= psi }.
struct ProblemSpec {
  Form form = Form::plate;
  double beta = 1.0; ///< only used by the control form
  ScalarField load;
  SmoothField obstacle;
};

/// Discrete obstacle problem over the free (non-eliminated) BFS DOFs.
///
/// Plate (H^2_0): every DOF at a boundary vertex is eliminated. Control
/// (H^2 and H^1_0): the value and tangential derivative are eliminated on
/// edges, value and both first derivatives at corners; the mixed derivative
/// stays free.
struct DiscreteProblem {
  Grid grid;
  Form form = Form::plate;
  double beta = 1.0;

  SparseMatrix stiffness_raw; ///< before elimination, raw DOF numbering
  Vector load_raw;

  SparseMatrix A; ///< free x free, SPD
  Vector f;

  std::vector<char> free_mask; ///< per raw DOF
  std::vector<int> raw_to_free; ///< -1 for eliminated DOFs
  std::vector<int> free_to_raw;

  Vector psi_vertex; ///< obstacle at every fine vertex

  /// Rows of J: vertices whose value DOF is free, ascending vertex id.
  std::vector<int> constrained_vertices;
  std::vector<int> vertex_to_row; ///< -1 for vertices without a free value DOF
  std::vector<int> value_dof;     ///< free index of the value DOF per row
  SparseMatrix J;                 ///< 0/1 value extraction, rows x free
  Vector bounds;                  ///< psi per row of J

  int num_free() const noexcept { return static_cast<int>(free_to_raw.size()); }
  int num_constraints() const noexcept { return static_cast<int>(constrained_vertices.size()); }

  /// Free DOFs of a raw DOF vector (eliminated entries are dropped).
  Vector restrict_raw(const DofVector &v) const;
  /// Raw DOF vector with eliminated entries set to zero.
  DofVector expand(const Vector &free) const;
};

/// Per-raw-DOF mask of free DOFs for the boundary conditions of a form.
std::vector<char> free_dof_mask(Form form, const Grid &grid);

/// Raw stiffness matrix (all DOFs, no boundary conditions).
SparseMatrix assemble_raw_stiffness(Form form, double beta, const Grid &grid);

/// Builds A, f, J and the obstacle bounds. Throws InvalidParameter for an
/// invalid spec or an obstacle negative at a vertex whose value is eliminated.
DiscreteProblem assemble(const ProblemSpec &spec, const Grid &grid);

/// F_h(v) = v^T A v / 2 - f^T v. Throws DimensionMismatch.
double energy(const DiscreteProblem &p, const Vector &v);

/// max_r ((J v)_r - bound_r), or -inf without constraints.
double max_violation(const DiscreteProblem &p, const Vector &v);

/// J v <= bounds up to 1e-12 (1 + |bound|) per component.
bool feasible(const DiscreteProblem &p, const Vector &v);

} // namespace obstacle
