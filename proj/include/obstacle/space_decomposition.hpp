#pragma once

#include <array>
#include <vector>

#include <Eigen/Cholesky>

#include "obstacle/assembly.hpp"
#include "obstacle/bfs_element.hpp"
#include "obstacle/grid.hpp"
#include "obstacle/linalg.hpp"

namespace obstacle {

/// Local space V_k: all free DOFs at fine vertices whose incident elements all
/// lie in subdomain k. Zero extension of such a function stays in S_h and
/// leaves every vertex outside the subdomain untouched.
struct LocalSpace {
  int k = 0;
  std::vector<int> dof_ids; ///< ascending free DOF indices
  /// Local positions of value DOFs and the matching rows of J.
  std::vector<int> value_local;
  std::vector<int> value_row;

  int size() const noexcept { return static_cast<int>(dof_ids.size()); }
  /// R_k x
  Vector restrict(const Vector &global) const;
  /// global += a * R_k^T local
  void add_extension(double a, const Vector &local, Vector &global) const;
};

/// One local space per subdomain. Throws DecompositionError if a free DOF is
/// covered by no local space.
std::vector<LocalSpace> build_local_spaces(const DomainDecomposition &dd, const DiscreteProblem &p);

/// R_k A R_k^T
SparseMatrix local_matrix(const DiscreteProblem &p, const LocalSpace &space);

/// Colors needed so that equally colored spaces never share an element:
/// a 2x2 checkerboard of subdomains, plus one class for the coarse space.
int coloring_number(const DomainDecomposition &dd, int levels = 1);

/// Checkerboard color of subdomain k (0..3).
int subdomain_color(const DomainDecomposition &dd, int k);

/// Partition of unity from the value basis functions of the bicubic Hermite
/// element on the coarse mesh: phi_i = a_i(x) b_i(y), supported on patch i.
class PartitionOfUnity {
public:
  explicit PartitionOfUnity(const Grid &coarse);

  int size() const noexcept { return coarse_.num_vertices(); }
  const Grid &coarse() const noexcept { return coarse_; }
  std::array<double, 2> vertex(int i) const noexcept;

  /// d^(dx,dy) phi_i at p, derivative orders up to 2 per variable.
  double evaluate(int i, std::array<double, 2> p, DerivOrder order = {}) const;
  /// (phi, phi_x, phi_y, phi_xy) at p.
  FieldSample sample(int i, std::array<double, 2> p) const;

private:
  double factor(int node, double x, int order) const;

  Grid coarse_;
};

PartitionOfUnity build_pou(const Grid &coarse);

/// Coarse basis function phi_i * monomial, monomial 0 -> 1, 1 -> x - x_i, 2 -> y - y_i.
/// Interior coarse vertices carry all three. With the control form a
/// non-corner boundary vertex also carries the monomial normal to its edge,
/// the only one compatible with a vanishing trace.
struct CoarseDof {
  int vertex = 0;
  int monomial = 0;
};

/// Coarse space V_0 spanned by phi_i * P1 at interior coarse vertices, with
/// prolongation R_0^T realized as fine nodal interpolation.
struct CoarseSpace {
  PartitionOfUnity pou{Grid(2)};
  std::vector<int> vertices; ///< coarse vertices carrying at least one DOF
  std::vector<CoarseDof> dofs;
  SparseMatrix P;  ///< free fine DOFs x coarse DOFs
  SparseMatrix Pt;
  DenseMatrix A0;  ///< P^T A P
  Eigen::LLT<DenseMatrix> A0_factor;
  /// Rows of J on which J P is not identically zero, and G = (J P) on them.
  std::vector<int> constraint_rows;
  SparseMatrix G;
  SparseMatrix Gt;
  /// L^{-1} G^T with A_0 = L L^T, for the dual active-set coarse solver.
  DenseMatrix Linv_Gt;

  int size() const noexcept { return static_cast<int>(dofs.size()); }
  /// Value and derivatives of the coarse function with coefficients c at p.
  FieldSample evaluate(const Vector &coeffs, std::array<double, 2> p) const;
};

/// Throws ConfigError when there is no interior coarse vertex.
CoarseSpace build_coarse_space(const DomainDecomposition &dd, const DiscreteProblem &p);

/// J v: function values at the vertices with a free value DOF.
Vector extract_values(const DiscreteProblem &p, const Vector &v);

} // namespace obstacle
