#pragma once

#include <array>
#include <vector>

namespace obstacle {

/// Uniform n x n square mesh of the unit square. Vertices (i, j), 0 <= i, j <= n,
/// sit at (i/n, j/n); element (i, j) is [i/n, (i+1)/n] x [j/n, (j+1)/n].
/// Flat ids are row-major in j. Fine grids have n >= 2 (see build_fine_grid);
/// a coarse grid may consist of a single cell.
class Grid {
public:
  Grid() = default;
  explicit Grid(int n);

  int cells_per_side() const noexcept { return n_; }
  double h() const noexcept { return 1.0 / n_; }
  int num_vertices() const noexcept { return (n_ + 1) * (n_ + 1); }
  int num_elements() const noexcept { return n_ * n_; }

  int vertex_id(int i, int j) const noexcept { return j * (n_ + 1) + i; }
  int element_id(int i, int j) const noexcept { return j * n_ + i; }
  std::array<int, 2> vertex_index(int id) const noexcept { return {id % (n_ + 1), id / (n_ + 1)}; }
  std::array<int, 2> element_index(int id) const noexcept { return {id % n_, id / n_}; }

  double coordinate(int i) const noexcept { return static_cast<double>(i) / n_; }
  std::array<double, 2> vertex_coords(int i, int j) const noexcept {
    return {coordinate(i), coordinate(j)};
  }

  /// Vertex ids of element (i, j) in local order (0,0), (1,0), (0,1), (1,1).
  std::array<int, 4> element_vertices(int i, int j) const noexcept {
    return {vertex_id(i, j), vertex_id(i + 1, j), vertex_id(i, j + 1), vertex_id(i + 1, j + 1)};
  }

  bool on_boundary(int i, int j) const noexcept { return i == 0 || j == 0 || i == n_ || j == n_; }

  friend bool operator==(const Grid &, const Grid &) = default;

private:
  int n_ = 1;
};

/// Throws InvalidSize for n < 2.
Grid build_fine_grid(int n);

/// Half-open range of cell indices [i0, i1) x [j0, j1).
struct CellBox {
  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;

  bool contains(int i, int j) const noexcept { return i0 <= i && i < i1 && j0 <= j && j < j1; }
  int count() const noexcept { return (i1 - i0) * (j1 - j0); }
  friend bool operator==(const CellBox &, const CellBox &) = default;
};

/// Closed range of vertex indices [i0, i1] x [j0, j1].
struct VertexBox {
  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;

  bool contains(int i, int j) const noexcept { return i0 <= i && i <= i1 && j0 <= j && j <= j1; }
  int count() const noexcept { return (i1 - i0 + 1) * (j1 - j0 + 1); }
  friend bool operator==(const VertexBox &, const VertexBox &) = default;
};

/// Coarse vertex patch: the union of coarse cells sharing coarse vertex (ci, cj).
struct Patch {
  int id = 0;
  int ci = 0, cj = 0;
  /// Fine vertices of the closed patch.
  VertexBox vertices;
  std::array<double, 2> center{};
  bool interior = false;
};

/// Overlapping decomposition of the unit square built from a coarse mesh whose
/// cells are m x m fine cells, each dilated by d fine layers.
struct DomainDecomposition {
  Grid fine;
  Grid coarse;
  int ratio = 0;   ///< m = H / h
  int overlap = 0; ///< d = delta / h
  /// Fine cells of each subdomain, indexed by coarse cell (row-major).
  std::vector<CellBox> subdomains;
  /// Indexed by coarse vertex id.
  std::vector<Patch> patches;

  int num_subdomains() const noexcept { return static_cast<int>(subdomains.size()); }
  std::vector<int> subdomain_elements(int k) const;
  std::vector<int> patch_vertices(int i) const;
  /// Ids of coarse vertices not on the boundary, in coarse-vertex order.
  std::vector<int> interior_coarse_vertices() const;
};

/// Requires m | n_fine and 1 <= d with 2d < m; throws ConfigError otherwise.
DomainDecomposition build_decomposition(int n_fine, int m, int d);

} // namespace obstacle
