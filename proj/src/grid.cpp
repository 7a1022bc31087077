#include "obstacle/grid.hpp"

#include <algorithm>
#include <string>

#include "obstacle/errors.hpp"

namespace obstacle {

Grid::Grid(int n) : n_(n) {
  if (n < 1)
    throw InvalidSize("grid needs at least 1 cell per side, got " + std::to_string(n));
}

Grid build_fine_grid(int n) {
  if (n < 2)
    throw InvalidSize("fine grid needs at least 2 cells per side, got " + std::to_string(n));
  return Grid(n);
}

std::vector<int> DomainDecomposition::subdomain_elements(int k) const {
  const CellBox &box = subdomains.at(static_cast<std::size_t>(k));
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(box.count()));
  for (int j = box.j0; j < box.j1; ++j)
    for (int i = box.i0; i < box.i1; ++i)
      ids.push_back(fine.element_id(i, j));
  return ids;
}

std::vector<int> DomainDecomposition::patch_vertices(int i) const {
  const VertexBox &box = patches.at(static_cast<std::size_t>(i)).vertices;
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(box.count()));
  for (int vj = box.j0; vj <= box.j1; ++vj)
    for (int vi = box.i0; vi <= box.i1; ++vi)
      ids.push_back(fine.vertex_id(vi, vj));
  return ids;
}

std::vector<int> DomainDecomposition::interior_coarse_vertices() const {
  std::vector<int> ids;
  for (const Patch &p : patches)
    if (p.interior)
      ids.push_back(p.id);
  return ids;
}

DomainDecomposition build_decomposition(int n_fine, int m, int d) {
  if (n_fine < 2)
    throw ConfigError("fine grid needs at least 2 cells per side, got " + std::to_string(n_fine));
  if (m < 1 || n_fine % m != 0)
    throw ConfigError("coarse ratio " + std::to_string(m) + " does not divide " +
                      std::to_string(n_fine));
  if (d < 1 || 2 * d >= m)
    throw ConfigError("overlap " + std::to_string(d) + " must satisfy 1 <= d < m/2 = " +
                      std::to_string(m) + "/2");
  const int nc = n_fine / m;

  DomainDecomposition dd;
  dd.fine = Grid(n_fine);
  dd.coarse = Grid(nc);
  dd.ratio = m;
  dd.overlap = d;

  dd.subdomains.reserve(static_cast<std::size_t>(nc * nc));
  for (int cj = 0; cj < nc; ++cj)
    for (int ci = 0; ci < nc; ++ci)
      dd.subdomains.push_back({std::max(0, ci * m - d), std::min(n_fine, (ci + 1) * m + d),
                               std::max(0, cj * m - d), std::min(n_fine, (cj + 1) * m + d)});

  for (int cj = 0; cj <= nc; ++cj)
    for (int ci = 0; ci <= nc; ++ci) {
      Patch p;
      p.id = cj * (nc + 1) + ci;
      p.ci = ci;
      p.cj = cj;
      p.vertices = {std::max(0, (ci - 1) * m), std::min(n_fine, (ci + 1) * m),
                    std::max(0, (cj - 1) * m), std::min(n_fine, (cj + 1) * m)};
      p.center = {static_cast<double>(ci) / nc, static_cast<double>(cj) / nc};
      p.interior = ci > 0 && ci < nc && cj > 0 && cj < nc;
      dd.patches.push_back(p);
    }
  return dd;
}

} // namespace obstacle
