#include "obstacle/assembly.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SparseCore>

#include "obstacle/errors.hpp"

namespace obstacle {
namespace {

void check_spec(const ProblemSpec &spec) {
  if (spec.form == Form::control && !(spec.beta > 0.0))
    throw InvalidParameter("control problem requires beta > 0");
  if (!spec.load)
    throw InvalidParameter("problem spec has no load");
  if (!spec.obstacle)
    throw InvalidParameter("problem spec has no obstacle");
}

void check_size(const DiscreteProblem &p, const Vector &v) {
  if (v.size() != p.num_free())
    throw DimensionMismatch("expected a vector of " + std::to_string(p.num_free()) +
                            " free DOFs, got " + std::to_string(v.size()));
}

} // namespace

std::vector<char> free_dof_mask(Form form, const Grid &grid) {
  const int n = grid.cells_per_side();
  std::vector<char> mask(static_cast<std::size_t>(kDofsPerVertex * grid.num_vertices()), 1);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      if (!grid.on_boundary(i, j))
        continue;
      char *m = &mask[static_cast<std::size_t>(kDofsPerVertex * grid.vertex_id(i, j))];
      if (form == Form::plate) {
        m[0] = m[1] = m[2] = m[3] = 0;
        continue;
      }
      const bool on_vertical = i == 0 || i == n;
      const bool on_horizontal = j == 0 || j == n;
      m[0] = 0;
      if (on_horizontal)
        m[1] = 0; // tangential derivative along y = const
      if (on_vertical)
        m[2] = 0;
    }
  return mask;
}

SparseMatrix assemble_raw_stiffness(Form form, double beta, const Grid &grid) {
  const int n = grid.cells_per_side();
  const ElementMatrix em = element_matrices(form, beta, grid.h());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(grid.num_elements()) * kElementDofs * kElementDofs);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto dofs = element_dofs(grid, i, j);
      for (int a = 0; a < kElementDofs; ++a)
        for (int b = 0; b < kElementDofs; ++b)
          triplets.emplace_back(dofs[a], dofs[b], em(a, b));
    }
  const int size = kDofsPerVertex * grid.num_vertices();
  SparseMatrix a(size, size);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  return a;
}

DiscreteProblem assemble(const ProblemSpec &spec, const Grid &grid) {
  check_spec(spec);
  DiscreteProblem p;
  p.grid = grid;
  p.form = spec.form;
  p.beta = spec.form == Form::control ? spec.beta : 1.0;

  const int n = grid.cells_per_side();
  const int raw = kDofsPerVertex * grid.num_vertices();
  const double h = grid.h();

  p.stiffness_raw = assemble_raw_stiffness(spec.form, p.beta, grid);

  // Load: (f, phi_a) with 4x4 Gauss per element.
  p.load_raw = Vector::Zero(raw);
  const GaussRule &g = gauss4();
  std::array<std::array<std::array<double, kElementDofs>, 4>, 4> basis{};
  for (int qx = 0; qx < 4; ++qx)
    for (int qy = 0; qy < 4; ++qy)
      basis[qx][qy] = shape_functions({g.nodes[qx], g.nodes[qy]}, {0, 0});
  std::array<double, kElementDofs> scale{};
  for (int a = 0; a < kElementDofs; ++a) {
    const int q = a % 4;
    scale[a] = std::pow(h, (q & 1) + (q >> 1));
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto dofs = element_dofs(grid, i, j);
      for (int qx = 0; qx < 4; ++qx)
        for (int qy = 0; qy < 4; ++qy) {
          const double x = (i + g.nodes[qx]) * h;
          const double y = (j + g.nodes[qy]) * h;
          const double w = g.weights[qx] * g.weights[qy] * h * h * spec.load(x, y);
          for (int a = 0; a < kElementDofs; ++a)
            p.load_raw[dofs[a]] += w * scale[a] * basis[qx][qy][a];
        }
    }

  p.free_mask = free_dof_mask(spec.form, grid);
  p.raw_to_free.assign(static_cast<std::size_t>(raw), -1);
  for (int r = 0; r < raw; ++r)
    if (p.free_mask[static_cast<std::size_t>(r)]) {
      p.raw_to_free[static_cast<std::size_t>(r)] = static_cast<int>(p.free_to_raw.size());
      p.free_to_raw.push_back(r);
    }

  // Row/column deletion of eliminated DOFs.
  const int nf = p.num_free();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(p.stiffness_raw.nonZeros()));
  for (int r = 0; r < raw; ++r) {
    const int fr = p.raw_to_free[static_cast<std::size_t>(r)];
    if (fr < 0)
      continue;
    for (SparseMatrix::InnerIterator it(p.stiffness_raw, r); it; ++it) {
      const int fc = p.raw_to_free[static_cast<std::size_t>(it.col())];
      if (fc >= 0)
        triplets.emplace_back(fr, fc, it.value());
    }
  }
  p.A.resize(nf, nf);
  p.A.setFromTriplets(triplets.begin(), triplets.end());
  p.A.makeCompressed();
  p.f.resize(nf);
  for (int k = 0; k < nf; ++k)
    p.f[k] = p.load_raw[p.free_to_raw[static_cast<std::size_t>(k)]];

  // Obstacle at vertices; rows of J.
  p.psi_vertex.resize(grid.num_vertices());
  p.vertex_to_row.assign(static_cast<std::size_t>(grid.num_vertices()), -1);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const int vid = grid.vertex_id(i, j);
      const double psi = spec.obstacle(grid.coordinate(i), grid.coordinate(j))[0];
      p.psi_vertex[vid] = psi;
      const int value_free = p.raw_to_free[static_cast<std::size_t>(kDofsPerVertex * vid)];
      if (value_free < 0) {
        if (psi < 0.0)
          throw InvalidParameter("obstacle is negative at boundary vertex (" + std::to_string(i) +
                                 ", " + std::to_string(j) + ") where the value is fixed to 0");
        continue;
      }
    }
  for (int vid = 0; vid < grid.num_vertices(); ++vid) {
    const int value_free = p.raw_to_free[static_cast<std::size_t>(kDofsPerVertex * vid)];
    if (value_free < 0)
      continue;
    p.vertex_to_row[static_cast<std::size_t>(vid)] = static_cast<int>(p.constrained_vertices.size());
    p.constrained_vertices.push_back(vid);
    p.value_dof.push_back(value_free);
  }
  const int rows = p.num_constraints();
  p.J.resize(rows, nf);
  std::vector<Eigen::Triplet<double>> jt;
  jt.reserve(static_cast<std::size_t>(rows));
  p.bounds.resize(rows);
  for (int r = 0; r < rows; ++r) {
    jt.emplace_back(r, p.value_dof[static_cast<std::size_t>(r)], 1.0);
    p.bounds[r] = p.psi_vertex[p.constrained_vertices[static_cast<std::size_t>(r)]];
  }
  p.J.setFromTriplets(jt.begin(), jt.end());
  p.J.makeCompressed();
  return p;
}

Vector DiscreteProblem::restrict_raw(const DofVector &v) const {
  if (v.coeffs.size() != static_cast<Eigen::Index>(free_mask.size()))
    throw DimensionMismatch("DOF vector does not live on the problem grid");
  Vector out(num_free());
  for (int k = 0; k < num_free(); ++k)
    out[k] = v.coeffs[free_to_raw[static_cast<std::size_t>(k)]];
  return out;
}

DofVector DiscreteProblem::expand(const Vector &free) const {
  if (free.size() != num_free())
    throw DimensionMismatch("expected " + std::to_string(num_free()) + " free DOFs");
  DofVector v = DofVector::zeros(grid);
  for (int k = 0; k < num_free(); ++k)
    v.coeffs[free_to_raw[static_cast<std::size_t>(k)]] = free[k];
  return v;
}

double energy(const DiscreteProblem &p, const Vector &v) {
  check_size(p, v);
  const Vector av = multiply(p.A, v);
  return 0.5 * kernels::dot(view(v), view(av)) - kernels::dot(view(p.f), view(v));
}

double max_violation(const DiscreteProblem &p, const Vector &v) {
  check_size(p, v);
  Vector jv(p.num_constraints());
  for (int r = 0; r < p.num_constraints(); ++r)
    jv[r] = v[p.value_dof[static_cast<std::size_t>(r)]];
  return kernels::max_excess(view(jv), view(p.bounds));
}

bool feasible(const DiscreteProblem &p, const Vector &v) {
  check_size(p, v);
  for (int r = 0; r < p.num_constraints(); ++r) {
    const double b = p.bounds[r];
    if (v[p.value_dof[static_cast<std::size_t>(r)]] > b + 1e-12 * (1.0 + std::abs(b)))
      return false;
  }
  return true;
}

} // namespace obstacle
