#include "obstacle/space_decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SparseCore>

#include "obstacle/errors.hpp"

namespace obstacle {

Vector LocalSpace::restrict(const Vector &global) const {
  Vector out(size());
  for (int l = 0; l < size(); ++l)
    out[l] = global[dof_ids[static_cast<std::size_t>(l)]];
  return out;
}

void LocalSpace::add_extension(double a, const Vector &local, Vector &global) const {
  if (local.size() != size())
    throw DimensionMismatch("local vector has the wrong size for space " + std::to_string(k));
  for (int l = 0; l < size(); ++l)
    global[dof_ids[static_cast<std::size_t>(l)]] += a * local[l];
}

std::vector<LocalSpace> build_local_spaces(const DomainDecomposition &dd, const DiscreteProblem &p) {
  if (!(dd.fine == p.grid))
    throw DimensionMismatch("decomposition and problem live on different fine grids");
  const int n = p.grid.cells_per_side();
  std::vector<LocalSpace> spaces;
  spaces.reserve(dd.subdomains.size());
  std::vector<char> covered(static_cast<std::size_t>(p.num_free()), 0);

  for (int k = 0; k < dd.num_subdomains(); ++k) {
    const CellBox &box = dd.subdomains[static_cast<std::size_t>(k)];
    const int ilo = box.i0 == 0 ? 0 : box.i0 + 1;
    const int ihi = box.i1 == n ? n : box.i1 - 1;
    const int jlo = box.j0 == 0 ? 0 : box.j0 + 1;
    const int jhi = box.j1 == n ? n : box.j1 - 1;

    LocalSpace s;
    s.k = k;
    for (int j = jlo; j <= jhi; ++j)
      for (int i = ilo; i <= ihi; ++i) {
        const int vid = p.grid.vertex_id(i, j);
        for (int q = 0; q < kDofsPerVertex; ++q) {
          const int f = p.raw_to_free[static_cast<std::size_t>(kDofsPerVertex * vid + q)];
          if (f < 0)
            continue;
          if (q == 0) {
            s.value_local.push_back(s.size());
            s.value_row.push_back(p.vertex_to_row[static_cast<std::size_t>(vid)]);
          }
          s.dof_ids.push_back(f);
          covered[static_cast<std::size_t>(f)] = 1;
        }
      }
    spaces.push_back(std::move(s));
  }
  const auto missing = std::find(covered.begin(), covered.end(), 0);
  if (missing != covered.end())
    throw DecompositionError("free DOF " + std::to_string(missing - covered.begin()) +
                             " is not covered by any local space");
  return spaces;
}

SparseMatrix local_matrix(const DiscreteProblem &p, const LocalSpace &space) {
  std::vector<int> global_to_local(static_cast<std::size_t>(p.num_free()), -1);
  for (int l = 0; l < space.size(); ++l)
    global_to_local[static_cast<std::size_t>(space.dof_ids[static_cast<std::size_t>(l)])] = l;
  std::vector<Eigen::Triplet<double>> triplets;
  for (int l = 0; l < space.size(); ++l)
    for (SparseMatrix::InnerIterator it(p.A, space.dof_ids[static_cast<std::size_t>(l)]); it; ++it) {
      const int c = global_to_local[static_cast<std::size_t>(it.col())];
      if (c >= 0)
        triplets.emplace_back(l, c, it.value());
    }
  SparseMatrix a(space.size(), space.size());
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  return a;
}

int coloring_number(const DomainDecomposition &dd, int levels) {
  const int nc = dd.coarse.cells_per_side();
  const int side = std::min(nc, 2);
  return side * side + (levels >= 2 ? 1 : 0);
}

int subdomain_color(const DomainDecomposition &dd, int k) {
  const int nc = dd.coarse.cells_per_side();
  return (k % nc) % 2 + 2 * ((k / nc) % 2);
}

// --- partition of unity -----------------------------------------------------

PartitionOfUnity::PartitionOfUnity(const Grid &coarse) : coarse_(coarse) {}

PartitionOfUnity build_pou(const Grid &coarse) { return PartitionOfUnity(coarse); }

std::array<double, 2> PartitionOfUnity::vertex(int i) const noexcept {
  const auto [ci, cj] = coarse_.vertex_index(i);
  return coarse_.vertex_coords(ci, cj);
}

// 1D Hermite value basis at coarse node `node`, d^order/dx^order at x.
double PartitionOfUnity::factor(int node, double x, int order) const {
  const double H = coarse_.h();
  const double xn = coarse_.coordinate(node);
  const double t = (x - xn) / H;
  if (t < -1.0 || t > 1.0)
    return 0.0;
  const double s = std::abs(t); // mirror the right half onto the left
  double value = 0.0;
  switch (order) {
  case 0:
    value = (1 - s) * (1 - s) * (1 + 2 * s);
    break;
  case 1:
    value = (6 * s * s - 6 * s) * (t < 0 ? -1.0 : 1.0);
    break;
  case 2:
    value = 12 * s - 6;
    break;
  default:
    throw Unsupported("partition of unity derivatives above order 2 are not supported");
  }
  return value / std::pow(H, order);
}

double PartitionOfUnity::evaluate(int i, std::array<double, 2> p, DerivOrder order) const {
  const auto [ci, cj] = coarse_.vertex_index(i);
  return factor(ci, p[0], order.dx) * factor(cj, p[1], order.dy);
}

FieldSample PartitionOfUnity::sample(int i, std::array<double, 2> p) const {
  const auto [ci, cj] = coarse_.vertex_index(i);
  const double a0 = factor(ci, p[0], 0), a1 = factor(ci, p[0], 1);
  const double b0 = factor(cj, p[1], 0), b1 = factor(cj, p[1], 1);
  return {a0 * b0, a1 * b0, a0 * b1, a1 * b1};
}

// --- coarse space -----------------------------------------------------------

namespace {

// (value, d/dx, d/dy, d2/dxdy) of phi * monomial.
FieldSample times_monomial(const FieldSample &phi, int monomial, std::array<double, 2> p,
                           std::array<double, 2> center) {
  double l = 1.0, lx = 0.0, ly = 0.0;
  if (monomial == 1)
    l = p[0] - center[0], lx = 1.0;
  else if (monomial == 2)
    l = p[1] - center[1], ly = 1.0;
  return {phi[0] * l, phi[1] * l + phi[0] * lx, phi[2] * l + phi[0] * ly,
          phi[3] * l + phi[1] * ly + phi[2] * lx};
}

} // namespace

FieldSample CoarseSpace::evaluate(const Vector &coeffs, std::array<double, 2> p) const {
  if (coeffs.size() != size())
    throw DimensionMismatch("coarse coefficient vector has the wrong size");
  FieldSample out{};
  for (int c = 0; c < size(); ++c) {
    if (coeffs[c] == 0.0)
      continue;
    const CoarseDof &d = dofs[static_cast<std::size_t>(c)];
    const FieldSample phi = pou.sample(d.vertex, p);
    if (phi[0] == 0.0 && phi[1] == 0.0 && phi[2] == 0.0 && phi[3] == 0.0)
      continue;
    const FieldSample s = times_monomial(phi, d.monomial, p, pou.vertex(d.vertex));
    for (int q = 0; q < 4; ++q)
      out[q] += coeffs[c] * s[q];
  }
  return out;
}

CoarseSpace build_coarse_space(const DomainDecomposition &dd, const DiscreteProblem &p) {
  if (!(dd.fine == p.grid))
    throw DimensionMismatch("decomposition and problem live on different fine grids");
  CoarseSpace cs;
  cs.pou = build_pou(dd.coarse);
  const Grid &coarse = dd.coarse;
  const int nc = coarse.cells_per_side();
  for (int v = 0; v < coarse.num_vertices(); ++v) {
    const auto [ci, cj] = coarse.vertex_index(v);
    const bool xedge = ci == 0 || ci == nc;
    const bool yedge = cj == 0 || cj == nc;
    if (!xedge && !yedge) {
      cs.vertices.push_back(v);
      for (int mono = 0; mono < 3; ++mono)
        cs.dofs.push_back({v, mono});
    } else if (p.form == Form::control && xedge != yedge) {
      cs.vertices.push_back(v);
      cs.dofs.push_back({v, xedge ? 1 : 2});
    }
  }
  if (dd.interior_coarse_vertices().empty())
    throw ConfigError("coarse space is empty: the coarse mesh has no interior vertex");

  const Grid &fine = p.grid;
  std::vector<Eigen::Triplet<double>> triplets;
  for (int c = 0; c < cs.size(); ++c) {
    const CoarseDof &d = cs.dofs[static_cast<std::size_t>(c)];
    const Patch &patch = dd.patches[static_cast<std::size_t>(d.vertex)];
    const auto center = cs.pou.vertex(d.vertex);
    for (int j = patch.vertices.j0; j <= patch.vertices.j1; ++j)
      for (int i = patch.vertices.i0; i <= patch.vertices.i1; ++i) {
        const auto x = fine.vertex_coords(i, j);
        const FieldSample s = times_monomial(cs.pou.sample(d.vertex, x), d.monomial, x, center);
        const int vid = fine.vertex_id(i, j);
        for (int q = 0; q < kDofsPerVertex; ++q) {
          const int f = p.raw_to_free[static_cast<std::size_t>(kDofsPerVertex * vid + q)];
          if (f >= 0 && s[q] != 0.0)
            triplets.emplace_back(f, c, s[q]);
        }
      }
  }
  cs.P.resize(p.num_free(), cs.size());
  cs.P.setFromTriplets(triplets.begin(), triplets.end());
  cs.P.makeCompressed();
  cs.Pt = cs.P.transpose();
  cs.Pt.makeCompressed();

  const SparseMatrix ap = p.A * cs.P;
  cs.A0 = DenseMatrix(cs.Pt * ap);
  cs.A0 = 0.5 * (cs.A0 + cs.A0.transpose()).eval();
  cs.A0_factor.compute(cs.A0);
  if (cs.A0_factor.info() != Eigen::Success)
    throw ConfigError("coarse matrix is not positive definite");

  const SparseMatrix jp = p.J * cs.P;
  std::vector<Eigen::Triplet<double>> gt;
  for (int r = 0; r < jp.rows(); ++r) {
    bool any = false;
    for (SparseMatrix::InnerIterator it(jp, r); it; ++it)
      if (it.value() != 0.0) {
        if (!any)
          cs.constraint_rows.push_back(r);
        any = true;
        gt.emplace_back(static_cast<int>(cs.constraint_rows.size()) - 1, it.col(), it.value());
      }
  }
  cs.G.resize(static_cast<Eigen::Index>(cs.constraint_rows.size()), cs.size());
  cs.G.setFromTriplets(gt.begin(), gt.end());
  cs.G.makeCompressed();
  cs.Gt = cs.G.transpose();
  cs.Gt.makeCompressed();
  cs.Linv_Gt = cs.A0_factor.matrixL().solve(DenseMatrix(cs.Gt));
  return cs;
}

Vector extract_values(const DiscreteProblem &p, const Vector &v) {
  if (v.size() != p.num_free())
    throw DimensionMismatch("expected " + std::to_string(p.num_free()) + " free DOFs");
  Vector out(p.num_constraints());
  for (int r = 0; r < p.num_constraints(); ++r)
    out[r] = v[p.value_dof[static_cast<std::size_t>(r)]];
  return out;
}

} // namespace obstacle
