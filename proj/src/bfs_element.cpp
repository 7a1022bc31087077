#include "obstacle/bfs_element.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "obstacle/errors.hpp"

namespace obstacle {
namespace {

// Cubic Hermite basis on [0,1]: value at 0, slope at 0, value at 1, slope at 1.
// Returns the derivative of the requested order.
double hermite(int node, int kind, double t, int order) {
  const int which = 2 * node + kind;
  switch (order) {
  case 0:
    switch (which) {
    case 0: return (1 - t) * (1 - t) * (1 + 2 * t);
    case 1: return t * (1 - t) * (1 - t);
    case 2: return t * t * (3 - 2 * t);
    default: return t * t * (t - 1);
    }
  case 1:
    switch (which) {
    case 0: return 6 * t * t - 6 * t;
    case 1: return 3 * t * t - 4 * t + 1;
    case 2: return 6 * t - 6 * t * t;
    default: return 3 * t * t - 2 * t;
    }
  case 2:
    switch (which) {
    case 0: return 12 * t - 6;
    case 1: return 6 * t - 4;
    case 2: return 6 - 12 * t;
    default: return 6 * t - 2;
    }
  default:
    throw Unsupported("Hermite derivatives above order 2 are not supported, got " +
                      std::to_string(order));
  }
}

void check_order(DerivOrder order) {
  if (order.dx < 0 || order.dy < 0 || order.dx > 2 || order.dy > 2)
    throw Unsupported("derivative order (" + std::to_string(order.dx) + "," +
                      std::to_string(order.dy) + ") is not supported");
}

// h^(#derivatives in DOF kind q): maps physical DOFs to reference DOFs.
double dof_scale(int q, double h) {
  const int k = (q & 1) + (q >> 1);
  return k == 0 ? 1.0 : (k == 1 ? h : h * h);
}

struct Located {
  int i, j;
  std::array<double, 2> xi;
};

Located locate(const Grid &grid, std::array<double, 2> p) {
  constexpr double slack = 1e-14;
  if (!(p[0] >= -slack && p[0] <= 1 + slack && p[1] >= -slack && p[1] <= 1 + slack))
    throw DomainError("point (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) +
                      ") lies outside the unit square");
  const int n = grid.cells_per_side();
  Located loc{};
  for (int d = 0; d < 2; ++d) {
    const double s = std::clamp(p[d], 0.0, 1.0) * n;
    const int c = std::clamp(static_cast<int>(std::floor(s)), 0, n - 1);
    (d == 0 ? loc.i : loc.j) = c;
    loc.xi[d] = s - c;
  }
  return loc;
}

} // namespace

const GaussRule &gauss4() {
  static const GaussRule rule = [] {
    const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
    GaussRule r{};
    const std::array<double, 4> t{-b, -a, a, b};
    const std::array<double, 4> w{wb, wa, wa, wb};
    for (int k = 0; k < 4; ++k) {
      r.nodes[k] = 0.5 * (1.0 + t[k]);
      r.weights[k] = 0.5 * w[k];
    }
    return r;
  }();
  return rule;
}

std::array<double, kElementDofs> shape_functions(std::array<double, 2> xi, DerivOrder order) {
  check_order(order);
  std::array<double, kElementDofs> out{};
  for (int corner = 0; corner < 4; ++corner) {
    const int a = corner & 1;
    const int b = corner >> 1;
    for (int q = 0; q < 4; ++q)
      out[4 * corner + q] =
          hermite(a, q & 1, xi[0], order.dx) * hermite(b, q >> 1, xi[1], order.dy);
  }
  return out;
}

ElementMatrix element_matrices(Form form, double beta, double h) {
  if (!(h > 0.0))
    throw InvalidParameter("element size must be positive");
  if (form == Form::control && !(beta > 0.0))
    throw InvalidParameter("control form requires beta > 0, got " + std::to_string(beta));

  ElementMatrix em;
  em.form = form;
  em.beta = form == Form::control ? beta : 1.0;
  em.h = h;

  const GaussRule &g = gauss4();
  std::array<double, kElementDofs> scale{};
  for (int a = 0; a < kElementDofs; ++a)
    scale[a] = dof_scale(a % 4, h);

  // Reference integrals; physical derivatives are reference ones over h.
  const double hess_factor = em.beta / (h * h); // h^2 area / h^4
  const double mass_factor = form == Form::control ? h * h : 0.0;
  for (int qx = 0; qx < 4; ++qx)
    for (int qy = 0; qy < 4; ++qy) {
      const std::array<double, 2> xi{g.nodes[qx], g.nodes[qy]};
      const double w = g.weights[qx] * g.weights[qy];
      const auto v = shape_functions(xi, {0, 0});
      const auto vxx = shape_functions(xi, {2, 0});
      const auto vxy = shape_functions(xi, {1, 1});
      const auto vyy = shape_functions(xi, {0, 2});
      for (int a = 0; a < kElementDofs; ++a) {
        em.load_template[a] += w * h * h * v[a] * scale[a];
        for (int b = 0; b < kElementDofs; ++b) {
          const double hess = vxx[a] * vxx[b] + 2.0 * vxy[a] * vxy[b] + vyy[a] * vyy[b];
          em.stiffness[a * kElementDofs + b] +=
              w * (hess_factor * hess + mass_factor * v[a] * v[b]) * scale[a] * scale[b];
        }
      }
    }
  // Exact symmetry; quadrature sums are symmetric up to round-off only.
  for (int a = 0; a < kElementDofs; ++a)
    for (int b = a + 1; b < kElementDofs; ++b) {
      const double s = 0.5 * (em.stiffness[a * kElementDofs + b] + em.stiffness[b * kElementDofs + a]);
      em.stiffness[a * kElementDofs + b] = em.stiffness[b * kElementDofs + a] = s;
    }
  return em;
}

std::array<int, kElementDofs> element_dofs(const Grid &grid, int i, int j) {
  std::array<int, kElementDofs> dofs{};
  const auto verts = grid.element_vertices(i, j);
  for (int c = 0; c < 4; ++c)
    for (int q = 0; q < 4; ++q)
      dofs[4 * c + q] = kDofsPerVertex * verts[c] + q;
  return dofs;
}

DofVector interpolate(const SmoothField &field, const Grid &grid) {
  DofVector v = DofVector::zeros(grid);
  const int n = grid.cells_per_side();
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const auto s = field(grid.coordinate(i), grid.coordinate(j));
      for (int q = 0; q < 4; ++q)
        v.dof(i, j, q) = s[q];
    }
  return v;
}

double evaluate(const DofVector &v, std::array<double, 2> p, DerivOrder order) {
  check_order(order);
  const Located loc = locate(v.grid, p);
  const double h = v.grid.h();
  const auto dofs = element_dofs(v.grid, loc.i, loc.j);
  const auto basis = shape_functions(loc.xi, order);
  double s = 0.0;
  for (int a = 0; a < kElementDofs; ++a)
    s += v.coeffs[dofs[a]] * dof_scale(a % 4, h) * basis[a];
  return s / std::pow(h, order.dx + order.dy);
}

std::array<double, 3> evaluate_with_gradient(const DofVector &v, std::array<double, 2> p) {
  const Located loc = locate(v.grid, p);
  const double h = v.grid.h();
  const auto dofs = element_dofs(v.grid, loc.i, loc.j);
  const auto b0 = shape_functions(loc.xi, {0, 0});
  const auto bx = shape_functions(loc.xi, {1, 0});
  const auto by = shape_functions(loc.xi, {0, 1});
  std::array<double, 3> out{};
  for (int a = 0; a < kElementDofs; ++a) {
    const double c = v.coeffs[dofs[a]] * dof_scale(a % 4, h);
    out[0] += c * b0[a];
    out[1] += c * bx[a];
    out[2] += c * by[a];
  }
  out[1] /= h;
  out[2] /= h;
  return out;
}

} // namespace obstacle
