#pragma once

#include <array>
#include <functional>

#include "obstacle/grid.hpp"
#include "obstacle/linalg.hpp"

/// Bogner-Fox-Schmit bicubic Hermite element on uniform square meshes.
///
/// Each vertex carries four DOFs in physical units, ordered (v, dv/dx, dv/dy,
/// d2v/dxdy). Element-local DOF 4*c + q refers to corner c = a + 2b of the cell
/// (a, b in {0, 1}) and DOF kind q. The global raw DOF of vertex id k and kind q
/// is 4*k + q.
namespace obstacle {

enum class Form {
  plate,   ///< a(v,w) = int Hess v : Hess w
  control, ///< a(v,w) = int beta Hess v : Hess w + v w
};

struct DerivOrder {
  int dx = 0;
  int dy = 0;
};

/// (v, dv/dx, dv/dy, d2v/dxdy) at a point.
using FieldSample = std::array<double, 4>;
using SmoothField = std::function<FieldSample(double x, double y)>;
using ScalarField = std::function<double(double x, double y)>;

inline constexpr int kDofsPerVertex = 4;
inline constexpr int kElementDofs = 16;

/// 4-point Gauss-Legendre rule on [0, 1].
struct GaussRule {
  std::array<double, 4> nodes;
  std::array<double, 4> weights;
};
const GaussRule &gauss4();

/// Derivatives d^a/dxi1^a d^b/dxi2^b of the 16 reference basis functions at xi
/// in the reference square. The basis is dual to the reference nodal DOFs.
/// Throws Unsupported for derivative orders above 2.
std::array<double, kElementDofs> shape_functions(std::array<double, 2> xi, DerivOrder order);

struct ElementMatrix {
  Form form = Form::plate;
  double beta = 1.0;
  double h = 1.0;
  /// Row-major 16 x 16 in element-local DOF order, physical units.
  std::array<double, kElementDofs * kElementDofs> stiffness{};
  /// Integral of each physical basis function over the element.
  std::array<double, kElementDofs> load_template{};

  double operator()(int a, int b) const noexcept { return stiffness[a * kElementDofs + b]; }
};

/// Element stiffness on an h x h square, integrated exactly with 4x4 Gauss.
/// Throws InvalidParameter for h <= 0 or beta <= 0 with the control form.
ElementMatrix element_matrices(Form form, double beta, double h);

/// Raw DOF indices of element (i, j) in element-local order.
std::array<int, kElementDofs> element_dofs(const Grid &grid, int i, int j);

/// Piecewise bicubic C1 function given by raw nodal DOFs.
struct DofVector {
  Grid grid;
  Vector coeffs;

  static DofVector zeros(const Grid &grid) {
    return {grid, Vector::Zero(static_cast<Eigen::Index>(kDofsPerVertex) * grid.num_vertices())};
  }
  double &dof(int i, int j, int kind) { return coeffs[kDofsPerVertex * grid.vertex_id(i, j) + kind]; }
  double dof(int i, int j, int kind) const {
    return coeffs[kDofsPerVertex * grid.vertex_id(i, j) + kind];
  }
};

/// Nodal interpolation: DOFs are the field's value and derivatives at vertices.
DofVector interpolate(const SmoothField &field, const Grid &grid);

/// Derivative (dx, dy) of v at p. Throws DomainError outside [0,1]^2 and
/// Unsupported for orders above 2.
double evaluate(const DofVector &v, std::array<double, 2> p, DerivOrder order = {});

/// Value and gradient at p in one element lookup.
std::array<double, 3> evaluate_with_gradient(const DofVector &v, std::array<double, 2> p);

} // namespace obstacle
