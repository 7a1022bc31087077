#pragma once

#include <array>
#include <string>
#include <vector>

#include "obstacle/bfs_element.hpp"
#include "obstacle/grid.hpp"
#include "obstacle/linalg.hpp"
#include "obstacle/space_decomposition.hpp"

namespace obstacle {

/// Smallest sine of an angle p1 p2 p3 over noncollinear triples of the integer
/// grid {0..m}^2. Exhaustive; 1 <= m <= 16, InvalidSize otherwise.
double min_sine_angle(int m);

struct AngleWitness {
  double sine = 0.0;
  std::array<std::array<int, 2>, 3> triple{};
  long det = 0; ///< det[p1 - p2, p2 - p3]
};
AngleWitness min_sine_witness(int m);

/// alpha(H, h) for H/h = m: a coarse vertex patch spans 2m x 2m fine cells, so
/// alpha = arcsin(min_sine_angle(2m)). Requires 1 <= m <= 8.
double alpha_for_ratio(int m);

/// Point samples of a function on a closed patch: fine vertices and element
/// centers, each with value and gradient.
struct PatchSamples {
  struct Sample {
    std::array<double, 2> x{};
    std::array<int, 2> index{}; ///< fine vertex index (vertices only)
    double value = 0.0;
    std::array<double, 2> grad{};
  };
  std::vector<Sample> vertices;
  std::vector<Sample> centers;

  static PatchSamples from(const DofVector &v, const VertexBox &box);
  /// Subtract the linear function c0 + c1 (x - x_c) + c2 (y - y_c).
  void subtract_linear(const std::array<double, 3> &c, std::array<double, 2> center);
  double max_abs_value() const;
};

struct BiasReport {
  bool biased = false;
  bool zero_gradient = false;
  /// Angular spread of sampled gradient directions modulo pi, in [0, pi].
  double spread = 0.0;
  int samples = 0;
};

BiasReport alpha_biased(const PatchSamples &s, double alpha);
BiasReport alpha_biased(const DofVector &v, const Patch &patch, double alpha);

struct ConstructionTrace {
  /// Linear stages that fired (0 means the constant branch).
  int stages = 0;
  bool constant_case = false;
  /// A stage that failed its separation check was treated as non-biased.
  bool reclassified = false;
  std::string note;
  std::vector<std::array<int, 2>> touch_vertices;
  std::vector<double> spreads;
};

/// Linear function c0 + c1 (x - x_i) + c2 (y - y_i) about a coarse vertex x_i.
struct PatchInterpolant {
  int patch = 0;
  std::array<double, 2> center{};
  std::array<double, 3> coeffs{};
  ConstructionTrace trace;

  double operator()(std::array<double, 2> x) const {
    return coeffs[0] + coeffs[1] * (x[0] - center[0]) + coeffs[2] * (x[1] - center[1]);
  }
};

/// One step of the biased construction on sampled data: l = s (x - p0) . e_L
/// with p0 the vertex of least |v|. Throws ConstructionError (with the
/// offending vertex) if the separation property fails.
PatchInterpolant construct_linear(const PatchSamples &s, std::array<double, 2> center,
                                  double alpha);
PatchInterpolant construct_linear(const DofVector &v, const Patch &patch, double alpha);

/// Positivity-preserving linear interpolant on a patch: a constant for
/// non-biased input, else up to three linear stages. The sign sandwich is
/// verified at every patch vertex with tolerance 1e-10 * max|v|; a failure
/// throws ConstructionError.
PatchInterpolant construct_Ji(const DofVector &v, const Patch &patch, double alpha);

/// Worst sandwich defect of l against v over the patch vertices (0 when it holds).
double sandwich_defect(const DofVector &v, const Patch &patch, const PatchInterpolant &l);

struct CoarseInterpolant {
  Vector coeffs; ///< in the coarse-space basis
  std::vector<PatchInterpolant> patches;
};

/// J_H v = sum_i (J_i v) phi_i over the interior coarse vertices, with
/// alpha = alpha_for_ratio(dd.ratio).
CoarseInterpolant construct_JH(const DofVector &v, const DomainDecomposition &dd,
                               const CoarseSpace &coarse);

/// L2 norm of a fine-grid function by 4x4 Gauss quadrature per element.
double l2_norm(const DofVector &v);

} // namespace obstacle
