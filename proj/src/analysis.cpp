#include "obstacle/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "obstacle/errors.hpp"

namespace obstacle {

// --- angle oracle -----------------------------------------------------------

AngleWitness min_sine_witness(int m) {
  if (m < 1 || m > 16)
    throw InvalidSize("min_sine_angle: m must lie in [1, 16], got " + std::to_string(m));
  static std::mutex mutex;
  static std::map<int, AngleWitness> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(m); it != cache.end())
      return it->second;
  }
  std::vector<std::array<int, 2>> pts;
  for (int j = 0; j <= m; ++j)
    for (int i = 0; i <= m; ++i)
      pts.push_back({i, j});

  AngleWitness best;
  best.sine = 2.0;
  // p2 is the apex; sin(angle p1 p2 p3) is symmetric in p1, p3.
  for (std::size_t b = 0; b < pts.size(); ++b)
    for (std::size_t a = 0; a < pts.size(); ++a) {
      if (a == b)
        continue;
      const long ux = pts[a][0] - pts[b][0], uy = pts[a][1] - pts[b][1];
      const double lu = std::hypot(static_cast<double>(ux), static_cast<double>(uy));
      for (std::size_t c = a + 1; c < pts.size(); ++c) {
        if (c == b)
          continue;
        const long vx = pts[b][0] - pts[c][0], vy = pts[b][1] - pts[c][1];
        const long det = ux * vy - uy * vx;
        if (det == 0)
          continue;
        const double s = static_cast<double>(std::labs(det)) /
                         (lu * std::hypot(static_cast<double>(vx), static_cast<double>(vy)));
        if (s < best.sine) {
          best.sine = s;
          best.triple = {pts[a], pts[b], pts[c]};
          best.det = det;
        }
      }
    }
  std::lock_guard lock(mutex);
  cache.emplace(m, best);
  return best;
}

double min_sine_angle(int m) { return min_sine_witness(m).sine; }

double alpha_for_ratio(int m) {
  if (m < 1 || m > 8)
    throw InvalidSize("alpha_for_ratio: H/h must lie in [1, 8], got " + std::to_string(m));
  return std::asin(min_sine_angle(2 * m));
}

// --- samples ------------------------------------------------------------------

PatchSamples PatchSamples::from(const DofVector &v, const VertexBox &box) {
  const Grid &g = v.grid;
  const int n = g.cells_per_side();
  if (box.i0 < 0 || box.j0 < 0 || box.i1 > n || box.j1 > n || box.i0 >= box.i1 ||
      box.j0 >= box.j1)
    throw InvalidParameter("patch vertex box does not fit the grid");
  PatchSamples s;
  for (int j = box.j0; j <= box.j1; ++j)
    for (int i = box.i0; i <= box.i1; ++i) {
      Sample p;
      p.x = g.vertex_coords(i, j);
      p.index = {i, j};
      p.value = v.dof(i, j, 0);
      p.grad = {v.dof(i, j, 1), v.dof(i, j, 2)};
      s.vertices.push_back(p);
    }
  for (int j = box.j0; j < box.j1; ++j)
    for (int i = box.i0; i < box.i1; ++i) {
      Sample p;
      p.x = {(i + 0.5) * g.h(), (j + 0.5) * g.h()};
      p.index = {-1, -1};
      const auto vg = evaluate_with_gradient(v, p.x);
      p.value = vg[0];
      p.grad = {vg[1], vg[2]};
      s.centers.push_back(p);
    }
  return s;
}

void PatchSamples::subtract_linear(const std::array<double, 3> &c, std::array<double, 2> center) {
  auto apply = [&](Sample &p) {
    p.value -= c[0] + c[1] * (p.x[0] - center[0]) + c[2] * (p.x[1] - center[1]);
    p.grad[0] -= c[1];
    p.grad[1] -= c[2];
  };
  std::for_each(vertices.begin(), vertices.end(), apply);
  std::for_each(centers.begin(), centers.end(), apply);
}

double PatchSamples::max_abs_value() const {
  double m = 0.0;
  for (const auto &p : vertices)
    m = std::max(m, std::abs(p.value));
  return m;
}

// --- biasedness -----------------------------------------------------------------

BiasReport alpha_biased(const PatchSamples &s, double alpha) {
  if (!(alpha > 0.0 && alpha < std::numbers::pi / 2))
    throw InvalidParameter("alpha must lie in (0, pi/2)");
  BiasReport rep;
  std::vector<const PatchSamples::Sample *> all;
  for (const auto &p : s.vertices)
    all.push_back(&p);
  for (const auto &p : s.centers)
    all.push_back(&p);
  rep.samples = static_cast<int>(all.size());

  double gmax = 0.0;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto *p : all) {
    gmax = std::max(gmax, std::hypot(p->grad[0], p->grad[1]));
    xmin = std::min(xmin, p->x[0]), xmax = std::max(xmax, p->x[0]);
    ymin = std::min(ymin, p->x[1]), ymax = std::max(ymax, p->x[1]);
  }
  const double diam = std::hypot(xmax - xmin, ymax - ymin);
  const double scale = std::max(gmax, diam > 0.0 ? s.max_abs_value() / diam : 0.0);
  std::vector<double> angles;
  angles.reserve(all.size());
  for (const auto *p : all) {
    const double g = std::hypot(p->grad[0], p->grad[1]);
    if (scale == 0.0 || g <= 1e-12 * scale) {
      rep.zero_gradient = true;
      rep.spread = std::numbers::pi;
      return rep;
    }
    double a = std::atan2(p->grad[1], p->grad[0]);
    a = std::fmod(a + 2 * std::numbers::pi, std::numbers::pi);
    angles.push_back(a);
  }
  std::sort(angles.begin(), angles.end());
  double max_gap = std::numbers::pi - (angles.back() - angles.front());
  for (std::size_t k = 1; k < angles.size(); ++k)
    max_gap = std::max(max_gap, angles[k] - angles[k - 1]);
  rep.spread = std::clamp(std::numbers::pi - max_gap, 0.0, std::numbers::pi);
  rep.biased = rep.spread <= alpha / 2;
  return rep;
}

BiasReport alpha_biased(const DofVector &v, const Patch &patch, double alpha) {
  return alpha_biased(PatchSamples::from(v, patch.vertices), alpha);
}

// --- linear construction ----------------------------------------------------------

PatchInterpolant construct_linear(const PatchSamples &s, std::array<double, 2> center,
                                  double alpha) {
  if (s.vertices.empty())
    throw InvalidParameter("construct_linear: empty patch");
  PatchInterpolant out;
  out.center = center;
  const double scale = s.max_abs_value();
  if (scale == 0.0)
    return out;
  const double zero_tol = 1e-12 * scale;

  const auto &p0 = *std::min_element(s.vertices.begin(), s.vertices.end(),
                                     [](const auto &a, const auto &b) {
                                       return std::abs(a.value) < std::abs(b.value);
                                     });
  const double gn = std::hypot(p0.grad[0], p0.grad[1]);
  if (!(gn > 0.0))
    throw ConstructionError("construct_linear: vanishing gradient at the vertex of least |v|",
                            p0.index[0], p0.index[1]);
  const std::array<double, 2> nrm{p0.grad[0] / gn, p0.grad[1] / gn};
  const double sin_half = std::sin(alpha / 2);

  // Vertices inside the double cone about the tangent line at p0.
  bool have_dir = false;
  std::array<long, 2> dir{};
  for (const auto &q : s.vertices) {
    if (q.index == p0.index)
      continue;
    const double dx = q.x[0] - p0.x[0], dy = q.x[1] - p0.x[1];
    if (std::abs(dx * nrm[0] + dy * nrm[1]) > std::hypot(dx, dy) * sin_half)
      continue;
    const std::array<long, 2> d{q.index[0] - p0.index[0], q.index[1] - p0.index[1]};
    if (!have_dir) {
      dir = d;
      have_dir = true;
    } else if (dir[0] * d[1] - dir[1] * d[0] != 0) {
      throw ConstructionError("construct_linear: noncollinear vertices inside the cone",
                              q.index[0], q.index[1]);
    }
  }

  std::array<double, 2> eL = nrm;
  if (have_dir) {
    const double len = std::hypot(static_cast<double>(dir[0]), static_cast<double>(dir[1]));
    eL = {-static_cast<double>(dir[1]) / len, static_cast<double>(dir[0]) / len};
    if (eL[0] * p0.grad[0] + eL[1] * p0.grad[1] < 0.0)
      eL = {-eL[0], -eL[1]};
  }
  auto on_line = [&](const PatchSamples::Sample &p) {
    const long ex = p.index[0] - p0.index[0], ey = p.index[1] - p0.index[1];
    if (!have_dir)
      return ex == 0 && ey == 0;
    return dir[0] * ey - dir[1] * ex == 0;
  };

  double slope = std::numeric_limits<double>::infinity();
  std::array<int, 2> touch{-1, -1};
  for (const auto &p : s.vertices) {
    if (on_line(p))
      continue;
    const double proj = (p.x[0] - p0.x[0]) * eL[0] + (p.x[1] - p0.x[1]) * eL[1];
    double ratio = 0.0;
    if (std::abs(p.value) > zero_tol) {
      if ((p.value > 0.0) != (proj > 0.0) || proj == 0.0)
        throw ConstructionError("construct_linear: separation fails at vertex (" +
                                    std::to_string(p.index[0]) + ", " +
                                    std::to_string(p.index[1]) + ")",
                                p.index[0], p.index[1]);
      ratio = p.value / proj;
    }
    if (ratio < slope) {
      slope = ratio;
      touch = p.index;
    }
  }
  if (!std::isfinite(slope))
    slope = 0.0;

  out.coeffs = {slope * ((center[0] - p0.x[0]) * eL[0] + (center[1] - p0.x[1]) * eL[1]),
                slope * eL[0], slope * eL[1]};
  out.trace.touch_vertices.push_back(touch);
  out.trace.stages = 1;
  return out;
}

PatchInterpolant construct_linear(const DofVector &v, const Patch &patch, double alpha) {
  PatchInterpolant l = construct_linear(PatchSamples::from(v, patch.vertices), patch.center, alpha);
  l.patch = patch.id;
  return l;
}

// --- J_i ------------------------------------------------------------------------

namespace {

// max over vertices of the violation of the sign sandwich of l against v.
std::pair<double, std::array<int, 2>> worst_defect(const PatchSamples &orig,
                                                   const PatchInterpolant &l, double zero_tol) {
  double worst = 0.0;
  std::array<int, 2> where{-1, -1};
  for (const auto &p : orig.vertices) {
    const double lv = l(p.x);
    double d = 0.0;
    if (p.value > zero_tol)
      d = std::max({0.0, -lv, lv - p.value});
    else if (p.value < -zero_tol)
      d = std::max({0.0, lv, p.value - lv});
    else
      d = std::abs(lv);
    if (d > worst) {
      worst = d;
      where = p.index;
    }
  }
  return {worst, where};
}

} // namespace

PatchInterpolant construct_Ji(const DofVector &v, const Patch &patch, double alpha) {
  const PatchSamples orig = PatchSamples::from(v, patch.vertices);
  PatchInterpolant out;
  out.patch = patch.id;
  out.center = patch.center;
  const double scale = orig.max_abs_value();
  if (scale == 0.0) {
    out.trace.constant_case = true;
    return out;
  }

  PatchSamples cur = orig;
  for (int stage = 1; stage <= 3; ++stage) {
    const BiasReport rep = alpha_biased(cur, alpha);
    out.trace.spreads.push_back(rep.spread);
    if (!rep.biased)
      break;
    PatchInterpolant l;
    try {
      l = construct_linear(cur, patch.center, alpha);
    } catch (const ConstructionError &e) {
      out.trace.reclassified = true;
      out.trace.note = e.what();
      break;
    }
    for (int c = 0; c < 3; ++c)
      out.coeffs[static_cast<std::size_t>(c)] += l.coeffs[static_cast<std::size_t>(c)];
    out.trace.touch_vertices.push_back(l.trace.touch_vertices.front());
    out.trace.stages = stage;
    cur.subtract_linear(l.coeffs, patch.center);
  }

  if (out.trace.stages == 0) {
    // Constant branch: the sampled value of least magnitude, or zero when the
    // samples change sign (then |v| vanishes somewhere in the patch).
    out.trace.constant_case = true;
    const double zero_tol = 1e-12 * scale;
    bool pos = false, neg = false;
    const PatchSamples::Sample *q = nullptr;
    for (const auto *set : {&orig.vertices, &orig.centers})
      for (const auto &p : *set) {
        pos = pos || p.value > zero_tol;
        neg = neg || p.value < -zero_tol;
        if (!q || std::abs(p.value) < std::abs(q->value))
          q = &p;
      }
    out.coeffs = {(pos && neg) ? 0.0 : q->value, 0.0, 0.0};
  }

  const auto [defect, where] = worst_defect(orig, out, 1e-10 * scale);
  if (defect > 1e-10 * scale)
    throw ConstructionError("construct_Ji: sign sandwich violated by " + std::to_string(defect) +
                                " at vertex (" + std::to_string(where[0]) + ", " +
                                std::to_string(where[1]) + ")",
                            where[0], where[1]);
  return out;
}

double sandwich_defect(const DofVector &v, const Patch &patch, const PatchInterpolant &l) {
  const PatchSamples s = PatchSamples::from(v, patch.vertices);
  return worst_defect(s, l, 1e-10 * s.max_abs_value()).first;
}

// --- J_H ------------------------------------------------------------------------

CoarseInterpolant construct_JH(const DofVector &v, const DomainDecomposition &dd,
                               const CoarseSpace &coarse) {
  if (!(v.grid == dd.fine))
    throw DimensionMismatch("construct_JH: function and decomposition use different grids");
  const double alpha = alpha_for_ratio(dd.ratio);
  CoarseInterpolant out;
  out.coeffs = Vector::Zero(coarse.size());
  std::map<std::pair<int, int>, int> index;
  for (int c = 0; c < coarse.size(); ++c)
    index[{coarse.dofs[static_cast<std::size_t>(c)].vertex,
           coarse.dofs[static_cast<std::size_t>(c)].monomial}] = c;
  for (int i : dd.interior_coarse_vertices()) {
    PatchInterpolant l = construct_Ji(v, dd.patches[static_cast<std::size_t>(i)], alpha);
    for (int mono = 0; mono < 3; ++mono) {
      const auto it = index.find({i, mono});
      if (it == index.end())
        throw DimensionMismatch("construct_JH: coarse space lacks a DOF of vertex " +
                                std::to_string(i));
      out.coeffs[it->second] = l.coeffs[static_cast<std::size_t>(mono)];
    }
    out.patches.push_back(std::move(l));
  }
  return out;
}

double l2_norm(const DofVector &v) {
  const Grid &g = v.grid;
  const double h = g.h();
  const GaussRule &q = gauss4();
  double sum = 0.0;
  for (int j = 0; j < g.cells_per_side(); ++j)
    for (int i = 0; i < g.cells_per_side(); ++i)
      for (int b = 0; b < 4; ++b)
        for (int a = 0; a < 4; ++a) {
          const double val = evaluate(v, {(i + q.nodes[static_cast<std::size_t>(a)]) * h,
                                          (j + q.nodes[static_cast<std::size_t>(b)]) * h});
          sum += q.weights[static_cast<std::size_t>(a)] * q.weights[static_cast<std::size_t>(b)] *
                 val * val;
        }
  return std::sqrt(sum * h * h);
}

} // namespace obstacle
