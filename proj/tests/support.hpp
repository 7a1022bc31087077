#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "obstacle/linalg.hpp"
#include "obstacle/qp_solvers.hpp"

namespace testing_support {

using obstacle::DenseMatrix;
using obstacle::SparseMatrix;
using obstacle::Vector;

inline DenseMatrix random_spd(int n, std::mt19937 &rng, double shift = 0.5) {
  std::normal_distribution<double> g;
  DenseMatrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      b(i, j) = g(rng);
  DenseMatrix a = b * b.transpose() / n;
  a.diagonal().array() += shift;
  return a;
}

inline SparseMatrix to_sparse(const DenseMatrix &a) {
  SparseMatrix s = a.sparseView();
  s.makeCompressed();
  return s;
}

/// Brute force over all active sets of a bound-constrained QP. Returns the
/// unique KKT point (the problem is strictly convex).
inline Vector enumerate_bound_qp(const DenseMatrix &a, const Vector &g,
                                 const std::vector<int> &constrained, const Vector &b) {
  const int n = static_cast<int>(g.size());
  const int m = static_cast<int>(constrained.size());
  Vector best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<char> fixed(n, 0);
    Vector w = Vector::Zero(n);
    for (int k = 0; k < m; ++k)
      if (mask & (1u << k)) {
        fixed[constrained[k]] = 1;
        w[constrained[k]] = b[k];
      }
    std::vector<int> fr;
    for (int i = 0; i < n; ++i)
      if (!fixed[i])
        fr.push_back(i);
    if (!fr.empty()) {
      DenseMatrix aff(fr.size(), fr.size());
      Vector rhs(fr.size());
      for (std::size_t r = 0; r < fr.size(); ++r) {
        rhs[r] = g[fr[r]] - a.row(fr[r]).dot(w);
        for (std::size_t c = 0; c < fr.size(); ++c)
          aff(r, c) = a(fr[r], fr[c]);
      }
      const Vector x = aff.ldlt().solve(rhs);
      for (std::size_t r = 0; r < fr.size(); ++r)
        w[fr[r]] = x[r];
    }
    const Vector lam = g - a * w;
    bool ok = true;
    for (int k = 0; k < m && ok; ++k) {
      const double tol = 1e-10 * (1.0 + std::abs(b[k]));
      if (w[constrained[k]] > b[k] + tol)
        ok = false;
      if ((mask & (1u << k)) && lam[constrained[k]] < -1e-10 * (1.0 + g.norm()))
        ok = false;
    }
    if (!ok)
      continue;
    const double obj = 0.5 * w.dot(a * w) - g.dot(w);
    if (obj < best_obj) {
      best_obj = obj;
      best = w;
    }
  }
  return best;
}

/// Brute force for min 1/2 w'Aw - g'w s.t. Gw <= c over active sets of size at
/// most dim(w) (enough for linearly independent active rows).
inline Vector enumerate_general_qp(const DenseMatrix &a, const Vector &g, const DenseMatrix &gm,
                                   const Vector &c) {
  const int n = static_cast<int>(g.size());
  const int m = static_cast<int>(c.size());
  Vector best;
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<int> set;
  auto consider = [&]() {
    const int s = static_cast<int>(set.size());
    DenseMatrix k = DenseMatrix::Zero(n + s, n + s);
    Vector rhs(n + s);
    k.topLeftCorner(n, n) = a;
    rhs.head(n) = g;
    for (int r = 0; r < s; ++r) {
      k.block(n + r, 0, 1, n) = gm.row(set[r]);
      k.block(0, n + r, n, 1) = gm.row(set[r]).transpose();
      rhs[n + r] = c[set[r]];
    }
    Eigen::FullPivLU<DenseMatrix> lu(k);
    if (!lu.isInvertible())
      return;
    const Vector x = lu.solve(rhs);
    const Vector w = x.head(n);
    for (int r = 0; r < s; ++r)
      if (x[n + r] < -1e-10)
        return;
    const Vector gw = gm * w;
    for (int r = 0; r < m; ++r)
      if (gw[r] > c[r] + 1e-10 * (1.0 + std::abs(c[r])))
        return;
    const double obj = 0.5 * w.dot(a * w) - g.dot(w);
    if (obj < best_obj) {
      best_obj = obj;
      best = w;
    }
  };
  auto rec = [&](auto &&self, int start) -> void {
    consider();
    if (static_cast<int>(set.size()) == n)
      return;
    for (int r = start; r < m; ++r) {
      set.push_back(r);
      self(self, r + 1);
      set.pop_back();
    }
  };
  rec(rec, 0);
  return best;
}

inline double a_norm(const DenseMatrix &a, const Vector &x) { return std::sqrt(x.dot(a * x)); }

} // namespace testing_support
