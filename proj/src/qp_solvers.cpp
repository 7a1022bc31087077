#include "obstacle/qp_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "obstacle/errors.hpp"

namespace obstacle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_square(const SparseMatrix &a, Eigen::Index n, const char *what) {
  if (a.rows() != a.cols() || a.rows() != n)
    throw DimensionMismatch(std::string(what) + ": matrix and vector sizes differ");
}

SparseMatrix compressed(SparseMatrix a) {
  a.makeCompressed();
  return a;
}

} // namespace

Vector spd_solve(const SparseMatrix &a_in, const Vector &rhs, double tol, int max_iter) {
  check_square(a_in, rhs.size(), "spd_solve");
  const SparseMatrix a = compressed(a_in);
  const Eigen::Index n = rhs.size();
  if (max_iter <= 0)
    max_iter = static_cast<int>(std::max<Eigen::Index>(10 * n, 10));

  Vector inv_diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a.coeff(i, i);
    if (!(d > 0.0))
      throw ContractViolation("spd_solve: nonpositive diagonal entry " + std::to_string(i));
    inv_diag[i] = 1.0 / d;
  }

  Vector x = Vector::Zero(n);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0)
    return x;
  Vector r = rhs;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  Vector ap(n);
  double rz = kernels::dot(view(r), view(z));
  for (int it = 0; it < max_iter; ++it) {
    kernels::spmv(csr(a), view(p), view(ap));
    const double pap = kernels::dot(view(p), view(ap));
    if (!(pap > 0.0))
      throw ContractViolation("spd_solve: matrix is not positive definite");
    const double alpha = rz / pap;
    kernels::axpy(alpha, view(p), view(x));
    kernels::axpy(-alpha, view(ap), view(r));
    if (std::sqrt(kernels::dot(view(r), view(r))) <= tol * rhs_norm)
      return x;
    z = inv_diag.cwiseProduct(r);
    const double rz_next = kernels::dot(view(r), view(z));
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw NonConvergence("spd_solve: no convergence in " + std::to_string(max_iter) + " iterations",
                       x, r.norm() / rhs_norm);
}

Vector spd_solve_direct(const SparseMatrix &a, const Vector &rhs) {
  check_square(a, rhs.size(), "spd_solve_direct");
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
    throw ContractViolation("spd_solve_direct: matrix is not positive definite");
  return ldlt.solve(rhs);
}

// --- BoundQP ----------------------------------------------------------------

double BoundQP::objective(const Vector &w) const {
  return 0.5 * w.dot(A * w) - g.dot(w);
}

double BoundQP::max_violation(const Vector &w) const {
  double worst = -kInf;
  for (std::size_t r = 0; r < constrained.size(); ++r)
    worst = std::max(worst, w[constrained[r]] - bounds[static_cast<Eigen::Index>(r)]);
  return worst;
}

void BoundQP::validate() const {
  check_square(A, g.size(), "BoundQP");
  if (bounds.size() != static_cast<Eigen::Index>(constrained.size()))
    throw DimensionMismatch("BoundQP: one bound per constrained component expected");
  for (std::size_t r = 0; r < constrained.size(); ++r) {
    if (constrained[r] < 0 || constrained[r] >= size())
      throw InvalidParameter("BoundQP: constrained index out of range");
    if (r > 0 && constrained[r] <= constrained[r - 1])
      throw InvalidParameter("BoundQP: constrained indices must be strictly ascending");
    if (std::isnan(bounds[static_cast<Eigen::Index>(r)]))
      throw InvalidParameter("BoundQP: NaN bound");
  }
}

// --- PDAS -------------------------------------------------------------------

void PdasSolver::set_matrix(SparseMatrix a) {
  if (a.rows() != a.cols())
    throw DimensionMismatch("PdasSolver: matrix is not square");
  a_ = compressed(std::move(a));
  has_factor_ = false;
  cached_fixed_.clear();
}

void PdasSolver::factorize(const std::vector<char> &fixed) {
  const int n = static_cast<int>(a_.rows());
  free_idx_.clear();
  free_pos_.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i)
    if (!fixed[static_cast<std::size_t>(i)]) {
      free_pos_[static_cast<std::size_t>(i)] = static_cast<int>(free_idx_.size());
      free_idx_.push_back(i);
    }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(a_.nonZeros()));
  for (int li = 0; li < static_cast<int>(free_idx_.size()); ++li)
    for (SparseMatrix::InnerIterator it(a_, free_idx_[static_cast<std::size_t>(li)]); it; ++it) {
      const int lj = free_pos_[static_cast<std::size_t>(it.col())];
      if (lj >= 0)
        triplets.emplace_back(li, lj, it.value());
    }
  const auto m = static_cast<Eigen::Index>(free_idx_.size());
  Eigen::SparseMatrix<double> sub(m, m);
  sub.setFromTriplets(triplets.begin(), triplets.end());
  if (m > 0) {
    ldlt_.compute(sub);
    if (ldlt_.info() != Eigen::Success || (ldlt_.vectorD().array() <= 0.0).any())
      throw ContractViolation("PdasSolver: reduced matrix is not positive definite");
  }
  cached_fixed_ = fixed;
  has_factor_ = true;
}

PdasResult PdasSolver::solve(const Vector &g, const std::vector<int> &constrained,
                             const Vector &bounds, const Vector &w0, const Vector *lambda0,
                             const PdasOptions &options) {
  const int n = static_cast<int>(a_.rows());
  if (g.size() != n || w0.size() != n)
    throw DimensionMismatch("PdasSolver: vector sizes differ from the matrix");
  if (bounds.size() != static_cast<Eigen::Index>(constrained.size()))
    throw DimensionMismatch("PdasSolver: one bound per constrained component expected");
  if (lambda0 && lambda0->size() != bounds.size())
    throw DimensionMismatch("PdasSolver: multiplier guess has the wrong size");
  const auto nc = static_cast<Eigen::Index>(constrained.size());

  PdasResult res;
  res.lambda = lambda0 ? Vector(lambda0->cwiseMax(0.0)) : Vector(Vector::Zero(nc));
  res.active.assign(static_cast<std::size_t>(nc), 0);
  Vector w = w0;
  for (Eigen::Index r = 0; r < nc; ++r) {
    const double b = bounds[r];
    res.active[static_cast<std::size_t>(r)] =
        std::isfinite(b) && res.lambda[r] + options.c * (w[constrained[static_cast<std::size_t>(r)]] - b) > 0.0;
  }

  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  Vector x(n), resid(n), rhs;
  double prev_norm = -1.0;
  for (int it = 1; it <= options.max_iter; ++it) {
    std::fill(fixed.begin(), fixed.end(), 0);
    x.setZero();
    for (Eigen::Index r = 0; r < nc; ++r)
      if (res.active[static_cast<std::size_t>(r)]) {
        const int i = constrained[static_cast<std::size_t>(r)];
        fixed[static_cast<std::size_t>(i)] = 1;
        x[i] = bounds[r];
      }
    if (!has_factor_ || fixed != cached_fixed_) {
      factorize(fixed);
      ++res.factorizations;
    }
    // A_II w_I = g_I - A_IA b_A
    kernels::spmv(csr(a_), view(x), view(resid));
    resid = g - resid;
    const auto m = static_cast<Eigen::Index>(free_idx_.size());
    if (m > 0) {
      rhs.resize(m);
      for (Eigen::Index l = 0; l < m; ++l)
        rhs[l] = resid[free_idx_[static_cast<std::size_t>(l)]];
      const Vector sol = ldlt_.solve(rhs);
      for (Eigen::Index l = 0; l < m; ++l)
        x[free_idx_[static_cast<std::size_t>(l)]] = sol[l];
    }
    kernels::spmv(csr(a_), view(x), view(resid));
    resid = g - resid; // lambda = g - A w on the active set

    bool changed = false;
    for (Eigen::Index r = 0; r < nc; ++r) {
      const int i = constrained[static_cast<std::size_t>(r)];
      const bool was = res.active[static_cast<std::size_t>(r)];
      res.lambda[r] = was ? resid[i] : 0.0;
      const double b = bounds[r];
      const bool now = std::isfinite(b) && res.lambda[r] + options.c * (x[i] - b) > 0.0;
      if (now != was) {
        changed = true;
        res.active[static_cast<std::size_t>(r)] = now;
      }
    }

    const Vector dw = x - w;
    w = x;
    res.iterations = it;
    if (!changed) {
      res.w = w;
      res.lambda = res.lambda.cwiseMax(0.0);
      return res;
    }
    // Tiny increments with a flickering active set: accept once primal-dual feasible.
    const double wn = energy_norm(a_, w);
    const double dn = energy_norm(a_, dw);
    if (prev_norm >= 0.0 && wn > 0.0 && dn <= options.tol * wn) {
      bool kkt = true;
      for (Eigen::Index r = 0; r < nc && kkt; ++r) {
        const int i = constrained[static_cast<std::size_t>(r)];
        kkt = w[i] <= bounds[r] + options.tol * (1.0 + std::abs(bounds[r])) &&
              res.lambda[r] >= -options.tol * (1.0 + g.lpNorm<Eigen::Infinity>());
      }
      if (kkt) {
        res.w = w;
        res.lambda = res.lambda.cwiseMax(0.0);
        return res;
      }
    }
    prev_norm = wn;
  }
  throw NonConvergence("pdas: active set did not settle in " + std::to_string(options.max_iter) +
                           " iterations",
                       w);
}

PdasResult pdas_solve(const BoundQP &qp, const Vector &w0, double tol) {
  qp.validate();
  PdasSolver solver(qp.A);
  PdasOptions opt;
  opt.tol = tol;
  return solver.solve(qp.g, qp.constrained, qp.bounds, w0, nullptr, opt);
}

// --- forward-backward splitting ----------------------------------------------

FbsResult fbs_solve(const BoundQP &qp, const Vector &w0, const FbsOptions &options) {
  qp.validate();
  if (w0.size() != qp.size())
    throw DimensionMismatch("fbs_solve: initial guess has the wrong size");
  const SparseMatrix a = compressed(qp.A);
  const Eigen::Index n = qp.size();

  Vector upper = Vector::Constant(n, kInf);
  for (std::size_t r = 0; r < qp.constrained.size(); ++r)
    upper[qp.constrained[r]] = qp.bounds[static_cast<Eigen::Index>(r)];

  FbsResult res;
  res.lipschitz = lipschitz_estimate([&](const Vector &v) { return multiply(a, v); }, n,
                                     options.power_iterations, options.safety);
  if (!(res.lipschitz > 0.0))
    res.lipschitz = 1.0;
  const double step = 1.0 / res.lipschitz;

  Vector w = w0.cwiseMin(upper);
  Vector grad(n), prev(n), dw(n);
  for (int it = 1; it <= options.max_iter; ++it) {
    kernels::spmv(csr(a), view(w), view(grad));
    grad -= qp.g;
    prev = w;
    kernels::projected_step_upper(view(w), view(grad), step, view(upper));
    dw = w - prev;
    res.iterations = it;
    const double dn = energy_norm(a, dw);
    const double wn = energy_norm(a, w);
    if (dn <= options.tol * wn || dn == 0.0) {
      res.w = w;
      return res;
    }
  }
  throw NonConvergence("fbs: no convergence in " + std::to_string(options.max_iter) + " iterations",
                       w);
}

// --- dual coarse solver -------------------------------------------------------

double DualQP::primal_objective(const Vector &w) const {
  return 0.5 * w.dot(*A * w) - g.dot(w);
}

double DualQP::dual_objective(const Vector &w, const Vector &lambda) const {
  return 0.5 * w.dot(*A * w) + c.dot(lambda);
}

void DualQP::validate() const {
  if (!A || !factor || !G || !Gt)
    throw InvalidParameter("DualQP: matrix, factorization and constraint operator are required");
  if (A->rows() != A->cols() || A->rows() != g.size() || G->cols() != g.size() ||
      G->rows() != c.size() || Gt->rows() != G->cols() || Gt->cols() != G->rows())
    throw DimensionMismatch("DualQP: inconsistent sizes");
  if (c.size() > 0 && c.minCoeff() < 0.0)
    throw ContractViolation("DualQP: negative slack, the current iterate is infeasible");
}

double feasibility_scale(const SparseMatrix &g, const Vector &w, const Vector &c,
                         double slack_tol) {
  const Vector gw = multiply(g, w);
  double theta = 1.0;
  for (Eigen::Index r = 0; r < gw.size(); ++r)
    if (gw[r] > c[r] + slack_tol)
      theta = std::min(theta, std::max(c[r], 0.0) / gw[r]);
  return theta;
}

DualResult dual_coarse_solve(const DualQP &qp, const DualOptions &options, const Vector *lambda0) {
  qp.validate();
  const Eigen::Index m = qp.c.size();
  DualResult res;
  res.lambda = Vector::Zero(m);
  if (lambda0) {
    if (lambda0->size() != m)
      throw DimensionMismatch("dual_coarse_solve: multiplier guess has the wrong size");
    res.lambda = lambda0->cwiseMax(0.0);
  }
  const auto &factor = *qp.factor;
  const SparseMatrix &G = *qp.G;
  const SparseMatrix &Gt = *qp.Gt;

  res.lipschitz = lipschitz_estimate(
      [&](const Vector &v) { return Vector(multiply(G, factor.solve(multiply(Gt, v)))); }, m, 50,
      1.05);
  if (!(res.lipschitz > 0.0))
    res.lipschitz = 1.0;
  const double step = 1.0 / res.lipschitz;
  const double c_scale = 1.0 + (m > 0 ? qp.c.lpNorm<Eigen::Infinity>() : 0.0);

  Vector w, gw(m), s(m);
  for (int it = 0;; ++it) {
    w = factor.solve(qp.g - multiply(Gt, res.lambda));
    if (m > 0)
      kernels::spmv(csr(G), view(w), view(gw));
    s = qp.c - gw; // gradient of the dual objective
    res.violation = m > 0 ? std::max(0.0, -s.minCoeff()) : 0.0;
    res.gap = res.lambda.dot(s);
    res.iterations = it;
    const double primal = qp.primal_objective(w);
    if (options.record_history) {
      const double theta = m > 0 ? feasibility_scale(G, w, qp.c) : 1.0;
      const Vector wf = theta * w;
      res.history.emplace_back(qp.primal_objective(wf), -qp.dual_objective(w, res.lambda));
    }
    if (res.violation <= options.tol * c_scale &&
        std::abs(res.gap) <= options.tol * (1.0 + std::abs(primal))) {
      res.converged = true;
      break;
    }
    if (it >= options.max_iter) {
      if (options.allow_inexact)
        break;
      throw NonConvergence("dual coarse solve: no convergence in " +
                               std::to_string(options.max_iter) + " iterations",
                           w, res.violation);
    }
    kernels::projected_step_nonneg(view(res.lambda), view(s), step);
  }
  res.w = w;
  return res;
}

DualResult dual_active_set_solve(const DualQP &qp, const DualOptions &options) {
  qp.validate();
  const Eigen::Index m = qp.c.size();
  const auto &factor = *qp.factor;
  DenseMatrix local_b;
  if (!qp.Linv_Gt)
    local_b = factor.matrixL().solve(DenseMatrix(*qp.Gt));
  const DenseMatrix &B = qp.Linv_Gt ? *qp.Linv_Gt : local_b;
  if (B.rows() != qp.g.size() || B.cols() != m)
    throw DimensionMismatch("dual_active_set_solve: L^{-1} G^T has the wrong shape");

  // In z = L^T w the problem is min 1/2 |z|^2 - zu^T z with B^T z <= c.
  const Vector zu = factor.matrixL().solve(qp.g);
  DualResult res;
  res.lambda = Vector::Zero(m);
  Vector z = zu;
  std::vector<int> W;
  std::vector<char> in_w(static_cast<std::size_t>(m), 0);
  const double c_scale = 1.0 + (m > 0 ? qp.c.lpNorm<Eigen::Infinity>() : 0.0);
  const double feas_tol = options.tol * c_scale;

  // The entering multiplier is already positive during partial steps.
  auto refresh_z = [&] {
    z = zu;
    for (Eigen::Index j = 0; j < m; ++j)
      if (res.lambda[j] != 0.0)
        z.noalias() -= res.lambda[j] * B.col(j);
  };

  int steps = 0;
  while (true) {
    Eigen::Index p = -1;
    double worst = feas_tol;
    if (m > 0) {
      const Vector v = B.transpose() * z - qp.c;
      for (Eigen::Index r = 0; r < m; ++r)
        if (v[r] > worst && !in_w[static_cast<std::size_t>(r)]) {
          worst = v[r];
          p = r;
        }
    }
    if (p < 0)
      break;

    while (true) {
      if (++steps > options.max_iter)
        throw NonConvergence("dual active set: no convergence in " +
                                 std::to_string(options.max_iter) + " steps",
                             factor.matrixU().solve(z));
      const auto nw = static_cast<Eigen::Index>(W.size());
      Vector r(nw);
      Vector d = -B.col(p);
      if (nw > 0) {
        DenseMatrix bw(B.rows(), nw);
        for (Eigen::Index a = 0; a < nw; ++a)
          bw.col(a) = B.col(W[static_cast<std::size_t>(a)]);
        const DenseMatrix mw = bw.transpose() * bw;
        r = mw.ldlt().solve(bw.transpose() * B.col(p));
        d.noalias() += bw * r;
      }
      const double bp2 = B.col(p).squaredNorm();
      const double dd = d.squaredNorm();
      const double vp = B.col(p).dot(z) - qp.c[p];
      const double t1 = dd > 1e-14 * bp2 ? vp / dd : kInf;
      double t2 = kInf;
      Eigen::Index block = -1;
      for (Eigen::Index a = 0; a < nw; ++a)
        if (r[a] > 0.0) {
          const double t = res.lambda[W[static_cast<std::size_t>(a)]] / r[a];
          if (t < t2) {
            t2 = t;
            block = a;
          }
        }
      if (!std::isfinite(t1) && !std::isfinite(t2))
        throw ContractViolation("dual active set: constraints are inconsistent");
      const double t = std::min(t1, t2);
      for (Eigen::Index a = 0; a < nw; ++a) {
        double &lj = res.lambda[W[static_cast<std::size_t>(a)]];
        lj = std::max(0.0, lj - t * r[a]);
      }
      res.lambda[p] += t;
      if (t1 <= t2) {
        W.push_back(static_cast<int>(p));
        in_w[static_cast<std::size_t>(p)] = 1;
        refresh_z();
        break;
      }
      res.lambda[W[static_cast<std::size_t>(block)]] = 0.0;
      in_w[static_cast<std::size_t>(W[static_cast<std::size_t>(block)])] = 0;
      W.erase(W.begin() + block);
      refresh_z();
    }
  }

  res.w = factor.solve(qp.g - multiply(*qp.Gt, res.lambda));
  const Vector s = m > 0 ? Vector(qp.c - multiply(*qp.G, res.w)) : Vector();
  res.violation = m > 0 ? std::max(0.0, -s.minCoeff()) : 0.0;
  res.gap = m > 0 ? res.lambda.dot(s) : 0.0;
  res.iterations = steps;
  res.converged = true;
  return res;
}

} // namespace obstacle
