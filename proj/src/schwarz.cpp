#include "obstacle/schwarz.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "obstacle/errors.hpp"

namespace obstacle {

namespace {

void require_feasible(const DiscreteProblem &p, const Vector &u, const char *who) {
  if (u.size() != p.num_free())
    throw DimensionMismatch(std::string(who) + ": iterate has the wrong size");
  if (!feasible(p, u))
    throw ContractViolation(std::string(who) + ": iterate violates the obstacle");
}

Vector residual(const DiscreteProblem &p, const Vector &u) { return p.f - multiply(p.A, u); }

Vector slack(const DiscreteProblem &p, const Vector &u) {
  return (p.bounds - extract_values(p, u)).cwiseMax(0.0);
}

BoundQP make_local(const LocalSpace &space, const SparseMatrix &a_k, const Vector &r,
                   const Vector &s) {
  BoundQP qp;
  qp.A = a_k;
  qp.g = space.restrict(r);
  qp.constrained = space.value_local;
  qp.bounds.resize(static_cast<Eigen::Index>(space.value_row.size()));
  for (std::size_t l = 0; l < space.value_row.size(); ++l)
    qp.bounds[static_cast<Eigen::Index>(l)] = s[space.value_row[l]];
  return qp;
}

struct LocalState {
  PdasSolver pdas;
  SparseMatrix a;
  Vector w;
  Vector lambda;
  bool has_lambda = false;
};

} // namespace

BoundQP local_subproblem(const DiscreteProblem &p, const Vector &u, const LocalSpace &space,
                         const SparseMatrix &a_k) {
  require_feasible(p, u, "local_subproblem");
  if (a_k.rows() != space.size())
    throw DimensionMismatch("local_subproblem: local matrix does not match the space");
  return make_local(space, a_k, residual(p, u), slack(p, u));
}

DualQP coarse_subproblem(const DiscreteProblem &p, const Vector &u, const CoarseSpace &coarse) {
  require_feasible(p, u, "coarse_subproblem");
  DualQP qp;
  qp.A = &coarse.A0;
  qp.factor = &coarse.A0_factor;
  qp.G = &coarse.G;
  qp.Gt = &coarse.Gt;
  qp.Linv_Gt = &coarse.Linv_Gt;
  qp.g = coarse.Pt * residual(p, u);
  const Vector s = slack(p, u);
  qp.c.resize(static_cast<Eigen::Index>(coarse.constraint_rows.size()));
  for (std::size_t r = 0; r < coarse.constraint_rows.size(); ++r)
    qp.c[static_cast<Eigen::Index>(r)] = s[coarse.constraint_rows[r]];
  return qp;
}

ConvergenceRecord schwarz_solve(const DiscreteProblem &p, const DomainDecomposition &dd,
                                const std::vector<LocalSpace> &spaces, const CoarseSpace *coarse,
                                const SchwarzConfig &config, const Vector *u0) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  if (config.levels != 1 && config.levels != 2)
    throw ConfigError("levels must be 1 or 2");
  if (config.levels == 2 && !coarse)
    throw ConfigError("a two-level solve needs a coarse space");
  if (!(config.tau > 0.0))
    throw ConfigError("tau must be positive");
  if (config.max_outer < 0 || config.threads < 1)
    throw ConfigError("max_outer must be >= 0 and threads >= 1");
  if (static_cast<int>(spaces.size()) != dd.num_subdomains())
    throw DimensionMismatch("one local space per subdomain expected");

  ConvergenceRecord rec;
  const int nc = coloring_number(dd, config.levels);
  if (config.tau > 1.0 / nc + 1e-15)
    rec.warnings.push_back("tau = " + std::to_string(config.tau) + " exceeds 1/" +
                           std::to_string(nc) + "; feasibility and monotonicity are not guaranteed");

  Vector u = u0 ? *u0 : Vector(Vector::Zero(p.num_free()));
  require_feasible(p, u, "schwarz_solve");

  const int nsub = static_cast<int>(spaces.size());
  std::vector<LocalState> states(static_cast<std::size_t>(nsub));
  for (int k = 0; k < nsub; ++k) {
    auto &st = states[static_cast<std::size_t>(k)];
    st.a = local_matrix(p, spaces[static_cast<std::size_t>(k)]);
    if (config.local_solver == LocalSolver::pdas)
      st.pdas.set_matrix(st.a);
    st.w = Vector::Zero(spaces[static_cast<std::size_t>(k)].size());
  }
  Vector coarse_lambda;
  bool has_coarse_lambda = false;

  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };
  double energy_now = energy(p, u);
  auto record = [&](int iter, double prev_energy) {
    IterationRecord r;
    r.iter = iter;
    r.energy = energy_now;
    r.max_violation = max_violation(p, u);
    r.feasible = feasible(p, u);
    r.elapsed_ms = elapsed();
    if (config.reference_energy) {
      const double ref = *config.reference_energy;
      r.rel_energy_error = (energy_now - ref) / std::abs(ref);
    } else if (iter == 0) {
      r.rel_energy_error = std::numeric_limits<double>::quiet_NaN();
    } else {
      r.rel_energy_error = (prev_energy - energy_now) / std::abs(energy_now);
    }
    rec.iterations.push_back(r);
    if (config.on_iteration)
      config.on_iteration(r);
    return r;
  };
  record(0, energy_now);
  if (config.reference_energy && rec.iterations.back().rel_energy_error < config.tol_rel_energy) {
    rec.converged = true;
    rec.u = u;
    return rec;
  }

  std::vector<Vector> corrections(static_cast<std::size_t>(nsub));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(nsub));

  for (int iter = 1; iter <= config.max_outer; ++iter) {
    const Vector r = residual(p, u);
    const Vector s = slack(p, u);

    auto solve_local = [&](int k) {
      try {
        const auto &space = spaces[static_cast<std::size_t>(k)];
        auto &st = states[static_cast<std::size_t>(k)];
        const BoundQP qp = make_local(space, st.a, r, s);
        // A warm start must respect the new bounds.
        Vector w0 = st.w;
        for (std::size_t l = 0; l < qp.constrained.size(); ++l)
          w0[qp.constrained[l]] = std::min(w0[qp.constrained[l]], qp.bounds[static_cast<Eigen::Index>(l)]);
        if (config.local_solver == LocalSolver::pdas) {
          PdasOptions opt;
          opt.tol = config.local_tol;
          PdasResult res = st.pdas.solve(qp.g, qp.constrained, qp.bounds, w0,
                                         st.has_lambda ? &st.lambda : nullptr, opt);
          st.w = std::move(res.w);
          st.lambda = std::move(res.lambda);
          st.has_lambda = true;
        } else {
          FbsOptions opt;
          opt.tol = config.local_tol;
          st.w = fbs_solve(qp, w0, opt).w;
        }
        corrections[static_cast<std::size_t>(k)] = st.w;
      } catch (...) {
        failures[static_cast<std::size_t>(k)] = std::current_exception();
      }
    };

    const int nthreads = std::min(config.threads, std::max(nsub, 1));
    if (nthreads <= 1) {
      for (int k = 0; k < nsub; ++k)
        solve_local(k);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(nthreads));
      for (int t = 0; t < nthreads; ++t)
        pool.emplace_back([&, t] {
          for (int k = t; k < nsub; k += nthreads)
            solve_local(k);
        });
      for (auto &th : pool)
        th.join();
    }

    // Coarse correction, computed on the calling thread.
    Vector coarse_step;
    if (config.levels == 2) {
      try {
        DualQP qp = coarse_subproblem(p, u, *coarse);
        DualOptions opt;
        opt.tol = config.coarse_tol;
        opt.max_iter = config.coarse_max_iter;
        opt.allow_inexact = true;
        DualResult res;
        if (config.coarse_solver == CoarseSolver::dual_active_set) {
          opt.tol = 1e-12;
          opt.max_iter = 100 * coarse->size() + 1000;
          res = dual_active_set_solve(qp, opt);
        } else {
          res = dual_coarse_solve(qp, opt, has_coarse_lambda ? &coarse_lambda : nullptr);
        }
        coarse_lambda = res.lambda;
        has_coarse_lambda = true;
        // Pull an inexact dual recovery back into the feasible set, then cap the
        // step so the coarse objective cannot increase.
        double t = 1.0;
        if (qp.c.size() > 0) {
          const double rounding = 1e-14 * (1.0 + qp.c.lpNorm<Eigen::Infinity>() +
                                           multiply(coarse->G, res.w).lpNorm<Eigen::Infinity>());
          t = feasibility_scale(coarse->G, res.w, qp.c, rounding);
        }
        const double curv = res.w.dot(coarse->A0 * res.w);
        if (curv > 0.0)
          t = std::min(t, std::max(0.0, qp.g.dot(res.w) / curv));
        else
          t = 0.0;
        coarse_step = coarse->P * (t * res.w);
      } catch (const Error &e) {
        throw NonConvergence("outer iteration " + std::to_string(iter) +
                                 ", coarse space: " + e.what(),
                             u);
      }
    }

    for (int k = 0; k < nsub; ++k)
      if (failures[static_cast<std::size_t>(k)]) {
        try {
          std::rethrow_exception(failures[static_cast<std::size_t>(k)]);
        } catch (const Error &e) {
          throw NonConvergence("outer iteration " + std::to_string(iter) + ", subdomain " +
                                   std::to_string(k) + ": " + e.what(),
                               u);
        }
      }

    // Ordered reduction: coarse first, then subdomains by index.
    Vector total = Vector::Zero(p.num_free());
    if (config.levels == 2)
      total += coarse_step;
    for (int k = 0; k < nsub; ++k)
      spaces[static_cast<std::size_t>(k)].add_extension(1.0, corrections[static_cast<std::size_t>(k)], total);
    u += config.tau * total;

    const double prev = energy_now;
    energy_now = energy(p, u);
    const IterationRecord r_now = record(iter, prev);
    if (r_now.rel_energy_error < config.tol_rel_energy) {
      rec.converged = true;
      break;
    }
  }
  rec.u = u;
  return rec;
}

Vector solve_reference(const DiscreteProblem &p, double tol) {
  PdasSolver solver(p.A);
  PdasOptions opt;
  opt.tol = tol;
  opt.max_iter = 1000;
  const Vector w0 = Vector::Zero(p.num_free());
  // J is a selection of value DOFs, so the obstacle is a pointwise bound.
  return solver.solve(p.f, p.value_dof, p.bounds, w0, nullptr, opt).w;
}

} // namespace obstacle
