#include <doctest.h>

#include <cmath>

#include <Eigen/SparseCholesky>

#include "obstacle/assembly.hpp"
#include "obstacle/errors.hpp"
#include "obstacle/experiment.hpp"
#include "obstacle/schwarz.hpp"

using namespace obstacle;

namespace {

struct Setup {
  DiscreteProblem p;
  DomainDecomposition dd;
  std::vector<LocalSpace> spaces;
  CoarseSpace coarse;

  Setup(const ProblemSpec &spec, int n, int m, int d)
      : p(assemble(spec, Grid(n))), dd(build_decomposition(n, m, d)),
        spaces(build_local_spaces(dd, p)) {
    if (!dd.interior_coarse_vertices().empty())
      coarse = build_coarse_space(dd, p);
  }
};

ProblemSpec high_obstacle(ProblemKind kind) {
  ProblemSpec s = model_problem(kind);
  s.obstacle = [](double, double) { return FieldSample{1e6, 0, 0, 0}; };
  return s;
}

void check_monotone_feasible(const ConvergenceRecord &rec) {
  for (std::size_t i = 0; i < rec.iterations.size(); ++i) {
    const auto &r = rec.iterations[i];
    CHECK(r.feasible);
    if (i > 0) {
      const double prev = rec.iterations[i - 1].energy;
      CHECK(r.energy <= prev + 1e-12 * std::abs(prev));
    }
  }
}

} // namespace

TEST_CASE("local subproblem data") {
  const Setup s(model_problem(ProblemKind::plate), 16, 8, 2);
  const Vector u = Vector::Zero(s.p.num_free());
  const auto &space = s.spaces[0];
  const SparseMatrix ak = local_matrix(s.p, space);
  const BoundQP qp = local_subproblem(s.p, u, space, ak);
  REQUIRE(qp.constrained.size() == space.value_local.size());
  for (std::size_t l = 0; l < qp.constrained.size(); ++l)
    CHECK(qp.bounds[static_cast<Eigen::Index>(l)] == s.p.bounds[space.value_row[l]]);
  CHECK(qp.max_violation(Vector::Zero(space.size())) <= 0.0);

  // The local objective is the energy change of the extended correction.
  const auto r = pdas_solve(qp, Vector::Zero(space.size()));
  Vector moved = u;
  space.add_extension(1.0, r.w, moved);
  CHECK(energy(s.p, moved) - energy(s.p, u) == doctest::Approx(qp.objective(r.w)).epsilon(1e-10));
  CHECK(energy(s.p, moved) <= energy(s.p, u));
  CHECK(feasible(s.p, moved));

  const Vector bad = Vector::Constant(s.p.num_free(), 10.0);
  CHECK_THROWS_AS(local_subproblem(s.p, bad, space, ak), ContractViolation);
  CHECK_THROWS_AS(coarse_subproblem(s.p, bad, s.coarse), ContractViolation);
}

TEST_CASE("coarse subproblem data") {
  const Setup s(model_problem(ProblemKind::plate), 16, 8, 2);
  Vector u = Vector::Zero(s.p.num_free());
  const DualQP qp = coarse_subproblem(s.p, u, s.coarse);
  CHECK(qp.c.minCoeff() >= 0.0);
  CHECK((qp.g - s.coarse.Pt * s.p.f).norm() <= 1e-12 * qp.g.norm());
  const auto r = dual_active_set_solve(qp);
  const Vector moved = u + s.coarse.P * r.w;
  CHECK(energy(s.p, moved) - energy(s.p, u) ==
        doctest::Approx(qp.primal_objective(r.w)).epsilon(1e-10));
  CHECK(max_violation(s.p, moved) <= 1e-12);
}

TEST_CASE("two-level iteration without active obstacle converges to the linear solve") {
  const Setup s(high_obstacle(ProblemKind::plate), 16, 8, 2);
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(s.p.A);
  const Vector exact = llt.solve(s.p.f);
  SchwarzConfig cfg;
  cfg.levels = 2;
  cfg.max_outer = 2000;
  cfg.reference_energy = -0.5 * s.p.f.dot(exact);
  cfg.tol_rel_energy = 1e-14;
  const auto rec = schwarz_solve(s.p, s.dd, s.spaces, &s.coarse, cfg);
  CHECK(rec.converged);
  CHECK(energy_norm(s.p.A, rec.u - exact) <= 1e-6 * energy_norm(s.p.A, exact));
}

TEST_CASE("plate iterates stay feasible and energies decrease") {
  const Setup s(model_problem(ProblemKind::plate), 16, 8, 2);
  for (int levels : {1, 2}) {
    SchwarzConfig cfg;
    cfg.levels = levels;
    cfg.max_outer = 60;
    cfg.tol_rel_energy = 0.0;
    const auto rec = schwarz_solve(s.p, s.dd, s.spaces, &s.coarse, cfg);
    CHECK(rec.warnings.empty());
    CHECK(rec.outer_iterations() == 60);
    check_monotone_feasible(rec);
    CHECK(std::isnan(rec.iterations[0].rel_energy_error));
  }
}

TEST_CASE("control iterates stay feasible and energies decrease") {
  const Setup s(model_problem(ProblemKind::control), 16, 4, 1);
  SchwarzConfig cfg;
  cfg.levels = 2;
  cfg.max_outer = 40;
  cfg.tol_rel_energy = 0.0;
  check_monotone_feasible(schwarz_solve(s.p, s.dd, s.spaces, &s.coarse, cfg));
}

TEST_CASE("a single subdomain with tau = 1 solves in one step") {
  const Setup s(model_problem(ProblemKind::plate), 8, 8, 1);
  REQUIRE(s.spaces.size() == 1u);
  CHECK(s.spaces[0].size() == s.p.num_free());
  const Vector ref = solve_reference(s.p);
  SchwarzConfig cfg;
  cfg.tau = 1.0;
  cfg.reference_energy = energy(s.p, ref);
  cfg.tol_rel_energy = 1e-12;
  const auto rec = schwarz_solve(s.p, s.dd, s.spaces, nullptr, cfg);
  CHECK(rec.converged);
  CHECK(rec.outer_iterations() == 1);
  CHECK(energy_norm(s.p.A, rec.u - ref) <= 1e-8 * energy_norm(s.p.A, ref));
}

TEST_CASE("threads do not change the iterates") {
  const Setup s(model_problem(ProblemKind::plate), 32, 8, 2);
  SchwarzConfig cfg;
  cfg.levels = 2;
  cfg.max_outer = 8;
  cfg.tol_rel_energy = 0.0;
  const auto one = schwarz_solve(s.p, s.dd, s.spaces, &s.coarse, cfg);
  cfg.threads = 3;
  const auto three = schwarz_solve(s.p, s.dd, s.spaces, &s.coarse, cfg);
  REQUIRE(one.iterations.size() == three.iterations.size());
  for (std::size_t i = 0; i < one.iterations.size(); ++i)
    CHECK(one.iterations[i].energy == three.iterations[i].energy);
  CHECK((one.u - three.u).norm() == 0.0);
}

TEST_CASE("fbs local solver tracks pdas") {
  // Local condition numbers are ~1e6 and the increment test stops projected
  // steps far from the local minimizer, so only rough agreement is expected.
  const Setup s(model_problem(ProblemKind::plate), 8, 4, 1);
  SchwarzConfig cfg;
  cfg.levels = 1;
  cfg.max_outer = 3;
  cfg.tol_rel_energy = 0.0;
  const auto a = schwarz_solve(s.p, s.dd, s.spaces, nullptr, cfg);
  cfg.local_solver = LocalSolver::fbs;
  cfg.local_tol = 1e-7;
  const auto b = schwarz_solve(s.p, s.dd, s.spaces, nullptr, cfg);
  check_monotone_feasible(b);
  const double fa = a.iterations.back().energy, fb = b.iterations.back().energy;
  CHECK(std::abs(fa - fb) <= 0.05 * std::abs(fa));
}

TEST_CASE("configuration errors and warnings") {
  const Setup s(model_problem(ProblemKind::plate), 16, 8, 2);
  SchwarzConfig cfg;
  cfg.levels = 2;
  CHECK_THROWS_AS(schwarz_solve(s.p, s.dd, s.spaces, nullptr, cfg), ConfigError);
  cfg.levels = 3;
  CHECK_THROWS_AS(schwarz_solve(s.p, s.dd, s.spaces, &s.coarse, cfg), ConfigError);
  cfg.levels = 1;
  cfg.tau = 0.0;
  CHECK_THROWS_AS(schwarz_solve(s.p, s.dd, s.spaces, nullptr, cfg), ConfigError);
  cfg.tau = 0.5;
  cfg.max_outer = 1;
  const auto rec = schwarz_solve(s.p, s.dd, s.spaces, nullptr, cfg);
  CHECK(rec.warnings.size() == 1u);
  const Vector bad = Vector::Constant(s.p.num_free(), 10.0);
  CHECK_THROWS_AS(schwarz_solve(s.p, s.dd, s.spaces, nullptr, cfg, &bad), ContractViolation);
}

TEST_CASE("reference solution satisfies the KKT conditions") {
  const auto p = assemble(model_problem(ProblemKind::plate), Grid(8));
  const Vector u = solve_reference(p);
  CHECK(feasible(p, u));
  // Multipliers live on the value DOFs: lambda = f - A u.
  const Vector res = p.f - p.A * u;
  const double scale = p.f.norm();
  std::vector<char> is_value(p.num_free(), 0);
  for (int r = 0; r < p.num_constraints(); ++r) {
    is_value[p.value_dof[r]] = 1;
    const double lam = res[p.value_dof[r]];
    CHECK(lam >= -1e-8 * scale);
    CHECK(std::abs(lam * (u[p.value_dof[r]] - p.bounds[r])) <= 1e-8 * scale);
  }
  for (int i = 0; i < p.num_free(); ++i)
    if (!is_value[i])
      CHECK(std::abs(res[i]) <= 1e-8 * scale);
}

TEST_CASE("reference solution of an inactive control problem is the linear solve") {
  const auto p = assemble(high_obstacle(ProblemKind::control), Grid(8));
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(p.A);
  const Vector exact = llt.solve(p.f);
  CHECK((solve_reference(p) - exact).norm() <= 1e-8 * exact.norm());
}
