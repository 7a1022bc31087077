#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "obstacle/assembly.hpp"
#include "obstacle/errors.hpp"
#include "obstacle/experiment.hpp"
#include "obstacle/qp_solvers.hpp"
#include "obstacle/space_decomposition.hpp"
#include "support.hpp"

using namespace obstacle;
using namespace testing_support;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BoundQP identity_instance() {
  BoundQP qp;
  qp.A = to_sparse(DenseMatrix::Identity(2, 2));
  qp.g = Vector::Constant(2, 2.0);
  qp.constrained = {0, 1};
  qp.bounds = Vector(2);
  qp.bounds << 1.0, 3.0;
  return qp;
}

BoundQP random_bound_qp(int n, std::mt19937 &rng, DenseMatrix &dense) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::bernoulli_distribution coin(0.7);
  dense = random_spd(n, rng);
  BoundQP qp;
  qp.A = to_sparse(dense);
  qp.g = Vector(n);
  for (auto &x : qp.g)
    x = 2.0 * u(rng);
  std::vector<double> b;
  for (int i = 0; i < n; ++i)
    if (coin(rng)) {
      qp.constrained.push_back(i);
      b.push_back(0.5 * u(rng));
    }
  qp.bounds = Eigen::Map<Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
  return qp;
}

// min 1/2 w'Aw - g'w, G w <= c: the dense data a DualQP refers to.
struct DualInstance {
  DenseMatrix A;
  Eigen::LLT<DenseMatrix> factor;
  SparseMatrix G, Gt;
  DualQP qp;

  DualInstance(DenseMatrix a, const DenseMatrix &g, Vector lin, Vector c)
      : A(std::move(a)), factor(A), G(to_sparse(g)), Gt(to_sparse(g.transpose())) {
    qp.A = &A;
    qp.factor = &factor;
    qp.G = &G;
    qp.Gt = &Gt;
    qp.g = std::move(lin);
    qp.c = std::move(c);
  }
  DualInstance(const DualInstance &) = delete;
};

} // namespace

TEST_CASE("spd_solve examples") {
  const SparseMatrix eye = to_sparse(DenseMatrix::Identity(4, 4));
  Vector r(4);
  r << 1, -2, 3, 0.5;
  CHECK((spd_solve(eye, r, 1e-14) - r).norm() <= 1e-14);

  DenseMatrix d = DenseMatrix::Zero(5, 5);
  for (int i = 0; i < 5; ++i)
    d(i, i) = i + 1;
  const Vector x = spd_solve(to_sparse(d), Vector::Ones(5), 1e-14);
  for (int i = 0; i < 5; ++i)
    CHECK(x[i] == doctest::Approx(1.0 / (i + 1)).epsilon(1e-13));

  std::mt19937 rng(1);
  const DenseMatrix a = random_spd(50, rng);
  const SparseMatrix as = to_sparse(a);
  Vector rhs = Vector::LinSpaced(50, -1, 1);
  const Vector y = spd_solve(as, rhs, 1e-10);
  CHECK((a * y - rhs).norm() <= 1e-10 * rhs.norm());
  CHECK((spd_solve_direct(as, rhs) - a.ldlt().solve(rhs)).norm() <= 1e-10);

  CHECK_THROWS_AS(spd_solve(as, rhs, 1e-14, 2), NonConvergence);
  try {
    spd_solve(as, rhs, 1e-14, 2);
  } catch (const NonConvergence &e) {
    CHECK(e.last_iterate().size() == 50);
  }
}

TEST_CASE("pdas on the separable identity instance") {
  const auto qp = identity_instance();
  const auto r = pdas_solve(qp, Vector::Zero(2));
  CHECK(r.w[0] == doctest::Approx(1.0));
  CHECK(r.w[1] == doctest::Approx(2.0));
  CHECK(r.lambda[0] == doctest::Approx(1.0));
  CHECK(r.lambda[1] == 0.0);

  BoundQP free = qp;
  free.bounds.setConstant(kInf);
  const auto f = pdas_solve(free, Vector::Zero(2));
  CHECK(f.w[0] == doctest::Approx(2.0));
  CHECK(f.w[1] == doctest::Approx(2.0));
}

TEST_CASE("pdas on a frozen 4x4 instance") {
  // Solution from exhaustive active-set enumeration in exact arithmetic.
  DenseMatrix a(4, 4);
  a << 4, 1, 0, 0.5, 1, 3, -1, 0, 0, -1, 5, 1, 0.5, 0, 1, 2;
  BoundQP qp;
  qp.A = to_sparse(a);
  qp.g = Vector(4);
  qp.g << 3, -1, 4, 2;
  qp.constrained = {0, 2, 3};
  qp.bounds = Vector(3);
  qp.bounds << 0.25, 0.5, 0.1;
  const auto r = pdas_solve(qp, Vector::Zero(4));
  CHECK(r.w[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(r.w[1] == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(r.w[2] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r.w[3] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(qp.objective(r.w) == doctest::Approx(-2.22125).epsilon(1e-14));
  const auto f = fbs_solve(qp, Vector::Zero(4));
  CHECK(std::sqrt((f.w - r.w).dot(a * (f.w - r.w))) <= 1e-8);
}

TEST_CASE("pdas matches exhaustive enumeration on random instances") {
  std::mt19937 rng(2024);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 6;
    DenseMatrix dense;
    const auto qp = random_bound_qp(n, rng, dense);
    const Vector oracle = enumerate_bound_qp(dense, qp.g, qp.constrained, qp.bounds);
    REQUIRE(oracle.size() == n);
    const auto r = pdas_solve(qp, Vector::Zero(n));
    CHECK(a_norm(dense, r.w - oracle) <= 1e-10);
    for (Eigen::Index k = 0; k < r.lambda.size(); ++k) {
      CHECK(r.lambda[k] >= 0.0);
      CHECK(std::abs(r.lambda[k] * (r.w[qp.constrained[k]] - qp.bounds[k])) <= 1e-10);
    }
  }
}

TEST_CASE("pdas and fbs agree on larger instances") {
  std::mt19937 rng(77);
  for (int n : {20, 80, 200}) {
    DenseMatrix dense;
    const auto qp = random_bound_qp(n, rng, dense);
    const auto p = pdas_solve(qp, Vector::Zero(n));
    const auto f = fbs_solve(qp, Vector::Zero(n), {.tol = 1e-14});
    const double scale = std::max(1.0, a_norm(dense, p.w));
    CHECK(a_norm(dense, p.w - f.w) <= 1e-8 * scale);
    CHECK(f.lipschitz >= dense.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff());
  }
}

TEST_CASE("fbs keeps iterates feasible") {
  std::mt19937 rng(5);
  DenseMatrix dense;
  const auto qp = random_bound_qp(12, rng, dense);
  // From a feasible start every iterate is a projection, hence feasible;
  // checking the endpoints of truncated runs covers the whole trajectory.
  for (int cap : {1, 2, 5, 20}) {
    try {
      const auto r = fbs_solve(qp, Vector::Zero(12), {.tol = 0.0, .max_iter = cap});
      CHECK(qp.max_violation(r.w) <= 0.0);
    } catch (const NonConvergence &e) {
      CHECK(qp.max_violation(e.last_iterate()) <= 0.0);
    }
  }
  // An infeasible start is projected first.
  const auto r = fbs_solve(qp, Vector::Constant(12, 5.0));
  CHECK(qp.max_violation(r.w) <= 1e-14);
}

TEST_CASE("pdas solver reuses factorizations and warm starts") {
  std::mt19937 rng(8);
  DenseMatrix dense;
  const auto qp = random_bound_qp(30, rng, dense);
  PdasSolver solver(qp.A);
  const auto first = solver.solve(qp.g, qp.constrained, qp.bounds, Vector::Zero(30));
  const auto again =
      solver.solve(qp.g, qp.constrained, qp.bounds, first.w, &first.lambda);
  CHECK(again.factorizations == 0);
  CHECK(again.iterations <= 1);
  CHECK((again.w - first.w).norm() <= 1e-12);
}

TEST_CASE("bound qp validation") {
  auto qp = identity_instance();
  qp.bounds = Vector::Zero(1);
  CHECK_THROWS_AS(qp.validate(), DimensionMismatch);
  auto bad = identity_instance();
  bad.constrained = {1, 0};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("dual solvers: inactive constraints") {
  DenseMatrix a(2, 2);
  a << 2, 0.5, 0.5, 1;
  DenseMatrix g(2, 2);
  g << 1, 0, 0, 1;
  Vector lin(2);
  lin << 1, 1;
  DualInstance inst(a, g, lin, Vector::Constant(2, 100.0));
  const Vector free = a.ldlt().solve(lin);
  for (bool exact : {true, false}) {
    const auto r = exact ? dual_active_set_solve(inst.qp) : dual_coarse_solve(inst.qp);
    CHECK(r.converged);
    CHECK(r.lambda.isZero());
    CHECK((r.w - free).norm() <= 1e-12);
  }
}

TEST_CASE("dual solvers on a frozen 3x3 instance with 5 constraints") {
  DenseMatrix a(3, 3);
  a << 2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 3;
  DenseMatrix g(5, 3);
  g << 1, 1, 0, 0, 1, -1, 1, 0, 1, -1, 2, 0, 0.5, 0.5, 0.5;
  Vector lin(3), c(5);
  lin << 1, 2, -1;
  c << 0.5, 1, 0.3, 1.2, 0.4;
  DualInstance inst(a, g, lin, c);
  // Enumeration oracle (exact arithmetic): rows 0 and 3 active.
  Vector w(3), lam(2);
  w << -0.06666666666666671, 0.5666666666666667, -0.37111111111111117;
  lam << 1.0802962962962965, 0.23029629629629636;
  for (bool exact : {true, false}) {
    CAPTURE(exact);
    const auto r = exact ? dual_active_set_solve(inst.qp, {.tol = 1e-13})
                         : dual_coarse_solve(inst.qp, {.tol = 1e-13});
    CHECK(a_norm(a, r.w - w) <= 1e-9);
    CHECK(r.lambda[0] == doctest::Approx(lam[0]).epsilon(1e-6));
    CHECK(r.lambda[3] == doctest::Approx(lam[1]).epsilon(1e-6));
    CHECK(std::abs(r.lambda[1]) + std::abs(r.lambda[2]) + std::abs(r.lambda[4]) <= 1e-8);
    CHECK(inst.qp.primal_objective(r.w) == doctest::Approx(-1.1271407407407408).epsilon(1e-10));
  }
}

TEST_CASE("dual solvers match enumeration on random instances") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 30; ++t) {
    const int n = 2 + t % 4;
    const int m = 4 + t % 9;
    const DenseMatrix a = random_spd(n, rng);
    DenseMatrix g(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        g(i, j) = u(rng);
    Vector lin(n), c(m);
    for (auto &x : lin)
      x = 3.0 * u(rng);
    for (auto &x : c)
      x = 0.5 * (u(rng) + 1.0);
    DualInstance inst(a, g, lin, c);
    const Vector oracle = enumerate_general_qp(a, lin, g, c);
    REQUIRE(oracle.size() == n);
    for (bool exact : {true, false}) {
      CAPTURE(exact);
      const auto r = exact ? dual_active_set_solve(inst.qp, {.tol = 1e-12})
                           : dual_coarse_solve(inst.qp, {.tol = 1e-12});
      CHECK(a_norm(a, r.w - oracle) <= 1e-8);
      CHECK(r.violation <= 1e-10);
      CHECK(std::abs(r.lambda.dot(c - g * r.w)) <= 1e-8 * (1 + c.norm()));
      CHECK(r.lambda.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("dual fbs history shows weak duality") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  const DenseMatrix a = random_spd(4, rng);
  DenseMatrix g(8, 4);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 4; ++j)
      g(i, j) = u(rng);
  Vector lin = Vector::Constant(4, 2.0);
  DualInstance inst(a, g, lin, Vector::Constant(8, 0.1));
  const auto r = dual_coarse_solve(inst.qp, {.tol = 1e-12, .record_history = true});
  REQUIRE(!r.history.empty());
  for (const auto &[primal, neg_dual] : r.history)
    CHECK(primal >= neg_dual - 1e-12 * (1 + std::abs(primal)));
}

TEST_CASE("dual recovery on a real coarse space") {
  // Smallest coarse space: one interior vertex of a 2x2 coarse mesh.
  const auto p = assemble(model_problem(ProblemKind::plate), Grid(8));
  const auto dd = build_decomposition(8, 4, 1);
  const auto cs = build_coarse_space(dd, p);
  REQUIRE(cs.size() == 3);
  Vector lin = cs.Pt * p.f;
  Vector c(cs.constraint_rows.size());
  for (std::size_t r = 0; r < cs.constraint_rows.size(); ++r)
    c[r] = 1e-3 * p.bounds[cs.constraint_rows[r]];
  DualQP qp;
  qp.A = &cs.A0;
  qp.factor = &cs.A0_factor;
  qp.G = &cs.G;
  qp.Gt = &cs.Gt;
  qp.Linv_Gt = &cs.Linv_Gt;
  qp.g = lin;
  qp.c = c;
  const Vector oracle = enumerate_general_qp(cs.A0, lin, DenseMatrix(cs.G), c);
  REQUIRE(oracle.size() == 3);
  const auto r = dual_active_set_solve(qp, {.tol = 1e-12});
  const double scale = std::max(1.0, a_norm(cs.A0, oracle));
  CHECK(a_norm(cs.A0, r.w - oracle) <= 1e-8 * scale);
  CHECK(r.lambda.dot(c - cs.G * r.w) <= 1e-8 * (1 + c.norm()));
}

TEST_CASE("feasibility scale") {
  DenseMatrix g(2, 2);
  g << 1, 0, 0, 1;
  const SparseMatrix gs = to_sparse(g);
  Vector w(2), c(2);
  w << 2, 0.5;
  c << 1, 1;
  CHECK(feasibility_scale(gs, w, c) == doctest::Approx(0.5));
  w << 0.5, 0.5;
  CHECK(feasibility_scale(gs, w, c) == 1.0);
  c << 0, 1;
  w << 1e-16, 0.5;
  CHECK(feasibility_scale(gs, w, c) == 0.0);
  CHECK(feasibility_scale(gs, w, c, 1e-14) == 1.0);
}
