#include <doctest.h>

#include <cmath>
#include <random>

#include "coag/analytic.hpp"
#include "coag/pgf.hpp"
#include "oracles.hpp"

using namespace coag;
using coag::testing::bipartite;
using coag::testing::single_component;

TEST_CASE("offspring_pgf examples") {
  CHECK(offspring_pgf(single_component(), 0.5, 0, Vector::Ones(1)) == 1.0);
  CHECK(offspring_pgf(single_component(), 0.5, 0, Vector::Zero(1)) == doctest::Approx(std::exp(-0.5)));
  Vector s(2);
  s << 0.2, 0.6;
  CHECK(offspring_pgf(bipartite(), 1.0, 0, s) == doctest::Approx(std::exp(0.5 * (0.6 - 1.0))));
  CHECK(offspring_pgf(bipartite(), 1.0, 1, s) == doctest::Approx(std::exp(0.5 * (0.2 - 1.0))));
  s << 1.1, 0.5;
  CHECK_THROWS_AS(offspring_pgf(bipartite(), 1.0, 0, s), Error);
}

TEST_CASE("fixed point: subcritical extinction is certain") {
  auto r = solve_fixed_point(coag::testing::three_component(), 0.3, Vector::Zero(3));
  for (int i = 0; i < 3; ++i) CHECK(r.g[i] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fixed point: supercritical extinction probability") {
  const double xi = coag::testing::extinction_bisection(1.5);
  CHECK(xi == doctest::Approx(0.417).epsilon(1e-3));
  FixedPointOptions opt;
  opt.newton = true;
  auto r = solve_fixed_point(single_component(), 1.5, Vector::Zero(1), opt);
  CHECK(std::abs(r.g[0] - xi) < 1e-10);
}

TEST_CASE("fixed point: matches power-series expansion of the progeny law") {
  for (auto spec : {single_component(), bipartite(), coag::testing::three_component()}) {
    const double t = 0.5 * critical_time(spec);
    const int m = spec.m();
    Vector x = Vector::Constant(m, std::log(2.0));
    auto table = series_oracle(spec, t, m == 3 ? 30 : 60);
    Vector want = Vector::Zero(m);
    for (const auto& [key, prob] : table) want[key.first] += prob * std::pow(0.5, key.second.total());
    FixedPointOptions opt;
    opt.newton = true;
    auto r = solve_fixed_point(spec, t, x, opt);
    for (int i = 0; i < m; ++i) CHECK(std::abs(r.g[i] - want[i]) < 1e-8);
  }
}

TEST_CASE("fixed point: iterates increase monotonically from zero") {
  std::vector<Vector> iterates;
  FixedPointOptions opt;
  opt.on_iterate = [&](const Vector& g) { iterates.push_back(g); };
  auto spec = coag::testing::three_component();
  solve_fixed_point(spec, 0.8 * critical_time(spec), Vector::Constant(3, 0.1), opt);
  REQUIRE(iterates.size() > 2);
  for (std::size_t i = 1; i < iterates.size(); ++i)
    CHECK((iterates[i].array() >= iterates[i - 1].array() - 1e-15).all());
}

TEST_CASE("fixed point: extinction brackets the critical time") {
  std::mt19937_64 rng(21);
  for (int m = 1; m <= 4; ++m) {
    auto inst = coag::testing::random_instance(rng, m);
    ModelSpec spec(inst.A, inst.p);
    if (!spec.irreducible()) continue;
    const double tc = critical_time(spec);
    FixedPointOptions opt;
    opt.newton = true;
    auto below = solve_fixed_point(spec, 0.99 * tc, Vector::Zero(m), opt);
    auto above = solve_fixed_point(spec, 1.01 * tc, Vector::Zero(m), opt);
    CHECK((below.g.array() > 1.0 - 1e-6).all());
    CHECK((above.g.array() <= 1.0 - 1e-3).any());
  }
}

TEST_CASE("fixed point: iteration budget exhaustion is reported") {
  FixedPointOptions opt;
  opt.max_iter = 3;
  try {
    solve_fixed_point(single_component(), 0.9, Vector::Zero(1), opt);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
  }
  CHECK_THROWS_AS(solve_fixed_point(single_component(), -0.1, Vector::Zero(1)), Error);
}

TEST_CASE("gelation_time examples") {
  CHECK(critical_time(single_component()) == 1.0);
  CHECK(critical_time(bipartite()) == 2.0);
  auto rep = gelation_time(ModelSpec(Matrix::Identity(2, 2), Vector::Constant(2, 0.5)));
  CHECK(rep.reducible);
  CHECK(rep.t_c == 2.0);
  REQUIRE(rep.blocks.size() == 2);

  Matrix A(2, 2);
  A << 1, 0, 0, 0;
  auto rep2 = gelation_time(ModelSpec(A, Vector::Constant(2, 0.5)));
  CHECK(rep2.t_c == 2.0);
  CHECK(std::isinf(rep2.blocks[1].t_c));

  A << 0, 1, 1, 0;
  Vector p(2);
  p << 1.0, 0.0;
  try {
    gelation_time(ModelSpec(A, p));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::hypothesis);
  }
}

TEST_CASE("gelation_time agrees with the spectral radius of A P") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = coag::testing::random_instance(rng, 1 + trial % 5);
    ModelSpec spec(inst.A, inst.p);
    Matrix AP = spec.A() * spec.p().asDiagonal();
    const double rho = AP.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(critical_time(spec) == doctest::Approx(1.0 / rho).epsilon(1e-10));
  }
}

TEST_CASE("gelation_time scales inversely with the kernel") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = coag::testing::random_instance(rng, 3);
    const double c = 0.1 + 5.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const double base = critical_time(ModelSpec(inst.A, inst.p));
    CHECK(critical_time(ModelSpec(c * inst.A, inst.p)) == doctest::Approx(base / c).epsilon(1e-12));
  }
}

TEST_CASE("pde residual vanishes up to finite-difference error") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int m = 1 + trial % 3;
    auto inst = coag::testing::random_instance(rng, m);
    ModelSpec spec(inst.A, inst.p);
    const double t = (0.1 + 0.8 * u(rng)) * critical_time(spec);
    Vector x = Vector::NullaryExpr(m, [&] { return 0.05 + 2.0 * u(rng); });
    CHECK(pde_residual(spec, t, x, 1e-4).cwiseAbs().maxCoeff() < 1e-6);

    const double r1 = pde_residual(spec, t, x, 1e-2).cwiseAbs().maxCoeff();
    const double r2 = pde_residual(spec, t, x, 5e-3).cwiseAbs().maxCoeff();
    MESSAGE("residual ratio " << r1 / r2);
    CHECK(r1 / r2 >= 3.0);
    CHECK(r1 / r2 <= 5.0);
  }
}

TEST_CASE("at t = 0 the transform is p e^{-x}") {
  auto spec = coag::testing::three_component();
  Vector x(3);
  x << 0.3, 1.0, 2.0;
  auto r = solve_fixed_point(spec, 0.0, x);
  for (int i = 0; i < 3; ++i) CHECK(spec.p()[i] * r.g[i] == doctest::Approx(spec.p()[i] * std::exp(-x[i])));
}
