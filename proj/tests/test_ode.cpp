#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "coag/ode.hpp"
#include "coag/pgf.hpp"
#include "oracles.hpp"

using namespace coag;
using coag::testing::bipartite;
using coag::testing::single_component;

namespace {

long binomial(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double max_borel_error(const Snapshot& s, double t, int n_max) {
  double err = 0.0;
  for (int n = 1; n <= n_max; ++n) err = std::max(err, std::abs(s.dist.at(Composition({n})) - borel_oracle(t, n)));
  return err;
}

}  // namespace

TEST_CASE("StateSpace enumerates all compositions up to n_max") {
  for (int m = 1; m <= 4; ++m)
    for (int N : {1, 3, 7}) {
      StateSpace s(m, {N});
      CHECK(static_cast<long>(s.size()) == binomial(N + m, m) - 1);
      for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.index(s.composition(i)) == i);
      CHECK(s.count_up_to(N) == s.size());
    }
  StateSpace s(2, {3});
  CHECK_FALSE(s.index(Composition({2, 2})).has_value());
  CHECK(s.composition(s.sum_index(*s.index(Composition({1, 0})), *s.index(Composition({0, 2})))) ==
        Composition({1, 2}));
}

TEST_CASE("derivative: monodisperse examples") {
  auto mono1 = SizeDistribution::monodisperse(single_component());
  auto d1 = derivative(single_component(), mono1, {2}, OdeForm::reduced);
  CHECK(d1.at(Composition({1})) == doctest::Approx(-1.0));
  CHECK(d1.at(Composition({2})) == doctest::Approx(0.5));

  auto spec = bipartite();
  auto d2 = derivative(spec, SizeDistribution::monodisperse(spec), {2}, OdeForm::reduced);
  CHECK(d2.at(Composition({1, 1})) == doctest::Approx(0.25));
  CHECK(d2.at(Composition({1, 0})) == doctest::Approx(-0.25));
  CHECK(d2.at(Composition({0, 1})) == doctest::Approx(-0.25));
  CHECK(d2.count(Composition({2, 0})) == 0);
  CHECK(d2.count(Composition({0, 2})) == 0);
}

TEST_CASE("derivative: support outside the window is rejected") {
  SizeDistribution d;
  d.m = 1;
  d.entries[Composition({5})] = 0.1;
  CHECK_THROWS_AS(derivative(single_component(), d, {4}, OdeForm::full), Error);
}

TEST_CASE("derivative matches the ordered-pair convolution for asymmetric kernels") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 1 + trial % 3;
    const int N = 6;
    Matrix raw = Matrix::NullaryExpr(m, m, [&] { return 2.0 * u(rng); });
    Vector p = Vector::NullaryExpr(m, [&] { return 0.1 + u(rng); });
    p /= p.sum();
    ModelSpec spec(raw, p);
    ModelSpec spec_sym(0.5 * (raw + raw.transpose()), p);

    StateSpace states(m, {N});
    SizeDistribution w;
    w.m = m;
    for (std::size_t i = 0; i < states.size(); ++i)
      if (u(rng) < 0.7) w.entries[states.composition(i)] = u(rng) / states.total(i);

    for (auto form : {OdeForm::full, OdeForm::reduced}) {
      auto got = derivative(spec, w, {N}, form);
      auto got_sym = derivative(spec_sym, w, {N}, form);
      auto want = coag::testing::brute_force_derivative(raw, p, w.entries, N, form == OdeForm::reduced);
      for (const auto& [n, v] : want) {
        const double g = got.count(n) ? got.at(n) : 0.0;
        const double gs = got_sym.count(n) ? got_sym.at(n) : 0.0;
        CHECK(std::abs(g - v) <= 1e-13 * (1.0 + std::abs(v)));
        CHECK(std::abs(g - gs) <= 1e-13 * (1.0 + std::abs(v)));
      }
    }
  }
}

TEST_CASE("integrate: single component reproduces the Borel law") {
  OdeConfig cfg;
  cfg.dt = 1e-3;
  cfg.record_times = {0.25, 0.5, 0.75};
  auto snaps = integrate(single_component(), {60}, cfg, 0.75);
  REQUIRE(snaps.size() == 3);
  for (const auto& s : snaps) {
    MESSAGE("t=" << s.dist.t << " err=" << max_borel_error(s, s.dist.t, 60));
    CHECK(max_borel_error(s, s.dist.t, 60) < 1e-8);
  }
  CHECK(snaps[1].dist.at(Composition({1})) == doctest::Approx(std::exp(-0.5)).epsilon(1e-8));
  CHECK(std::abs(snaps[1].mass.sum() - 1.0) < 1e-6);
}

TEST_CASE("integrate: bipartite keeps the per-type mass split") {
  OdeConfig cfg;
  cfg.dt = 1e-3;
  auto snaps = integrate(bipartite(), {60}, cfg, 1.0);
  REQUIRE(snaps.size() == 1);
  CHECK(std::abs(snaps[0].mass[0] - 0.5) < 1e-6);
  CHECK(std::abs(snaps[0].mass[1] - 0.5) < 1e-6);
  for (const auto& [n, w] : snaps[0].dist.entries)
    if (n.total() >= 2) CHECK((n[0] > 0 && n[1] > 0));
}

TEST_CASE("integrate: RK4 converges at fourth order") {
  auto err_at = [](double dt) {
    OdeConfig cfg;
    cfg.dt = dt;
    auto snaps = integrate(single_component(), {20}, cfg, 0.9);
    return max_borel_error(snaps.back(), 0.9, 20);
  };
  const double e1 = err_at(0.1), e2 = err_at(0.05);
  MESSAGE("rk4 errors " << e1 << " " << e2);
  CHECK(e1 / e2 >= 12.0);
  CHECK(e1 / e2 <= 20.0);

  auto euler_at = [](double dt) {
    OdeConfig cfg;
    cfg.dt = dt;
    cfg.method = OdeMethod::euler;
    auto snaps = integrate(single_component(), {20}, cfg, 0.9);
    return max_borel_error(snaps.back(), 0.9, 20);
  };
  const double r = euler_at(0.01) / euler_at(0.005);
  CHECK(r > 1.8);
  CHECK(r < 2.2);
}

TEST_CASE("integrate: solution stays nonnegative") {
  std::mt19937_64 rng(5);
  for (int m = 1; m <= 3; ++m) {
    auto inst = coag::testing::random_instance(rng, m);
    ModelSpec spec(inst.A, inst.p);
    OdeConfig cfg;
    cfg.dt = 1e-2;
    cfg.form = OdeForm::full;
    cfg.record_times = {0.5, 1.0, 2.0};
    for (const auto& s : integrate(spec, {10}, cfg, 2.0))
      for (const auto& [n, w] : s.dist.entries) CHECK(w >= 0.0);
  }
}

TEST_CASE("mass_loss_curve: flat below the critical time, growing past it") {
  OdeConfig cfg;
  cfg.dt = 1e-3;
  auto curve = mass_loss_curve(single_component(), {60}, cfg, {0.0, 0.5, 1.0, 1.5, 2.0});
  REQUIRE(curve.size() == 5);
  CHECK(curve[0].second == 0.0);
  CHECK(curve[1].second < 1e-6);
  CHECK(curve[3].second > 0.1);
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].second >= curve[i - 1].second - 1e-12);
}

TEST_CASE("full and reduced forms agree while the window holds the mass") {
  OdeConfig cfg;
  cfg.dt = 1e-3;
  cfg.record_times = {0.25, 0.5};
  auto reduced = integrate(single_component(), {80}, cfg, 0.5);
  cfg.form = OdeForm::full;
  auto full = integrate(single_component(), {80}, cfg, 0.5);
  REQUIRE(full.back().deficit < 1e-8);
  for (std::size_t i = 0; i < full.size(); ++i)
    for (const auto& [n, w] : reduced[i].dist.entries) CHECK(std::abs(full[i].dist.at(n) - w) < 1e-8);
}

TEST_CASE("full form loses exactly the mass carried out of the window") {
  OdeConfig cfg;
  cfg.dt = 1e-2;
  cfg.form = OdeForm::full;
  cfg.record_times = {1.0, 2.0, 3.0};
  for (const auto& s : integrate(coag::testing::three_component(), {8}, cfg, 3.0)) {
    CHECK(s.deficit > 0.0);
    CHECK(std::abs(s.deficit - s.flux_out) < 1e-12);
  }
}

TEST_CASE("integrate: error paths") {
  OdeConfig cfg;
  CHECK_THROWS_AS(integrate(single_component(), {0}, cfg, 1.0), Error);
  CHECK_THROWS_AS(integrate(single_component(), {5}, cfg, -1.0), Error);
  cfg.dt = 0.0;
  CHECK_THROWS_AS(integrate(single_component(), {5}, cfg, 1.0), Error);
  cfg.dt = 1e-3;
  cfg.record_times = {0.5, 0.2};
  CHECK_THROWS_AS(integrate(single_component(), {5}, cfg, 1.0), Error);
}
