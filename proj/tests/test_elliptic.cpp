#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "stochlab/classifier.hpp"
#include "stochlab/clock.hpp"
#include "stochlab/elliptic.hpp"

using namespace stochlab;

namespace {

EllipticSchedule serial() {
  EllipticSchedule s;
  s.parallel = false;
  return s;
}

}  // namespace

TEST_SUITE("elliptic") {

TEST_CASE("zero boundary value gives zero") {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16);
  const auto W = solve_semilinear(m, Nonlinearity::power(0.5), grid, 0.0);
  for (double x : W.values) CHECK(x == 0.0);
}

TEST_CASE("linear problem on a Euclidean ball") {
  // ΔW = W, W(2) = 1 in R³: W = (sinh r / r) / (sinh 2 / 2)
  const auto m = ModelManifold::euclidean(3);
  const auto grid = make_grid_with_spacing(m, 2.0, 1.0 / 64);
  const auto W = solve_semilinear(m, Nonlinearity::power(1.0), grid, 1.0);
  const auto exact = [](double r) { return (r < 1e-8 ? 1.0 : std::sinh(r) / r) / (std::sinh(2.0) / 2.0); };
  CHECK(W.at(1.0) == doctest::Approx(0.6481).epsilon(1e-3));
  for (std::size_t i = 0; i < W.values.size(); ++i) {
    CHECK(W.values[i] == doctest::Approx(exact(grid.centers()[i])).epsilon(2e-3));
  }
  CHECK(W.residual <= 1e-10);
}

TEST_CASE("solutions lie between 0 and h") {
  for (const auto& m : {ModelManifold::euclidean(2), ModelManifold::hyperbolic(3), ModelManifold::power_exp(3, 4.0, 1.0)}) {
    for (double mm : {0.3, 0.5, 1.0}) {
      const auto n = Nonlinearity::power(mm);
      const auto grid = make_grid_with_spacing(m, 6.0, 1.0 / 16);
      const auto W = solve_semilinear(m, n, grid, 0.8);
      for (double x : W.values) {
        CHECK(x >= 0.0);
        CHECK(x <= 0.8);
      }
    }
  }
}

TEST_CASE("monotone sweep from 0 to h agrees with Newton") {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto n = Nonlinearity::power(0.5);
  const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16);
  const auto newton = solve_semilinear(m, n, grid, 1.0);
  auto lower = constant_profile(grid, 0.0);
  lower.boundary = 1.0;
  const auto swept = monotone_iteration(m, n, grid, lower, constant_profile(grid, 1.0));
  for (std::size_t i = 0; i < grid.cells(); ++i) CHECK(std::abs(swept.values[i] - newton.values[i]) <= 1e-8);
}

TEST_CASE("monotone sweep keeps an exact solution") {
  const auto m = ModelManifold::hyperbolic(3);
  const auto n = Nonlinearity::power(0.5);
  const auto grid = make_grid_with_spacing(m, 3.0, 1.0 / 16);
  const auto W = solve_semilinear(m, n, grid, 0.5);
  const auto again = monotone_iteration(m, n, grid, W, W);
  for (std::size_t i = 0; i < grid.cells(); ++i) CHECK(std::abs(again.values[i] - W.values[i]) <= 1e-10);
}

TEST_CASE("monotone sweep rejects an inverted bracket") {
  const auto m = ModelManifold::euclidean(3);
  const auto n = Nonlinearity::power(0.5);
  const auto grid = make_grid_with_spacing(m, 2.0, 1.0 / 16);
  CHECK_THROWS(monotone_iteration(m, n, grid, constant_profile(grid, 1.0), constant_profile(grid, 0.5)));
}

TEST_CASE("comparison in the boundary value") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.05, 0.95);
  for (const auto& m : {ModelManifold::euclidean(3), ModelManifold::hyperbolic(2), ModelManifold::power_exp(3, 4.0, 1.0)}) {
    const auto n = Nonlinearity::power(0.5);
    const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16);
    for (int k = 0; k < 4; ++k) {
      double a = U(rng), b = U(rng);
      if (a > b) std::swap(a, b);
      const auto Wa = solve_semilinear(m, n, grid, a);
      const auto Wb = solve_semilinear(m, n, grid, b);
      for (std::size_t i = 0; i < grid.cells(); ++i) CHECK(Wa.values[i] <= Wb.values[i] + 1e-12);
    }
  }
}

TEST_CASE("exhaustion verdicts") {
  const auto half = Nonlinearity::power(0.5);
  const auto lin = Nonlinearity::power(1.0);
  const auto e3 = exhaustion_limit(ModelManifold::euclidean(3), lin, 1.0, serial());
  CHECK(e3.verdict == ExhaustionVerdict::Trivial);
  const auto h3 = exhaustion_limit(ModelManifold::hyperbolic(3), lin, 1.0, serial());
  CHECK(h3.verdict == ExhaustionVerdict::Trivial);
  const auto pe = exhaustion_limit(ModelManifold::power_exp(3, 4.0, 1.0), half, 1.0);
  CHECK(pe.verdict == ExhaustionVerdict::Nontrivial);
  CHECK(pe.profiles.back().sup() > 0.1);
  for (const auto* ex : {&e3, &h3, &pe}) {
    CHECK(ex->monotone_in_radius);
    for (std::size_t k = 1; k < ex->profiles.size(); ++k) {
      // W_R decreases in R where both live
      const auto& small = ex->profiles[k - 1];
      const auto& big = ex->profiles[k];
      for (std::size_t i = 0; i < small.values.size(); ++i) CHECK(big.values[i] <= small.values[i] + 1e-10);
    }
  }
}

TEST_CASE("shooting against sinh r / r") {
  const auto m = ModelManifold::euclidean(3);
  const auto v = shoot_at(m, 1.0, {0.5, 1.0, 2.0, 4.0});
  CHECK(v[0] == doctest::Approx(std::sinh(0.5) / 0.5).epsilon(1e-8));
  CHECK(v[2] == doctest::Approx(std::sinh(2.0) / 2.0).epsilon(1e-8));
  CHECK(v[3] == doctest::Approx(std::sinh(4.0) / 4.0).epsilon(1e-6));
  // λ = 4 in R³: sinh(2r) / (2r)
  const auto w = shoot_at(m, 4.0, {1.0});
  CHECK(w[0] == doctest::Approx(std::sinh(2.0) / 2.0).epsilon(1e-8));
}

TEST_CASE("shooting verdicts") {
  CHECK(linear_shooting(ModelManifold::euclidean(3), 1.0).verdict == ShootingVerdict::Unbounded);
  CHECK(linear_shooting(ModelManifold::hyperbolic(3), 1.0).verdict == ShootingVerdict::Unbounded);
  const auto pe = linear_shooting(ModelManifold::power_exp(3, 4.0, 1.0), 1.0);
  CHECK(pe.verdict == ShootingVerdict::Bounded);
  CHECK(std::isfinite(pe.sup()));
  CHECK(pe.sup() > 1.0);
  for (std::size_t k = 1; k < pe.values.size(); ++k) CHECK(pe.values[k] >= pe.values[k - 1]);
}

TEST_CASE("bounded at one lambda stays bounded at larger lambda") {
  // a bounded solution for λ rescales to a bounded solution for any larger λ
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  for (double lam : {0.5, 1.0, 2.0, 4.0}) CHECK(linear_shooting(m, lam).verdict == ShootingVerdict::Bounded);
}

TEST_CASE("verdicts agree across classifier, exhaustion and shooting") {
  const auto half = Nonlinearity::power(0.5);
  for (const auto& m : {ModelManifold::euclidean(3), ModelManifold::power_exp(3, 4.0, 1.0)}) {
    const auto c = classify(m);
    const auto ex = exhaustion_limit(m, half, 1.0);
    const auto sh = linear_shooting(m, 1.0);
    if (c.verdict == Verdict::Complete) {
      CHECK(ex.verdict == ExhaustionVerdict::Trivial);
      CHECK(sh.verdict == ShootingVerdict::Unbounded);
    } else {
      REQUIRE(c.verdict == Verdict::Incomplete);
      CHECK(ex.verdict == ExhaustionVerdict::Nontrivial);
      CHECK(sh.verdict == ShootingVerdict::Bounded);
    }
  }
}

TEST_CASE("normalized shot is a subsolution") {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto n = Nonlinearity::power(0.5);
  const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16);
  const auto sub = subsolution_from_linear(m, n, grid, linear_shooting(m, 1.0));
  CHECK(sub.check.passed);
  CHECK(sub.sup() <= 1.0 + 1e-12);
  CHECK_THROWS_AS(subsolution_from_linear(m, n, grid, linear_shooting(ModelManifold::euclidean(3), 1.0)),
                  std::invalid_argument);
}

TEST_CASE("sandwich between the shot and the constant") {
  // the normalized shot and W ≡ 1 bracket the solution with W(R) = 1
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto n = Nonlinearity::power(0.5);
  const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16);
  auto sub = subsolution_from_linear(m, n, grid, linear_shooting(m, 1.0));
  const auto W = solve_semilinear(m, n, grid, 1.0);
  for (std::size_t i = 0; i < grid.cells(); ++i) {
    CHECK(sub.values[i] <= W.values[i] + 1e-6);
    CHECK(W.values[i] <= 1.0);
  }
}

TEST_CASE("duality weights") {
  const std::vector<double> t = {0.0, 0.1, 0.3, 0.6, 1.0};
  const auto e = duality_weights(t, 1.0);
  REQUIRE(e.size() == 5);  // one weight per time level, level 0 unused
  CHECK(e[0] == 0.0);
  // b = 1, 1/1.1, 1/(1.1·1.2), 1/(1.1·1.2·1.3) against dt = 0.1, 0.2, 0.3, 0.4
  const double b[] = {1.0, 1.0 / 1.1, 1.0 / (1.1 * 1.2), 1.0 / (1.1 * 1.2 * 1.3)};
  const double dt[] = {0.1, 0.2, 0.3, 0.4};
  double z = 0.0;
  for (int k = 0; k < 4; ++k) z += b[k] * dt[k];
  for (int k = 0; k < 4; ++k) CHECK(e[k + 1] == doctest::Approx(b[k] * dt[k] / z).epsilon(1e-14));
  const auto cut = duality_weights(t, 0.3);
  CHECK(cut[3] == 0.0);
  CHECK(cut[4] == 0.0);
  CHECK(cut[1] + cut[2] == doctest::Approx(1.0));
}

TEST_CASE("duality of a solution with itself vanishes") {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto n = Nonlinearity::power(0.5);
  const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16);
  SolverConfig cfg;
  cfg.lifting = {};
  const auto u = solve_dirichlet(m, n, grid, [](double r) { return std::exp(-r * r); }, [](double) { return 0.0; },
                                 1.0, cfg);
  const auto W = duality_subsolution(u, u, n, 1.0);
  for (double x : W.values) CHECK(x == 0.0);
  CHECK(W.check.passed);
}

TEST_CASE("constant splitting") {
  const auto m = ModelManifold::euclidean(3);
  const auto n = Nonlinearity::power(0.5);
  const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16);
  SolverConfig cfg;
  cfg.lifting = {};
  const double c = 0.25;
  const auto u = solve_dirichlet(m, n, grid, [c](double) { return c; }, [c](double) { return c; }, 1.0, cfg);
  const auto s = constant_splitting_subsolution(u, c, n, 1.0);
  // φ(u) = u^{1/2}: φ'(1/4) = 1
  CHECK(s.lambda_eff == doctest::Approx(1.0).epsilon(1e-12));
  for (double x : s.profile.values) CHECK(std::abs(x) <= 1e-14);
  CHECK(s.profile.check.passed);
  CHECK(splitting_boundary(n, 2.0, 0.0) == doctest::Approx(n.psi(1.0)));
  CHECK(splitting_boundary(n, 2.0, 10.0) == doctest::Approx(n.psi(2.0)));
}

TEST_CASE("argument validation") {
  const auto m = ModelManifold::euclidean(3);
  const auto grid = make_grid_with_spacing(m, 2.0, 1.0 / 16);
  CHECK_THROWS_AS(solve_semilinear(m, Nonlinearity::power(0.5), grid, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_semilinear(m, Nonlinearity::saturating(), grid, 1.0), std::invalid_argument);
}

}  // TEST_SUITE
