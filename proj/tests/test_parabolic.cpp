#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stochlab/elliptic.hpp"
#include "stochlab/parabolic.hpp"

using namespace stochlab;

namespace {

SolverConfig direct() {
  SolverConfig c;
  c.lifting = {};
  return c;
}

const auto zero = [](double) { return 0.0; };

double field_max(const SpaceTimeField& f) {
  double s = 0.0;
  for (const auto& row : f.values) {
    for (double x : row) s = std::max(s, x);
  }
  return s;
}

}  // namespace

TEST_SUITE("parabolic") {

TEST_CASE("constants solve the equation") {
  for (const auto& n : {Nonlinearity::power(0.5), Nonlinearity::power(1.0), Nonlinearity::saturating()}) {
    const auto m = ModelManifold::hyperbolic(3);
    const auto grid = make_grid(m, 4.0, 64);
    const auto f = solve_dirichlet(m, n, grid, [](double) { return 0.7; }, [](double) { return 0.7; }, 0.5);
    for (const auto& row : f.values) {
      for (double x : row) CHECK(x == doctest::Approx(0.7).epsilon(1e-12));
    }
    for (std::size_t k = 1; k < f.values.size(); ++k) {
      const auto r = pde_residual(grid, n, f.values[k - 1], f.values[k], f.times[k] - f.times[k - 1], 0.7);
      for (double x : r) CHECK(std::abs(x) <= 1e-10);
    }
  }
}

TEST_CASE("heat equation against the first Dirichlet eigenfunction") {
  const auto m = ModelManifold::euclidean(3);
  const auto n = Nonlinearity::power(1.0);
  const auto grid = make_grid(m, std::numbers::pi, 400);
  auto cfg = direct();
  cfg.dt_initial = 1e-3;
  cfg.dt_max = 1e-3;
  cfg.dt_growth = 1.0;
  const auto sinc = [](double r) { return r < 1e-8 ? 1.0 : std::sin(r) / r; };
  const auto f = solve_dirichlet(m, n, grid, sinc, zero, 0.5, cfg);
  const std::size_t k = f.time_index(0.5);
  CHECK(f.times[k] == doctest::Approx(0.5));
  double err = 0.0;
  for (std::size_t i = 0; i < grid.cells(); ++i) {
    err = std::max(err, std::abs(f.values[k][i] - std::exp(-0.5) * sinc(grid.centers()[i])));
  }
  CHECK(err <= 1e-3);
  // absorbing boundary: mass strictly decreasing, balance closed
  const auto ms = mass_series(f);
  for (std::size_t j = 1; j < ms.mass.size(); ++j) CHECK(ms.mass[j] < ms.mass[j - 1]);
  CHECK(ms.max_balance_residual() <= 1e-8);
}

TEST_CASE("zero data stays zero") {
  for (const auto& m : {ModelManifold::euclidean(3), ModelManifold::power_exp(3, 4.0, 1.0)}) {
    const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16.0);
    const auto f = solve_dirichlet(m, Nonlinearity::power(0.5), grid, zero, zero, 1.0, direct());
    CHECK(f.sup() == 0.0);
    const auto ex = minimal_solution(m, Nonlinearity::power(0.5), zero, 1.0, direct());
    CHECK(ex.limit->sup() == 0.0);
  }
}

TEST_CASE("minimal solution of the heat equation on flat space") {
  const auto m = ModelManifold::euclidean(3);
  const auto n = Nonlinearity::power(1.0);
  auto cfg = direct();
  const auto bump = [](double r) { return r < 2.0 ? std::pow(1.0 - r * r / 4.0, 2) : 0.0; };
  const auto ex = minimal_solution(m, n, bump, 1.0, cfg);
  CHECK(ex.monotone_in_radius);
  // probe monotonicity in R
  for (std::size_t j = 1; j < ex.probe_values.size(); ++j) {
    for (std::size_t p = 0; p < ex.probe_radii.size(); ++p) {
      CHECK(ex.probe_values[j - 1][p] <= ex.probe_values[j][p] + 1e-9);
    }
  }
  const auto& f = ex.levels.front();
  const auto ms = mass_series(f);
  for (std::size_t k = 1; k < f.values.size(); ++k) {
    CHECK(f.sup(k) <= f.sup(k - 1) + 1e-12);
    CHECK(ms.mass[k] <= ms.mass[k - 1] + 1e-14);
  }
  CHECK(f.sup() <= 1.0 + 1e-12);
}

TEST_CASE("witness exhaustion: plateau on the incomplete model, decay on the complete one") {
  const auto n = Nonlinearity::power(0.5);
  ClockSpec clock{n, 1.0, 0.1, 1.0};
  const double S = time_to_exceed(clock).time;
  CHECK(S == doctest::Approx(1.6));

  const auto pe = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto up = witness_solution(pe, n, zero, S, clock, direct());
  CHECK(up.status == ExhaustionStatus::Converged);
  CHECK(up.monotone_in_radius);
  CHECK(up.relative_changes.back() <= 1e-3);
  for (double x : up.probe_values.back()) CHECK(x > 0.4);

  const auto eu = ModelManifold::euclidean(3);
  const auto down = witness_solution(eu, n, zero, S, clock, direct());
  CHECK(down.status == ExhaustionStatus::Decaying);
  for (double q : down.decay_ratios) CHECK(q >= 2.0);

  // minimal ≤ witness on the probes
  const auto low = minimal_solution(pe, n, zero, S, direct());
  for (std::size_t j = 0; j < low.probe_values.size(); ++j) {
    for (std::size_t p = 0; p < low.probe_radii.size(); ++p) CHECK(low.probe_values[j][p] <= up.probe_values[j][p]);
  }
  const auto gap = nonuniqueness_gap(*low.limit, *up.limit, S, direct().probe_radii, 1e-3);
  CHECK(gap.witnessed);
  CHECK(gap.excess == doctest::Approx(gap.difference));
}

TEST_CASE("witness stays above the elliptic lower barrier") {
  // ψ((f(t) v − ε)⁺) with Δv = αv, v(R) = 1, solved by the elliptic module
  const auto n = Nonlinearity::power(0.5);
  ClockSpec clock{n, 1.0, 0.1, 1.0};
  const double S = time_to_exceed(clock).time;
  for (const auto& m : {ModelManifold::power_exp(3, 4.0, 1.0), ModelManifold::euclidean(3)}) {
    CAPTURE(m.describe());
    auto cfg = direct();
    cfg.exhaustion_radii = {8.0};
    const auto w = witness_solution(m, n, zero, S, clock, cfg);
    const auto& f = w.levels.front();
    const auto v = solve_semilinear(m, Nonlinearity::power(1.0), f.grid, 1.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k) {
      const double amp = clock_f(clock, f.times[k]);
      for (std::size_t i = 0; i < f.grid.cells(); ++i) {
        const double barrier = n.psi(std::max(amp * v.values[i] - clock.epsilon, 0.0));
        worst = std::max(worst, barrier - f.values[k][i]);
      }
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("comparison on randomized ordered pairs") {
  std::mt19937 gen(21);
  std::uniform_real_distribution<double> A(0.0, 1.0);
  for (const auto& m : {ModelManifold::euclidean(3), ModelManifold::power_exp(3, 4.0, 1.0)}) {
    for (double mm : {0.3, 1.0}) {
      const auto n = Nonlinearity::power(mm);
      const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16.0);
      for (int trial = 0; trial < 3; ++trial) {
        const double a1 = A(gen), c1 = A(gen), w1 = 0.5 + 2 * A(gen);
        const double da = A(gen), dc = A(gen), g1 = 0.5 * A(gen), dg = 0.5 * A(gen);
        auto ua = [=](double r) { return a1 * std::exp(-r * r / (w1 * w1)) + 0.2 * c1; };
        auto ub = [=](double r) { return ua(r) + da * std::exp(-r * r) + 0.1 * dc; };
        auto ga = [=](double t) { return g1 * (1.0 + std::sin(t)); };
        auto gb = [=](double t) { return ga(t) + dg; };
        const auto fa = solve_dirichlet(m, n, grid, ua, ga, 0.5, direct());
        const auto fb = solve_dirichlet(m, n, grid, ub, gb, 0.5, direct());
        REQUIRE(fa.times == fb.times);
        double worst = 0.0;
        for (std::size_t k = 0; k < fa.values.size(); ++k) {
          for (std::size_t i = 0; i < grid.cells(); ++i) worst = std::max(worst, fa.values[k][i] - fb.values[k][i]);
        }
        CHECK(worst <= 1e3 * direct().newton_tol);
      }
    }
  }
}

TEST_CASE("lifting ladder is monotone and bounded") {
  const auto m = ModelManifold::hyperbolic(3);
  const auto n = Nonlinearity::power(0.5);
  const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16.0);
  const auto u0 = [](double r) { return r < 1.0 ? 0.8 * (1.0 - r) : 0.0; };
  const auto g = [](double t) { return 0.3 * t; };
  std::vector<SpaceTimeField> runs;
  for (double eps : {0.1, 0.05, 0.025}) {
    runs.push_back(solve_lifted(m, n, grid, u0, g, 1.0, eps, direct()));
    // maximum principle with the lifting
    CHECK(field_max(runs.back()) <= std::max(0.8, 0.3) + eps + 1e-12);
    for (const auto& row : runs.back().values) {
      for (double x : row) CHECK(x >= 0.0);
    }
  }
  for (std::size_t j = 1; j < runs.size(); ++j) {
    for (std::size_t k = 0; k < runs[j].values.size(); ++k) {
      for (std::size_t i = 0; i < grid.cells(); ++i) CHECK(runs[j].values[k][i] <= runs[j - 1].values[k][i] + 1e-10);
    }
  }
  // the full ladder reports the same ordering; ε = 0 sits below every rung
  auto cfg = SolverConfig::with_lifting({0.1, 0.05, 0.025}, Extrapolation::Direct);
  const auto f = solve_dirichlet(m, n, grid, u0, g, 1.0, cfg);
  CHECK(f.diagnostics.ladder_monotone);
  CHECK(f.lifting == 0.0);
  for (std::size_t i = 0; i < grid.cells(); ++i) CHECK(f.values.back()[i] <= runs.back().values.back()[i] + 1e-10);
  // Richardson in ε approaches the direct solve
  const auto rich =
      solve_dirichlet(m, n, grid, u0, g, 1.0, SolverConfig::with_lifting({0.05, 0.025}, Extrapolation::Richardson));
  double diff = 0.0;
  for (std::size_t i = 0; i < grid.cells(); ++i) diff = std::max(diff, std::abs(rich.values.back()[i] - f.values.back()[i]));
  CHECK(diff <= 0.05);
}

TEST_CASE("gap report of identical fields is empty") {
  const auto m = ModelManifold::euclidean(3);
  const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16.0);
  const auto f = solve_dirichlet(m, Nonlinearity::power(0.5), grid, [](double) { return 0.3; }, zero, 0.5, direct());
  const std::vector<double> probes{0.0, 1.0, 2.0};
  const auto g = nonuniqueness_gap(f, f, 0.5, probes, 1e-3);
  CHECK(g.difference == 0.0);
  CHECK_FALSE(g.witnessed);
}

TEST_CASE("separable solution formula") {
  const auto half = Nonlinearity::power(0.5);
  const std::vector<double> one{1.0, 1.0};
  for (double x : separable_solution(half, one, 2.0)) CHECK(x == doctest::Approx(1.0));
  for (double x : separable_solution(half, one, 0.0)) CHECK(x == 0.0);
  // m = 1/3: [(2/3) t]^{3/2} W^3
  const std::vector<double> w{0.5};
  CHECK(separable_solution(Nonlinearity::power(1.0 / 3.0), w, 1.5)[0] == doctest::Approx(0.125));
  CHECK_THROWS_AS(separable_solution(Nonlinearity::power(1.0), one, 1.0), std::invalid_argument);
}

TEST_CASE("mass of a constant field and the weak form") {
  const auto m = ModelManifold::hyperbolic(3);
  const auto n = Nonlinearity::power(0.5);
  const auto grid = make_grid_with_spacing(m, 8.0, 1.0 / 16.0);
  const double c = 0.4;
  const auto f = solve_dirichlet(m, n, grid, [=](double) { return c; }, [=](double) { return c; }, 1.0, direct());
  const auto ms = mass_series(f);
  for (double x : ms.mass) CHECK(x == doctest::Approx(c).epsilon(1e-12));  // units of the ball volume
  const auto tests = standard_test_family(8.0);
  const auto ok = weak_residual(f, m, n, tests);
  CHECK(ok.max_residual <= 1e-10);

  auto wrong = f;
  for (auto& x : wrong.datum) x = 2 * c;
  const auto bad = weak_residual(wrong, m, n, tests);
  CHECK(bad.max_residual > 1e3 * ok.max_residual);
  CHECK(bad.max_residual > 1e-3);
}

TEST_CASE("restriction keeps the inner cells") {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto grid = make_grid_with_spacing(m, 4.0, 1.0 / 16.0);
  const auto f = solve_dirichlet(m, Nonlinearity::power(0.5), grid, zero, [](double t) { return t; }, 0.5, direct());
  const auto r = restrict_field(f, m, 32);
  CHECK(r.grid.cells() == 32);
  CHECK(r.grid.radius() == doctest::Approx(2.0));
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    for (std::size_t i = 0; i < 32; ++i) CHECK(r.values[k][i] == f.values[k][i]);
    CHECK(r.boundary_trace[k] == f.values[k][32]);
  }
}

TEST_CASE("solver config validation") {
  SolverConfig c;
  c.dt_max = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.lifting = {0.05, 0.1};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SolverConfig{};
  c.exhaustion_radii = {16.0, 8.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(SolverConfig::default_ladder(3) == std::vector<double>{0.1, 0.05, 0.025});
}

}  // TEST_SUITE
