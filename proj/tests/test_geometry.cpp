#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stochlab/geometry.hpp"

using namespace stochlab;

namespace {

// sinh by its Taylor series in long double, independent of the library sinh
long double sinh_series(long double x) {
  long double term = x, sum = x;
  for (int k = 1; k < 40; ++k) {
    term *= x * x / ((2.0L * k) * (2.0L * k + 1.0L));
    sum += term;
  }
  return sum;
}

long double cosh_series(long double x) {
  long double term = 1.0L, sum = 1.0L;
  for (int k = 1; k < 40; ++k) {
    term *= x * x / ((2.0L * k - 1.0L) * (2.0L * k));
    sum += term;
  }
  return sum;
}

std::vector<ModelManifold> canon() {
  return {ModelManifold::euclidean(3), ModelManifold::hyperbolic(2), ModelManifold::hyperbolic(3),
          ModelManifold::power_exp(3, 4.0, 1.0), ModelManifold::power_exp(3, 2.0, 1.0)};
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("euclidean warp is the identity") {
  const auto m = ModelManifold::euclidean(3);
  const auto v = m.eval_warp(2.0);
  CHECK(v.w == 2.0);
  CHECK(v.dw == 1.0);
  CHECK(v.ddw == 0.0);
  for (double r : {0.1, 1.0, 7.0, 300.0}) {
    const auto c = curvature_radial(m, r);
    CHECK(c.sectional == 0.0);
    CHECK(c.ricci == 0.0);
  }
}

TEST_CASE("hyperbolic warp against a series oracle") {
  const auto m = ModelManifold::hyperbolic(3);
  const auto v = m.eval_warp(1.0);
  CHECK(v.w == doctest::Approx(double(sinh_series(1.0L))).epsilon(1e-14));
  CHECK(v.dw == doctest::Approx(double(cosh_series(1.0L))).epsilon(1e-14));
  CHECK(v.ddw == doctest::Approx(double(sinh_series(1.0L))).epsilon(1e-14));
  const auto c = curvature_radial(m, 2.0);
  CHECK(c.sectional == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(c.ricci == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("hyperbolic scale k has sectional curvature -k^2") {
  const auto m = ModelManifold::hyperbolic(3, 0.5);
  for (double r : {0.01, 0.3, 2.0, 20.0, 200.0}) {
    CHECK(curvature_radial(m, r).sectional == doctest::Approx(-0.25).epsilon(1e-10));
  }
}

TEST_CASE("power_exp warp: w'(0) = 1 and superquadratic negative curvature") {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto v0 = m.eval_warp(0.0);
  CHECK(v0.w == 0.0);
  CHECK(std::abs(v0.dw - 1.0) <= 1e-10);
  // w' = e^{r^4/4}(1 + r^4) from the product rule
  const double r = 1.3;
  CHECK(m.eval_warp(r).dw == doctest::Approx(std::exp(std::pow(r, 4) / 4) * (1 + std::pow(r, 4))).epsilon(1e-13));
  double prev = 0.0;
  for (double x : {4.0, 8.0, 16.0, 32.0, 64.0}) {
    const double s = curvature_radial(m, x).sectional;
    CHECK(s < 0.0);
    CHECK(-s / (x * x) > prev);  // grows faster than r^2
    prev = -s / (x * x);
  }
  // log-space queries stay finite where w itself overflows
  CHECK(std::isfinite(m.log_warp(100.0)));
  CHECK(m.log_derivative(100.0) == doctest::Approx(1.0 / 100.0 + std::pow(100.0, 3)).epsilon(1e-12));
  CHECK_THROWS_AS(m.eval_warp(100.0), NumericalError);
}

TEST_CASE("closed-form families satisfy the pole conditions") {
  for (const auto& m : canon()) {
    CAPTURE(m.describe());
    const auto v = m.eval_warp(0.0);
    CHECK(v.w == 0.0);
    CHECK(std::abs(v.dw - 1.0) <= 1e-10);
    for (double r : {1e-8, 1e-3, 0.5, 3.0}) CHECK(m.eval_warp(r).w > 0.0);
  }
}

TEST_CASE("volumes against closed forms") {
  CHECK(ModelManifold::euclidean(3).volume(1.0) == doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-12));
  CHECK(ModelManifold::hyperbolic(2).volume(1.0) ==
        doctest::Approx(2.0 * std::numbers::pi * (double(cosh_series(1.0L)) - 1.0)).epsilon(1e-12));
  for (const auto& m : canon()) CHECK(m.volume(0.0) == 0.0);
  CHECK(unit_sphere_area(2) == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(unit_sphere_area(3) == doctest::Approx(4.0 * std::numbers::pi));
  CHECK(unit_sphere_area(4) == doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi));
}

TEST_CASE("volume is strictly increasing on random pairs") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> U(0.0, 6.0);
  for (const auto& m : canon()) {
    for (int k = 0; k < 100; ++k) {
      double a = U(gen), b = U(gen);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      CHECK(m.log_volume(a) < m.log_volume(b));
    }
  }
}

TEST_CASE("tabulated warps") {
  std::vector<double> r, w;
  for (int i = 0; i <= 200; ++i) {
    r.push_back(i * 0.05);
    w.push_back(std::sinh(r.back()));
  }
  const auto m = ModelManifold::table(3, r, w);
  CHECK(m.max_radius() == doctest::Approx(10.0));
  CHECK(m.eval_warp(0.0).w == 0.0);
  CHECK(m.eval_warp(2.0).w == doctest::Approx(std::sinh(2.0)).epsilon(1e-4));
  CHECK(m.volume(2.0) == doctest::Approx(ModelManifold::hyperbolic(3).volume(2.0)).epsilon(1e-3));

  auto bad = w;
  bad[0] = 0.1;
  CHECK_THROWS_AS(ModelManifold::table(3, r, bad), std::invalid_argument);
  auto steep = w;
  for (auto& x : steep) x *= 2.0;
  CHECK_THROWS_AS(ModelManifold::table(3, r, steep), std::invalid_argument);
  auto negative = w;
  negative[10] = -1.0;
  CHECK_THROWS_AS(ModelManifold::table(3, r, negative), std::invalid_argument);
}

TEST_CASE("constructor preconditions") {
  CHECK_THROWS_AS(ModelManifold::euclidean(1), std::invalid_argument);
  CHECK_THROWS_AS(ModelManifold::hyperbolic(3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelManifold::power_exp(3, 1.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelManifold::power_exp(3, 4.0, -1.0), std::invalid_argument);
}

TEST_CASE("grid: nodes, pole face and total volume") {
  const auto e = ModelManifold::euclidean(3);
  const auto g = make_grid(e, 1.0, 10);
  REQUIRE(g.cells() == 10);
  for (std::size_t i = 0; i <= 10; ++i) CHECK(g.nodes()[i] == doctest::Approx(i / 10.0));
  CHECK(std::exp(g.log_total_volume()) == doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-3));

  for (const auto& m : canon()) {
    const auto gm = make_grid(m, 1.0, 8);
    CHECK(gm.face_areas()[0] == 0.0);
    CHECK(gm.inner_coupling()[0] == 0.0);
    for (double v : gm.cell_volumes()) CHECK(v > 0.0);
  }

  const auto h = ModelManifold::hyperbolic(2);
  const auto gh = make_grid(h, 1.0, 200);
  CHECK(std::exp(gh.log_total_volume()) == doctest::Approx(h.volume(1.0)).epsilon(1e-6));
}

TEST_CASE("grid refinement preserves total volume") {
  for (const auto& m : canon()) {
    CAPTURE(m.describe());
    const double R = m.family() == WarpFamily::PowerExp ? 3.0 : 5.0;
    const double v1 = make_grid(m, R, 64).log_total_volume();
    const double v2 = make_grid(m, R, 128).log_total_volume();
    CHECK(std::abs(v1 - v2) <= 1e-10);
    CHECK(v2 == doctest::Approx(m.log_volume(R)).epsilon(1e-10));
  }
}

TEST_CASE("cell points are volume centroids") {
  // Euclidean N=3: centroid of [a,b] is (3/4)(b^4-a^4)/(b^3-a^3)
  const auto g = make_grid(ModelManifold::euclidean(3), 1.0, 10);
  for (std::size_t i = 0; i < g.cells(); ++i) {
    const double a = g.nodes()[i], b = g.nodes()[i + 1];
    const double c = 0.75 * (std::pow(b, 4) - std::pow(a, 4)) / (std::pow(b, 3) - std::pow(a, 3));
    CHECK(g.centers()[i] == doctest::Approx(c).epsilon(1e-10));
  }
}

TEST_CASE("grids with a common spacing share their inner cells") {
  const auto m = ModelManifold::power_exp(3, 4.0, 1.0);
  const auto a = make_grid_with_spacing(m, 8.0, 1.0 / 16.0);
  const auto b = make_grid_with_spacing(m, 16.0, 1.0 / 16.0);
  REQUIRE(a.cells() == 128);
  for (std::size_t i = 0; i + 1 < a.cells(); ++i) {
    CHECK(a.centers()[i] == b.centers()[i]);
    CHECK(a.log_cell_volumes()[i] == b.log_cell_volumes()[i]);
  }
}

}  // TEST_SUITE
