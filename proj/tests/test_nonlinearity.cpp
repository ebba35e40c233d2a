#include <doctest.h>

#include <cmath>
#include <random>

#include "stochlab/nonlinearity.hpp"

using namespace stochlab;

namespace {

std::vector<Nonlinearity> closed_forms() {
  return {Nonlinearity::power(0.3), Nonlinearity::power(0.5), Nonlinearity::power(0.9), Nonlinearity::power(1.0),
          Nonlinearity::saturating()};
}

}  // namespace

TEST_SUITE("nonlinearity") {

TEST_CASE("square root and its inverse") {
  const auto n = Nonlinearity::power(0.5);
  CHECK(n.phi(4.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(n.psi(2.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(n.psi_prime(2.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(std::isinf(n.phi_prime(0.0)));
  CHECK(std::isinf(n.sup_range()));
  CHECK(n.eval(PhiMap::Psi, 3.0) == doctest::Approx(9.0));
}

TEST_CASE("linear phi is the identity") {
  const auto n = Nonlinearity::power(1.0);
  CHECK(n.is_linear());
  for (double x : {0.0, 0.3, 7.0, 1e3}) {
    CHECK(n.phi(x) == x);
    CHECK(n.psi(x) == x);
    CHECK(n.psi_prime(x) == 1.0);
  }
}

TEST_CASE("u/(1+u) is admissible with a = 1") {
  const auto custom =
      Nonlinearity::custom([](double u) { return u / (1.0 + u); }, {}, std::nullopt, "saturating by hand");
  CHECK(custom.sup_range() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(validate_class(custom, 500, 100.0).all_passed());
  CHECK(custom.psi(0.5) == doctest::Approx(1.0).epsilon(1e-10));

  const auto sat = Nonlinearity::saturating();
  CHECK(sat.sup_range() == 1.0);
  CHECK_THROWS_AS(sat.psi(1.0), std::domain_error);
  CHECK_THROWS_AS(sat.psi(1.5), std::domain_error);
  CHECK(sat.psi(0.75) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("class validation") {
  CHECK(validate_class(Nonlinearity::power(0.3), 1000).all_passed());

  SUBCASE("phi(0) != 0 fails zero_at_origin") {
    const auto r = validate_table({0.0, 0.5, 1.0}, {0.1, 0.5, 0.8});
    REQUIRE(r.first_failure() != nullptr);
    CHECK(r.first_failure()->property == "zero_at_origin");
  }
  SUBCASE("convex data fails concavity with a witness triple") {
    std::vector<double> u, p;
    for (int i = 0; i <= 10; ++i) {
      u.push_back(i / 10.0);
      p.push_back(u.back() * u.back());
    }
    const auto r = validate_table(u, p);
    CHECK_FALSE(r.all_passed());
    const ClassCheck* conc = nullptr;
    for (const auto& c : r.checks) {
      if (c.property == "concave") conc = &c;
    }
    REQUIRE(conc != nullptr);
    CHECK_FALSE(conc->passed);
    CHECK(conc->witness.size() == 3);
    CHECK_THROWS_AS(Nonlinearity::table(u, p), std::invalid_argument);
  }
  SUBCASE("decreasing data fails") {
    CHECK_FALSE(validate_table({0.0, 1.0, 2.0}, {0.0, 1.0, 0.5}).all_passed());
  }
  CHECK_THROWS_AS(Nonlinearity::power(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Nonlinearity::power(1.5), std::invalid_argument);
}

TEST_CASE("round trip psi(phi(u)) = u on [0, 1e3]") {
  for (const auto& n : closed_forms()) {
    CAPTURE(n.describe());
    for (int k = 0; k <= 400; ++k) {
      const double u = 1e3 * std::pow(k / 400.0, 3.0);
      CHECK(std::abs(n.psi(n.phi(u)) - u) <= 1e-10 * std::max(1.0, u));
    }
  }
}

TEST_CASE("psi' is nondecreasing on random pairs") {
  std::mt19937 gen(3);
  auto tab = Nonlinearity::table({0.0, 0.5, 1.0, 2.0, 4.0}, {0.0, 0.6, 0.9, 1.2, 1.4});
  auto all = closed_forms();
  all.push_back(tab);
  for (const auto& n : all) {
    const double top = std::isfinite(n.sup_range()) ? n.sup_range() : 30.0;
    std::uniform_real_distribution<double> U(1e-6, top * (1.0 - 1e-6));
    for (int k = 0; k < 200; ++k) {
      double a = U(gen), b = U(gen);
      if (a > b) std::swap(a, b);
      CHECK(n.psi_prime(a) <= n.psi_prime(b) + 1e-12 * std::max(1.0, n.psi_prime(b)));
    }
  }
}

TEST_CASE("tangent-line inequality for psi") {
  for (const auto& n : closed_forms()) {
    const double top = std::isfinite(n.sup_range()) ? 0.999 * n.sup_range() : 20.0;
    for (int k = 1; k <= 100; ++k) {
      const double w = top * k / 100.0;
      const double half = n.psi(w / 2) + (w / 2) * n.psi_prime(w / 2);
      CHECK(n.psi(w) >= half - 1e-12 * std::max(1.0, n.psi(w)));
      CHECK(half >= (w / 2) * n.psi_prime(w / 2) - 1e-15);
    }
  }
}

TEST_CASE("custom phi is inverted by bisection") {
  const auto n = Nonlinearity::custom([](double u) { return std::log1p(u); }, [](double u) { return 1.0 / (1.0 + u); },
                                      kInf, "log1p");
  for (double u : {0.0, 1e-6, 0.5, 3.0, 100.0}) CHECK(n.psi(n.phi(u)) == doctest::Approx(u).epsilon(1e-10));
  CHECK(n.psi_prime(1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-6));
}

TEST_CASE("tabulated phi is piecewise linear and extends with the last slope") {
  const auto n = Nonlinearity::table({0.0, 1.0, 2.0}, {0.0, 1.0, 1.5});
  CHECK(n.phi(0.5) == doctest::Approx(0.5));
  CHECK(n.phi(1.5) == doctest::Approx(1.25));
  CHECK(n.phi(4.0) == doctest::Approx(2.5));
  CHECK(n.psi(1.25) == doctest::Approx(1.5));
}

}  // TEST_SUITE
