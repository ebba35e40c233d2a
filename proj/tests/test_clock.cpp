#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "stochlab/clock.hpp"

using namespace stochlab;

namespace {

ClockSpec spec(double m, double alpha = 1.0, double eps = 0.1, std::optional<double> b = std::nullopt) {
  return ClockSpec{Nonlinearity::power(m), alpha, eps, b};
}

// Forward RK4 on f' = α f / ψ'(f); the library never steps this ODE.
double rk4(const ClockSpec& s, double t, int steps = 4000) {
  auto rhs = [&](double f) { return s.alpha * f / s.nonlinearity.psi_prime(f); };
  double f = s.epsilon;
  const double h = t / steps;
  for (int k = 0; k < steps; ++k) {
    const double k1 = rhs(f), k2 = rhs(f + 0.5 * h * k1), k3 = rhs(f + 0.5 * h * k2), k4 = rhs(f + h * k3);
    f += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
  }
  return f;
}

}  // namespace

TEST_SUITE("clock") {

TEST_CASE("F has the power-law antiderivative") {
  CHECK(big_F(spec(0.5), 0.6) == doctest::Approx(1.0).epsilon(1e-12));
  for (double m : {0.3, 0.5, 0.9}) {
    for (double alpha : {0.5, 1.0, 3.0}) {
      const auto s = spec(m, alpha);
      const double q = (1.0 - m) / m;
      for (double x : {0.1, 0.2, 1.0, 7.0}) {
        const double exact = (std::pow(x, q) - std::pow(0.1, q)) / (alpha * (1.0 - m));
        CHECK(big_F(s, x) == doctest::Approx(exact).epsilon(1e-10));
      }
    }
  }
  // m = 1: F(x) = log(x/ε)/α
  CHECK(big_F(spec(1.0, 2.0), 0.1 * std::exp(3.0)) == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(big_F(spec(0.3), 0.1) == 0.0);
}

TEST_CASE("F blows up at the asymptote of a saturating phi") {
  ClockSpec s{Nonlinearity::saturating(), 1.0, 0.1, std::nullopt};
  double prev = 0.0;
  for (int k = 2; k <= 6; ++k) {
    const double v = big_F(s, 1.0 - std::pow(10.0, -k));
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev > 1e3);
  CHECK_THROWS_AS(big_F(s, 1.0), std::invalid_argument);
}

TEST_CASE("f(t) = eps + t/2 for the square root") {
  const auto s = spec(0.5);
  CHECK(clock_f(s, 0.0) == 0.1);
  CHECK(clock_f(s, 2.0) == doctest::Approx(1.1).epsilon(1e-12));
  for (int k = 0; k <= 1000; ++k) {
    const double t = 0.1 * k;
    CHECK(std::abs(clock_f(s, t) - (0.1 + t / 2)) <= 1e-9);
  }
}

TEST_CASE("f agrees with forward integration of the ODE") {
  for (double m : {0.3, 0.5, 0.9, 1.0}) {
    const auto s = spec(m);
    for (double t : {0.5, 1.0, 2.0}) CHECK(clock_f(s, t) == doctest::Approx(rk4(s, t)).epsilon(1e-9));
  }
}

TEST_CASE("central differences of f match alpha f / psi'(f)") {
  for (double m : {0.3, 0.5, 0.9, 1.0}) {
    const auto s = spec(m, 1.0);
    for (int k = 0; k < 50; ++k) {
      const double t = 0.01 + 0.1 * k;
      const double h = 1e-5;
      const double fd = (clock_f(s, t + h) - clock_f(s, t - h)) / (2 * h);
      const double f = clock_f(s, t);
      CHECK(fd == doctest::Approx(s.alpha * f / s.nonlinearity.psi_prime(f)).epsilon(1e-5));
    }
  }
}

TEST_CASE("F inverts f on [0, 1e3]") {
  for (double m : {0.3, 0.5, 0.9, 1.0}) {
    const auto s = spec(m);
    for (int k = 0; k <= 60; ++k) {
      const double t = k == 0 ? 0.0 : std::pow(10.0, -3.0 + 6.0 * k / 60.0);
      CAPTURE(m);
      CAPTURE(t);
      double f = 0.0;
      try {
        f = clock_f(s, t);
      } catch (const NumericalError&) {
        // m = 1 and m = 0.3 leave double range well before t = 1e3
        CHECK(big_F(s, std::numeric_limits<double>::max()) < t);
        break;
      }
      CHECK(std::abs(big_F(s, f) - t) <= 1e-9 * std::max(1.0, t));
    }
  }
}

TEST_CASE("rate scaling f_alpha(t) = f_1(alpha t)") {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> A(0.1, 5.0), T(0.0, 10.0);
  for (int k = 0; k < 20; ++k) {
    const double alpha = A(gen), t = T(gen);
    for (double m : {0.5, 0.9}) {
      const double lhs = clock_f(spec(m, alpha), t);
      const double rhs = clock_f(spec(m, 1.0), alpha * t);
      CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, rhs));
    }
  }
}

TEST_CASE("saturating clock stays below a and approaches it") {
  ClockSpec s{Nonlinearity::saturating(), 1.0, 0.1, std::nullopt};
  for (double delta : {1e-1, 1e-2, 1e-3}) {
    const double tf = big_F(s, 1.0 - delta);
    for (double t : {tf, 2 * tf}) {
      const double f = clock_f(s, t);
      CHECK(f < 1.0);
      CHECK(1.0 - f <= delta * (1 + 1e-9));
    }
  }
}

TEST_CASE("time to exceed") {
  const auto s = spec(0.5, 1.0, 0.1, 0.7);
  const auto S = time_to_exceed(s);
  CHECK(S.time == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(time_to_exceed(spec(0.5, 2.0, 0.1, 0.7)).time == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(S.alpha_for_horizon(0.25) == doctest::Approx(4.0));
  CHECK_THROWS_AS(time_to_exceed(spec(0.5, 1.0, 0.1, 0.15)), std::invalid_argument);
  CHECK_THROWS_AS(time_to_exceed(spec(0.5)), std::invalid_argument);
}

TEST_CASE("witness boundary data") {
  const auto s = spec(0.5);
  CHECK(witness_boundary(s, 0.0, 2.0) == doctest::Approx(1.21).epsilon(1e-12));
  CHECK(witness_boundary(s, 25.0, 0.0) == doctest::Approx(25.0).epsilon(1e-14));
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> T(0.0, 20.0);
  for (int k = 0; k < 20; ++k) {
    double a = T(gen), b = T(gen);
    if (a > b) std::swap(a, b);
    CHECK(witness_boundary(s, 0.3, a) <= witness_boundary(s, 0.3, b));
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(spec(0.5, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(spec(0.5, 1.0, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS((ClockSpec{Nonlinearity::saturating(), 1.0, 1.0, std::nullopt}.validate()), std::invalid_argument);
  CHECK_THROWS_AS(spec(0.5, 1.0, 0.1, 0.05).validate(), std::invalid_argument);
  CHECK_NOTHROW(spec(0.5, 1.0, 0.1, 0.7).validate());
}

}  // TEST_SUITE
