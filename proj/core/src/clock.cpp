#include "stochlab/clock.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stochlab {

void ClockSpec::validate() const {
  const double a = nonlinearity.sup_range();
  if (!(alpha > 0.0)) throw std::invalid_argument("clock rate alpha must be > 0");
  if (!(epsilon > 0.0 && epsilon < a)) throw std::invalid_argument("clock seed epsilon must lie in (0, a)");
  if (target && !(*target > epsilon && *target < a)) {
    throw std::invalid_argument("clock target b must lie in (epsilon, a)");
  }
}

namespace {

// ∫_ε^x ψ'(y)/y dy for α = 1.
double unit_rate_F(const Nonlinearity& n, double eps, double x) {
  if (x == eps) return 0.0;
  if (n.kind() == NonlinearityKind::Power) {
    const double m = n.exponent();
    if (m == 1.0) return std::log(x) - std::log(eps);  // x / eps may overflow
    // ψ'(y)/y = (1/m) y^{1/m - 2}
    const double p = (1.0 - m) / m;
    return (std::pow(x, p) - std::pow(eps, p)) / (1.0 - m);
  }
  if (std::isinf(n.sup_range())) {
    // y = ε e^s gives uniform relative accuracy over decades.
    const double top = std::log(x) - std::log(eps);
    return integrate([&](double s) { return n.psi_prime(eps * std::exp(s)); }, 0.0, top, 1e-12);
  }
  // Finite a: ψ' blows up at the asymptote. With y = a − (a − ε)e^{−s} the
  // integrand becomes ψ'(y)(a − y)/y, smooth in s, and integrate_log copes
  // with its exponential growth.
  const double a = n.sup_range();
  const double top = std::log((a - eps) / (a - x));
  auto log_f = [&](double s) {
    const double gap = (a - eps) * std::exp(-s);
    const double y = a - gap;
    return std::log(n.psi_prime(y)) + std::log(gap) - std::log(y);
  };
  const double ref = log_f(top);
  return std::exp(ref) * integrate_log(log_f, 0.0, top, ref);
}

}  // namespace

double big_F(const ClockSpec& spec, double x) {
  spec.validate();
  if (!(x >= spec.epsilon && x < spec.nonlinearity.sup_range())) {
    throw std::invalid_argument("big_F requires epsilon <= x < a, got x = " + std::to_string(x));
  }
  return unit_rate_F(spec.nonlinearity, spec.epsilon, x) / spec.alpha;
}

double clock_f(const ClockSpec& spec, double t) {
  spec.validate();
  if (t < 0.0) throw std::invalid_argument("clock_f requires t >= 0");
  const double eps = spec.epsilon;
  if (t == 0.0) return eps;
  const double a = spec.nonlinearity.sup_range();
  const double target = t * spec.alpha;  // solve unit-rate F(x) = α t
  auto F = [&](double x) { return unit_rate_F(spec.nonlinearity, eps, x); };

  // Bracket: F(lo) <= target < F(hi). F is strictly increasing with F(a-) = +inf.
  double lo = eps;
  double hi = std::isinf(a) ? 2.0 * eps : eps + 0.5 * (a - eps);
  for (int k = 0; F(hi) <= target; ++k) {
    lo = hi;
    hi = std::isinf(a) ? 2.0 * hi : a - (a - eps) * std::ldexp(1.0, -(k + 2));
    if (!std::isfinite(hi)) {
      throw NumericalError("clock amplitude overflows double precision before t = " + std::to_string(t));
    }
    if (k > 2000 || hi >= a) {
      throw NumericalError("clock_f failed to bracket F^{-1}(" + std::to_string(t) + ")");
    }
  }
  // A few bisection steps, then safeguarded Newton with F'(x) = ψ'(x)/x.
  for (int k = 0; k < 8; ++k) {
    const double mid = 0.5 * (lo + hi);
    (F(mid) <= target ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double g = F(x) - target;
    if (g <= 0.0) lo = x; else hi = x;
    const double slope = spec.nonlinearity.psi_prime(x) / x;
    double next = slope > 0.0 ? x - g / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x)) || hi - lo <= 1e-15 * hi) {
      return next;
    }
    x = next;
  }
  throw NumericalError("clock_f root finder did not converge at t = " + std::to_string(t));
}

ExceedanceTime time_to_exceed(const ClockSpec& spec) {
  spec.validate();
  if (!spec.target) throw std::invalid_argument("time_to_exceed needs a target level b");
  const double b = *spec.target;
  if (!(b > 2.0 * spec.epsilon)) {
    throw std::invalid_argument("time_to_exceed needs b > 2 epsilon (b = " + std::to_string(b) +
                                ", epsilon = " + std::to_string(spec.epsilon) + ")");
  }
  ExceedanceTime out;
  out.unit_rate_time = unit_rate_F(spec.nonlinearity, spec.epsilon, b - spec.epsilon);
  out.time = out.unit_rate_time / spec.alpha;
  return out;
}

double witness_boundary(const ClockSpec& spec, double u0_sup, double t) {
  if (t < 0.0 || u0_sup < 0.0) throw std::invalid_argument("witness_boundary requires t, u0_sup >= 0");
  const auto& n = spec.nonlinearity;
  const double level = std::max(clock_f(spec, t), n.phi(u0_sup));
  // f(0) <= φ(u0_sup) returns u0_sup exactly instead of ψ(φ(u0_sup)).
  if (level == n.phi(u0_sup)) return u0_sup;
  return n.psi(level);
}

}  // namespace stochlab
