#include "stochlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace stochlab {

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, double abs_tol) {
  if (a == b) return 0.0;
  double error = 0.0;
  double l1 = 0.0;
  // Boost floors its error estimate at sqrt(eps)·|value|; asking for less only
  // forces recursion to full depth. The Kronrod value is far more accurate
  // than that estimate once the floor is reached.
  const double tol = std::max(rel_tol, 4.0 * boost::math::tools::root_epsilon<double>());
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 15, tol, &error, &l1);
  if (!std::isfinite(value)) {
    throw NumericalError("quadrature produced a non-finite value on [" +
                         std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  const double allowed = std::max(abs_tol, 10.0 * tol * std::max(l1, std::abs(value)));
  if (error > allowed && error > 1e-300) {
    throw NumericalError("quadrature did not converge on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "], error estimate " + std::to_string(error));
  }
  return value;
}

double integrate_log(const std::function<double(double)>& log_f, double a, double b,
                     double log_ref) {
  // Steep warps give e-fold lengths far below the interval, so split into
  // panels on which log f moves by at most 2 and drop those that sit far below
  // the reference.
  constexpr double kSpan = 2.0;
  constexpr double kNegligible = 80.0;
  double total = 0.0;
  auto f = [&](double s) { return std::exp(log_f(s) - log_ref); };
  std::function<void(double, double, double, double, int)> panel = [&](double x0, double x1, double l0,
                                                                      double l1, int depth) {
    const double mid = 0.5 * (x0 + x1);
    const double lm = log_f(mid);
    const double hi = std::max({l0, l1, lm});
    if (depth >= 4 && hi < log_ref - kNegligible) return;
    // a -inf endpoint (the pole) is a power-law zero, which the rule handles
    auto gap = [](double x, double y) { return std::isfinite(x) && std::isfinite(y) ? std::abs(x - y) : 0.0; };
    const double spread = std::max({gap(l1, l0), gap(lm, l0), gap(lm, l1)});
    if (depth < 60 && !(spread <= kSpan)) {
      panel(x0, mid, l0, lm, depth + 1);
      panel(mid, x1, lm, l1, depth + 1);
      return;
    }
    // log f moves by at most kSpan here, so a fixed 20-point rule is exact to
    // roundoff; the adaptive error bookkeeping misreports on such panels.
    total += boost::math::quadrature::gauss<double, 20>::integrate(f, x0, x1);
  };
  if (a == b) return 0.0;
  panel(a, b, log_f(a), log_f(b), 0);
  return total;
}

double expm1_ratio(double decay) {
  if (std::abs(decay) < 1e-8) return 1.0 - 0.5 * decay;
  return -std::expm1(-decay) / decay;
}

void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs) {
  const std::size_t n = diag.size();
  if (n == 0) return;
  std::vector<double> c(n, 0.0);
  double denom = diag[0];
  if (denom == 0.0) throw NumericalError("singular tridiagonal system");
  c[0] = n > 1 ? upper[0] / denom : 0.0;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - lower[i] * c[i - 1];
    if (denom == 0.0) throw NumericalError("singular tridiagonal system");
    c[i] = i + 1 < n ? upper[i] / denom : 0.0;
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

// --- MonotoneCubic ----------------------------------------------------------

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) {
    throw std::invalid_argument("monotone cubic needs >= 2 points with matching sizes");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) {
      throw std::invalid_argument("monotone cubic abscissae must be strictly increasing");
    }
  }
  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
  }
  slope_.assign(n, 0.0);
  slope_[0] = delta[0];
  slope_[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      slope_[i] = 0.0;
    } else {
      // weighted harmonic mean (Fritsch-Butland) keeps the interpolant monotone
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      const double w1 = 2.0 * h1 + h0;
      const double w2 = h1 + 2.0 * h0;
      slope_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (delta[i] == 0.0) {
      slope_[i] = slope_[i + 1] = 0.0;
      continue;
    }
    const double a = slope_[i] / delta[i];
    const double b = slope_[i + 1] / delta[i];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      slope_[i] = tau * a * delta[i];
      slope_[i + 1] = tau * b * delta[i];
    }
  }
}

std::size_t MonotoneCubic::segment(double x) const {
  if (!contains(x)) {
    throw std::out_of_range("interpolation point " + std::to_string(x) +
                            " outside tabulated range [" + std::to_string(x_.front()) + ", " +
                            std::to_string(x_.back()) + "]");
  }
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - x_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, x_.size() - 2);
}

double MonotoneCubic::value(double x) const {
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
}

double MonotoneCubic::derivative(double x) const {
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double d00 = 6 * t * t - 6 * t;
  const double d10 = 3 * t * t - 4 * t + 1;
  const double d01 = -6 * t * t + 6 * t;
  const double d11 = 3 * t * t - 2 * t;
  return (d00 * y_[i] + d01 * y_[i + 1]) / h + d10 * slope_[i] + d11 * slope_[i + 1];
}

double MonotoneCubic::second_derivative(double x) const {
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double s00 = 12 * t - 6;
  const double s10 = 6 * t - 4;
  const double s01 = -12 * t + 6;
  const double s11 = 6 * t - 2;
  return (s00 * y_[i] + s01 * y_[i + 1]) / (h * h) + (s10 * slope_[i] + s11 * slope_[i + 1]) / h;
}

// --- Doubling test ------------------------------------------------------------

double DoublingPolicy::truncation(int k) const { return first_radius * std::ldexp(1.0, k); }

std::string to_string(TailStatus s) {
  switch (s) {
    case TailStatus::Convergent: return "convergent";
    case TailStatus::Divergent: return "divergent";
    case TailStatus::Undetermined: return "undetermined";
  }
  return "undetermined";
}

IntegralEstimate decide_doubling(std::vector<Truncation> truncations,
                                 const DoublingPolicy& policy) {
  IntegralEstimate est;
  est.policy = policy;
  est.truncations = std::move(truncations);
  const auto& tr = est.truncations;
  const std::size_t n = tr.size();

  // A partial value past the cap (or overflowed) with increments not decaying
  // is divergence regardless of how many truncations were reached.
  for (std::size_t k = 1; k < n; ++k) {
    if (!std::isfinite(tr[k].partial) || tr[k].partial > policy.divergence_cap) {
      const double prev_inc = k >= 2 ? tr[k - 1].partial - tr[k - 2].partial : 0.0;
      const double inc = tr[k].partial - tr[k - 1].partial;
      if (!std::isfinite(inc) || inc >= prev_inc) {
        est.status = TailStatus::Divergent;
        est.growth_exponent = kInf;
        est.note = "partial value exceeded cap at R = " + std::to_string(tr[k].radius);
        return est;
      }
    }
  }

  const int need = policy.min_consecutive;
  if (n < static_cast<std::size_t>(need) + 2) {
    est.note = "too few truncations for the ratio test";
    return est;
  }

  std::vector<double> ratios;
  for (std::size_t k = 2; k < n; ++k) {
    const double inc_prev = tr[k - 1].partial - tr[k - 2].partial;
    const double inc = tr[k].partial - tr[k - 1].partial;
    if (inc_prev <= 0.0) {
      ratios.push_back(inc <= 0.0 ? 0.0 : kInf);
    } else {
      ratios.push_back(inc / inc_prev);
    }
  }
  const std::size_t m = ratios.size();
  bool decaying = true;
  bool flat_or_growing = true;
  for (std::size_t j = m - static_cast<std::size_t>(need); j < m; ++j) {
    decaying = decaying && ratios[j] <= policy.ratio_threshold;
    flat_or_growing = flat_or_growing && ratios[j] >= 1.0 - policy.flat_tolerance;
  }
  const double last_inc = tr[n - 1].partial - tr[n - 2].partial;
  if (decaying) {
    est.status = TailStatus::Convergent;
    const double q = ratios.back();
    est.limit = tr[n - 1].partial + (q < 1.0 ? last_inc * q / (1.0 - q) : 0.0);
  } else if (flat_or_growing) {
    est.status = TailStatus::Divergent;
    est.growth_exponent = std::isfinite(ratios.back()) ? std::log2(ratios.back()) : kInf;
  } else {
    est.note = "increment ratios between threshold and 1";
  }
  return est;
}

}  // namespace stochlab
