#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised when a numerical procedure fails to deliver a result (non-convergence,
/// overflow, step underflow). Precondition violations use std::invalid_argument.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// log(exp(a) + exp(b)) without overflow.
double log_add(double a, double b);

/// Adaptive Gauss-Kronrod (15-point) quadrature on a finite interval.
/// Throws NumericalError when the error estimate stays above `rel_tol`.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-12, double abs_tol = 0.0);

/// ∫_a^b exp(g(s) - g_ref) ds where g is a log-density; g_ref keeps it finite.
/// Panels are refined until g moves by at most 2 across each, then a fixed
/// Gauss rule is applied, so the result is accurate to a few ulps relative.
double integrate_log(const std::function<double(double)>& log_f, double a,
                     double b, double log_ref);

/// Exact ∫_0^h exp(-D s/h) ds / h for the log-linear interpolant over one step:
/// (1 - e^{-D}) / D, stable for tiny and huge D.
double expm1_ratio(double decay);

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored. Requires a nonsingular, diagonally dominant matrix.
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<double> rhs);

/// Fritsch-Carlson monotone cubic Hermite interpolant.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  bool contains(double x) const { return x >= x_.front() && x <= x_.back(); }
  std::span<const double> xs() const { return x_; }
  std::span<const double> ys() const { return y_; }

 private:
  std::size_t segment(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slope_;
};

// --- Doubling test for improper integrals and tail behaviour -----------------

/// Parameters of the doubling-increment ratio test shared by the classifier
/// and the shooting detector.
struct DoublingPolicy {
  double first_radius = 8.0;
  int doublings = 6;          // truncations R_k = first_radius * 2^k, k = 0..doublings
  double ratio_threshold = 0.7;
  int min_consecutive = 3;    // k_min
  double divergence_cap = 1e12;
  double flat_tolerance = 1e-6;  // ratio >= 1 - flat_tolerance counts as nondecreasing

  double truncation(int k) const;
  double last_radius() const { return truncation(doublings); }
};

enum class TailStatus { Convergent, Divergent, Undetermined };

std::string to_string(TailStatus s);

struct Truncation {
  double radius = 0.0;
  double partial = 0.0;
};

/// Outcome of an improper-integral (or bounded-growth) decision.
struct IntegralEstimate {
  std::vector<Truncation> truncations;
  TailStatus status = TailStatus::Undetermined;
  double limit = kInf;              // meaningful when Convergent
  double growth_exponent = 0.0;     // log2 of the last increment ratio, when Divergent
  DoublingPolicy policy;
  std::string note;
};

/// Decides convergence of a nondecreasing sequence of partial values observed
/// at the policy's doubling radii. Partial values may be +inf (overflow past cap).
IntegralEstimate decide_doubling(std::vector<Truncation> truncations,
                                 const DoublingPolicy& policy);

}  // namespace stochlab
