#pragma once

#include <optional>

#include "stochlab/nonlinearity.hpp"

namespace stochlab {

/// Amplitude f(t) of the growing subsolution f(t)·v(x):
///   f' = α f / ψ'(f),  f(0) = ε,
/// evaluated through its integral inverse F(x) = (1/α) ∫_ε^x ψ'(y)/y dy.
struct ClockSpec {
  Nonlinearity nonlinearity;
  double alpha = 1.0;
  double epsilon = 0.1;
  std::optional<double> target;  // level b with ε < b < a

  /// Throws std::invalid_argument unless 0 < ε < a, α > 0 and ε < b < a.
  void validate() const;
};

/// F(x); x in [ε, a).
double big_F(const ClockSpec& spec, double x);

/// f(t) = F⁻¹(t) by bracketing bisection followed by Newton.
double clock_f(const ClockSpec& spec, double t);

struct ExceedanceTime {
  double time = 0.0;         // S = F(b - ε)
  double unit_rate_time = 0.0;  // S₀ for α = 1, so S = S₀ / α
  /// α such that S₀ / α equals the horizon; any larger α fits S below it.
  double alpha_for_horizon(double horizon) const { return unit_rate_time / horizon; }
};

/// Time S at which f reaches b - ε. Requires a target with b > 2ε.
ExceedanceTime time_to_exceed(const ClockSpec& spec);

/// ψ(max(f(t), φ(u0_sup))): the Dirichlet data of the witness construction.
double witness_boundary(const ClockSpec& spec, double u0_sup, double t);

}  // namespace stochlab
