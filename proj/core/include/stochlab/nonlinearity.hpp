#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stochlab/numerics.hpp"

namespace stochlab {

enum class NonlinearityKind { Power, Saturating, Table, Custom };

std::string to_string(NonlinearityKind k);

enum class PhiMap { Phi, PhiPrime, Psi, PsiPrime };

/// One row of a class-membership report.
struct ClassCheck {
  std::string property;
  bool passed = true;
  double worst_violation = 0.0;
  std::vector<double> witness;  // sample point(s) realising the worst violation
};

struct ClassReport {
  std::vector<ClassCheck> checks;
  bool all_passed() const;
  const ClassCheck* first_failure() const;
};

/// A concave, strictly increasing φ with φ(0) = 0, C¹ away from 0, together
/// with ψ = φ⁻¹ on [0, a), a = sup φ.
///
/// Closed forms are used for the power and saturating kinds; tables and custom
/// callables invert φ by monotone bisection.
class Nonlinearity {
 public:
  /// φ(u) = u^m, 0 < m <= 1.
  static Nonlinearity power(double m);
  /// φ(u) = u / (1 + u); a = 1.
  static Nonlinearity saturating();
  /// Tabulated φ on [0, u_max], piecewise linear (keeps concavity exact),
  /// continued with the last slope beyond the table.
  static Nonlinearity table(std::vector<double> u, std::vector<double> phi);
  /// Arbitrary callable. φ' is taken by central differences when absent;
  /// `sup_range` defaults to a numerical estimate of lim φ.
  static Nonlinearity custom(std::function<double(double)> phi,
                             std::function<double(double)> phi_prime = {},
                             std::optional<double> sup_range = std::nullopt,
                             std::string label = "custom");

  NonlinearityKind kind() const { return kind_; }
  /// Exponent m for the power kind (1 for linear).
  double exponent() const { return m_; }
  bool is_linear() const { return kind_ == NonlinearityKind::Power && m_ == 1.0; }
  /// a = lim_{u→∞} φ(u); +inf when unbounded.
  double sup_range() const { return a_; }

  double phi(double u) const;
  /// May return +inf at u = 0 (fast diffusion).
  double phi_prime(double u) const;
  /// Throws std::domain_error for w >= a.
  double psi(double w) const;
  double psi_prime(double w) const;
  double eval(PhiMap which, double x) const;

  std::string describe() const;

 private:
  Nonlinearity() = default;
  double psi_by_bisection(double w) const;

  NonlinearityKind kind_ = NonlinearityKind::Power;
  double m_ = 1.0;
  double a_ = kInf;
  std::string label_;
  std::shared_ptr<const std::vector<double>> table_u_;
  std::shared_ptr<const std::vector<double>> table_phi_;
  std::size_t table_segment(double u) const;
  std::function<double(double)> phi_fn_;
  std::function<double(double)> phi_prime_fn_;
};

/// Dense-sampling audit of class membership: zero at origin, strict
/// monotonicity, midpoint concavity, inverse consistency, convexity of ψ.
ClassReport validate_class(const Nonlinearity& n, int samples, double u_max = 1e3);

/// Same checks on raw tabulated data, before any interpolant is built.
ClassReport validate_table(const std::vector<double>& u, const std::vector<double>& phi);

}  // namespace stochlab
