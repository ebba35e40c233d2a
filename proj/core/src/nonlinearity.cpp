#include "stochlab/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stochlab {

namespace {

constexpr double kConcavityTol = 1e-12;

void enforce(const ClassReport& report, const std::string& what) {
  if (const ClassCheck* bad = report.first_failure()) {
    std::ostringstream os;
    os << what << " is not an admissible nonlinearity: " << bad->property
       << " fails (worst violation " << bad->worst_violation << ")";
    throw std::invalid_argument(os.str());
  }
}

ClassCheck check_zero(double phi0) {
  ClassCheck c{"zero_at_origin", true, std::abs(phi0), {0.0}};
  c.passed = std::abs(phi0) <= 1e-12;
  return c;
}

ClassCheck check_monotone(const std::vector<double>& u, const std::vector<double>& f) {
  ClassCheck c{"strictly_increasing", true, 0.0, {}};
  for (std::size_t i = 1; i < u.size(); ++i) {
    const double drop = f[i - 1] - f[i];
    if (drop >= 0.0 && (c.passed || drop > c.worst_violation)) {
      c.passed = false;
      c.worst_violation = std::max(drop, 0.0);
      c.witness = {u[i - 1], u[i]};
    }
  }
  return c;
}

}  // namespace

std::string to_string(NonlinearityKind k) {
  switch (k) {
    case NonlinearityKind::Power: return "power";
    case NonlinearityKind::Saturating: return "saturating";
    case NonlinearityKind::Table: return "table";
    case NonlinearityKind::Custom: return "custom";
  }
  return "unknown";
}

bool ClassReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ClassCheck& c) { return c.passed; });
}

const ClassCheck* ClassReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

Nonlinearity Nonlinearity::power(double m) {
  if (!(m > 0.0 && m <= 1.0)) {
    throw std::invalid_argument("power nonlinearity needs 0 < m <= 1, got " + std::to_string(m));
  }
  Nonlinearity n;
  n.kind_ = NonlinearityKind::Power;
  n.m_ = m;
  n.a_ = kInf;
  return n;
}

Nonlinearity Nonlinearity::saturating() {
  Nonlinearity n;
  n.kind_ = NonlinearityKind::Saturating;
  n.a_ = 1.0;
  return n;
}

ClassReport validate_table(const std::vector<double>& u, const std::vector<double>& phi) {
  ClassReport report;
  if (u.size() != phi.size() || u.size() < 3) {
    report.checks.push_back({"well_formed", false, 0.0, {}});
    return report;
  }
  report.checks.push_back(check_zero(u.front() == 0.0 ? phi.front() : phi.front() + 1.0));
  report.checks.push_back(check_monotone(u, phi));
  // Concavity on consecutive triples: slopes must not increase.
  ClassCheck conc{"concave", true, 0.0, {}};
  for (std::size_t i = 1; i + 1 < u.size(); ++i) {
    const double s0 = (phi[i] - phi[i - 1]) / (u[i] - u[i - 1]);
    const double s1 = (phi[i + 1] - phi[i]) / (u[i + 1] - u[i]);
    const double excess = s1 - s0;
    if (excess > kConcavityTol * std::max(1.0, std::abs(s0)) && excess > conc.worst_violation) {
      conc.passed = false;
      conc.worst_violation = excess;
      conc.witness = {u[i - 1], u[i], u[i + 1]};
    }
  }
  report.checks.push_back(conc);
  return report;
}

Nonlinearity Nonlinearity::table(std::vector<double> u, std::vector<double> phi) {
  enforce(validate_table(u, phi), "tabulated phi");
  Nonlinearity n;
  n.kind_ = NonlinearityKind::Table;
  n.a_ = kInf;  // linear continuation past the last sample
  const double top = u.back();
  n.table_u_ = std::make_shared<const std::vector<double>>(std::move(u));
  n.table_phi_ = std::make_shared<const std::vector<double>>(std::move(phi));
  enforce(validate_class(n, 1000, top), "tabulated phi");
  return n;
}

Nonlinearity Nonlinearity::custom(std::function<double(double)> phi,
                                  std::function<double(double)> phi_prime,
                                  std::optional<double> sup_range, std::string label) {
  if (!phi) throw std::invalid_argument("custom nonlinearity needs a callable phi");
  Nonlinearity n;
  n.kind_ = NonlinearityKind::Custom;
  n.label_ = std::move(label);
  n.phi_fn_ = std::move(phi);
  n.phi_prime_fn_ = std::move(phi_prime);
  if (sup_range) {
    n.a_ = *sup_range;
  } else {
    // lim φ estimated along u = 10^k; treated as unbounded while still growing.
    const double big = n.phi_fn_(1e12);
    const double bigger = n.phi_fn_(1e15);
    n.a_ = (bigger - big) <= 1e-9 * std::abs(bigger) ? bigger : kInf;
  }
  if (!(n.a_ > 0.0)) throw std::invalid_argument("custom nonlinearity has non-positive range");
  enforce(validate_class(n, 1000), "custom phi '" + n.label_ + "'");
  return n;
}

double Nonlinearity::phi(double u) const {
  if (u < 0.0) throw std::domain_error("phi requires u >= 0");
  switch (kind_) {
    case NonlinearityKind::Power: return m_ == 1.0 ? u : std::pow(u, m_);
    case NonlinearityKind::Saturating: return u / (1.0 + u);
    case NonlinearityKind::Table: {
      const auto& x = *table_u_;
      const auto& y = *table_phi_;
      const std::size_t i = table_segment(u);
      return y[i] + (y[i + 1] - y[i]) / (x[i + 1] - x[i]) * (u - x[i]);
    }
    case NonlinearityKind::Custom: return phi_fn_(u);
  }
  return 0.0;
}

double Nonlinearity::phi_prime(double u) const {
  if (u < 0.0) throw std::domain_error("phi_prime requires u >= 0");
  switch (kind_) {
    case NonlinearityKind::Power:
      if (m_ == 1.0) return 1.0;
      return u == 0.0 ? kInf : m_ * std::pow(u, m_ - 1.0);
    case NonlinearityKind::Saturating: return 1.0 / ((1.0 + u) * (1.0 + u));
    case NonlinearityKind::Table: {
      const auto& x = *table_u_;
      const auto& y = *table_phi_;
      const std::size_t i = table_segment(u);
      return (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    }
    case NonlinearityKind::Custom: {
      if (phi_prime_fn_) return phi_prime_fn_(u);
      const double h = 1e-6 * std::max(1.0, u);
      if (u < h) return (phi_fn_(u + h) - phi_fn_(u)) / h;
      return (phi_fn_(u + h) - phi_fn_(u - h)) / (2.0 * h);
    }
  }
  return 0.0;
}

std::size_t Nonlinearity::table_segment(double u) const {
  const auto& x = *table_u_;
  auto it = std::upper_bound(x.begin(), x.end(), u);
  const std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
  return std::min(i, x.size() - 2);
}

double Nonlinearity::psi_by_bisection(double w) const {
  double lo = 0.0;
  double hi = 1.0;
  while (phi(hi) < w) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("psi bracket overflow");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) < w ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double Nonlinearity::psi(double w) const {
  if (w < 0.0) throw std::domain_error("psi requires w >= 0");
  if (w >= a_) {
    throw std::domain_error("psi requested at w = " + std::to_string(w) +
                            " outside the range of phi (a = " + std::to_string(a_) + ")");
  }
  switch (kind_) {
    case NonlinearityKind::Power: return m_ == 1.0 ? w : std::pow(w, 1.0 / m_);
    case NonlinearityKind::Saturating: return w / (1.0 - w);
    case NonlinearityKind::Table: {
      const auto& x = *table_u_;
      const auto& y = *table_phi_;
      auto it = std::upper_bound(y.begin(), y.end(), w);
      std::size_t i = it == y.begin() ? 0 : static_cast<std::size_t>(it - y.begin()) - 1;
      i = std::min(i, y.size() - 2);
      return x[i] + (w - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i]);
    }
    case NonlinearityKind::Custom: return psi_by_bisection(w);
  }
  return 0.0;
}

double Nonlinearity::psi_prime(double w) const {
  if (w < 0.0) throw std::domain_error("psi_prime requires w >= 0");
  if (w >= a_) throw std::domain_error("psi_prime requested outside the range of phi");
  switch (kind_) {
    case NonlinearityKind::Power:
      if (m_ == 1.0) return 1.0;
      return (1.0 / m_) * std::pow(w, 1.0 / m_ - 1.0);
    case NonlinearityKind::Saturating: return 1.0 / ((1.0 - w) * (1.0 - w));
    default: {
      const double d = phi_prime(psi(w));
      return std::isinf(d) ? 0.0 : 1.0 / d;
    }
  }
}

double Nonlinearity::eval(PhiMap which, double x) const {
  switch (which) {
    case PhiMap::Phi: return phi(x);
    case PhiMap::PhiPrime: return phi_prime(x);
    case PhiMap::Psi: return psi(x);
    case PhiMap::PsiPrime: return psi_prime(x);
  }
  return 0.0;
}

std::string Nonlinearity::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case NonlinearityKind::Power: os << "power(m=" << m_ << ")"; break;
    case NonlinearityKind::Saturating: os << "saturating(u/(1+u))"; break;
    case NonlinearityKind::Table: os << "table(" << table_u_->size() << " samples)"; break;
    case NonlinearityKind::Custom: os << "custom(" << label_ << ")"; break;
  }
  return os.str();
}

ClassReport validate_class(const Nonlinearity& n, int samples, double u_max) {
  if (samples < 3) throw std::invalid_argument("validate_class needs >= 3 samples");
  ClassReport report;
  std::vector<double> u(static_cast<std::size_t>(samples));
  std::vector<double> f(u.size());
  // Quadratic spacing resolves the steep region near the origin.
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(samples - 1);
    u[i] = u_max * x * x;
    f[i] = n.phi(u[i]);
  }
  report.checks.push_back(check_zero(f.front()));
  report.checks.push_back(check_monotone(u, f));

  ClassCheck conc{"concave", true, 0.0, {}};
  for (std::size_t i = 0; i + 2 < u.size(); ++i) {
    const double x = u[i];
    const double y = u[i + 2];
    const double mid = n.phi(0.5 * (x + y));
    const double chord = 0.5 * (f[i] + f[i + 2]);
    const double excess = chord - mid;
    if (excess > kConcavityTol * std::max(1.0, std::abs(chord)) && excess > conc.worst_violation) {
      conc.passed = false;
      conc.worst_violation = excess;
      conc.witness = {x, 0.5 * (x + y), y};
    }
  }
  report.checks.push_back(conc);

  ClassCheck inv{"inverse_consistency", true, 0.0, {}};
  ClassCheck cvx{"psi_prime_nondecreasing", true, 0.0, {}};
  double prev_w = -1.0;
  double prev_d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double w = f[i];
    if (!(w < n.sup_range())) continue;
    double back = 0.0;
    try {
      back = n.psi(w);
    } catch (const std::exception&) {
      inv.passed = false;
      inv.witness = {u[i]};
      continue;
    }
    const double err = std::abs(back - u[i]) / std::max(1.0, u[i]);
    if (err > 1e-8 && err > inv.worst_violation) {
      inv.passed = false;
      inv.worst_violation = err;
      inv.witness = {u[i]};
    }
    if (w > 0.0) {
      const double d = n.psi_prime(w);
      if (prev_w > 0.0 && w > prev_w) {
        const double drop = prev_d - d;
        if (drop > 1e-9 * std::max(1.0, std::abs(prev_d)) && drop > cvx.worst_violation) {
          cvx.passed = false;
          cvx.worst_violation = drop;
          cvx.witness = {prev_w, w};
        }
      }
      prev_w = w;
      prev_d = d;
    }
  }
  report.checks.push_back(inv);
  report.checks.push_back(cvx);
  return report;
}

}  // namespace stochlab
