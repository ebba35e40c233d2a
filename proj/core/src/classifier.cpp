#include "stochlab/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stochlab {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Complete: return "complete";
    case Verdict::Incomplete: return "incomplete";
    case Verdict::Undetermined: return "undetermined";
  }
  return "undetermined";
}

std::string to_string(CriterionOutcome o) {
  switch (o) {
    case CriterionOutcome::Complete: return "complete";
    case CriterionOutcome::Incomplete: return "incomplete";
    case CriterionOutcome::NoConclusion: return "no_conclusion";
    case CriterionOutcome::Undetermined: return "undetermined";
  }
  return "undetermined";
}

namespace {

// Radii at which the doubling test reads partial values, restricted to > r0
// and to the range where the warp is defined.
std::vector<double> truncation_radii(const DoublingPolicy& policy, double r0, double r_max) {
  std::vector<double> radii;
  for (int k = 0; k <= policy.doublings; ++k) {
    const double r = policy.truncation(k);
    if (r > r0 && r <= r_max) radii.push_back(r);
  }
  return radii;
}

// Log-spaced sub-steps covering [a, b] with relative step <= rel.
std::vector<double> log_steps(double a, double b, double rel) {
  const int n = std::max(1, static_cast<int>(std::ceil(std::log(b / a) / rel)));
  std::vector<double> pts(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) pts[static_cast<std::size_t>(i)] = a * std::pow(b / a, static_cast<double>(i) / n);
  pts.back() = b;
  return pts;
}

}  // namespace

IntegralEstimate improper_integral(const std::function<double(double)>& f, double r0,
                                   const DoublingPolicy& policy) {
  std::vector<Truncation> tr;
  double partial = 0.0;
  double left = r0;
  for (double right : truncation_radii(policy, r0, kInf)) {
    // Split each doubling into 16 panels so the adaptive rule sees the shape.
    const auto pts = log_steps(left, right, std::log(right / left) / 16.0 + 1e-300);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double piece = integrate(f, pts[i - 1], pts[i], 1e-10);
      if (!std::isfinite(piece)) {
        throw NumericalError("integrand overflow near r = " + std::to_string(pts[i]));
      }
      partial += piece;
    }
    tr.push_back({right, partial});
    left = right;
    if (partial > policy.divergence_cap) break;
  }
  return decide_doubling(std::move(tr), policy);
}

IntegralEstimate khasminskii_integral(const ModelManifold& m, double r0, const ClassifierConfig& cfg) {
  if (!(r0 > 0.0)) throw std::invalid_argument("khasminskii_integral requires r0 > 0");
  const int n1 = m.dimension() - 1;
  // inner(r) = ∫_{r0}^r (w(s)/w(r))^{N-1} ds, bounded by r - r0, so the sweep
  // never forms w^{N-1} itself.
  double inner = 0.0;
  double outer = 0.0;
  double left = r0;
  double log_w_left = m.log_warp(r0);
  std::vector<Truncation> tr;
  for (double right : truncation_radii(cfg.policy, r0, m.max_radius())) {
    const auto pts = log_steps(left, right, cfg.sweep_step);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double h = pts[i] - pts[i - 1];
      const double log_w = m.log_warp(pts[i]);
      const double decay = n1 * (log_w - log_w_left);
      // exact for log w linear across the step
      const double next = inner * std::exp(-decay) + h * expm1_ratio(decay);
      outer += 0.5 * h * (inner + next);
      inner = next;
      log_w_left = log_w;
    }
    tr.push_back({right, outer});
    left = right;
    if (outer > cfg.policy.divergence_cap) break;
  }
  return decide_doubling(std::move(tr), cfg.policy);
}

VolumeGrowthResult volume_growth_test(const ModelManifold& m, const ClassifierConfig& cfg) {
  VolumeGrowthResult out;
  const int n1 = m.dimension() - 1;
  const double r_max = std::min(m.max_radius(), cfg.policy.last_radius());
  double r = std::min(0.5, r_max);
  double log_v = m.log_volume(r);
  double log_w_left = m.log_warp(r);

  // Advance log V(r) one log-linear step: ∫_r^{r+h} w^{N-1} ≈ w(r+h)^{N-1} h (1-e^{-D})/D.
  auto step_to = [&](double next) {
    const double h = next - r;
    const double log_w = m.log_warp(next);
    const double decay = n1 * (log_w - log_w_left);
    const double log_piece = std::log(unit_sphere_area(m.dimension())) + n1 * log_w +
                             std::log(h * expm1_ratio(decay));
    log_v = log_add(log_v, log_piece);
    r = next;
    log_w_left = log_w;
  };

  // Start where log V >= 1 so the integrand r / log V stays bounded.
  while (log_v < 1.0) {
    const double next = r * (1.0 + cfg.sweep_step);
    if (next > r_max) {
      out.estimate.note = "log V stays below 1 on the available range";
      return out;
    }
    step_to(next);
  }
  out.start_radius = r;

  double partial = 0.0;
  double f_left = r / log_v;
  std::vector<Truncation> tr;
  std::vector<double> gaussian_ratio;
  for (double right : truncation_radii(cfg.policy, r, r_max)) {
    const auto pts = log_steps(r, right, cfg.sweep_step);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double h = pts[i] - r;
      step_to(pts[i]);
      const double f = r / log_v;
      partial += 0.5 * h * (f_left + f);
      f_left = f;
    }
    tr.push_back({right, partial});
    gaussian_ratio.push_back(log_v / (right * right));
  }
  out.estimate = decide_doubling(std::move(tr), cfg.policy);
  out.outcome = out.estimate.status == TailStatus::Divergent   ? CriterionOutcome::Complete
                : out.estimate.status == TailStatus::Convergent ? CriterionOutcome::NoConclusion
                                                                 : CriterionOutcome::Undetermined;
  out.gaussian_bound_fits = gaussian_ratio.size() >= 2;
  for (std::size_t i = 1; i < gaussian_ratio.size(); ++i) {
    out.gaussian_bound_fits = out.gaussian_bound_fits && gaussian_ratio[i] <= gaussian_ratio[i - 1] * (1.0 + 1e-9);
  }
  return out;
}

std::vector<Evidence> curvature_tests(const ModelManifold& m, const ClassifierConfig& cfg) {
  std::vector<Evidence> out;
  const double tail_start = 0.5 * cfg.policy.first_radius;
  const double tail_end = std::min(m.max_radius(), cfg.policy.last_radius());
  auto k_fit = [&](double r) { return std::sqrt(std::max(0.0, m.curvature_ratio(r))); };

  // Item (d): k positive and increasing on the tail, ∫ dr/k < ∞, k' <= C k².
  {
    Evidence e{"B-d", CriterionOutcome::NoConclusion, std::nullopt, ""};
    const auto samples = log_steps(tail_start, tail_end, 1.0 / 64.0);
    bool positive_increasing = true;
    double worst_side = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double k = k_fit(samples[i]);
      positive_increasing = positive_increasing && k > 0.0;
      if (i > 0) {
        const double k_prev = k_fit(samples[i - 1]);
        positive_increasing = positive_increasing && k > k_prev;
        const double dk = (k - k_prev) / (samples[i] - samples[i - 1]);
        if (k > 0.0) worst_side = std::max(worst_side, dk / (k * k));
      }
    }
    if (!positive_increasing) {
      e.note = "fitted k is not positive and increasing on the tail";
    } else {
      try {
        e.estimate = improper_integral([&](double r) { return 1.0 / k_fit(r); }, tail_start, cfg.policy);
        if (e.estimate->status == TailStatus::Convergent) {
          e.outcome = CriterionOutcome::Incomplete;
        } else if (e.estimate->status == TailStatus::Undetermined) {
          e.outcome = CriterionOutcome::Undetermined;
        }
        std::ostringstream os;
        os << "max k'/k^2 on tail = " << worst_side << " (C = " << cfg.curvature_constant << ", "
           << (worst_side <= cfg.curvature_constant ? "satisfied" : "violated") << ")";
        e.note = os.str();
      } catch (const std::exception& ex) {
        e.outcome = CriterionOutcome::Undetermined;
        e.note = ex.what();
      }
    }
    out.push_back(std::move(e));
  }

  // Item (i): Ric >= -(N-1) k² with k = max(1, sqrt(w''/w)); ∫ dr/k = ∞.
  {
    Evidence e{"B-i", CriterionOutcome::NoConclusion, std::nullopt, ""};
    try {
      e.estimate = improper_integral([&](double r) { return 1.0 / std::max(1.0, k_fit(r)); }, tail_start,
                                     cfg.policy);
      if (e.estimate->status == TailStatus::Divergent) {
        e.outcome = CriterionOutcome::Complete;
      } else if (e.estimate->status == TailStatus::Undetermined) {
        e.outcome = CriterionOutcome::Undetermined;
      }
    } catch (const std::exception& ex) {
      e.outcome = CriterionOutcome::Undetermined;
      e.note = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

ClassifierVerdict classify(const ModelManifold& m, const ClassifierConfig& cfg) {
  ClassifierVerdict result;

  try {
    const IntegralEstimate khas = khasminskii_integral(m, cfg.r0, cfg);
    CriterionOutcome o = CriterionOutcome::Undetermined;
    std::vector<std::string> ids;
    if (khas.status == TailStatus::Convergent) {
      o = CriterionOutcome::Incomplete;
      ids = {"B-b", "B-c"};
    } else if (khas.status == TailStatus::Divergent) {
      o = CriterionOutcome::Complete;
      ids = {"B-g", "B-h"};
    } else {
      ids = {"B-b", "B-g"};
    }
    for (const auto& id : ids) result.evidence.push_back({id, o, khas, khas.note});
  } catch (const std::exception& ex) {
    result.evidence.push_back({"B-b", CriterionOutcome::Undetermined, std::nullopt, ex.what()});
  }

  try {
    const VolumeGrowthResult vol = volume_growth_test(m, cfg);
    std::string note = vol.estimate.note;
    if (vol.gaussian_bound_fits) note += (note.empty() ? "" : "; ") + std::string("V <= C exp(a r^2) fits");
    result.evidence.push_back({"B-f", vol.outcome, vol.estimate, note});
  } catch (const std::exception& ex) {
    result.evidence.push_back({"B-f", CriterionOutcome::Undetermined, std::nullopt, ex.what()});
  }

  for (auto& e : curvature_tests(m, cfg)) result.evidence.push_back(std::move(e));

  bool any_complete = false;
  bool any_incomplete = false;
  for (const auto& e : result.evidence) {
    any_complete = any_complete || e.outcome == CriterionOutcome::Complete;
    any_incomplete = any_incomplete || e.outcome == CriterionOutcome::Incomplete;
  }
  result.conflict = any_complete && any_incomplete;
  if (result.conflict) {
    result.verdict = Verdict::Undetermined;
  } else if (any_incomplete) {
    result.verdict = Verdict::Incomplete;
  } else if (any_complete) {
    result.verdict = Verdict::Complete;
  }
  return result;
}

}  // namespace stochlab
