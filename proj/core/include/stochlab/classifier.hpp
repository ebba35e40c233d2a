#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stochlab/geometry.hpp"
#include "stochlab/numerics.hpp"

namespace stochlab {

enum class Verdict { Complete, Incomplete, Undetermined };

std::string to_string(Verdict v);

/// What a single criterion says about the manifold.
enum class CriterionOutcome { Complete, Incomplete, NoConclusion, Undetermined };

std::string to_string(CriterionOutcome o);

/// Criterion ids: B-b, B-c (Khas'minskii integral finite), B-d (curvature below
/// -k², ∫1/k < ∞), B-f (volume growth), B-g, B-h (Khas'minskii integral
/// infinite), B-i (Ricci above -(N-1)k², ∫1/k = ∞).
struct Evidence {
  std::string criterion;
  CriterionOutcome outcome = CriterionOutcome::Undetermined;
  std::optional<IntegralEstimate> estimate;
  std::string note;
};

struct ClassifierVerdict {
  Verdict verdict = Verdict::Undetermined;
  std::vector<Evidence> evidence;
  bool conflict = false;
};

struct ClassifierConfig {
  DoublingPolicy policy;
  double r0 = 1.0;
  double curvature_constant = 10.0;  // C in k' <= C k²
  /// Relative step of the log-space outward sweeps.
  double sweep_step = 1.0 / 1024.0;
};

/// ∫_{r0}^∞ f by the doubling test. Throws NumericalError (naming the radius)
/// if the integrand overflows.
IntegralEstimate improper_integral(const std::function<double(double)>& f, double r0,
                                   const DoublingPolicy& policy = {});

/// I = ∫_{r0}^∞ w^{1-N}(r) ∫_{r0}^r w^{N-1}(s) ds dr, single outward sweep in log space.
IntegralEstimate khasminskii_integral(const ModelManifold& m, double r0,
                                      const ClassifierConfig& cfg = {});

struct VolumeGrowthResult {
  CriterionOutcome outcome = CriterionOutcome::Undetermined;
  IntegralEstimate estimate;
  double start_radius = 0.0;        // where log V first exceeds 1
  bool gaussian_bound_fits = false;  // log V / r² nonincreasing on the tail samples
};

/// ∫^∞ r / log V(o, r) dr. Divergence is evidence of completeness; convergence
/// alone decides nothing.
VolumeGrowthResult volume_growth_test(const ModelManifold& m, const ClassifierConfig& cfg = {});

/// Items B-d and B-i with k fitted from the radial curvature on the tail.
std::vector<Evidence> curvature_tests(const ModelManifold& m, const ClassifierConfig& cfg = {});

ClassifierVerdict classify(const ModelManifold& m, const ClassifierConfig& cfg = {});

}  // namespace stochlab
