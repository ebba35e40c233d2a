#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stochlab/numerics.hpp"

namespace stochlab {

enum class WarpFamily { Euclidean, Hyperbolic, PowerExp, Table };

std::string to_string(WarpFamily f);

struct WarpValues {
  double w = 0.0;
  double dw = 0.0;
  double ddw = 0.0;
};

/// Parameters of the closed-form warp families. Unused fields are ignored.
struct WarpParams {
  double scale = 1.0;  // Hyperbolic: w(r) = sinh(scale r) / scale
  double beta = 4.0;   // PowerExp:   w(r) = r exp(gamma r^beta / beta)
  double gamma = 1.0;
};

/// Rotationally symmetric model manifold with a pole: metric dr^2 + w(r)^2 dθ^2
/// on R^N. Immutable; all queries are pure.
///
/// Closed-form families expose every quantity in log space so that warps like
/// r exp(r^4/4) stay usable far past the double-precision overflow radius.
class ModelManifold {
 public:
  static ModelManifold euclidean(int dimension);
  static ModelManifold hyperbolic(int dimension, double scale = 1.0);
  static ModelManifold power_exp(int dimension, double beta, double gamma);
  /// Tabulated warp, monotone cubic interpolation. Validates w(0) = 0,
  /// w'(0) = 1 (to `slope_tol`) and positivity on the samples.
  static ModelManifold table(int dimension, std::vector<double> r, std::vector<double> w,
                             double slope_tol = 1e-2);

  int dimension() const { return dimension_; }
  WarpFamily family() const { return family_; }
  const WarpParams& params() const { return params_; }
  /// Largest radius at which the warp can be evaluated (+inf for closed forms).
  double max_radius() const;

  /// (w, w', w''). Throws NumericalError if w overflows double precision;
  /// use log_warp / log_derivative there.
  WarpValues eval_warp(double r) const;
  double log_warp(double r) const;
  /// w'(r) / w(r) for r > 0.
  double log_derivative(double r) const;
  /// w''(r) / w(r); at r = 0 the limit value.
  double curvature_ratio(double r) const;

  /// log of the sphere area ω_{N-1} w(r)^{N-1}.
  double log_sphere_area(double r) const;

  /// V(o, r) = ω_{N-1} ∫_0^r w^{N-1} by adaptive quadrature.
  double volume(double r) const;
  double log_volume(double r) const;

  std::string describe() const;

 private:
  ModelManifold(int dimension, WarpFamily family, WarpParams params);

  int dimension_;
  WarpFamily family_;
  WarpParams params_;
  std::optional<MonotoneCubic> table_;
};

struct RadialCurvature {
  double sectional = 0.0;  // -w''/w
  double ricci = 0.0;      // -(N-1) w''/w
};

RadialCurvature curvature_radial(const ModelManifold& m, double r);

/// Area of the unit (N-1)-sphere, 2 π^{N/2} / Γ(N/2).
double unit_sphere_area(int dimension);

enum class Grading { Uniform, BoundaryRefined };

/// Cell-centred finite-volume discretisation of the ball B_R.
///
/// Cell i spans [r_i, r_{i+1}]. All measures are stored as logarithms; the
/// operators only ever need ratios such as transmissibility / cell volume.
/// Face i sits at node r_i; face 0 is the pole and has zero area.
///
/// The cell point ("centre") is the volume centroid of the cell, not the
/// midpoint. On steep warps the volume hugs the outer face, and a midpoint
/// would sit many e-folds inside it, freezing the exchange with the outer
/// neighbour. On flat warps the two differ by O(h²).
class RadialGrid {
 public:
  RadialGrid(const ModelManifold& m, std::vector<double> nodes);

  double radius() const { return nodes_.back(); }
  std::size_t cells() const { return centers_.size(); }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> centers() const { return centers_; }
  std::span<const double> log_cell_volumes() const { return log_volume_; }
  std::span<const double> log_face_areas() const { return log_area_; }

  /// Σ cell volumes, as a logarithm.
  double log_total_volume() const;
  /// exp of the log cell volumes (may overflow to +inf on fast-growing warps).
  std::vector<double> cell_volumes() const;
  std::vector<double> face_areas() const;

  /// Two-point flux coupling of cell i to its inner neighbour: T_{i}/|K_i|.
  /// Zero for the innermost cell.
  std::span<const double> inner_coupling() const { return inner_; }
  /// Coupling of cell i to its outer neighbour, or to the Dirichlet boundary
  /// value for the last cell: T_{i+1}/|K_i|.
  std::span<const double> outer_coupling() const { return outer_; }
  /// log T at faces 1..M (face M couples the last centre to r = R).
  std::span<const double> log_transmissibility() const { return log_trans_; }

  /// Index of the cell containing r (clamped).
  std::size_t locate(double r) const;
  /// Piecewise-linear interpolation of a cell field between centres.
  double interpolate(std::span<const double> cell_values, double r) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> centers_;
  std::vector<double> log_volume_;
  std::vector<double> log_area_;
  std::vector<double> log_trans_;
  std::vector<double> inner_;
  std::vector<double> outer_;
};

RadialGrid make_grid(const ModelManifold& m, double radius, int cells,
                     Grading grading = Grading::Uniform);

/// Uniform grid with the given spacing; used by exhaustion schedules so that the
/// grids for different radii share their inner cells.
RadialGrid make_grid_with_spacing(const ModelManifold& m, double radius, double spacing);

}  // namespace stochlab
