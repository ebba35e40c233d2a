#include "stochlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace stochlab {

namespace {

void require_dimension(int n) {
  if (n < 2) throw std::invalid_argument("manifold dimension must be >= 2, got " + std::to_string(n));
}

// log(sinh(x)) for x > 0 without overflow.
double log_sinh(double x) {
  if (x < 20.0) return std::log(std::sinh(x));
  return x - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * x));
}

}  // namespace

std::string to_string(WarpFamily f) {
  switch (f) {
    case WarpFamily::Euclidean: return "euclidean";
    case WarpFamily::Hyperbolic: return "hyperbolic";
    case WarpFamily::PowerExp: return "power_exp";
    case WarpFamily::Table: return "table";
  }
  return "unknown";
}

double unit_sphere_area(int dimension) {
  const double half = 0.5 * dimension;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

ModelManifold::ModelManifold(int dimension, WarpFamily family, WarpParams params)
    : dimension_(dimension), family_(family), params_(params) {}

ModelManifold ModelManifold::euclidean(int dimension) {
  require_dimension(dimension);
  return {dimension, WarpFamily::Euclidean, {}};
}

ModelManifold ModelManifold::hyperbolic(int dimension, double scale) {
  require_dimension(dimension);
  if (!(scale > 0.0)) throw std::invalid_argument("hyperbolic scale must be > 0");
  WarpParams p;
  p.scale = scale;
  return {dimension, WarpFamily::Hyperbolic, p};
}

ModelManifold ModelManifold::power_exp(int dimension, double beta, double gamma) {
  require_dimension(dimension);
  // beta < 2 would make w'' singular at the pole; beta > 2 is the incomplete regime.
  if (!(beta >= 2.0)) throw std::invalid_argument("power_exp beta must be >= 2");
  if (!(gamma > 0.0)) throw std::invalid_argument("power_exp gamma must be > 0");
  WarpParams p;
  p.beta = beta;
  p.gamma = gamma;
  return {dimension, WarpFamily::PowerExp, p};
}

ModelManifold ModelManifold::table(int dimension, std::vector<double> r, std::vector<double> w,
                                   double slope_tol) {
  require_dimension(dimension);
  if (r.size() < 4 || r.size() != w.size()) {
    throw std::invalid_argument("tabulated warp needs >= 4 samples with matching r and w");
  }
  if (r.front() != 0.0) throw std::invalid_argument("tabulated warp must start at r = 0");
  const double wmax = *std::max_element(w.begin(), w.end());
  if (std::abs(w.front()) > 1e-12 * std::max(1.0, wmax)) {
    throw std::invalid_argument("tabulated warp violates w(0) = 0");
  }
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) {
      throw std::invalid_argument("tabulated warp violates positivity at r = " + std::to_string(r[i]));
    }
  }
  ModelManifold m(dimension, WarpFamily::Table, {});
  m.table_.emplace(std::move(r), std::move(w));
  const double slope0 = m.table_->derivative(0.0);
  if (std::abs(slope0 - 1.0) > slope_tol) {
    throw std::invalid_argument("tabulated warp violates w'(0) = 1 (got " + std::to_string(slope0) + ")");
  }
  return m;
}

double ModelManifold::max_radius() const {
  return family_ == WarpFamily::Table ? table_->x_max() : kInf;
}

WarpValues ModelManifold::eval_warp(double r) const {
  if (r < 0.0) throw std::invalid_argument("eval_warp requires r >= 0");
  switch (family_) {
    case WarpFamily::Euclidean:
      return {r, 1.0, 0.0};
    case WarpFamily::Hyperbolic: {
      const double k = params_.scale;
      const double s = std::sinh(k * r);
      if (!std::isfinite(s)) throw NumericalError("hyperbolic warp overflows at r = " + std::to_string(r));
      return {s / k, std::cosh(k * r), k * s};
    }
    case WarpFamily::PowerExp: {
      const double b = params_.beta;
      const double g = params_.gamma;
      const double rb = std::pow(r, b);
      const double e = std::exp(g * rb / b);
      if (!std::isfinite(e)) throw NumericalError("power_exp warp overflows at r = " + std::to_string(r));
      const double ddw = r == 0.0 ? 0.0 : e * g * std::pow(r, b - 1.0) * (1.0 + b + g * rb);
      return {r * e, e * (1.0 + g * rb), ddw};
    }
    case WarpFamily::Table:
      return {table_->value(r), table_->derivative(r), table_->second_derivative(r)};
  }
  return {};
}

double ModelManifold::log_warp(double r) const {
  if (r < 0.0) throw std::invalid_argument("log_warp requires r >= 0");
  if (r == 0.0) return -kInf;
  switch (family_) {
    case WarpFamily::Euclidean: return std::log(r);
    case WarpFamily::Hyperbolic: return log_sinh(params_.scale * r) - std::log(params_.scale);
    case WarpFamily::PowerExp:
      return std::log(r) + params_.gamma * std::pow(r, params_.beta) / params_.beta;
    case WarpFamily::Table: return std::log(table_->value(r));
  }
  return 0.0;
}

double ModelManifold::log_derivative(double r) const {
  if (!(r > 0.0)) throw std::invalid_argument("log_derivative requires r > 0");
  switch (family_) {
    case WarpFamily::Euclidean: return 1.0 / r;
    case WarpFamily::Hyperbolic: {
      const double x = params_.scale * r;
      return params_.scale / std::tanh(x);
    }
    case WarpFamily::PowerExp:
      return 1.0 / r + params_.gamma * std::pow(r, params_.beta - 1.0);
    case WarpFamily::Table: return table_->derivative(r) / table_->value(r);
  }
  return 0.0;
}

double ModelManifold::curvature_ratio(double r) const {
  if (r < 0.0) throw std::invalid_argument("curvature_ratio requires r >= 0");
  switch (family_) {
    case WarpFamily::Euclidean: return 0.0;
    case WarpFamily::Hyperbolic: return params_.scale * params_.scale;
    case WarpFamily::PowerExp: {
      const double b = params_.beta;
      const double g = params_.gamma;
      if (r == 0.0) return b == 2.0 ? g * (1.0 + b) : 0.0;
      return g * std::pow(r, b - 2.0) * (1.0 + b + g * std::pow(r, b));
    }
    case WarpFamily::Table: {
      // one-sided limit at the pole
      const double rr = r == 0.0 ? std::min(1e-6, table_->x_max() * 1e-6) : r;
      return table_->second_derivative(rr) / table_->value(rr);
    }
  }
  return 0.0;
}

double ModelManifold::log_sphere_area(double r) const {
  return std::log(unit_sphere_area(dimension_)) + (dimension_ - 1) * log_warp(r);
}

double ModelManifold::log_volume(double r) const {
  if (r < 0.0) throw std::invalid_argument("volume requires r >= 0");
  if (r == 0.0) return -kInf;
  if (r > max_radius()) throw std::out_of_range("volume radius beyond tabulated warp");
  const int n1 = dimension_ - 1;
  auto log_density = [&](double s) { return s == 0.0 ? -kInf : n1 * log_warp(s); };
  // Reference: the largest log-density among a few samples keeps exp() in range.
  double ref = -kInf;
  for (int k = 1; k <= 16; ++k) ref = std::max(ref, log_density(r * k / 16.0));
  const double integral = integrate_log(log_density, 0.0, r, ref);
  if (!(integral > 0.0)) throw NumericalError("volume quadrature failed at r = " + std::to_string(r));
  return std::log(unit_sphere_area(dimension_)) + ref + std::log(integral);
}

double ModelManifold::volume(double r) const {
  if (r == 0.0) return 0.0;
  return std::exp(log_volume(r));
}

std::string ModelManifold::describe() const {
  std::ostringstream os;
  os << to_string(family_) << "(N=" << dimension_;
  switch (family_) {
    case WarpFamily::Hyperbolic: os << ", scale=" << params_.scale; break;
    case WarpFamily::PowerExp: os << ", beta=" << params_.beta << ", gamma=" << params_.gamma; break;
    case WarpFamily::Table: os << ", samples=" << table_->xs().size(); break;
    default: break;
  }
  os << ")";
  return os.str();
}

RadialCurvature curvature_radial(const ModelManifold& m, double r) {
  const double ratio = m.curvature_ratio(r);
  return {-ratio, -(m.dimension() - 1) * ratio};
}

// --- RadialGrid -----------------------------------------------------------------

RadialGrid::RadialGrid(const ModelManifold& m, std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2 || nodes_.front() != 0.0) {
    throw std::invalid_argument("grid nodes must start at r = 0 and contain at least one cell");
  }
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1])) throw std::invalid_argument("grid nodes must be strictly increasing");
  }
  if (nodes_.back() > m.max_radius()) throw std::out_of_range("grid radius beyond tabulated warp");

  const std::size_t cells = nodes_.size() - 1;
  auto log_area = [&](double r) { return r == 0.0 ? -kInf : m.log_sphere_area(r); };
  log_area_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) log_area_[i] = log_area(nodes_[i]);

  log_volume_.resize(cells);
  centers_.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = nodes_[i];
    const double b = nodes_[i + 1];
    const double ref = std::max({log_area(a), log_area(b), log_area(0.5 * (a + b))});
    const double integral = integrate_log(log_area, a, b, ref);
    log_volume_[i] = ref + std::log(integral);
    // centroid ∫ r A / ∫ A, taken relative to a so the ratio stays well scaled
    auto log_moment = [&](double r) { return r <= a ? -kInf : std::log(r - a) + log_area(r); };
    const double moment = integrate_log(log_moment, a, b, ref);
    centers_[i] = std::clamp(a + moment / integral, a, b);
  }

  // T = 1 / ∫ dr / A(r) between consecutive centres: exact flux for steady
  // radial profiles, so steep warps do not need a resolved boundary layer.
  log_trans_.resize(cells);
  for (std::size_t f = 1; f <= cells; ++f) {
    const double a = centers_[f - 1];
    const double b = f < cells ? centers_[f] : nodes_.back();
    auto neg = [&](double r) { return -log_area(r); };
    const double ref = std::max({neg(a), neg(b), neg(0.5 * (a + b))});
    const double integral = integrate_log(neg, a, b, ref);
    log_trans_[f - 1] = -(ref + std::log(integral));
  }

  inner_.assign(cells, 0.0);
  outer_.assign(cells, 0.0);
  for (std::size_t i = 0; i < cells; ++i) {
    if (i > 0) inner_[i] = std::exp(log_trans_[i - 1] - log_volume_[i]);
    outer_[i] = std::exp(log_trans_[i] - log_volume_[i]);
  }
}

double RadialGrid::log_total_volume() const {
  double acc = -kInf;
  for (double lv : log_volume_) acc = log_add(acc, lv);
  return acc;
}

std::vector<double> RadialGrid::cell_volumes() const {
  std::vector<double> v(log_volume_.size());
  std::transform(log_volume_.begin(), log_volume_.end(), v.begin(), [](double x) { return std::exp(x); });
  return v;
}

std::vector<double> RadialGrid::face_areas() const {
  std::vector<double> v(log_area_.size());
  std::transform(log_area_.begin(), log_area_.end(), v.begin(), [](double x) { return std::exp(x); });
  return v;
}

std::size_t RadialGrid::locate(double r) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
  if (it == nodes_.begin()) return 0;
  const auto i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  return std::min(i, cells() - 1);
}

double RadialGrid::interpolate(std::span<const double> values, double r) const {
  if (values.size() != cells()) throw std::invalid_argument("field size does not match grid");
  if (r <= centers_.front()) return values.front();
  if (r >= centers_.back()) return values.back();
  auto it = std::upper_bound(centers_.begin(), centers_.end(), r);
  const auto j = static_cast<std::size_t>(it - centers_.begin());
  const double t = (r - centers_[j - 1]) / (centers_[j] - centers_[j - 1]);
  return (1.0 - t) * values[j - 1] + t * values[j];
}

RadialGrid make_grid(const ModelManifold& m, double radius, int cells, Grading grading) {
  if (!(radius > 0.0)) throw std::invalid_argument("grid radius must be > 0");
  if (cells < 8) throw std::invalid_argument("grid needs at least 8 cells");
  std::vector<double> nodes(static_cast<std::size_t>(cells) + 1);
  constexpr double stretch = 3.0;
  for (int i = 0; i <= cells; ++i) {
    const double x = static_cast<double>(i) / cells;
    const double s = grading == Grading::Uniform
                         ? x
                         : 1.0 - std::sinh(stretch * (1.0 - x)) / std::sinh(stretch);
    nodes[static_cast<std::size_t>(i)] = radius * s;
  }
  nodes.front() = 0.0;
  nodes.back() = radius;
  return RadialGrid(m, std::move(nodes));
}

RadialGrid make_grid_with_spacing(const ModelManifold& m, double radius, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("grid spacing must be > 0");
  const int cells = std::max(8, static_cast<int>(std::lround(radius / spacing)));
  return make_grid(m, radius, cells, Grading::Uniform);
}

}  // namespace stochlab
