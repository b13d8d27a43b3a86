#pragma once

// The Kropina metric F = |y|_h^2 / (2 h(y,W)) of a navigation pair (h, W) with
// |W|_h = 1, its alpha-beta form F = alpha^2 / beta, and the conversions
// between the two representations.

#include "kropina/geometry.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace kropina {

using ScalarField = std::function<double(const Vec&)>;

/// A covector field b_i(x); partials fall back to central differences.
class CovectorField {
 public:
  using Evaluator = std::function<Vec(const Vec&)>;

  CovectorField() = default;
  CovectorField(int dim, Evaluator eval);

  int dim() const { return dim_; }
  Vec at(const Vec& x) const;
  /// ∂_j b_i at (i,j).
  Mat jacobian(const Vec& x) const;

 private:
  int dim_ = 0;
  Evaluator eval_;
};

struct NavigationData {
  MetricField h;
  VectorField wind;

  int dim() const { return h.dim(); }
};

struct AlphaBetaData {
  MetricField a;
  CovectorField b;
  ScalarField kappa;

  int dim() const { return a.dim(); }
  /// b^2 = a^{ij} b_i b_j
  double b_squared(const Vec& x) const;
};

/// Result of evaluating F at a tangent vector. `value` is empty outside the
/// conic domain h(y,W) > 0 (the tangent is inadmissible, which is not an error).
struct KropinaValue {
  std::optional<double> value;
  double beta_value = 0.0;

  bool admissible() const { return value.has_value(); }
};

inline constexpr double kTolUnit = 1e-8;

/// Conic-boundary guard: h(y,W) must exceed this to count as admissible.
double admissibility_threshold(double y_norm_sq);

KropinaValue kropina_value(const NavigationData& nav, const Tangent& y);
KropinaValue kropina_value(const NavigationData& nav, const Vec& x, const Vec& y);

/// F = alpha^2 / beta evaluated from the alpha-beta representation.
KropinaValue kropina_value(const AlphaBetaData& ab, const Vec& x, const Vec& y);

/// | |y/F - W|_h - 1 |. Throws ValidationError for inadmissible y.
double indicatrix_residual(const NavigationData& nav, const Tangent& y);

/// Navigation data from (a, b): kappa = log(4/b^2), h = e^kappa a,
/// W^i = ½ a^{ij} b_j. Throws ValidationError if b^2 <= 0 or |W|_h deviates
/// from 1 by more than kTolUnit at any validation point. The returned fields
/// throw NumericalError when evaluated where b vanishes.
NavigationData to_navigation(const AlphaBetaData& ab, const std::vector<ChartPoint>& validation_points);

/// (a, b) from navigation data and a free function kappa: a = e^-kappa h,
/// b_i = 2 e^-kappa h_ij W^j.
AlphaBetaData to_alpha_beta(const NavigationData& nav, ScalarField kappa);

/// dF_y as a covector (analytic).
Vec kropina_differential(const NavigationData& nav, const Vec& x, const Vec& y);

/// g_y = ½ Hess_y F^2, by central differences of the analytic gradient of ½F^2
/// with a fourth-order stencil. Requires h(y,W) >= 1e-6 |y|_h^2.
Mat fundamental_tensor(const NavigationData& nav, const Tangent& y);
Mat fundamental_tensor(const NavigationData& nav, const Vec& x, const Vec& y);

/// Largest | |W|_h - 1 | over the given points.
double wind_unit_deviation(const NavigationData& nav, const std::vector<ChartPoint>& points);

}  // namespace kropina
