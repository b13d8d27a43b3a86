#include "kropina/zermelo.hpp"

#include "kropina/errors.hpp"

#include <cmath>
#include <limits>

namespace kropina {

CovectorField::CovectorField(int dim, Evaluator eval) : dim_(dim), eval_(std::move(eval)) {
  if (dim_ <= 0) throw ValidationError("covector field dimension must be positive");
}

Vec CovectorField::at(const Vec& x) const {
  if (x.size() != dim_) throw ValidationError("covector field evaluated at a point of wrong dimension");
  Vec b = eval_(x);
  if (b.size() != dim_ || !b.allFinite()) throw NumericalError("covector field evaluation failed");
  return b;
}

Mat CovectorField::jacobian(const Vec& x) const {
  const double eps = fd_step(x);
  Mat jac(dim_, dim_);
  for (int j = 0; j < dim_; ++j) {
    Vec xp = x, xm = x;
    xp[j] += eps;
    xm[j] -= eps;
    jac.col(j) = (at(xp) - at(xm)) / (2.0 * eps);
  }
  return jac;
}

double AlphaBetaData::b_squared(const Vec& x) const {
  const Vec bx = b.at(x);
  return bx.dot(a.inverse_at(x) * bx);
}

double admissibility_threshold(double y_norm_sq) { return 1e-12 * y_norm_sq + 1e-300; }

KropinaValue kropina_value(const NavigationData& nav, const Vec& x, const Vec& y) {
  if (y.size() != nav.dim() || x.size() != nav.dim()) {
    throw ValidationError("kropina_value: dimension mismatch");
  }
  const Mat h = nav.h.at(x);
  const Vec w = nav.wind.at(x);
  const double y_sq = y.dot(h * y);
  KropinaValue out;
  out.beta_value = y.dot(h * w);
  if (out.beta_value > admissibility_threshold(y_sq)) {
    out.value = y_sq / (2.0 * out.beta_value);
  }
  return out;
}

KropinaValue kropina_value(const NavigationData& nav, const Tangent& y) {
  return kropina_value(nav, y.base().coords(), y.components());
}

KropinaValue kropina_value(const AlphaBetaData& ab, const Vec& x, const Vec& y) {
  const double alpha_sq = y.dot(ab.a.at(x) * y);
  KropinaValue out;
  out.beta_value = ab.b.at(x).dot(y);
  if (out.beta_value > admissibility_threshold(alpha_sq)) out.value = alpha_sq / out.beta_value;
  return out;
}

double indicatrix_residual(const NavigationData& nav, const Tangent& y) {
  const KropinaValue f = kropina_value(nav, y);
  if (!f.admissible()) throw ValidationError("indicatrix_residual: inadmissible tangent");
  const Vec& x = y.base().coords();
  const Vec u = y.components() / *f.value - nav.wind.at(x);
  return std::abs(norm(nav.h, x, u) - 1.0);
}

NavigationData to_navigation(const AlphaBetaData& ab, const std::vector<ChartPoint>& validation_points) {
  const int n = ab.dim();
  auto kappa_of = [ab](const Vec& x) {
    const double b2 = ab.b_squared(x);
    if (!(b2 > 0.0)) throw NumericalError("to_navigation: b vanishes, conic domain is empty");
    return std::log(4.0 / b2);
  };
  MetricField h(n, [ab, kappa_of](const Vec& x) { return Mat(std::exp(kappa_of(x)) * ab.a.at(x)); });
  VectorField wind(n, [ab](const Vec& x) {
    const Vec bx = ab.b.at(x);
    if (!(bx.squaredNorm() > 0.0)) throw NumericalError("to_navigation: b vanishes, conic domain is empty");
    return Vec(0.5 * ab.a.inverse_at(x) * bx);
  });
  NavigationData nav{std::move(h), std::move(wind)};
  for (const ChartPoint& p : validation_points) {
    if (!(ab.b_squared(p.coords()) > 0.0)) {
      throw ValidationError("to_navigation: b vanishes at a validation point");
    }
  }
  if (wind_unit_deviation(nav, validation_points) > kTolUnit) {
    throw ValidationError("to_navigation: resulting wind is not h-unit");
  }
  return nav;
}

AlphaBetaData to_alpha_beta(const NavigationData& nav, ScalarField kappa) {
  const int n = nav.dim();
  MetricField a(n, [nav, kappa](const Vec& x) { return Mat(std::exp(-kappa(x)) * nav.h.at(x)); });
  CovectorField b(n, [nav, kappa](const Vec& x) {
    return Vec(2.0 * std::exp(-kappa(x)) * (nav.h.at(x) * nav.wind.at(x)));
  });
  return AlphaBetaData{std::move(a), std::move(b), std::move(kappa)};
}

Vec kropina_differential(const NavigationData& nav, const Vec& x, const Vec& y) {
  const Mat h = nav.h.at(x);
  const Vec hw = h * nav.wind.at(x);
  const Vec hy = h * y;
  const double beta = y.dot(hw);
  if (!(beta > admissibility_threshold(y.dot(hy)))) {
    throw ValidationError("kropina_differential: inadmissible tangent");
  }
  const double f = y.dot(hy) / (2.0 * beta);
  return (hy - f * hw) / beta;
}

Mat fundamental_tensor(const NavigationData& nav, const Vec& x, const Vec& y) {
  const int n = nav.dim();
  const Mat h = nav.h.at(x);
  const Vec hw = h * nav.wind.at(x);
  const double y_sq = y.dot(h * y);
  if (y.dot(hw) < 1e-6 * y_sq || !(y_sq > 0.0)) {
    throw ValidationError("fundamental_tensor: tangent too close to the conic boundary");
  }
  // Gradient of ½F^2 is F dF.
  auto grad = [&](const Vec& v) {
    const Vec hv = h * v;
    const double beta = v.dot(hw);
    const double f = v.dot(hv) / (2.0 * beta);
    return Vec(f * (hv - f * hw) / beta);
  };
  // Fourth-order stencil; the step follows the distance to the conic boundary.
  const double step = 1e-3 * std::min(std::sqrt(y_sq), y.dot(hw) / std::sqrt(hw.dot(h.inverse() * hw)));
  Mat g(n, n);
  for (int j = 0; j < n; ++j) {
    Vec e = Vec::Zero(n);
    e[j] = step;
    g.col(j) = (8.0 * (grad(y + e) - grad(y - e)) - (grad(y + 2.0 * e) - grad(y - 2.0 * e))) / (12.0 * step);
  }
  return 0.5 * (g + g.transpose());
}

Mat fundamental_tensor(const NavigationData& nav, const Tangent& y) {
  return fundamental_tensor(nav, y.base().coords(), y.components());
}

double wind_unit_deviation(const NavigationData& nav, const std::vector<ChartPoint>& points) {
  double worst = 0.0;
  for (const ChartPoint& p : points) {
    const Vec& x = p.coords();
    worst = std::max(worst, std::abs(norm(nav.h, x, nav.wind.at(x)) - 1.0));
  }
  return worst;
}

}  // namespace kropina
