#include "kropina/projective.hpp"

#include "kropina/errors.hpp"

#include <cmath>

namespace kropina {

namespace {

Mat covariant_beta(const AlphaBetaData& ab, const Vec& x) {
  const int n = ab.dim();
  const Christoffel gamma = christoffel(ab.a, x);
  const Vec b = ab.b.at(x);
  Mat out = ab.b.jacobian(x);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += gamma(k, i, j) * b[k];
      out(i, j) -= acc;
    }
  }
  return out;
}

Vec scalar_gradient(const ScalarField& f, const Vec& x) {
  const double eps = fd_step(x);
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += eps;
    xm[i] -= eps;
    g[i] = (f(xp) - f(xm)) / (2.0 * eps);
  }
  return g;
}

}  // namespace

BetaDerivativeReport beta_derivatives(const AlphaBetaData& ab, const std::vector<ChartPoint>& samples) {
  BetaDerivativeReport rep;
  for (const ChartPoint& p : samples) {
    const Vec& x = p.coords();
    const Mat bc = covariant_beta(ab, x);
    const Mat r = 0.5 * (bc + bc.transpose());
    const Mat s = bc - r;
    const Vec b_up = ab.a.inverse_at(x) * ab.b.at(x);
    rep.b_cov.push_back(bc);
    rep.r.push_back(r);
    rep.s.push_back(s);
    rep.s_lower.push_back(s.transpose() * b_up);
    rep.max_residual = std::max(rep.max_residual, bc.cwiseAbs().maxCoeff());
  }
  return rep;
}

Vec spray_correction(const AlphaBetaData& ab, const Vec& x, const Vec& y) {
  const Mat a_inv = ab.a.inverse_at(x);
  const Vec b = ab.b.at(x);
  const double alpha_sq = y.dot(ab.a.at(x) * y);
  const double beta = b.dot(y);
  if (!(beta > admissibility_threshold(alpha_sq))) throw ValidationError("spray_correction: inadmissible tangent");
  const Mat bc = covariant_beta(ab, x);
  const Mat r = 0.5 * (bc + bc.transpose());
  const Mat s = bc - r;
  const Vec b_up = a_inv * b;
  const double b_sq = b.dot(b_up);
  const Vec s_i0 = a_inv * (s * y);
  const double s_0 = (s.transpose() * b_up).dot(y);
  const double r_00 = y.dot(r * y);
  // (alpha, beta)-spray with phi(s) = 1/s: Q = -1/(2s), Psi = 1/(2 b^2), Theta = -s / b^2.
  const double f = alpha_sq / beta;
  return -0.5 * f * s_i0 + (f * s_0 + r_00) * (b_up / (2.0 * b_sq) - (beta / (alpha_sq * b_sq)) * y);
}

ProjectiveVerdict projective_equivalence_verdict(const AlphaBetaData& ab, const std::vector<ChartPoint>& samples) {
  ProjectiveVerdict v;
  v.max_residual = beta_derivatives(ab, samples).max_residual;
  v.equivalent = v.max_residual <= kTolProjective;
  for (const ChartPoint& p : samples) {
    const Vec& x = p.coords();
    const Vec b_up = ab.a.inverse_at(x) * ab.b.at(x);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const Vec y = b_up + 0.3 * b_up.norm() * Vec::Unit(x.size(), k);
      if (!(ab.b.at(x).dot(y) > 0.0)) continue;
      v.max_spray_correction = std::max(v.max_spray_correction, spray_correction(ab, x, y).cwiseAbs().maxCoeff());
    }
  }
  return v;
}

NavDerivativeReport navigation_parallel_residual(const NavigationData& nav, const ScalarField& kappa,
                                                 const std::vector<ChartPoint>& samples) {
  NavDerivativeReport rep;
  const AlphaBetaData ab = to_alpha_beta(nav, kappa);
  const BetaDerivativeReport beta = beta_derivatives(ab, samples);
  for (size_t idx = 0; idx < samples.size(); ++idx) {
    const Vec& x = samples[idx].coords();
    const Mat cov = lowered_covariant_derivative(nav.h, nav.wind, x);
    const Mat R = 0.5 * (cov + cov.transpose());
    const Mat S = cov - R;
    const Vec kg = scalar_gradient(kappa, x);
    const Mat h = nav.h.at(x);
    const Vec w = nav.wind.at(x);
    const Vec w_low = h * w;
    const double scale = 2.0 * std::exp(-kappa(x));
    const Mat r_expected = scale * (R - 0.5 * w.dot(kg) * h);
    const Mat s_expected = scale * (S + 0.5 * (kg * w_low.transpose() - w_low * kg.transpose()));
    rep.R.push_back(R);
    rep.S.push_back(S);
    rep.kappa_grad.push_back(kg);
    rep.max_W_residual = std::max(rep.max_W_residual, cov.cwiseAbs().maxCoeff());
    rep.max_kappa_grad = std::max(rep.max_kappa_grad, kg.cwiseAbs().maxCoeff());
    rep.r_identity_residual =
        std::max(rep.r_identity_residual, (beta.r[idx] - r_expected).cwiseAbs().maxCoeff());
    rep.s_identity_residual =
        std::max(rep.s_identity_residual, (beta.s[idx] - s_expected).cwiseAbs().maxCoeff());
  }
  return rep;
}

}  // namespace kropina
