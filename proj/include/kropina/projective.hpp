#pragma once

// Covariant derivatives of beta and the projective-equivalence criterion
// b_{i;j} = 0 of a Kropina metric to its Riemannian part a, together with the
// navigation form of the same criterion (W_{i|j} = 0 and kappa constant).

#include "kropina/zermelo.hpp"

#include <vector>

namespace kropina {

inline constexpr double kTolProjective = 1e-7;

struct BetaDerivativeReport {
  /// b_{i;j} at (i,j), one matrix per sample.
  std::vector<Mat> b_cov;
  std::vector<Mat> r;
  std::vector<Mat> s;
  /// s_j = b^i s_ij
  std::vector<Vec> s_lower;
  double max_residual = 0.0;
};

struct NavDerivativeReport {
  /// Symmetric and antisymmetric parts of W_{i|j}.
  std::vector<Mat> R;
  std::vector<Mat> S;
  std::vector<Vec> kappa_grad;
  double max_W_residual = 0.0;
  double max_kappa_grad = 0.0;
  /// max |r_ij - 2 e^-kappa (R_ij - ½ W^r kappa_r h_ij)|
  double r_identity_residual = 0.0;
  /// max |s_ij - 2 e^-kappa (S_ij + ½ (kappa_i W_j - kappa_j W_i))|
  double s_identity_residual = 0.0;
};

struct ProjectiveVerdict {
  bool equivalent = false;
  double max_residual = 0.0;
  /// Largest |B^i| of the spray correction over the probe tangents.
  double max_spray_correction = 0.0;
};

/// b_{i;j} = ∂_j b_i - γ^k_ij b_k with γ the Christoffel symbols of a.
BetaDerivativeReport beta_derivatives(const AlphaBetaData& ab, const std::vector<ChartPoint>& samples);

/// Equivalent iff max |b_{i;j}| <= kTolProjective over the samples.
ProjectiveVerdict projective_equivalence_verdict(const AlphaBetaData& ab, const std::vector<ChartPoint>& samples);

/// B^i = G^i - G^i_a, the difference between the Kropina spray and the spray
/// of a, at an admissible y (beta(y) > 0).
Vec spray_correction(const AlphaBetaData& ab, const Vec& x, const Vec& y);

NavDerivativeReport navigation_parallel_residual(const NavigationData& nav, const ScalarField& kappa,
                                                 const std::vector<ChartPoint>& samples);

}  // namespace kropina
