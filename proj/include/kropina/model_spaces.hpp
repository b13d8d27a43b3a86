#pragma once

// Closed-form model spaces (Euclidean, canonical odd sphere, flat cylinder,
// flat torus) with analytic flows, geodesics, distances and cut loci. They are
// the reference answers for the numerical engine.

#include "kropina/space.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kropina {

enum class CutLocusSource { h_cut_twisted, analytic };

struct CutLocusCurve {
  std::vector<ChartPoint> samples;
  /// Generating coordinate per sample (v for the cylinder, u or v for the torus branches).
  std::vector<double> parameter;
  /// Branch index per sample (the torus has two).
  std::vector<int> branch;
  CutLocusSource source = CutLocusSource::analytic;
  /// Quotient-mode loci are offered but not cross-checked against closed forms.
  bool experimental = false;
};

/// Flat R^n with the constant unit wind W. Throws ValidationError if |W| != 1 (1e-12).
SpaceDefinition euclidean_space(int n, const Vec& wind);

/// Round S^n (n odd, >= 3) in embedding coordinates of R^{n+1} = C^{(n+1)/2}
/// with the Hopf wind W_z = i z.
SpaceDefinition sphere_space(int n);

/// Flat cylinder S^1 x R, chart (u, v), u periodic 2π, wind A ∂_u + B ∂_v.
SpaceDefinition cylinder_space(double A, double B, bool cover = false);

/// Flat torus, chart (u, v), both periodic 2π, wind (1/√2, 1/√2).
SpaceDefinition torus_space(bool cover = false);

/// Navigation data of the Hopf field on S^3 in the stereographic chart from
/// (0,0,0,1): h = 4/(1+|x|^2)^2 δ. The wind's Jacobian is left to finite differences.
NavigationData hopf_stereographic_navigation();

/// Model-space F-distance. Empty result means unreachable. Flat spaces use
/// |pq|^2 / (2 <W, pq>) on the cover (minimized over lifts without cover mode);
/// the sphere solves arccos<p, e^{-iτ} q> = τ by scan and bisection on [0, 2π].
std::optional<double> closed_form_distance(const SpaceDefinition& space, const Vec& p, const Vec& q);

/// Analytic F-cut locus of p (default sampling 257).
CutLocusCurve cut_locus(const SpaceDefinition& space, const Vec& p, int sampling = 257);

/// Maps each h-cut point q of p to phi_l(q) with l = d_h(p, q). Distances are
/// measured with the periodic identifications even in cover mode, since cut
/// points only exist relative to them.
CutLocusCurve twist_h_cut_locus(const SpaceDefinition& space, const Vec& p,
                                const std::vector<ChartPoint>& h_cut_samples);

}  // namespace kropina
