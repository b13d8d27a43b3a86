#pragma once

// Geodesic engine. Kropina geodesics are assembled from an h-geodesic rho and
// the wind flow phi as P(t) = phi_t(rho(t)); every integrator is fixed-step RK4.

#include "kropina/space.hpp"

#include <string>
#include <utility>
#include <vector>

namespace kropina {

inline constexpr double kTolInt = 1e-7;
inline constexpr double kTolUnitSpeed = 1e-6;
inline constexpr int kDefaultSteps = 1024;

struct PathSample {
  std::vector<double> params;
  std::vector<Vec> points;
  std::vector<Vec> velocities;
  /// F(point, velocity) per sample (0 where inadmissible).
  std::vector<double> f_values;
  std::vector<bool> admissible;
  /// Set when the path left the chart box or became non-finite.
  bool truncated = false;
  /// Factor the initial vector was divided by to normalize it.
  double rescale_factor = 1.0;
  std::vector<std::string> warnings;

  size_t size() const { return params.size(); }
};

enum class ConjugateMethod { closed_form, numerical };

struct ConjugateReport {
  /// Parameters in (0, t_max] where a Jacobi field with J(0) = 0 vanishes, ascending.
  std::vector<double> parameters;
  /// The F-conjugate points P(t) = phi_t(rho(t)) at those parameters.
  std::vector<Vec> points;
  /// (t, smallest singular value of the normalized Jacobi matrix).
  std::vector<std::pair<double, double>> jacobi_norm_trace;
  ConjugateMethod method = ConjugateMethod::numerical;
};

/// Geodesic acceleration at (x, v): the space's override or -Γ(v, v).
Vec geodesic_acceleration(const SpaceDefinition& space, const Vec& x, const Vec& v);

/// Unit-speed h-geodesic from (x0, v0) on [0, t_max]. A non-unit v0 is rescaled
/// (recorded in rescale_factor and warnings).
PathSample integrate_h_geodesic(const SpaceDefinition& space, const Tangent& v0, double t_max,
                                int steps = kDefaultSteps);

/// Endpoint of the h-geodesic with initial velocity v (any length) at time t.
Vec h_exponential(const SpaceDefinition& space, const Vec& x0, const Vec& v, double t,
                  int steps = kDefaultSteps);

/// phi_t(x0): closed form when available, otherwise RK4 on x' = W(x) with
/// step <= 1e-3 max(1, |t|).
ChartPoint integrate_flow(const SpaceDefinition& space, const ChartPoint& x0, double t);
Vec flow_point(const SpaceDefinition& space, const Vec& x0, double t);

/// (phi_t)_* v at x, by central differences of the flow.
Vec flow_pushforward(const SpaceDefinition& space, const Vec& x, const Vec& v, double t);

/// The Kropina geodesic with initial velocity y0 (normalized to F = 1).
PathSample kropina_geodesic(const SpaceDefinition& space, const Tangent& y0, double t_max,
                            int steps = kDefaultSteps);

/// exp_p(t y) = phi_t(e_p(t (y - W))) for F(p, y) = 1; other lengths are
/// rescaled as (y, t) -> (y / F, t F). t = 0 returns p.
ChartPoint kropina_exponential(const SpaceDefinition& space, const Tangent& y, double t,
                               int steps = kDefaultSteps);

/// rho(t) = phi_{-t}(P(t)) for every sample of an engine-produced Kropina path,
/// with velocities obtained by central differences in t.
PathSample recover_h_geodesic(const SpaceDefinition& space, const PathSample& kropina_path);

/// Minimizing h-geodesics from p to q: closed form when available, else shooting
/// over the deck lifts of q. Throws NumericalError if no lift converges.
std::vector<HConnection> h_connect(const SpaceDefinition& space, const Vec& p, const Vec& q);

/// Conjugate parameters along the Kropina geodesic from y0, found on its
/// h-geodesic rho by integrating the variational (Jacobi) equation.
ConjugateReport jacobi_conjugate_search(const SpaceDefinition& space, const Tangent& y0,
                                        double t_max);

/// |g_T((exp_p)_*(V), T)| at tau y, where T is the geodesic velocity at tau. V is
/// first projected onto the tangent space of the F-sphere through tau y.
double gauss_orthogonality(const SpaceDefinition& space, const Tangent& y, const Vec& V,
                           double tau);

}  // namespace kropina
