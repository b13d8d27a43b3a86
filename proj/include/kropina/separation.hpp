#pragma once

// The separation d_F(p, q) as the smallest fixed point of
// delta(tau) = d_h(p, phi_{-tau}(q)), connectivity verdicts built on it, and a
// brute-force polyline oracle that shares none of the fixed-point machinery.

#include "kropina/space.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace kropina {

inline constexpr double kTolFixedPoint = 1e-8;

enum class SeparationStatus { finite, unreachable, same_point };

struct SeparationOptions {
  /// tau_max = cap (1 + delta(0)) for spaces that are not quasi-regular.
  double cap = 64.0;
  /// Past the cap, keep scanning with a doubling step up to tail_limit (1 + delta(0)).
  bool tail_scan = true;
  double tail_limit = 1e6;
};

struct SeparationResult {
  SeparationStatus status = SeparationStatus::unreachable;
  double value = std::numeric_limits<double>::infinity();
  double tau_star = std::numeric_limits<double>::infinity();
  /// y0 with F(p, y0) = 1 launching the minimizing geodesic.
  Tangent initial_direction;
  /// Every launching direction whose h-connection ties the shortest one (1e-6 relative).
  std::vector<Tangent> minimizing_directions;
  int evaluations = 0;
  std::vector<std::pair<double, double>> bracket_history;
  /// UNREACHABLE only because the scan budget ran out.
  bool capped = false;
};

enum class DomainVerdict { forward, backward, neither, both };

enum class BallDirection { forward, backward };

const char* to_string(SeparationStatus s);
const char* to_string(DomainVerdict v);

/// d_h(p, phi_{-tau}(q)).
double delta(const SpaceDefinition& space, const Vec& p, const Vec& q, double tau);

SeparationResult separation(const SpaceDefinition& space, const Vec& p, const Vec& q,
                            const SeparationOptions& options = {});

/// Euclidean spaces use the sign of <q - p, W>; every other space asks the solver.
DomainVerdict forward_domain_membership(const SpaceDefinition& space, const Vec& p, const Vec& q);

/// The verdict from separation(p, q) and separation(q, p) alone.
DomainVerdict solver_domain_verdict(const SpaceDefinition& space, const Vec& p, const Vec& q);

/// Forward: d_F(p, q) < r. Backward: d_F(q, p) < r. Throws ValidationError for r <= 0.
bool ball_membership(const SpaceDefinition& space, const Vec& p, double r, const Vec& q,
                     BallDirection direction);

/// F-length of the chord from a to b (straight in the chart, a great-circle arc
/// on the sphere) by composite Simpson quadrature. Infinite if any node is inadmissible.
double chord_length(const SpaceDefinition& space, const Vec& a, const Vec& b);

/// Least F-length of an admissible polyline p -> ... -> q with `segments` chords,
/// by coordinate descent from `restarts` starting polylines. Empty = UNREACHABLE.
std::optional<double> polyline_oracle(const SpaceDefinition& space, const Vec& p, const Vec& q,
                                      int segments, int restarts, std::uint64_t seed = 0);

}  // namespace kropina
