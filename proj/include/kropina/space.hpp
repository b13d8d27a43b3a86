#pragma once

// A navigation space made computational: the chart, the (h, W) pair, the
// providers the engine may use instead of numerical integration, and the
// topology of the chart.

#include "kropina/geometry.hpp"
#include "kropina/zermelo.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace kropina {

struct CoordinateTag {
  bool periodic = false;
  double period = 0.0;

  static CoordinateTag unbounded() { return {}; }
  static CoordinateTag with_period(double p) { return {true, p}; }
};

/// A minimizing h-geodesic from p to (a lift of) q: unit initial velocity at
/// p, length, and the lift of q actually reached.
struct HConnection {
  double distance = 0.0;
  Vec velocity;
  Vec target;
};

enum class ModelKind { generic, euclidean, sphere, cylinder, torus };

struct ChartBox {
  Vec lo;
  Vec hi;

  bool contains(const Vec& x) const;
};

struct SpaceDefinition {
  std::string name;
  ModelKind model = ModelKind::generic;
  NavigationData nav;
  /// Manifold dimension; smaller than dim() for embedded charts (sphere).
  int intrinsic_dim = 0;
  std::vector<CoordinateTag> topology;
  /// When set, periodic identifications are ignored (universal cover).
  bool cover_mode = false;
  bool quasi_regular = false;
  double flow_period = 0.0;

  // Optional closed-form providers.
  std::function<Vec(const Vec&, double)> flow;
  std::function<Vec(const Vec&, const Vec&, double)> h_geodesic;
  /// All minimizing connections on the chart (ties included), sorted by length.
  /// Receives the space so that lift enumeration follows its current cover mode.
  std::function<std::vector<HConnection>(const SpaceDefinition&, const Vec&, const Vec&)> h_connect;

  /// Geodesic acceleration override (x, v) -> x''. Default: -Γ(v, v).
  std::function<Vec(const Vec&, const Vec&)> spray;
  /// Projects a state back onto an embedded chart after each step.
  std::function<void(Vec&, Vec&)> constrain;
  /// Unit normals of an embedded chart at x.
  std::function<std::vector<Vec>(const Vec&)> normals;

  std::optional<ChartBox> chart_box;
  /// Constant wind of the flat model spaces (empty otherwise).
  Vec constant_wind;

  int dim() const { return nav.dim(); }
  bool identifies_periods() const;
  /// Representatives of q (as seen from p) under the deck group within a
  /// ±window period band around the nearest one. Just {q} without identifications.
  std::vector<Vec> deck_lifts(const Vec& p, const Vec& q, int window = 2) const;
  /// Tangent space of the chart at x with the normals removed.
  Vec project_tangent(const Vec& x, const Vec& v) const;
  /// Points used for validation and closed-form cross-checks.
  std::vector<ChartPoint> probe_points(int count) const;
};

}  // namespace kropina
