#include "kropina/space.hpp"

#include <cmath>

namespace kropina {

bool ChartBox::contains(const Vec& x) const {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
  }
  return true;
}

bool SpaceDefinition::identifies_periods() const {
  if (cover_mode) return false;
  for (const CoordinateTag& t : topology) {
    if (t.periodic) return true;
  }
  return false;
}

std::vector<Vec> SpaceDefinition::deck_lifts(const Vec& p, const Vec& q, int window) const {
  if (!identifies_periods()) return {q};
  // Nearest representative first, then every shift in the window.
  Vec base = q;
  std::vector<int> periodic_axes;
  for (size_t i = 0; i < topology.size(); ++i) {
    if (!topology[i].periodic) continue;
    const auto axis = static_cast<Eigen::Index>(i);
    const double period = topology[i].period;
    base[axis] -= period * std::round((q[axis] - p[axis]) / period);
    periodic_axes.push_back(static_cast<int>(i));
  }
  std::vector<Vec> lifts{base};
  const int span = 2 * window + 1;
  int combos = 1;
  for (size_t i = 0; i < periodic_axes.size(); ++i) combos *= span;
  lifts.reserve(static_cast<size_t>(combos));
  for (int c = 0; c < combos; ++c) {
    Vec lift = base;
    int code = c;
    bool zero = true;
    for (int axis : periodic_axes) {
      const int k = code % span - window;
      code /= span;
      zero = zero && k == 0;
      lift[axis] += k * topology[static_cast<size_t>(axis)].period;
    }
    if (!zero) lifts.push_back(std::move(lift));
  }
  return lifts;
}

Vec SpaceDefinition::project_tangent(const Vec& x, const Vec& v) const {
  if (!normals) return v;
  Vec out = v;
  for (const Vec& n : normals(x)) out -= n.dot(out) * n;
  return out;
}

std::vector<ChartPoint> SpaceDefinition::probe_points(int count) const {
  const int n = dim();
  Vec lo = Vec::Constant(n, -1.0), hi = Vec::Constant(n, 1.0);
  for (int i = 0; i < n && i < static_cast<int>(topology.size()); ++i) {
    if (topology[static_cast<size_t>(i)].periodic) {
      lo[i] = 0.0;
      hi[i] = topology[static_cast<size_t>(i)].period;
    }
  }
  std::vector<ChartPoint> pts = halton_grid(lo, hi, count);
  if (!constrain) return pts;
  std::vector<ChartPoint> projected;
  projected.reserve(pts.size());
  for (const ChartPoint& p : pts) {
    Vec x = p.coords();
    Vec v = Vec::Zero(n);
    constrain(x, v);
    projected.emplace_back(std::move(x));
  }
  return projected;
}

}  // namespace kropina
