#include "kropina/separation.hpp"

#include "kropina/errors.hpp"
#include "kropina/geodesic.hpp"
#include "kropina/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace kropina {

const char* to_string(SeparationStatus s) {
  switch (s) {
    case SeparationStatus::finite: return "FINITE";
    case SeparationStatus::unreachable: return "UNREACHABLE";
    case SeparationStatus::same_point: return "SAME_POINT";
  }
  return "?";
}

const char* to_string(DomainVerdict v) {
  switch (v) {
    case DomainVerdict::forward: return "FORWARD";
    case DomainVerdict::backward: return "BACKWARD";
    case DomainVerdict::neither: return "NEITHER";
    case DomainVerdict::both: return "BOTH";
  }
  return "?";
}

double delta(const SpaceDefinition& space, const Vec& p, const Vec& q, double tau) {
  return h_connect(space, p, flow_point(space, q, -tau)).front().distance;
}

namespace {

constexpr double kSamePoint = 1e-13;

class FixedPointScan {
 public:
  FixedPointScan(const SpaceDefinition& space, const Vec& p, const Vec& q, SeparationResult& out)
      : space_(space), p_(p), q_(q), out_(out) {}

  double g(double tau) {
    ++out_.evaluations;
    return delta(space_, p_, q_, tau) - tau;
  }

  // Root of g in (lo, hi] given g(lo) > 0 >= g(hi).
  double bisect(double lo, double hi) {
    double g_lo = g(lo), g_hi = g(hi);
    for (int iter = 0; iter < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double gm = g(mid);
      out_.bracket_history.emplace_back(mid, gm + mid);
      if (gm > 0.0) {
        lo = mid;
        g_lo = gm;
      } else {
        hi = mid;
        g_hi = gm;
      }
    }
    return std::abs(g_lo) < std::abs(g_hi) ? lo : hi;
  }

  // Minimum of g on [a, c] by golden section; returns (tau, g).
  std::pair<double, double> golden(double a, double c) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = c - r * (c - a), x2 = a + r * (c - a);
    double f1 = g(x1), f2 = g(x2);
    while (c - a > 1e-9 * std::max(1.0, c)) {
      if (f1 < f2) {
        c = x2;
        x2 = x1;
        f2 = f1;
        x1 = c - r * (c - a);
        f1 = g(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + r * (c - a);
        f2 = g(x2);
      }
      if (std::min(f1, f2) <= 0.0) break;
    }
    return f1 < f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
  }

 private:
  const SpaceDefinition& space_;
  const Vec& p_;
  const Vec& q_;
  SeparationResult& out_;
};

Tangent launch_direction(const SpaceDefinition& space, const Vec& p, const Vec& v) {
  return Tangent(ChartPoint(p), v + space.nav.wind.at(p));
}

void fill_directions(const SpaceDefinition& space, const Vec& p, const Vec& q, SeparationResult& out) {
  const std::vector<HConnection> conns = h_connect(space, p, flow_point(space, q, -out.tau_star));
  out.initial_direction = launch_direction(space, p, conns.front().velocity);
  const double best = conns.front().distance;
  std::vector<Vec> seen;
  for (const HConnection& c : conns) {
    if (c.distance > best * (1.0 + 1e-6) + 1e-12) break;
    bool duplicate = false;
    for (const Vec& s : seen) duplicate = duplicate || (s - c.velocity).norm() < 1e-6;
    if (duplicate) continue;
    seen.push_back(c.velocity);
    out.minimizing_directions.push_back(launch_direction(space, p, c.velocity));
  }
}

}  // namespace

SeparationResult separation(const SpaceDefinition& space, const Vec& p, const Vec& q,
                            const SeparationOptions& options) {
  if (p.size() != space.dim() || q.size() != space.dim()) {
    throw ValidationError("separation: point dimension does not match the space");
  }
  if (!p.allFinite() || !q.allFinite()) throw ValidationError("separation: non-finite point");
  SeparationResult out;
  FixedPointScan scan(space, p, q, out);
  const double g0 = scan.g(0.0);
  out.bracket_history.emplace_back(0.0, g0);
  if (g0 <= kSamePoint) {
    out.status = SeparationStatus::same_point;
    out.value = out.tau_star = 0.0;
    // Unit vector along the wind: F(W) = 1/2.
    out.initial_direction = Tangent(ChartPoint(p), 2.0 * space.nav.wind.at(p));
    return out;
  }

  const double dt = std::max(0.01, g0 / 64.0);
  const bool closed_orbits = space.quasi_regular && !space.cover_mode;
  const double tau_max = closed_orbits ? g0 + space.flow_period : options.cap * (1.0 + g0);

  auto finish = [&](double tau) {
    out.status = SeparationStatus::finite;
    out.value = out.tau_star = tau;
    fill_directions(space, p, q, out);
    return out;
  };

  // (tau, g) of the last three grid nodes, for tangential-zero detection.
  double ta = 0.0, ga = g0, tb = 0.0, gb = g0;
  bool have_b = false;
  double tau = 0.0;
  for (int k = 1; tau < tau_max; ++k) {
    tau = std::min(k * dt, tau_max);
    const double gc = scan.g(tau);
    out.bracket_history.emplace_back(tau, gc + tau);
    if (gc <= 0.0) return finish(scan.bisect(have_b ? tb : ta, tau));
    if (have_b && gb < ga && gb <= gc && gb < dt) {
      const auto [tm, gm] = scan.golden(ta, tau);
      if (gm <= 0.0) return finish(scan.bisect(ta, tm));
      if (gm <= kTolFixedPoint) return finish(tm);
    }
    if (have_b) {
      ta = tb;
      ga = gb;
    }
    tb = tau;
    gb = gc;
    have_b = true;
  }

  if (!closed_orbits && options.tail_scan) {
    double step = dt;
    double last = tau;
    const double limit = options.tail_limit * (1.0 + g0);
    while (last < limit) {
      step *= 2.0;
      const double next = std::min(last + step, limit);
      const double gc = scan.g(next);
      out.bracket_history.emplace_back(next, gc + next);
      if (gc <= 0.0) return finish(scan.bisect(last, next));
      last = next;
    }
  }
  out.status = SeparationStatus::unreachable;
  out.capped = !closed_orbits;
  return out;
}

DomainVerdict solver_domain_verdict(const SpaceDefinition& space, const Vec& p, const Vec& q) {
  const SeparationResult fwd = separation(space, p, q);
  if (fwd.status == SeparationStatus::same_point) return DomainVerdict::both;
  const bool f = fwd.status == SeparationStatus::finite;
  const bool b = separation(space, q, p).status == SeparationStatus::finite;
  if (f && b) return DomainVerdict::both;
  if (f) return DomainVerdict::forward;
  if (b) return DomainVerdict::backward;
  return DomainVerdict::neither;
}

DomainVerdict forward_domain_membership(const SpaceDefinition& space, const Vec& p, const Vec& q) {
  if (space.model != ModelKind::euclidean) return solver_domain_verdict(space, p, q);
  const Vec d = q - p;
  const double s = d.dot(space.constant_wind);
  if (s > 0.0) return DomainVerdict::forward;
  if (s < 0.0) return DomainVerdict::backward;
  return d.squaredNorm() == 0.0 ? DomainVerdict::both : DomainVerdict::neither;
}

bool ball_membership(const SpaceDefinition& space, const Vec& p, double r, const Vec& q,
                     BallDirection direction) {
  if (!(r > 0.0)) throw ValidationError("ball_membership: radius must be positive");
  const SeparationResult s =
      direction == BallDirection::forward ? separation(space, p, q) : separation(space, q, p);
  return s.status != SeparationStatus::unreachable && s.value < r;
}

// ---------------------------------------------------------------------------
// Polyline oracle

namespace {

constexpr int kSimpsonIntervals = 8;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool on_sphere(const SpaceDefinition& space) { return space.model == ModelKind::sphere; }

// Point and velocity of the chord a -> b at s in [0, 1].
std::pair<Vec, Vec> chord_at(const SpaceDefinition& space, const Vec& a, const Vec& b, double s) {
  if (on_sphere(space)) {
    const double c = std::clamp(a.dot(b), -1.0, 1.0);
    const double theta = std::acos(c);
    if (theta > 1e-12) {
      const double sn = std::sin(theta);
      const Vec x = (std::sin((1.0 - s) * theta) * a + std::sin(s * theta) * b) / sn;
      const Vec v = theta * (-std::cos((1.0 - s) * theta) * a + std::cos(s * theta) * b) / sn;
      return {x, v};
    }
  }
  return {Vec(a + s * (b - a)), Vec(b - a)};
}

Vec slerp(const Vec& a, const Vec& b, double s) {
  const double c = std::clamp(a.dot(b), -1.0, 1.0);
  const double theta = std::acos(c);
  if (theta < 1e-12) return a;
  return (std::sin((1.0 - s) * theta) * a + std::sin(s * theta) * b) / std::sin(theta);
}

// Orthonormal directions a vertex may move along.
std::vector<Vec> move_basis(const SpaceDefinition& space, const Vec& x) {
  const int n = space.dim();
  std::vector<Vec> basis;
  std::vector<Vec> normals = space.normals ? space.normals(x) : std::vector<Vec>{};
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Unit(n, i);
    for (const Vec& m : normals) e -= m.dot(e) * m;
    for (const Vec& b : basis) e -= b.dot(e) * b;
    if (e.norm() > 1e-6) basis.push_back(e.normalized());
  }
  return basis;
}

Vec place(const SpaceDefinition& space, Vec x) {
  if (space.constrain) {
    Vec v = Vec::Zero(x.size());
    space.constrain(x, v);
  }
  return x;
}

class Polyline {
 public:
  Polyline(const SpaceDefinition& space, std::vector<Vec> vertices)
      : space_(space), v_(std::move(vertices)), seg_(v_.size() - 1) {
    for (size_t i = 0; i + 1 < v_.size(); ++i) seg_[i] = chord_length(space_, v_[i], v_[i + 1]);
  }

  double total() const {
    double s = 0.0;
    for (double x : seg_) s += x;
    return s;
  }

  // Coordinate descent with step halving.
  void descend(double step) {
    const size_t m = v_.size();
    for (; step > 1e-7; step *= 0.5) {
      for (int sweep = 0; sweep < 60; ++sweep) {
        bool moved = false;
        for (size_t i = 1; i + 1 < m; ++i) {
          for (const Vec& e : move_basis(space_, v_[i])) {
            for (double sign : {1.0, -1.0}) {
              const Vec trial = place(space_, v_[i] + sign * step * e);
              const double left = chord_length(space_, v_[i - 1], trial);
              if (!(left < kInf)) continue;
              const double right = chord_length(space_, trial, v_[i + 1]);
              const double before = seg_[i - 1] + seg_[i];
              if (left + right < before - 1e-15 * std::max(1.0, before)) {
                v_[i] = trial;
                seg_[i - 1] = left;
                seg_[i] = right;
                moved = true;
                break;
              }
            }
          }
        }
        if (!moved) break;
      }
    }
  }

 private:
  const SpaceDefinition& space_;
  std::vector<Vec> v_;
  std::vector<double> seg_;
};

// The wind-twisted chord: vertex k is phi_{theta k/N}(chord(p, target) at k/N),
// where target is a lift of phi_{-theta} q. The last vertex is the matching lift of q.
std::vector<Vec> twisted_vertices(const SpaceDefinition& space, const Vec& p, const Vec& q, const Vec& target,
                                  double theta, int segments) {
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(segments + 1));
  out.push_back(p);
  for (int k = 1; k < segments; ++k) {
    const double s = static_cast<double>(k) / segments;
    const Vec base = on_sphere(space) ? slerp(p, target, s) : Vec(p + s * (target - p));
    out.push_back(place(space, flow_point(space, base, theta * s)));
  }
  const Vec end = flow_point(space, target, theta);
  Vec best = q;
  for (const Vec& l : space.deck_lifts(end, q, 1)) {
    if ((l - end).norm() < (best - end).norm()) best = l;
  }
  out.push_back(best);
  return out;
}

}  // namespace

double chord_length(const SpaceDefinition& space, const Vec& a, const Vec& b) {
  if ((a - b).norm() == 0.0) return 0.0;
  if (on_sphere(space) && a.dot(b) < -1.0 + 1e-12) return kInf;
  double sum = 0.0;
  const double h = 1.0 / kSimpsonIntervals;
  for (int i = 0; i <= kSimpsonIntervals; ++i) {
    const auto [x, v] = chord_at(space, a, b, i * h);
    const KropinaValue f = kropina_value(space.nav, x, v);
    if (!f.admissible()) return kInf;
    const double w = (i == 0 || i == kSimpsonIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * *f.value;
  }
  return sum * h / 3.0;
}

std::optional<double> polyline_oracle(const SpaceDefinition& space, const Vec& p, const Vec& q,
                                      int segments, int restarts, std::uint64_t seed) {
  if (segments < 2) throw ValidationError("polyline_oracle: segments must be at least 2");
  if (restarts < 1) throw ValidationError("polyline_oracle: restarts must be at least 1");
  if ((p - q).norm() == 0.0) return 0.0;

  struct Seed {
    double length;
    std::vector<Vec> vertices;
  };
  std::vector<Seed> seeds;
  const int window = space.identifies_periods() ? 1 : 0;
  double dh = kInf;
  for (const Vec& lift : space.deck_lifts(p, q, window)) dh = std::min(dh, (lift - p).norm());
  const bool closed_orbits = space.quasi_regular && !space.cover_mode;
  const double span = closed_orbits ? space.flow_period + 2.0 * dh : 4.0 * (1.0 + dh);
  std::vector<double> thetas;
  for (int j = 0; j <= 96; ++j) thetas.push_back(span * j / 96.0);
  if (!closed_orbits) {
    for (double t = span; t < 1e4 * (1.0 + dh); t *= 1.25) thetas.push_back(t);
  }
  for (double theta : thetas) {
    Vec back;
    try {
      back = flow_point(space, q, -theta);
    } catch (const NumericalError&) {
      continue;
    }
    for (const Vec& target : space.deck_lifts(p, back, window)) {
      std::vector<Vec> verts;
      try {
        verts = twisted_vertices(space, p, q, target, theta, segments);
      } catch (const NumericalError&) {
        continue;
      }
      const double len = Polyline(space, verts).total();
      if (len < kInf) seeds.push_back({len, std::move(verts)});
    }
  }
  if (seeds.empty()) return std::nullopt;
  std::stable_sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.length < b.length; });

  std::vector<double> results(static_cast<size_t>(restarts), kInf);
  parallel_for(restarts, [&](int r) {
    const Seed& s = seeds[static_cast<size_t>(r) % seeds.size()];
    std::vector<Vec> verts = s.vertices;
    double scale = 0.0;
    for (size_t i = 0; i + 1 < verts.size(); ++i) scale += (verts[i + 1] - verts[i]).norm();
    scale /= segments;
    if (r >= static_cast<int>(seeds.size()) || r >= 4) {
      std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
      std::normal_distribution<double> noise(0.0, 0.1 * scale);
      for (size_t i = 1; i + 1 < verts.size(); ++i) {
        Vec jitter(verts[i].size());
        for (Eigen::Index k = 0; k < jitter.size(); ++k) jitter[k] = noise(rng);
        verts[i] = place(space, verts[i] + jitter);
      }
    }
    Polyline line(space, verts);
    line.descend(std::max(1e-3, 0.25 * scale));
    results[static_cast<size_t>(r)] = line.total();
  });
  const double best = *std::min_element(results.begin(), results.end());
  if (!(best < kInf)) return std::nullopt;
  return best;
}

}  // namespace kropina
