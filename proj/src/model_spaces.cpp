#include "kropina/model_spaces.hpp"

#include "kropina/errors.hpp"
#include "kropina/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kropina {

namespace {

constexpr double kPi = std::numbers::pi;

MetricField flat_metric(int n) {
  return MetricField(
      n, [n](const Vec&) { return Mat(Mat::Identity(n, n)); },
      [n](const Vec&) { return std::vector<Mat>(static_cast<size_t>(n), Mat::Zero(n, n)); });
}

// Every lift at (numerically) minimal length, nearest first.
std::vector<HConnection> flat_connect(const SpaceDefinition& space, const Vec& p, const Vec& q) {
  std::vector<HConnection> all;
  for (const Vec& lift : space.deck_lifts(p, q)) {
    const Vec d = lift - p;
    const double len = d.norm();
    all.push_back(HConnection{len, len > 0.0 ? Vec(d / len) : Vec(Vec::Zero(p.size())), lift});
  }
  std::sort(all.begin(), all.end(),
            [](const HConnection& a, const HConnection& b) { return a.distance < b.distance; });
  return all;
}

SpaceDefinition flat_space(std::string name, ModelKind kind, const Vec& wind,
                           std::vector<CoordinateTag> topology, bool cover) {
  const int n = static_cast<int>(wind.size());
  if (std::abs(wind.norm() - 1.0) > 1e-12) {
    throw ValidationError("wind must have unit length (|W| = " + std::to_string(wind.norm()) + ")");
  }
  SpaceDefinition s;
  s.name = std::move(name);
  s.model = kind;
  s.nav = NavigationData{flat_metric(n), VectorField(
                                              n, [wind](const Vec&) { return wind; },
                                              [n](const Vec&) { return Mat(Mat::Zero(n, n)); })};
  s.intrinsic_dim = n;
  s.topology = std::move(topology);
  s.cover_mode = cover;
  s.constant_wind = wind;
  s.flow = [wind](const Vec& x, double t) { return Vec(x + t * wind); };
  s.h_geodesic = [](const Vec& x0, const Vec& v0, double t) { return Vec(x0 + t * v0); };
  s.h_connect = flat_connect;
  return s;
}

// Multiplication by i on C^m viewed as R^{2m}: (a, b) -> (-b, a) per pair.
Vec complex_i(const Vec& z) {
  Vec out(z.size());
  for (Eigen::Index k = 0; k + 1 < z.size(); k += 2) {
    out[k] = -z[k + 1];
    out[k + 1] = z[k];
  }
  return out;
}

Vec complex_rotate(const Vec& z, double t) {
  const double c = std::cos(t), s = std::sin(t);
  Vec out(z.size());
  for (Eigen::Index k = 0; k + 1 < z.size(); k += 2) {
    out[k] = c * z[k] - s * z[k + 1];
    out[k + 1] = s * z[k] + c * z[k + 1];
  }
  return out;
}

double sphere_distance(const Vec& p, const Vec& q) {
  const double c = p.dot(q);
  return std::atan2((q - c * p).norm(), c);
}

std::vector<HConnection> sphere_connect(const SpaceDefinition&, const Vec& p, const Vec& q) {
  const double c = p.dot(q);
  Vec perp = q - c * p;
  const double s = perp.norm();
  const double d = std::atan2(s, c);
  if (s < 1e-14) {
    if (c > 0.0) return {HConnection{0.0, Vec::Zero(p.size()), q}};
    // Antipodal: every great circle minimizes; report the Hopf direction.
    return {HConnection{kPi, complex_i(p).normalized(), q}};
  }
  return {HConnection{d, perp / s, q}};
}

}  // namespace

SpaceDefinition euclidean_space(int n, const Vec& wind) {
  if (n <= 0 || wind.size() != n) throw ValidationError("euclidean_space: wind must have n components");
  std::string name = "euclidean:" + std::to_string(n) + ":";
  for (int i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", wind[i]);
    name += buf;
  }
  return flat_space(name, ModelKind::euclidean, wind,
                    std::vector<CoordinateTag>(static_cast<size_t>(n), CoordinateTag::unbounded()), false);
}

SpaceDefinition sphere_space(int n) {
  if (n < 3 || n % 2 == 0) throw ValidationError("sphere_space: dimension must be odd and at least 3");
  const int N = n + 1;
  SpaceDefinition s;
  s.name = "sphere:" + std::to_string(n);
  s.model = ModelKind::sphere;
  Mat jmat = Mat::Zero(N, N);
  for (int k = 0; k + 1 < N; k += 2) {
    jmat(k, k + 1) = -1.0;
    jmat(k + 1, k) = 1.0;
  }
  s.nav = NavigationData{flat_metric(N),
                         VectorField(N, [](const Vec& z) { return complex_i(z); },
                                     [jmat](const Vec&) { return jmat; })};
  s.intrinsic_dim = n;
  s.topology.assign(static_cast<size_t>(N), CoordinateTag::unbounded());
  s.quasi_regular = true;
  s.flow_period = 2.0 * kPi;
  s.flow = [](const Vec& z, double t) { return complex_rotate(z, t); };
  s.h_geodesic = [](const Vec& z, const Vec& v, double t) {
    const double speed = v.norm();
    if (speed == 0.0) return Vec(z);
    return Vec(z * std::cos(speed * t) + (v / speed) * std::sin(speed * t));
  };
  s.h_connect = sphere_connect;
  s.spray = [](const Vec& x, const Vec& v) { return Vec(-(v.squaredNorm() / x.squaredNorm()) * x); };
  s.constrain = [](Vec& x, Vec& v) {
    x.normalize();
    v -= x.dot(v) * x;
  };
  s.normals = [](const Vec& x) { return std::vector<Vec>{x.normalized()}; };
  return s;
}

SpaceDefinition cylinder_space(double A, double B, bool cover) {
  if (std::abs(A * A + B * B - 1.0) > 1e-12) {
    throw ValidationError("cylinder_space: A^2 + B^2 must equal 1");
  }
  Vec wind(2);
  wind << A, B;
  char buf[96];
  std::snprintf(buf, sizeof buf, "cylinder:%.17g,%.17g", A, B);
  SpaceDefinition s = flat_space(buf, ModelKind::cylinder, wind,
                                 {CoordinateTag::with_period(2.0 * kPi), CoordinateTag::unbounded()}, cover);
  if (B == 0.0) {
    s.quasi_regular = true;
    s.flow_period = 2.0 * kPi / std::abs(A);
  }
  return s;
}

SpaceDefinition torus_space(bool cover) {
  Vec wind(2);
  wind << std::sqrt(0.5), std::sqrt(0.5);
  SpaceDefinition s = flat_space("torus", ModelKind::torus, wind,
                                 {CoordinateTag::with_period(2.0 * kPi), CoordinateTag::with_period(2.0 * kPi)},
                                 cover);
  s.quasi_regular = true;
  s.flow_period = 2.0 * std::sqrt(2.0) * kPi;
  return s;
}

NavigationData hopf_stereographic_navigation() {
  MetricField h(
      3,
      [](const Vec& x) {
        const double c = 4.0 / std::pow(1.0 + x.squaredNorm(), 2);
        return Mat(c * Mat::Identity(3, 3));
      },
      [](const Vec& x) {
        const double denom = std::pow(1.0 + x.squaredNorm(), 3);
        std::vector<Mat> out;
        for (int k = 0; k < 3; ++k) out.push_back(Mat((-16.0 * x[k] / denom) * Mat::Identity(3, 3)));
        return out;
      });
  VectorField w(3, [](const Vec& x) {
    Vec out(3);
    out << -x[1] + x[0] * x[2], x[0] + x[1] * x[2], 0.5 * (1.0 - x[0] * x[0] - x[1] * x[1] + x[2] * x[2]);
    return out;
  });
  return NavigationData{std::move(h), std::move(w)};
}

std::optional<double> closed_form_distance(const SpaceDefinition& space, const Vec& p, const Vec& q) {
  switch (space.model) {
    case ModelKind::euclidean:
    case ModelKind::cylinder:
    case ModelKind::torus: {
      const Vec& w = space.constant_wind;
      auto s0 = [&](const Vec& target) -> std::optional<double> {
        const Vec d = target - p;
        if (d.squaredNorm() == 0.0) return 0.0;
        const double along = w.dot(d);
        if (!(along > 0.0)) return std::nullopt;
        return d.squaredNorm() / (2.0 * along);
      };
      if (!space.identifies_periods()) return s0(q);
      // The optimal lift can sit far from the nearest one when the wind runs
      // along a periodic axis, so widen the band with the separation.
      const int window = 4 + 2 * static_cast<int>(std::ceil((q - p).cwiseAbs().maxCoeff() / (2.0 * kPi)));
      std::optional<double> best;
      for (const Vec& lift : space.deck_lifts(p, q, window)) {
        if (auto v = s0(lift); v && (!best || *v < *best)) best = v;
      }
      return best;
    }
    case ModelKind::sphere: {
      if ((p - q).norm() == 0.0) return 0.0;
      auto g = [&](double tau) { return sphere_distance(p, complex_rotate(q, -tau)) - tau; };
      constexpr double kStep = 1e-3;
      double lo = 0.0, glo = g(0.0);
      for (double tau = kStep; tau <= 2.0 * kPi + kStep; tau += kStep) {
        const double gt = g(tau);
        if (gt <= 0.0) {
          double hi = tau;
          while (hi - lo > 1e-14) {
            const double mid = 0.5 * (lo + hi);
            if (g(mid) > 0.0) lo = mid; else hi = mid;
          }
          return 0.5 * (lo + hi);
        }
        lo = tau;
        glo = gt;
      }
      (void)glo;
      throw NumericalError("closed_form_distance: no fixed point on the sphere");
    }
    case ModelKind::generic:
      break;
  }
  throw ValidationError("closed_form_distance: not a model space");
}

namespace {

Vec offset(const Vec& p, double a, double b) {
  Vec out = p;
  out[0] += a;
  out[1] += b;
  return out;
}

}  // namespace

CutLocusCurve cut_locus(const SpaceDefinition& space, const Vec& p, int sampling) {
  CutLocusCurve curve;
  curve.source = CutLocusSource::analytic;
  if (sampling < 2) throw ValidationError("cut_locus: sampling must be at least 2");
  switch (space.model) {
    case ModelKind::euclidean:
      return curve;
    case ModelKind::sphere:
      curve.samples.emplace_back(p);
      curve.parameter.push_back(0.0);
      curve.branch.push_back(0);
      return curve;
    case ModelKind::cylinder: {
      const double A = space.constant_wind[0], B = space.constant_wind[1];
      const double lo = -4.0 * kPi, hi = 4.0 * kPi;
      for (int i = 0; i < sampling; ++i) {
        const double v = lo + i * (hi - lo) / (sampling - 1);
        const double len = std::hypot(kPi, v);
        curve.samples.emplace_back(offset(p, kPi + A * len, v + B * len));
        curve.parameter.push_back(v);
        curve.branch.push_back(0);
      }
      curve.experimental = !space.cover_mode;
      return curve;
    }
    case ModelKind::torus: {
      const double c = std::sqrt(0.5);
      for (int branch = 0; branch < 2; ++branch) {
        for (int i = 0; i < sampling; ++i) {
          const double s = i * (2.0 * kPi) / (sampling - 1);
          // h-distance to the cut point (s, π) or (π, s) of the torus.
          const double wrapped = s <= kPi ? s : s - 2.0 * kPi;
          const double len = std::hypot(kPi, wrapped);
          const Vec hat = branch == 0 ? offset(p, s, kPi) : offset(p, kPi, s);
          curve.samples.emplace_back(offset(hat, c * len, c * len));
          curve.parameter.push_back(s);
          curve.branch.push_back(branch);
        }
      }
      curve.experimental = !space.cover_mode;
      return curve;
    }
    case ModelKind::generic:
      break;
  }
  throw ValidationError("cut_locus: only model spaces are supported");
}

CutLocusCurve twist_h_cut_locus(const SpaceDefinition& space, const Vec& p,
                                const std::vector<ChartPoint>& h_cut_samples) {
  SpaceDefinition quotient = space;
  quotient.cover_mode = false;
  CutLocusCurve curve;
  curve.source = CutLocusSource::h_cut_twisted;
  curve.experimental = false;
  for (size_t i = 0; i < h_cut_samples.size(); ++i) {
    const Vec& hat = h_cut_samples[i].coords();
    const std::vector<HConnection> conn = h_connect(quotient, p, hat);
    curve.samples.emplace_back(flow_point(space, hat, conn.front().distance));
    curve.parameter.push_back(static_cast<double>(i));
    curve.branch.push_back(0);
  }
  return curve;
}

}  // namespace kropina
