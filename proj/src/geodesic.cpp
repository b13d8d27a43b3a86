#include "kropina/geodesic.hpp"

#include "kropina/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace kropina {

namespace {

void rk4_geodesic_step(const SpaceDefinition& space, Vec& x, Vec& v, double h) {
  const Vec a1 = geodesic_acceleration(space, x, v);
  const Vec x2 = x + 0.5 * h * v, v2 = v + 0.5 * h * a1;
  const Vec a2 = geodesic_acceleration(space, x2, v2);
  const Vec x3 = x + 0.5 * h * v2, v3 = v + 0.5 * h * a2;
  const Vec a3 = geodesic_acceleration(space, x3, v3);
  const Vec x4 = x + h * v3, v4 = v + h * a3;
  const Vec a4 = geodesic_acceleration(space, x4, v4);
  x += (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4);
  v += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  if (space.constrain) space.constrain(x, v);
}

double safe_f(const SpaceDefinition& space, const Vec& x, const Vec& y, bool& admissible) {
  const KropinaValue f = kropina_value(space.nav, x, y);
  admissible = f.admissible();
  return admissible ? *f.value : 0.0;
}

void push_sample(const SpaceDefinition& space, PathSample& path, double t, const Vec& x, const Vec& v) {
  bool adm = false;
  const double f = safe_f(space, x, v, adm);
  path.params.push_back(t);
  path.points.push_back(x);
  path.velocities.push_back(v);
  path.f_values.push_back(f);
  path.admissible.push_back(adm);
}

bool leaves_chart(const SpaceDefinition& space, const Vec& x) {
  if (!x.allFinite()) return true;
  return space.chart_box && !space.chart_box->contains(x);
}

// Normalizes y to F = 1 and returns (unit y, F(y)).
std::pair<Vec, double> normalize_kropina(const SpaceDefinition& space, const Vec& p, const Vec& y) {
  const KropinaValue f = kropina_value(space.nav, p, y);
  if (!f.admissible()) {
    throw ValidationError("initial vector is not admissible (h(y,W) <= 0)");
  }
  return {y / *f.value, *f.value};
}

// The h-initial velocity v = y - W(p) of a unit Kropina vector, validated.
Vec h_velocity_of(const SpaceDefinition& space, const Vec& p, const Vec& y_unit) {
  if (norm(space.nav.h, p, y_unit) < 1e-9) {
    throw ValidationError("degenerate direction: y - W is -W");
  }
  Vec v = y_unit - space.nav.wind.at(p);
  const double speed = norm(space.nav.h, p, v);
  if (std::abs(speed - 1.0) > 1e-9) v /= speed;
  return v;
}

// P(s) and its velocity for the unit Kropina vector y_unit.
std::pair<Vec, Vec> kropina_state(const SpaceDefinition& space, const Vec& p, const Vec& y_unit,
                                  double s, int steps) {
  const Vec v0 = h_velocity_of(space, p, y_unit);
  Vec x = p, v = v0;
  if (s > 0.0) {
    const double h = s / steps;
    for (int k = 0; k < steps; ++k) rk4_geodesic_step(space, x, v, h);
  }
  const Vec point = flow_point(space, x, s);
  const Vec vel = space.nav.wind.at(point) + flow_pushforward(space, x, v, s);
  return {point, vel};
}

}  // namespace

Vec geodesic_acceleration(const SpaceDefinition& space, const Vec& x, const Vec& v) {
  if (space.spray) return space.spray(x, v);
  return -christoffel(space.nav.h, x).contract(v, v);
}

PathSample integrate_h_geodesic(const SpaceDefinition& space, const Tangent& v0, double t_max,
                                int steps) {
  if (steps < 16) throw ValidationError("integrate_h_geodesic: steps must be at least 16");
  if (!(t_max > 0.0)) throw ValidationError("integrate_h_geodesic: t_max must be positive");
  Vec x = v0.base().coords();
  Vec v = space.project_tangent(x, v0.components());
  PathSample path;
  const double speed = norm(space.nav.h, x, v);
  if (!(speed > 0.0)) throw ValidationError("integrate_h_geodesic: zero initial velocity");
  if (std::abs(speed - 1.0) > 1e-9) {
    v /= speed;
    path.rescale_factor = speed;
    path.warnings.push_back("initial velocity rescaled to unit h-length");
  }
  if (space.constrain) space.constrain(x, v);
  const double h = t_max / steps;
  push_sample(space, path, 0.0, x, v);
  for (int k = 1; k <= steps; ++k) {
    rk4_geodesic_step(space, x, v, h);
    if (leaves_chart(space, x)) {
      path.truncated = true;
      path.warnings.push_back("path left the chart; truncated");
      break;
    }
    push_sample(space, path, k * h, x, v);
  }
  return path;
}

Vec h_exponential(const SpaceDefinition& space, const Vec& x0, const Vec& v, double t, int steps) {
  Vec x = x0, vel = v;
  if (space.constrain) space.constrain(x, vel);
  if (t == 0.0) return x;
  const double h = t / steps;
  for (int k = 0; k < steps; ++k) {
    rk4_geodesic_step(space, x, vel, h);
    if (!x.allFinite()) throw NumericalError("h_exponential: integration diverged");
  }
  return x;
}

Vec flow_point(const SpaceDefinition& space, const Vec& x0, double t) {
  if (space.flow) return space.flow(x0, t);
  if (t == 0.0) return x0;
  const double max_step = 1e-3 * std::max(1.0, std::abs(t));
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(t) / max_step - 1e-9)));
  const double h = t / n;
  Vec x = x0;
  for (int k = 0; k < n; ++k) {
    const Vec k1 = space.nav.wind.at(x);
    const Vec k2 = space.nav.wind.at(x + 0.5 * h * k1);
    const Vec k3 = space.nav.wind.at(x + 0.5 * h * k2);
    const Vec k4 = space.nav.wind.at(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (leaves_chart(space, x)) throw NumericalError("flow left the chart");
  }
  return x;
}

ChartPoint integrate_flow(const SpaceDefinition& space, const ChartPoint& x0, double t) {
  if (x0.dim() != space.dim()) throw ValidationError("integrate_flow: dimension mismatch");
  return ChartPoint(flow_point(space, x0.coords(), t));
}

Vec flow_pushforward(const SpaceDefinition& space, const Vec& x, const Vec& v, double t) {
  const double len = v.norm();
  if (len == 0.0) return Vec::Zero(v.size());
  if (t == 0.0) return v;
  const double eps = 1e-3 * std::max(1.0, x.cwiseAbs().maxCoeff());
  const Vec dir = v / len;
  auto at = [&](double s) { return flow_point(space, x + s * eps * dir, t); };
  return (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) * (len / (12.0 * eps));
}

PathSample kropina_geodesic(const SpaceDefinition& space, const Tangent& y0, double t_max, int steps) {
  const Vec& p = y0.base().coords();
  auto [y_unit, f0] = normalize_kropina(space, p, space.project_tangent(p, y0.components()));
  const Vec v0 = h_velocity_of(space, p, y_unit);
  const PathSample rho = integrate_h_geodesic(space, Tangent(y0.base(), v0), t_max, steps);
  PathSample path;
  path.rescale_factor = f0;
  if (std::abs(f0 - 1.0) > 1e-12) path.warnings.push_back("initial vector rescaled to F = 1");
  path.truncated = rho.truncated;
  for (size_t k = 0; k < rho.size(); ++k) {
    const double t = rho.params[k];
    const Vec point = flow_point(space, rho.points[k], t);
    const Vec vel = space.nav.wind.at(point) + flow_pushforward(space, rho.points[k], rho.velocities[k], t);
    push_sample(space, path, t, point, vel);
  }
  return path;
}

ChartPoint kropina_exponential(const SpaceDefinition& space, const Tangent& y, double t, int steps) {
  if (t < 0.0) throw ValidationError("kropina_exponential: t must be non-negative");
  const Vec& p = y.base().coords();
  if (t == 0.0) return y.base();
  auto [y_unit, f] = normalize_kropina(space, p, space.project_tangent(p, y.components()));
  const double s = t * f;
  const Vec v = h_velocity_of(space, p, y_unit);
  return ChartPoint(flow_point(space, h_exponential(space, p, v, s, steps), s));
}

PathSample recover_h_geodesic(const SpaceDefinition& space, const PathSample& kropina_path) {
  PathSample rho;
  for (size_t k = 0; k < kropina_path.size(); ++k) {
    const double t = kropina_path.params[k];
    const Vec& P = kropina_path.points[k];
    const Vec x = flow_point(space, P, -t);
    // rho' = (phi_{-t})_* (P' - W(P))
    const Vec v = flow_pushforward(space, P, kropina_path.velocities[k] - space.nav.wind.at(P), -t);
    push_sample(space, rho, t, x, v);
  }
  return rho;
}

namespace {

std::optional<HConnection> shoot(const SpaceDefinition& space, const Vec& p, const Vec& target) {
  constexpr int kShootSteps = 256;
  const double tol = 1e-10 * std::max(1.0, target.cwiseAbs().maxCoeff());
  const int n = space.dim();
  Vec v = target - p;
  auto residual_of = [&](const Vec& vel) { return Vec(h_exponential(space, p, vel, 1.0, kShootSteps) - target); };
  Vec r = residual_of(v);
  for (int iter = 0; iter < 60 && r.norm() > tol; ++iter) {
    Mat jac(n, n);
    const double eps = 1e-6 * std::max(1.0, v.norm());
    for (int j = 0; j < n; ++j) {
      Vec vp = v, vm = v;
      vp[j] += eps;
      vm[j] -= eps;
      jac.col(j) = (residual_of(vp) - residual_of(vm)) / (2.0 * eps);
    }
    const Vec dv = jac.colPivHouseholderQr().solve(-r);
    double lambda = 1.0;
    bool improved = false;
    for (int half = 0; half < 30; ++half, lambda *= 0.5) {
      const Vec trial = v + lambda * dv;
      Vec rt;
      try {
        rt = residual_of(trial);
      } catch (const NumericalError&) {
        continue;
      }
      if (rt.allFinite() && rt.norm() < r.norm()) {
        v = trial;
        r = rt;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!(r.norm() <= tol * 10.0)) return std::nullopt;
  const double len = norm(space.nav.h, p, v);
  return HConnection{len, len > 0.0 ? Vec(v / len) : Vec(Vec::Zero(n)), target};
}

}  // namespace

std::vector<HConnection> h_connect(const SpaceDefinition& space, const Vec& p, const Vec& q) {
  if (space.h_connect) return space.h_connect(space, p, q);
  std::vector<HConnection> found;
  for (const Vec& lift : space.deck_lifts(p, q)) {
    if ((lift - p).norm() == 0.0) {
      found.push_back(HConnection{0.0, Vec::Zero(p.size()), lift});
      continue;
    }
    try {
      if (auto c = shoot(space, p, lift)) found.push_back(*c);
    } catch (const NumericalError&) {
      // this lift is unreachable by shooting; the others may still converge
    }
  }
  if (found.empty()) {
    throw NumericalError("two-point shooting did not converge for any lift of the target");
  }
  std::sort(found.begin(), found.end(),
            [](const HConnection& a, const HConnection& b) { return a.distance < b.distance; });
  return found;
}

namespace {

struct JacobiState {
  Vec x, v;
  Mat J, Jd;
};

struct JacobiDeriv {
  Vec dx, dv;
  Mat dJ, dJd;
};

Vec directional(const std::function<Vec(const Vec&)>& f, const Vec& at, const Vec& dir, double scale) {
  const double len = dir.norm();
  if (len == 0.0) return Vec::Zero(at.size());
  const double s = 1e-4 * std::max(1.0, scale);
  const Vec u = dir / len;
  return (f(at + s * u) - f(at - s * u)) * (len / (2.0 * s));
}

JacobiDeriv jacobi_rhs(const SpaceDefinition& space, const JacobiState& st) {
  JacobiDeriv d;
  d.dx = st.v;
  d.dv = geodesic_acceleration(space, st.x, st.v);
  d.dJ = st.Jd;
  d.dJd.resize(st.J.rows(), st.J.cols());
  const double xs = st.x.cwiseAbs().maxCoeff();
  const double vs = st.v.cwiseAbs().maxCoeff();
  auto ax = [&](const Vec& xx) { return geodesic_acceleration(space, xx, st.v); };
  auto av = [&](const Vec& vv) { return geodesic_acceleration(space, st.x, vv); };
  for (Eigen::Index k = 0; k < st.J.cols(); ++k) {
    d.dJd.col(k) = directional(ax, st.x, st.J.col(k), xs) + directional(av, st.v, st.Jd.col(k), vs);
  }
  return d;
}

JacobiState jacobi_step(const SpaceDefinition& space, const JacobiState& s, double h) {
  auto add = [](const JacobiState& a, const JacobiDeriv& d, double c) {
    return JacobiState{a.x + c * d.dx, a.v + c * d.dv, a.J + c * d.dJ, a.Jd + c * d.dJd};
  };
  const JacobiDeriv k1 = jacobi_rhs(space, s);
  const JacobiDeriv k2 = jacobi_rhs(space, add(s, k1, 0.5 * h));
  const JacobiDeriv k3 = jacobi_rhs(space, add(s, k2, 0.5 * h));
  const JacobiDeriv k4 = jacobi_rhs(space, add(s, k3, h));
  JacobiState out{s.x + (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
                  s.v + (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv),
                  s.J + (h / 6.0) * (k1.dJ + 2.0 * k2.dJ + 2.0 * k3.dJ + k4.dJ),
                  s.Jd + (h / 6.0) * (k1.dJd + 2.0 * k2.dJd + 2.0 * k3.dJd + k4.dJd)};
  if (space.constrain) space.constrain(out.x, out.v);
  return out;
}

double frame_determinant(const SpaceDefinition& space, const JacobiState& s) {
  const Eigen::Index n = s.x.size();
  Mat frame(n, n);
  Eigen::Index c = 0;
  for (; c < s.J.cols(); ++c) frame.col(c) = s.J.col(c);
  frame.col(c++) = s.v;
  if (space.normals) {
    for (const Vec& nv : space.normals(s.x)) {
      if (c < n) frame.col(c++) = nv;
    }
  }
  if (c != n) throw NumericalError("jacobi frame does not span the chart");
  return frame.determinant();
}

double smallest_singular(const SpaceDefinition& space, const JacobiState& s) {
  const Mat h = space.nav.h.at(s.x);
  const Mat upper = h.llt().matrixU();
  Eigen::JacobiSVD<Mat> svd(upper * s.J);
  return svd.singularValues().minCoeff();
}

Mat normal_basis(const SpaceDefinition& space, const Vec& p, const Vec& v0) {
  const int n = space.dim();
  const int m = space.intrinsic_dim - 1;
  const Mat h = space.nav.h.at(p);
  std::vector<Vec> taken;
  auto h_dot = [&](const Vec& a, const Vec& b) { return a.dot(h * b); };
  taken.push_back(v0 / std::sqrt(h_dot(v0, v0)));
  if (space.normals) {
    for (const Vec& nv : space.normals(p)) taken.push_back(nv / std::sqrt(h_dot(nv, nv)));
  }
  const size_t fixed = taken.size();
  for (int axis = 0; axis < n && static_cast<int>(taken.size() - fixed) < m; ++axis) {
    Vec e = Vec::Unit(n, axis);
    for (const Vec& t : taken) e -= h_dot(t, e) * t;
    const double len = std::sqrt(std::max(0.0, h_dot(e, e)));
    if (len > 1e-6) taken.push_back(e / len);
  }
  if (static_cast<int>(taken.size() - fixed) != m) throw NumericalError("could not build a normal frame");
  Mat basis(n, m);
  for (int k = 0; k < m; ++k) basis.col(k) = taken[fixed + static_cast<size_t>(k)];
  return basis;
}

}  // namespace

ConjugateReport jacobi_conjugate_search(const SpaceDefinition& space, const Tangent& y0, double t_max) {
  if (!(t_max > 0.0)) throw ValidationError("jacobi_conjugate_search: t_max must be positive");
  const Vec& p = y0.base().coords();
  auto [y_unit, f0] = normalize_kropina(space, p, space.project_tangent(p, y0.components()));
  (void)f0;
  const Vec v0 = h_velocity_of(space, p, y_unit);
  const int n = space.dim();
  const int m = space.intrinsic_dim - 1;

  ConjugateReport report;
  report.method = ConjugateMethod::numerical;
  if (m <= 0) return report;

  const int steps = std::max(kDefaultSteps, static_cast<int>(std::ceil(t_max / 0.01)));
  const double h = t_max / steps;
  std::vector<JacobiState> grid;
  grid.reserve(static_cast<size_t>(steps) + 1);
  grid.push_back(JacobiState{p, v0, Mat::Zero(n, m), normal_basis(space, p, v0)});
  if (space.constrain) space.constrain(grid[0].x, grid[0].v);
  std::vector<double> det(static_cast<size_t>(steps) + 1, 0.0), sigma(static_cast<size_t>(steps) + 1, 0.0);
  report.jacobi_norm_trace.emplace_back(0.0, 0.0);
  for (int k = 1; k <= steps; ++k) {
    grid.push_back(jacobi_step(space, grid.back(), h));
    const JacobiState& s = grid.back();
    if (!s.x.allFinite() || !s.J.allFinite()) throw NumericalError("jacobi integration diverged");
    det[static_cast<size_t>(k)] = frame_determinant(space, s);
    sigma[static_cast<size_t>(k)] = smallest_singular(space, s);
    report.jacobi_norm_trace.emplace_back(k * h, sigma[static_cast<size_t>(k)]);
  }

  auto state_at = [&](double t) {
    const int base = std::clamp(static_cast<int>(std::floor(t / h)), 0, steps);
    const double dt = t - base * h;
    return dt == 0.0 ? grid[static_cast<size_t>(base)] : jacobi_step(space, grid[static_cast<size_t>(base)], dt);
  };

  std::vector<double> found;
  double sigma_max = 0.0;
  for (int k = 2; k <= steps; ++k) {
    const auto ku = static_cast<size_t>(k);
    sigma_max = std::max(sigma_max, sigma[ku - 1]);
    // Odd-multiplicity zeros: sign change of the frame determinant.
    if (det[ku - 1] * det[ku] < 0.0) {
      double lo = (k - 1) * h, hi = k * h;
      const double sign_lo = det[ku - 1];
      while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        const double dm = frame_determinant(space, state_at(mid));
        if (dm * sign_lo > 0.0) lo = mid; else hi = mid;
      }
      found.push_back(0.5 * (lo + hi));
    }
    // Even-multiplicity zeros: a dip of the smallest singular value to zero.
    if (k < steps && sigma[ku - 1] > sigma[ku] && sigma[ku] <= sigma[ku + 1]) {
      double a = (k - 1) * h, b = (k + 1) * h;
      const double ratio = 0.5 * (3.0 - std::sqrt(5.0));
      double c = a + ratio * (b - a), d = b - ratio * (b - a);
      double fc = smallest_singular(space, state_at(c)), fd = smallest_singular(space, state_at(d));
      while (b - a > 1e-9) {
        if (fc < fd) {
          b = d; d = c; fd = fc;
          c = a + ratio * (b - a);
          fc = smallest_singular(space, state_at(c));
        } else {
          a = c; c = d; fc = fd;
          d = b - ratio * (b - a);
          fd = smallest_singular(space, state_at(d));
        }
      }
      const double tmin = 0.5 * (a + b);
      if (smallest_singular(space, state_at(tmin)) <= 1e-5 * std::max(1.0, sigma_max)) found.push_back(tmin);
    }
  }
  std::sort(found.begin(), found.end());
  for (double t : found) {
    if (t <= 0.0 || t > t_max) continue;
    if (!report.parameters.empty() && t - report.parameters.back() < 1e-4) continue;
    report.parameters.push_back(t);
    report.points.push_back(flow_point(space, state_at(t).x, t));
  }
  return report;
}

double gauss_orthogonality(const SpaceDefinition& space, const Tangent& y, const Vec& V, double tau) {
  const Vec& p = y.base().coords();
  if (!(tau > 0.0)) throw ValidationError("gauss_orthogonality: tau must be positive");
  const Vec yv = space.project_tangent(p, y.components());
  const KropinaValue fy = kropina_value(space.nav, p, yv);
  if (!fy.admissible()) throw ValidationError("gauss_orthogonality: inadmissible y");
  const double r = *fy.value;

  Vec w = space.project_tangent(p, V);
  w -= (kropina_differential(space.nav, p, yv).dot(w) / r) * yv;
  const double wlen = norm(space.nav.h, p, w);
  if (!(wlen > 1e-12)) throw ValidationError("gauss_orthogonality: V is parallel to y");
  w /= wlen;

  const Vec center = tau * yv;
  auto exp_at = [&](const Vec& vec) {
    return kropina_exponential(space, Tangent(y.base(), vec), 1.0).coords();
  };
  const double s = 1e-3 * std::min(1.0, center.norm());
  const Vec push =
      (8.0 * (exp_at(center + s * w) - exp_at(center - s * w)) - (exp_at(center + 2.0 * s * w) - exp_at(center - 2.0 * s * w))) /
      (12.0 * s);

  auto [point, vel] = kropina_state(space, p, yv / r, r * tau, kDefaultSteps);
  const Vec T = r * vel;
  const Mat g = fundamental_tensor(space.nav, point, T);
  return std::abs(push.dot(g * T));
}

}  // namespace kropina
