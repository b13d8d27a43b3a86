#include "kropina/geometry.hpp"

#include "kropina/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>

namespace kropina {

namespace {

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) {
    throw ValidationError(std::string("non-finite ") + what);
  }
}

std::string describe(const Vec& x) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    os << (i ? "," : "") << x[i];
  }
  os << ")";
  return os.str();
}

}  // namespace

ChartPoint::ChartPoint(Vec coords) : coords_(std::move(coords)) {
  if (coords_.size() == 0) throw ValidationError("chart point must have positive dimension");
  require_finite(coords_, "chart coordinate");
}

Tangent::Tangent(ChartPoint base, Vec components)
    : base_(std::move(base)), components_(std::move(components)) {
  if (components_.size() != base_.coords().size()) {
    throw ValidationError("tangent dimension does not match its base point");
  }
  require_finite(components_, "tangent component");
}

double fd_step(const Vec& x) {
  const double scale = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
  return 1e-6 * std::max(1.0, scale);
}

MetricField::MetricField(int dim, Evaluator eval, PartialsEvaluator partials)
    : dim_(dim), eval_(std::move(eval)), partials_(std::move(partials)) {
  if (dim_ <= 0) throw ValidationError("metric dimension must be positive");
}

Mat MetricField::at(const Vec& x) const {
  if (x.size() != dim_) throw ValidationError("metric evaluated at a point of wrong dimension");
  Mat h = eval_(x);
  if (h.rows() != dim_ || h.cols() != dim_ || !h.allFinite()) {
    throw NumericalError("metric evaluation failed at " + describe(x));
  }
  const double tol = 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw NumericalError("metric not symmetric at " + describe(x));
  }
  Eigen::LLT<Mat> llt(h);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("metric not positive-definite at " + describe(x));
  }
  return h;
}

Mat MetricField::inverse_at(const Vec& x) const {
  Mat h = at(x);
  return h.llt().solve(Mat::Identity(dim_, dim_));
}

std::vector<Mat> MetricField::partials(const Vec& x) const {
  if (partials_) return partials_(x);
  const double eps = fd_step(x);
  std::vector<Mat> out;
  out.reserve(static_cast<size_t>(dim_));
  for (int k = 0; k < dim_; ++k) {
    Vec xp = x, xm = x;
    xp[k] += eps;
    xm[k] -= eps;
    out.push_back((at(xp) - at(xm)) / (2.0 * eps));
  }
  return out;
}

VectorField::VectorField(int dim, Evaluator eval, JacobianEvaluator jacobian)
    : dim_(dim), eval_(std::move(eval)), jacobian_(std::move(jacobian)) {
  if (dim_ <= 0) throw ValidationError("vector field dimension must be positive");
}

Vec VectorField::at(const Vec& x) const {
  if (x.size() != dim_) throw ValidationError("vector field evaluated at a point of wrong dimension");
  Vec w = eval_(x);
  if (w.size() != dim_ || !w.allFinite()) {
    throw NumericalError("vector field evaluation failed at " + describe(x));
  }
  return w;
}

Mat VectorField::jacobian(const Vec& x) const {
  if (jacobian_) return jacobian_(x);
  const double eps = fd_step(x);
  Mat jac(dim_, dim_);
  for (int j = 0; j < dim_; ++j) {
    Vec xp = x, xm = x;
    xp[j] += eps;
    xm[j] -= eps;
    jac.col(j) = (at(xp) - at(xm)) / (2.0 * eps);
  }
  return jac;
}

Vec Christoffel::contract(const Vec& u, const Vec& v) const {
  Vec out = Vec::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    double acc = 0.0;
    for (int j = 0; j < dim_; ++j) {
      for (int k = 0; k < dim_; ++k) acc += (*this)(i, j, k) * u[j] * v[k];
    }
    out[i] = acc;
  }
  return out;
}

double Christoffel::max_abs() const {
  double m = 0.0;
  for (double d : data_) m = std::max(m, std::abs(d));
  return m;
}

double inner(const MetricField& metric, const Vec& x, const Vec& u, const Vec& v) {
  if (u.size() != metric.dim() || v.size() != metric.dim()) {
    throw ValidationError("inner product dimension mismatch");
  }
  return u.dot(metric.at(x) * v);
}

double inner(const MetricField& metric, const ChartPoint& x, const Tangent& u, const Tangent& v) {
  if (x.dim() != metric.dim() || u.dim() != metric.dim() || v.dim() != metric.dim()) {
    throw ValidationError("inner product dimension mismatch");
  }
  if (u.base().coords() != x.coords() || v.base().coords() != x.coords()) {
    throw ValidationError("tangent vectors are not attached to the evaluation point");
  }
  return inner(metric, x.coords(), u.components(), v.components());
}

double norm(const MetricField& metric, const Vec& x, const Vec& u) {
  return std::sqrt(std::max(0.0, inner(metric, x, u, u)));
}

Christoffel christoffel(const MetricField& metric, const Vec& x) {
  const int n = metric.dim();
  const Mat hinv = metric.inverse_at(x);
  const std::vector<Mat> dh = metric.partials(x);
  Christoffel gamma(n);
  // Lowered symbols Γ_ljk = ½(∂_j h_lk + ∂_k h_lj − ∂_l h_jk), then raised.
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      Vec lowered(n);
      for (int l = 0; l < n; ++l) {
        lowered[l] = 0.5 * (dh[static_cast<size_t>(j)](l, k) + dh[static_cast<size_t>(k)](l, j) -
                            dh[static_cast<size_t>(l)](j, k));
      }
      const Vec raised = hinv * lowered;
      for (int i = 0; i < n; ++i) {
        gamma(i, j, k) = raised[i];
        gamma(i, k, j) = raised[i];
      }
    }
  }
  return gamma;
}

Christoffel christoffel(const MetricField& metric, const ChartPoint& x) {
  if (x.dim() != metric.dim()) throw ValidationError("christoffel: dimension mismatch");
  return christoffel(metric, x.coords());
}

namespace {

// ∂_j W_i for the lowered field, (i,j) = row, column.
Mat lowered_partials(const MetricField& metric, const VectorField& field, const Vec& x) {
  const int n = metric.dim();
  const Mat h = metric.at(x);
  const std::vector<Mat> dh = metric.partials(x);
  const Vec w = field.at(x);
  const Mat dw = field.jacobian(x);
  Mat out(n, n);
  for (int j = 0; j < n; ++j) {
    out.col(j) = dh[static_cast<size_t>(j)] * w + h * dw.col(j);
  }
  return out;
}

}  // namespace

Mat lowered_covariant_derivative(const MetricField& metric, const VectorField& field, const Vec& x) {
  const int n = metric.dim();
  Mat out = lowered_partials(metric, field, x);
  const Christoffel gamma = christoffel(metric, x);
  const Vec w_low = metric.at(x) * field.at(x);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += gamma(k, i, j) * w_low[k];
      out(i, j) -= acc;
    }
  }
  return out;
}

Mat lowered_curl(const MetricField& metric, const VectorField& field, const Vec& x) {
  const Mat d = lowered_partials(metric, field, x);
  return d - d.transpose();
}

FieldDiagnostics field_diagnostics(const MetricField& metric, const VectorField& field,
                                   const std::vector<ChartPoint>& samples) {
  FieldDiagnostics diag;
  for (const ChartPoint& p : samples) {
    const Vec& x = p.coords();
    const Mat cov = lowered_covariant_derivative(metric, field, x);
    diag.parallel_residual = std::max(diag.parallel_residual, cov.cwiseAbs().maxCoeff());
    diag.killing_residual =
        std::max(diag.killing_residual, (cov + cov.transpose()).cwiseAbs().maxCoeff());
    diag.closedness_residual =
        std::max(diag.closedness_residual, lowered_curl(metric, field, x).cwiseAbs().maxCoeff());
    const Vec w = field.at(x);
    diag.unit_deviation = std::max(diag.unit_deviation, std::abs(norm(metric, x, w) - 1.0));
  }
  return diag;
}

std::vector<ChartPoint> halton_grid(const Vec& lo, const Vec& hi, int count) {
  static constexpr std::array<int, 16> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                                  23, 29, 31, 37, 41, 43, 47, 53};
  if (lo.size() != hi.size() || lo.size() == 0) throw ValidationError("halton_grid: bad box");
  if (lo.size() > static_cast<Eigen::Index>(kPrimes.size())) {
    throw ValidationError("halton_grid: dimension too large");
  }
  std::vector<ChartPoint> out;
  out.reserve(static_cast<size_t>(std::max(count, 0)));
  for (int idx = 1; idx <= count; ++idx) {
    Vec x(lo.size());
    for (Eigen::Index d = 0; d < lo.size(); ++d) {
      const int base = kPrimes[static_cast<size_t>(d)];
      double f = 1.0, r = 0.0;
      for (int i = idx; i > 0; i /= base) {
        f /= base;
        r += f * (i % base);
      }
      x[d] = lo[d] + r * (hi[d] - lo[d]);
    }
    out.emplace_back(std::move(x));
  }
  return out;
}

}  // namespace kropina
