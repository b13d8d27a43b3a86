#pragma once

// Chart-level Riemannian primitives: metric and vector fields given as
// evaluators, Christoffel symbols, lowered covariant derivatives and the
// Killing / parallel / closedness diagnostics of a wind field.

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace kropina {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A point of a chart. Coordinates are validated finite on construction.
class ChartPoint {
 public:
  ChartPoint() = default;
  explicit ChartPoint(Vec coords);

  const Vec& coords() const { return coords_; }
  int dim() const { return static_cast<int>(coords_.size()); }

 private:
  Vec coords_;
};

/// A tangent vector attached to a chart point.
class Tangent {
 public:
  Tangent() = default;
  Tangent(ChartPoint base, Vec components);

  const ChartPoint& base() const { return base_; }
  const Vec& components() const { return components_; }
  int dim() const { return base_.dim(); }

 private:
  ChartPoint base_;
  Vec components_;
};

/// Central-difference step used for every derivative that has no analytic provider.
double fd_step(const Vec& x);

/// A Riemannian metric h_ij(x) on a chart.
///
/// Evaluation checks symmetry (1e-12) and positive-definiteness (Cholesky)
/// and throws NumericalError at points where either fails. When no analytic
/// partials are supplied, ∂_k h_ij is computed by central differences.
class MetricField {
 public:
  using Evaluator = std::function<Mat(const Vec&)>;
  /// Returns dim matrices; entry k is ∂h/∂x^k.
  using PartialsEvaluator = std::function<std::vector<Mat>(const Vec&)>;

  MetricField() = default;
  MetricField(int dim, Evaluator eval, PartialsEvaluator partials = {});

  int dim() const { return dim_; }
  Mat at(const Vec& x) const;
  Mat inverse_at(const Vec& x) const;
  std::vector<Mat> partials(const Vec& x) const;
  bool has_analytic_partials() const { return static_cast<bool>(partials_); }

 private:
  int dim_ = 0;
  Evaluator eval_;
  PartialsEvaluator partials_;
};

/// A vector field W^i(x). The Jacobian (∂_j W^i stored at (i,j)) falls back
/// to central differences.
class VectorField {
 public:
  using Evaluator = std::function<Vec(const Vec&)>;
  using JacobianEvaluator = std::function<Mat(const Vec&)>;

  VectorField() = default;
  VectorField(int dim, Evaluator eval, JacobianEvaluator jacobian = {});

  int dim() const { return dim_; }
  Vec at(const Vec& x) const;
  Mat jacobian(const Vec& x) const;

 private:
  int dim_ = 0;
  Evaluator eval_;
  JacobianEvaluator jacobian_;
};

/// Γ^i_jk stored densely; symmetric in (j,k) by construction.
class Christoffel {
 public:
  explicit Christoffel(int dim) : dim_(dim), data_(static_cast<size_t>(dim * dim * dim), 0.0) {}

  int dim() const { return dim_; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }

  /// Γ^i_jk u^j v^k
  Vec contract(const Vec& u, const Vec& v) const;
  double max_abs() const;

 private:
  size_t index(int i, int j, int k) const {
    return static_cast<size_t>((i * dim_ + j) * dim_ + k);
  }
  int dim_;
  std::vector<double> data_;
};

struct FieldDiagnostics {
  double killing_residual = 0.0;
  double parallel_residual = 0.0;
  double closedness_residual = 0.0;
  double unit_deviation = 0.0;
};

/// h_ij(x) u^i v^j. Throws ValidationError on dimension mismatch or non-finite input.
double inner(const MetricField& metric, const ChartPoint& x, const Tangent& u, const Tangent& v);
double inner(const MetricField& metric, const Vec& x, const Vec& u, const Vec& v);
double norm(const MetricField& metric, const Vec& x, const Vec& u);

Christoffel christoffel(const MetricField& metric, const ChartPoint& x);
Christoffel christoffel(const MetricField& metric, const Vec& x);

/// Lowered covariant derivative W_{i|j} = ∂_j W_i − Γ^k_ij W_k with W_i = h_ik W^k,
/// returned with (i,j) = row, column.
Mat lowered_covariant_derivative(const MetricField& metric, const VectorField& field, const Vec& x);

/// ∂_j W_i − ∂_i W_j for the lowered field; (i,j) = row, column.
Mat lowered_curl(const MetricField& metric, const VectorField& field, const Vec& x);

FieldDiagnostics field_diagnostics(const MetricField& metric, const VectorField& field,
                                   const std::vector<ChartPoint>& samples);

/// Halton points in the box [lo, hi] (per coordinate). Deterministic.
std::vector<ChartPoint> halton_grid(const Vec& lo, const Vec& hi, int count);

}  // namespace kropina
