#include "kropina/errors.hpp"
#include "kropina/geometry.hpp"
#include "kropina/model_spaces.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace kropina;
using namespace kropina::testing;

namespace {

MetricField flat(int n) {
  return MetricField(n, [n](const Vec&) { return Mat(Mat::Identity(n, n)); });
}

// Round sphere S^2 in stereographic coordinates, no analytic partials.
MetricField stereographic_s2() {
  return MetricField(2, [](const Vec& x) {
    const double c = 4.0 / std::pow(1.0 + x.squaredNorm(), 2);
    return Mat(c * Mat::Identity(2, 2));
  });
}

}  // namespace

TEST(Inner, EuclideanUnitVectors) {
  const MetricField h = flat(2);
  EXPECT_DOUBLE_EQ(inner(h, vec({0, 0}), vec({1, 0}), vec({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(inner(h, vec({0, 0}), vec({1, 0}), vec({0, 1})), 0.0);
}

TEST(Inner, ScaledMetric) {
  const MetricField h(2, [](const Vec&) { return Mat(4.0 * Mat::Identity(2, 2)); });
  EXPECT_DOUBLE_EQ(inner(h, vec({0, 0}), vec({0.5, 0}), vec({0.5, 0})), 1.0);
}

TEST(Inner, TangentOverloadRejectsMismatchedBase) {
  const MetricField h = flat(2);
  const ChartPoint x(vec({0, 0}));
  const Tangent u(x, vec({1, 0}));
  const Tangent v(ChartPoint(vec({1, 0})), vec({0, 1}));
  EXPECT_THROW(inner(h, x, u, v), ValidationError);
}

TEST(Inner, RejectsDimensionMismatch) {
  EXPECT_THROW(inner(flat(2), vec({0, 0}), vec({1, 0, 0}), vec({1, 0})), ValidationError);
}

TEST(ChartPoint, RejectsNonFinite) {
  EXPECT_THROW(ChartPoint(vec({0, std::nan("")})), ValidationError);
}

TEST(MetricField, RejectsIndefiniteMetric) {
  const MetricField h(2, [](const Vec&) {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
  });
  EXPECT_THROW(h.at(vec({0, 0})), NumericalError);
}

TEST(MetricField, RejectsAsymmetricMetric) {
  const MetricField h(2, [](const Vec&) {
    Mat m(2, 2);
    m << 1, 0.5, 0, 1;
    return m;
  });
  EXPECT_THROW(h.at(vec({0, 0})), NumericalError);
}

TEST(Christoffel, FlatChartIsZero) {
  EXPECT_EQ(christoffel(flat(3), vec({0.3, -1.0, 2.0})).max_abs(), 0.0);
}

TEST(Christoffel, CylinderChartIsZero) {
  const SpaceDefinition cyl = cylinder_space(0.6, 0.8);
  EXPECT_EQ(christoffel(cyl.nav.h, vec({1.0, 2.0})).max_abs(), 0.0);
}

TEST(Christoffel, StereographicSphereVanishesAtOrigin) {
  EXPECT_LT(christoffel(stereographic_s2(), vec({0, 0})).max_abs(), 1e-9);
}

TEST(Christoffel, StereographicSphereMatchesConformalFormula) {
  // h = e^{2f} δ with f = log 2 - log(1 + r^2): Γ^i_jk = δ_ij f_k + δ_ik f_j - δ_jk f_i.
  const Vec x = vec({0.3, -0.4});
  const Vec df = -2.0 * x / (1.0 + x.squaredNorm());
  const Christoffel g = christoffel(stereographic_s2(), x);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) {
        const double expected = (i == j) * df[k] + (i == k) * df[j] - (j == k) * df[i];
        EXPECT_NEAR(g(i, j, k), expected, 1e-8);
        EXPECT_EQ(g(i, j, k), g(i, k, j));
      }
    }
  }
}

TEST(Christoffel, MetricCompatibility) {
  // ∂_k h(u, v) = h(∇_k u, v) + h(u, ∇_k v) for constant coordinate fields u, v.
  const MetricField h = stereographic_s2();
  const Vec x = vec({0.2, 0.5}), u = vec({1.0, -0.3}), v = vec({0.4, 0.9});
  const Christoffel g = christoffel(h, x);
  const double eps = 1e-6;
  for (int k = 0; k < 2; ++k) {
    Vec xp = x, xm = x;
    xp[k] += eps;
    xm[k] -= eps;
    const double lhs = (inner(h, xp, u, v) - inner(h, xm, u, v)) / (2 * eps);
    const Vec ek = Vec::Unit(2, k);
    const double rhs = inner(h, x, g.contract(ek, u), v) + inner(h, x, u, g.contract(ek, v));
    EXPECT_NEAR(lhs, rhs, 1e-5);
  }
}

TEST(FieldDiagnostics, ConstantWindOnFlatChart) {
  const VectorField w(2, [](const Vec&) { return vec({1, 0}); });
  const FieldDiagnostics d = field_diagnostics(flat(2), w, halton_grid(vec({-1, -1}), vec({1, 1}), 25));
  EXPECT_EQ(d.killing_residual, 0.0);
  EXPECT_EQ(d.parallel_residual, 0.0);
  EXPECT_EQ(d.closedness_residual, 0.0);
  EXPECT_EQ(d.unit_deviation, 0.0);
}

TEST(FieldDiagnostics, CylinderWindIsParallel) {
  const SpaceDefinition cyl = cylinder_space(0.6, 0.8);
  const FieldDiagnostics d = field_diagnostics(cyl.nav.h, cyl.nav.wind, cyl.probe_points(25));
  EXPECT_LT(d.killing_residual, 1e-12);
  EXPECT_LT(d.parallel_residual, 1e-12);
  EXPECT_LT(d.unit_deviation, 1e-12);
}

TEST(FieldDiagnostics, HopfFieldIsKillingButNotParallel) {
  const NavigationData nav = hopf_stereographic_navigation();
  const FieldDiagnostics d =
      field_diagnostics(nav.h, nav.wind, halton_grid(Vec::Constant(3, -1), Vec::Constant(3, 1), 27));
  EXPECT_LE(d.killing_residual, 1e-8);
  EXPECT_LE(d.unit_deviation, 1e-8);
  EXPECT_GT(d.parallel_residual, 0.1);
}

TEST(FieldDiagnostics, RotatingFieldIsNotKilling) {
  const VectorField w(2, [](const Vec& x) { return vec({std::cos(x[1]), std::sin(x[1])}); });
  const FieldDiagnostics d = field_diagnostics(flat(2), w, halton_grid(vec({-1, -1}), vec({1, 1}), 25));
  EXPECT_GT(d.killing_residual, 1e-5);
  EXPECT_LT(d.unit_deviation, 1e-12);
}

TEST(FieldDiagnostics, ParallelBoundsKillingAndClosedness) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec a = random_vec(rng, 4, -0.5, 0.5);
    const VectorField w(2, [a](const Vec& x) {
      return vec({a[0] * x[0] + a[1] * x[1], a[2] * x[0] + a[3] * x[1]});
    });
    const FieldDiagnostics d = field_diagnostics(flat(2), w, halton_grid(vec({-1, -1}), vec({1, 1}), 9));
    EXPECT_LE(d.killing_residual, 2 * d.parallel_residual + 1e-12);
    EXPECT_LE(d.closedness_residual, 2 * d.parallel_residual + 1e-12);
  }
}

TEST(HaltonGrid, DeterministicAndInsideBox) {
  const auto a = halton_grid(vec({-1, 0}), vec({1, 2}), 50);
  const auto b = halton_grid(vec({-1, 0}), vec({1, 2}), 50);
  ASSERT_EQ(a.size(), 50u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].coords(), b[i].coords());
    EXPECT_GE(a[i].coords()[0], -1.0);
    EXPECT_LE(a[i].coords()[1], 2.0);
  }
}
