#include "kropina/errors.hpp"
#include "kropina/geodesic.hpp"
#include "kropina/model_spaces.hpp"
#include "kropina/separation.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace kropina;
using namespace kropina::testing;

namespace {

const SpaceDefinition& plane() {
  static const SpaceDefinition s = euclidean_space(2, vec({1, 0}));
  return s;
}

double dh(const SpaceDefinition& s, const Vec& p, const Vec& q) { return h_connect(s, p, q).front().distance; }

}  // namespace

TEST(Delta, SpecExamples) {
  EXPECT_NEAR(delta(plane(), vec({0, 0}), vec({3, 0}), 1.0), 2.0, 1e-15);
  EXPECT_NEAR(delta(plane(), vec({0, 0}), vec({3, 0}), 1.5), 1.5, 1e-15);
  const double t = kPi / std::sqrt(2.0);
  EXPECT_NEAR(delta(torus_space(true), vec({0, 0}), vec({kPi, kPi}), t), t, 1e-13);
}

TEST(Delta, ContinuousInTau) {
  const SpaceDefinition s = sphere_space(3);
  const Vec p = vec({1, 0, 0, 0}), q = vec({0, 0.6, 0.8, 0});
  double prev = delta(s, p, q, 0.0);
  for (int i = 1; i <= 400; ++i) {
    const double cur = delta(s, p, q, i * 0.02);
    EXPECT_LE(std::abs(cur - prev), 0.02 + 1e-9);  // the flow is an isometry moving points at unit speed
    prev = cur;
  }
}

TEST(Separation, SpecExamples) {
  const SeparationResult a = separation(plane(), vec({0, 0}), vec({3, 0}));
  ASSERT_EQ(a.status, SeparationStatus::finite);
  EXPECT_NEAR(a.value, 1.5, 1e-9);
  EXPECT_EQ(a.value, a.tau_star);
  EXPECT_LT((a.initial_direction.components() - vec({2, 0})).norm(), 1e-7);

  const SeparationResult b = separation(plane(), vec({0, 0}), vec({0, 1}));
  EXPECT_EQ(b.status, SeparationStatus::unreachable);
  EXPECT_TRUE(std::isinf(b.value));
  EXPECT_TRUE(b.capped);

  std::mt19937_64 rng(20);
  const SpaceDefinition s = sphere_space(3);
  for (int i = 0; i < 8; ++i) {
    const SeparationResult r = separation(s, random_unit(rng, 4), random_unit(rng, 4));
    ASSERT_EQ(r.status, SeparationStatus::finite);
    EXPECT_LE(r.value, kPi + 1e-9);
  }
}

TEST(Separation, SamePoint) {
  const SeparationResult r = separation(plane(), vec({1, 2}), vec({1, 2}));
  EXPECT_EQ(r.status, SeparationStatus::same_point);
  EXPECT_EQ(r.value, 0.0);
  const SeparationResult t = separation(torus_space(), vec({0, 0}), vec({2 * kPi, -2 * kPi}));
  EXPECT_EQ(t.status, SeparationStatus::same_point);
}

TEST(Separation, FixedPointCertificate) {
  std::mt19937_64 rng(21);
  std::vector<std::pair<SpaceDefinition, std::pair<Vec, Vec>>> cases;
  cases.push_back({sphere_space(3), {random_unit(rng, 4), random_unit(rng, 4)}});
  cases.push_back({torus_space(), {vec({0.3, 0.1}), vec({2.0, 5.0})}});
  cases.push_back({cylinder_space(0.6, 0.8), {vec({0, 0}), vec({3.0, 1.0})}});
  cases.push_back({cylinder_space(1, 0), {vec({0, 0}), vec({1.0, -2.0})}});
  cases.push_back({plane(), {vec({0, 0}), vec({0.5, 2.0})}});
  for (const auto& [s, pq] : cases) {
    const SeparationResult r = separation(s, pq.first, pq.second);
    ASSERT_EQ(r.status, SeparationStatus::finite) << s.name;
    EXPECT_LE(std::abs(delta(s, pq.first, pq.second, r.tau_star) - r.tau_star), kTolFixedPoint) << s.name;
    const Vec end = kropina_exponential(s, r.initial_direction, r.tau_star).coords();
    const std::vector<Vec> lifts = s.deck_lifts(end, pq.second, 1);
    double miss = (end - pq.second).norm();
    for (const Vec& l : lifts) miss = std::min(miss, (end - l).norm());
    EXPECT_LT(miss, 1e-5) << s.name;
  }
}

TEST(Separation, LowerBoundByHalfHDistance) {
  std::mt19937_64 rng(22);
  const SpaceDefinition sph = sphere_space(3);
  const SpaceDefinition torus = torus_space();
  for (int i = 0; i < 10; ++i) {
    const Vec p = random_unit(rng, 4), q = random_unit(rng, 4);
    EXPECT_GE(separation(sph, p, q).value, 0.5 * dh(sph, p, q) - 1e-12);
    const Vec a = random_vec(rng, 2, 0, 2 * kPi), b = random_vec(rng, 2, 0, 2 * kPi);
    EXPECT_GE(separation(torus, a, b).value, 0.5 * dh(torus, a, b) - 1e-12);
  }
}

TEST(Separation, TriangleInequalityOnQuasiRegularSpaces) {
  std::mt19937_64 rng(23);
  const SpaceDefinition sph = sphere_space(3);
  const SpaceDefinition torus = torus_space();
  const SpaceDefinition rot = cylinder_space(1, 0);
  for (int i = 0; i < 6; ++i) {
    const Vec p = random_unit(rng, 4), q = random_unit(rng, 4), r = random_unit(rng, 4);
    EXPECT_LE(separation(sph, p, r).value, separation(sph, p, q).value + separation(sph, q, r).value + 1e-6);
    const Vec a = random_vec(rng, 2, 0, 6), b = random_vec(rng, 2, 0, 6), c = random_vec(rng, 2, 0, 6);
    EXPECT_LE(separation(torus, a, c).value, separation(torus, a, b).value + separation(torus, b, c).value + 1e-6);
    const Vec d = random_vec(rng, 2, -2, 2), e = random_vec(rng, 2, -2, 2), f = random_vec(rng, 2, -2, 2);
    EXPECT_LE(separation(rot, d, f).value, separation(rot, d, e).value + separation(rot, e, f).value + 1e-6);
  }
}

TEST(Separation, CapBudgetIsConfigurable) {
  // Non-quasi-regular cylinder: (3, -3) is reached only after winding around;
  // a tiny cap gives up, the default finds it.
  const SpaceDefinition s = cylinder_space(0.6, 0.8);
  SeparationOptions tight;
  tight.cap = 0.5;
  tight.tail_scan = false;
  const SeparationResult capped = separation(s, vec({0, 0}), vec({3, -3}), tight);
  EXPECT_EQ(capped.status, SeparationStatus::unreachable);
  EXPECT_TRUE(capped.capped);
  const SeparationResult full = separation(s, vec({0, 0}), vec({3, -3}));
  EXPECT_GT(full.value, 10.0);
  EXPECT_EQ(full.status, SeparationStatus::finite);
}

TEST(Separation, BracketHistoryRecorded) {
  const SeparationResult r = separation(plane(), vec({0, 0}), vec({3, 0}));
  ASSERT_FALSE(r.bracket_history.empty());
  EXPECT_EQ(r.bracket_history.front().first, 0.0);
  EXPECT_NEAR(r.bracket_history.front().second, 3.0, 1e-15);
  EXPECT_GT(r.evaluations, 2);
}

TEST(Domain, EuclideanTrichotomy) {
  EXPECT_EQ(forward_domain_membership(plane(), vec({0, 0}), vec({1, 1})), DomainVerdict::forward);
  EXPECT_EQ(forward_domain_membership(plane(), vec({0, 0}), vec({-1, 0})), DomainVerdict::backward);
  EXPECT_EQ(forward_domain_membership(plane(), vec({0, 0}), vec({0, 1})), DomainVerdict::neither);
  std::mt19937_64 rng(24);
  for (int i = 0; i < 10; ++i) {
    const Vec q = random_vec(rng, 2, -3, 3);
    EXPECT_EQ(forward_domain_membership(plane(), vec({0, 0}), q), solver_domain_verdict(plane(), vec({0, 0}), q));
  }
}

TEST(Domain, QuasiRegularSpacesAreConnectedBothWays) {
  EXPECT_EQ(forward_domain_membership(sphere_space(3), vec({1, 0, 0, 0}), vec({0, 0, 1, 0})), DomainVerdict::both);
  EXPECT_EQ(forward_domain_membership(torus_space(), vec({0, 0}), vec({1, 2})), DomainVerdict::both);
  EXPECT_EQ(forward_domain_membership(cylinder_space(0, 1, true), vec({0, 0}), vec({0, 2})), DomainVerdict::forward);
}

TEST(Balls, SpecExamples) {
  EXPECT_TRUE(ball_membership(plane(), vec({0, 0}), 1.0, vec({1, 0}), BallDirection::forward));
  EXPECT_FALSE(ball_membership(plane(), vec({0, 0}), 0.4, vec({1, 0}), BallDirection::forward));
  EXPECT_FALSE(ball_membership(plane(), vec({0, 0}), 1.0, vec({1, 0}), BallDirection::backward));
  EXPECT_TRUE(ball_membership(plane(), vec({0, 0}), 1.0, vec({-1, 0}), BallDirection::backward));
  EXPECT_THROW(ball_membership(plane(), vec({0, 0}), 0.0, vec({1, 0}), BallDirection::forward), ValidationError);
}

TEST(Balls, ForwardBallInsideDoubleHBall) {
  std::mt19937_64 rng(25);
  const double eps = 0.5;
  const SpaceDefinition torus = torus_space();
  int members = 0;
  for (int i = 0; i < 100; ++i) {
    const Vec q = random_vec(rng, 2, -1.2, 1.2);
    if (ball_membership(plane(), vec({0, 0}), eps, q, BallDirection::forward)) {
      ++members;
      EXPECT_LT(q.norm(), 2 * eps);
    }
    if (ball_membership(torus, vec({0, 0}), eps, q, BallDirection::forward)) EXPECT_LT(dh(torus, vec({0, 0}), q), 2 * eps);
  }
  EXPECT_GT(members, 5);
}

TEST(Oracle, SpecExamples) {
  const std::optional<double> a = polyline_oracle(plane(), vec({0, 0}), vec({3, 0}), 8, 8);
  ASSERT_TRUE(a.has_value());
  EXPECT_NEAR(*a, 1.5, 0.015);
  const std::optional<double> t = polyline_oracle(torus_space(true), vec({0, 0}), vec({kPi, kPi}), 8, 8);
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(*t, kPi / std::sqrt(2.0), 0.02 * kPi / std::sqrt(2.0));
  EXPECT_FALSE(polyline_oracle(plane(), vec({0, 0}), vec({0, 1}), 8, 8).has_value());
  EXPECT_THROW(polyline_oracle(plane(), vec({0, 0}), vec({1, 0}), 1, 8), ValidationError);
}

TEST(Oracle, NeverBelowTheSolver) {
  // Polylines are admissible curves, so their length bounds d_F from above.
  std::mt19937_64 rng(26);
  const SpaceDefinition cyl = cylinder_space(0.6, 0.8, true);
  for (int i = 0; i < 4; ++i) {
    const Vec q = random_vec(rng, 2, 0.5, 3);
    const SeparationResult r = separation(cyl, vec({0, 0}), q);
    const std::optional<double> o = polyline_oracle(cyl, vec({0, 0}), q, 6, 6, i);
    ASSERT_TRUE(o.has_value());
    EXPECT_GE(*o, r.value - 1e-9);
    EXPECT_LE(*o, r.value * 1.02);
  }
}

TEST(Oracle, DeterministicForSeed) {
  const SpaceDefinition s = sphere_space(3);
  const Vec p = vec({1, 0, 0, 0}), q = vec({0, 0, 0.6, 0.8});
  EXPECT_EQ(*polyline_oracle(s, p, q, 6, 6, 3), *polyline_oracle(s, p, q, 6, 6, 3));
}

TEST(Chord, Lengths) {
  EXPECT_NEAR(chord_length(plane(), vec({0, 0}), vec({3, 0})), 1.5, 1e-14);
  EXPECT_TRUE(std::isinf(chord_length(plane(), vec({0, 0}), vec({-1, 0}))));
  const SpaceDefinition s = sphere_space(3);
  // Along the Hopf circle F-length is half the arc.
  EXPECT_NEAR(chord_length(s, vec({1, 0, 0, 0}), vec({0, 1, 0, 0})), kPi / 4, 1e-12);
}
