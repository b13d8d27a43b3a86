#pragma once

#include "kropina/geometry.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace kropina::testing {

inline constexpr double kPi = std::numbers::pi;

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Vec random_vec(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline Vec random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v.normalized();
}

// Unit vector orthogonal to z (embedding coordinates).
inline Vec random_tangent_unit(std::mt19937_64& rng, const Vec& z) {
  Vec v = random_unit(rng, static_cast<int>(z.size()));
  v -= z.dot(v) * z;
  return v.normalized();
}

}  // namespace kropina::testing
