#pragma once

#include <hbeta/heisenberg.hpp>
#include <hbeta/rng.hpp>

namespace hbeta::testing {

inline HPointD random_point(int n, Rng& rng, double scale = 1.0) {
  VecD x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = rng.uniform(-scale, scale);
    y(i) = rng.uniform(-scale, scale);
  }
  return HPointD(x, y, rng.uniform(-scale * scale, scale * scale));
}

inline Direction random_direction(int n, Rng& rng, double eps) {
  VecD h(2 * n);
  for (int i = 0; i < 2 * n; ++i) h(i) = rng.uniform(-eps, eps);
  return Direction::perturbed(n, h);
}

inline double coord_err(const HPointD& a, const HPointD& b) {
  return std::max({(a.x - b.x).cwiseAbs().maxCoeff(), (a.y - b.y).cwiseAbs().maxCoeff(), std::abs(a.z - b.z)});
}

}  // namespace hbeta::testing
