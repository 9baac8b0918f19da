#pragma once

// Brute-force references shared by the unit tests and the acceptance binary.

#include <hbeta/beta.hpp>
#include <hbeta/rng.hpp>

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace hbeta::testing {

/// inf over q in L of gauge_dist(p, q): compass search over the horizontal
/// foot point, with z minimized by golden section for each trial foot.
inline double brute_force_plane_dist(const HPointD& p, const VerticalPlane& L, Rng& rng) {
  const auto dim = L.normal.size();
  const int n = static_cast<int>(dim / 2);
  // basis of the hyperplane's direction space
  Eigen::JacobiSVD<MatD> svd(L.normal.transpose(), Eigen::ComputeFullV);
  const MatD E = svd.matrixV().rightCols(dim - 1);
  const VecD base = L.offset * L.normal;

  auto best_over_z = [&](const VecD& a) {
    const HPointD q0 = HPointD::from_horizontal(base + E * a, 0.0);
    // d(p, q0 Z^t) = ||(q0 Z^t)^-1 p||, unimodal in t
    auto g = [&](double t) { return gauge_dist(p, q0 * HPointD(VecD::Zero(n), VecD::Zero(n), t)); };
    double lo = -1e3, hi = 1e3;
    const double phi = (std::sqrt(5.0) - 1) / 2;
    double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
    double gc = g(c), gd = g(d);
    for (int it = 0; it < 200; ++it) {
      if (gc < gd) {
        hi = d;
        d = c;
        gd = gc;
        c = hi - phi * (hi - lo);
        gc = g(c);
      } else {
        lo = c;
        c = d;
        gc = gd;
        d = lo + phi * (hi - lo);
        gd = g(d);
      }
    }
    return std::min(gc, gd);
  };

  double best = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < 3; ++restart) {
    VecD a(dim - 1);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.uniform(-3, 3);
    double val = best_over_z(a);
    for (double step = 1.0; step > 1e-8;) {
      bool improved = false;
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        for (double sgn : {-1.0, 1.0}) {
          VecD b = a;
          b(i) += sgn * step;
          const double vb = best_over_z(b);
          if (vb < val) {
            a = b;
            val = vb;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    best = std::min(best, val);
  }
  return best;
}

struct NormalEquationsFit {
  VecD gradient;  // (x_1..x_n, y_1..y_{n-1})
  double gamma = 0.0;
  double residual = 0.0;
};

/// Weighted least squares over the quadrature nodes of Q by the normal equations.
inline NormalEquationsFit normal_equations_fit(const Field& f, const QuasiBox& Q, int m) {
  const Quadrature quad = quasibox_quadrature(Q, nullptr, m);
  const int D = 2 * Q.n() - 1;
  const auto N = static_cast<Eigen::Index>(quad.nodes.size());
  MatD X(N, D + 1);
  VecD y(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const HPointD& v = quad.nodes[static_cast<std::size_t>(i)].v;
    X.row(i).head(D) = to_v0_coords(v).head(D).transpose();
    X(i, D) = 1.0;
    y(i) = f(v);
  }
  const VecD c = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  NormalEquationsFit out;
  out.gradient = c.head(D);
  out.gamma = c(D);
  out.residual = std::sqrt((X * c - y).squaredNorm() * quad.weight);
  return out;
}

}  // namespace hbeta::testing
