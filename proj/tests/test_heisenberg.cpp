#include <doctest.h>

#include <hbeta/exact.hpp>
#include <hbeta/heisenberg.hpp>

#include "support.hpp"

using namespace hbeta;
using hbeta::testing::coord_err;
using hbeta::testing::random_direction;
using hbeta::testing::random_point;

namespace {

HPointD pt1(double x, double y, double z) { return HPointD(VecD::Constant(1, x), VecD::Constant(1, y), z); }

HPointD pt2(double x1, double x2, double y1, double y2, double z) {
  return HPointD(VecD{{x1, x2}}, VecD{{y1, y2}}, z);
}

}  // namespace

TEST_CASE("HPoint validates its shape") {
  CHECK_THROWS_AS(HPointD(VecD(2), VecD(3), 0.0), DimensionMismatch);
  CHECK_THROWS_AS(HPointD(VecD(0), VecD(0), 0.0), DimensionMismatch);
  CHECK_THROWS(HPointD(VecD::Constant(1, std::nan("")), VecD::Zero(1), 0.0));
  CHECK_THROWS(pt1(0, 0, std::numeric_limits<double>::infinity()));
}

TEST_CASE("group_mul examples") {
  CHECK(group_mul(pt1(1, 0, 0), pt1(0, 1, 0)) == pt1(1, 1, 0.5));
  const HPointD p = pt2(0.3, -1, 2, 5, 7);
  CHECK(group_mul(HPointD::identity(2), p) == p);
  CHECK(group_mul(pt2(1, 0, 0, 0, 0), pt2(1, 0, 0, 0, 5)) == pt2(2, 0, 0, 0, 5));
  CHECK_THROWS_AS(group_mul(pt1(1, 0, 0), HPointD::identity(2)), DimensionMismatch);
}

TEST_CASE("group_inv examples") {
  CHECK(group_inv(HPointD::identity(1)) == HPointD::identity(1));
  const HPointQ a = to_exact(pt1(1, 1, 0.5));
  CHECK(group_inv(a) == to_exact(pt1(-1, -1, -0.5)));
  CHECK(group_mul(a, group_inv(a)) == HPointQ::identity(1));
  Rng rng(11);
  for (int k = 0; k < 20; ++k) {
    const HPointD p = random_point(3, rng);
    CHECK(group_inv(group_inv(p)) == p);
  }
}

TEST_CASE("commutator examples") {
  CHECK(commutator(pt1(1, 0, 0), pt1(0, 1, 0)) == pt1(0, 0, 1));
  const HPointD p = pt2(1, 2, 3, 4, 5);
  CHECK(commutator(p, p) == HPointD::identity(2));
  CHECK(commutator(pt2(1, 0, 0, 0, 0), pt2(0, 1, 0, 0, 0)) == HPointD::identity(2));
  CHECK_THROWS_AS(commutator(pt1(1, 0, 0), HPointD::identity(2)), DimensionMismatch);
}

TEST_CASE("dilate examples") {
  CHECK(dilate(2.0, pt1(1, 1, 1)) == pt1(2, 2, 4));
  CHECK(dilate(0.0, pt1(3, -2, 5)) == pt1(0, 0, 0));
  const HPointD p = pt2(1, -2, 3, 0.5, -7);
  CHECK(dilate(-1.0, dilate(-1.0, p)) == p);
  CHECK(dilate(1.0, p) == p);
  CHECK(coord_err(dilate(0.5, dilate(3.0, p)), dilate(1.5, p)) < 1e-14);
}

TEST_CASE("gauge_norm examples and symmetries") {
  CHECK(gauge_norm(HPointD::identity(1)) == 0.0);
  CHECK(gauge_norm(pt1(1, 0, 0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(gauge_norm(pt1(0, 0, 1)) == doctest::Approx(2.0).epsilon(1e-15));
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const HPointD p = random_point(2, rng, 2.0);
    const double t = rng.uniform(-3, 3);
    CHECK(gauge_norm(dilate(t, p)) == doctest::Approx(std::abs(t) * gauge_norm(p)).epsilon(1e-12));
    CHECK(gauge_norm(group_inv(p)) == doctest::Approx(gauge_norm(p)).epsilon(1e-15));
    CHECK(gauge_norm_pow4(to_exact(p)) >= 0);
  }
}

TEST_CASE("cone_contains examples") {
  for (int n = 1; n <= 3; ++n) {
    CHECK(cone_contains(0.99, HPointD::unit_y(n, n - 1)));
    CHECK_FALSE(cone_contains(0.01, HPointD::unit_x(n, 0)));
    CHECK_FALSE(cone_contains(0.5, HPointD::identity(n)));
  }
  CHECK_THROWS(cone_contains(0.0, HPointD::unit_y(1, 0)));
  CHECK_THROWS(cone_contains(1.0, HPointD::unit_y(1, 0)));
}

TEST_CASE("project_pi examples") {
  CHECK(project_pi(pt1(1, 2, 3)) == VecD{{1, 2}});
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const HPointD a = random_point(2, rng), b = random_point(2, rng);
    CHECK((project_pi(a * b) - project_pi(a) - project_pi(b)).norm() < 1e-14);
    CHECK((project_pi(dilate(1.7, a)) - 1.7 * project_pi(a)).norm() < 1e-14);
  }
}

TEST_CASE("project_along examples") {
  const Direction y1 = Direction::canonical(1);
  // (1,1,0)(0,-1,0): Omega = 1*(-1) - 0*1 = -1
  CHECK(project_along(y1, pt1(1, 1, 0)) == pt1(1, 0, -0.5));
  CHECK(project_along(y1, pt1(3, 0, -2)) == pt1(3, 0, -2));
  Rng rng(7);
  const Direction w = random_direction(2, rng, 0.2);
  CHECK(coord_err(project_along(w, w.point()), HPointD::identity(2)) < 1e-15);
  // exact mode: y_n vanishes without pinning
  const DirectionQ wq = w.cast<Rational>();
  const HPointQ hq = to_exact(random_point(2, rng));
  CHECK(project_along(wq, hq).y_n() == 0);
}

TEST_CASE("Pi_w invariance Pi_w(gh) = Pi_w(g Pi_w(h))") {
  Rng rng(17);
  for (int n = 1; n <= 3; ++n) {
    for (int k = 0; k < 200; ++k) {
      const Direction w = random_direction(n, rng, 0.3);
      const HPointD g = random_point(n, rng), h = random_point(n, rng);
      CHECK(coord_err(project_along(w, g * h), project_along(w, g * project_along(w, h))) < 1e-10);
    }
  }
}

TEST_CASE("group axioms in exact arithmetic") {
  Rng rng(23);
  for (int n = 1; n <= 3; ++n) {
    for (int k = 0; k < 300; ++k) {
      const HPointQ a = to_exact(random_point(n, rng)), b = to_exact(random_point(n, rng)),
                    c = to_exact(random_point(n, rng));
      const HPointQ assoc = group_inv((a * b) * c) * (a * (b * c));
      CHECK(gauge_norm_pow4(assoc) == 0);
      CHECK(commutator(a, b).z == omega_bar(a, b));
      CHECK(commutator(a, b).x.isZero());
      CHECK(commutator(a, b).y.isZero());
      CHECK(a * group_inv(a) == HPointQ::identity(n));
    }
  }
}

TEST_CASE("float group axioms, left invariance and dilation compatibility") {
  Rng rng(29);
  for (int n = 1; n <= 3; ++n) {
    for (int k = 0; k < 300; ++k) {
      const HPointD a = random_point(n, rng), b = random_point(n, rng), c = random_point(n, rng),
                    g = random_point(n, rng, 3.0);
      CHECK(coord_err((a * b) * c, a * (b * c)) < 1e-12);
      CHECK(std::abs(commutator(a, b).z - omega_bar(a, b)) < 1e-12);
      CHECK(gauge_dist(g * a, g * b) == doctest::Approx(gauge_dist(a, b)).epsilon(1e-12));
      const double t = rng.uniform(-4, 4);
      CHECK(gauge_dist(dilate(t, a), dilate(t, b)) == doctest::Approx(std::abs(t) * gauge_dist(a, b)).epsilon(1e-12));
    }
  }
}

TEST_CASE("v -> Pi_w(g v) preserves Lebesgue measure on V_0") {
  Rng rng(31);
  for (int n = 1; n <= 3; ++n) {
    for (int k = 0; k < 10; ++k) {
      const Direction w = random_direction(n, rng, 0.3);
      const HPointD g = random_point(n, rng);
      const VecD v = to_v0_coords(project_along(w, random_point(n, rng)));
      auto map = [&](const VecD& c) { return to_v0_coords(project_along(w, g * from_v0_coords<double>(c))); };
      const double h = 1e-6;
      MatD J(2 * n, 2 * n);
      for (int j = 0; j < 2 * n; ++j) {
        VecD e = VecD::Zero(2 * n);
        e(j) = h;
        J.col(j) = (map(v + e) - map(v - e)) / (2 * h);
      }
      CHECK(std::abs(J.determinant() - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("symplectic_complement examples") {
  const MatD xaxis = MatD{{1}, {0}};
  const MatD c = symplectic_complement(xaxis);
  REQUIRE(c.cols() == 1);
  CHECK(std::abs(c(1, 0)) < 1e-14);
  CHECK(symplectic_complement(MatD::Identity(4, 4)).cols() == 0);
  CHECK_THROWS(symplectic_complement(MatD{{1, 2}, {0, 0}, {0, 0}, {0, 0}}));
  // w^Omega contains w
  const MatD comp = symplectic_complement(MatD(Direction::canonical(2).horizontal()));
  const VecD yn = Direction::canonical(2).horizontal();
  CHECK((comp * (comp.transpose() * yn) - yn).norm() < 1e-12);
  Rng rng(37);
  for (int n = 1; n <= 3; ++n) {
    for (int k = 1; k <= 2 * n; ++k) {
      MatD S(2 * n, k);
      for (int i = 0; i < S.size(); ++i) S.data()[i] = rng.normal();
      const MatD C = symplectic_complement(S);
      CHECK(C.cols() + k == 2 * n);
      for (int i = 0; i < C.cols(); ++i)
        for (int j = 0; j < k; ++j) CHECK(std::abs(symplectic_form(C.col(i), S.col(j))) < 1e-10);
    }
  }
}

TEST_CASE("plane_p_w examples and properties") {
  const VerticalSubspaceBasis p = plane_p_w(Direction::canonical(2));
  CHECK(p.dim() == 3);
  const MatD hor = p.horizontal();
  REQUIRE(hor.cols() == 2);
  // span(X_1, Y_1): the x_2 and y_2 rows vanish
  CHECK(hor.row(1).norm() < 1e-14);
  CHECK(hor.row(3).norm() < 1e-14);
  Rng rng(41);
  for (int n = 1; n <= 3; ++n) {
    const Direction w = random_direction(n, rng, 0.3);
    const VerticalSubspaceBasis b = plane_p_w(w);
    CHECK(b.dim() == 2 * n - 1);
    bool has_z = false;
    for (const auto& u : b.vectors) {
      CHECK(std::abs(u.y_n()) < 1e-14);
      CHECK(std::abs(omega_bar(u, w.point())) < 1e-12);
      if (u == HPointD::unit_z(n)) has_z = true;
    }
    CHECK(has_z);
    if (n >= 2) {
      const MatD H = b.horizontal();
      MatD gram(H.cols(), H.cols());
      for (int i = 0; i < H.cols(); ++i)
        for (int j = 0; j < H.cols(); ++j) gram(i, j) = symplectic_form(H.col(i), H.col(j));
      CHECK(std::abs(gram.determinant()) > 1e-6);
    }
    const VecD nu = transverse_unit(w);
    CHECK(std::abs(nu.norm() - 1.0) < 1e-12);
    CHECK(std::abs(nu(2 * n - 1)) < 1e-14);
    CHECK((b.horizontal().transpose() * nu).norm() < 1e-12);
  }
}
