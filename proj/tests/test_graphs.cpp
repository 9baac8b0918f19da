#include <doctest.h>

#include <hbeta/graphs.hpp>

#include "support.hpp"

using namespace hbeta;
using hbeta::testing::coord_err;

namespace {

GraphFamilySpec spec_of(Family f, std::uint64_t seed = 1, double lambda = 0.3) {
  GraphFamilySpec s;
  s.family = f;
  s.n = 2;
  s.lambda = lambda;
  s.seed = seed;
  s.resolution = 8;
  return s;
}

IntrinsicGraph flat_graph(int n, int res = 8) {
  VecD half = VecD::Constant(2 * n, 2.0);
  half(2 * n - 1) = 4.0;
  return IntrinsicGraph(Direction::canonical(n), GridFunction(Box::symmetric(half), res), 0.3,
                        default_lambda_prime(0.3));
}

}  // namespace

TEST_CASE("default lambda' sits inside ((1+lambda)/2, 1)") {
  CHECK(default_lambda_prime(0.3) == doctest::Approx(0.72));
  for (double l : {0.1, 0.5, 0.9}) {
    CHECK(default_lambda_prime(l) > (1 + l) / 2);
    CHECK(default_lambda_prime(l) < 1);
  }
}

TEST_CASE("IntrinsicGraph validates its parameters") {
  const GridFunction f(Box::symmetric(VecD::Ones(4)), 8);
  CHECK_THROWS(IntrinsicGraph(Direction::canonical(2), f, 0.0, 0.5));
  CHECK_THROWS(IntrinsicGraph(Direction::canonical(2), f, 0.5, 0.4));
  CHECK_THROWS(IntrinsicGraph(Direction::canonical(1), f, 0.3, 0.72));
  // |w| = sqrt(1 + 4) is far outside Cone_{0.72}
  CHECK_THROWS(IntrinsicGraph(Direction::perturbed(2, VecD{{2, 0, 0, 0}}), f, 0.3, 0.72));
}

TEST_CASE("graph_point examples") {
  const IntrinsicGraph flat = flat_graph(2);
  Rng rng(1);
  const HPointD v = v0_point(VecD{{0.5, -1, 0.25, 2}});
  CHECK(graph_point(flat, v) == v);
  CHECK_THROWS_AS(graph_point(flat, v0_point(VecD{{5, 0, 0, 0}})), OutOfDomain);

  const IntrinsicGraph plane = make_family(spec_of(Family::VerticalPlane, 4));
  // Gamma_{T, Y_n}: the point's y_n equals T of its other horizontal coordinates.
  const auto& f = plane.f();
  for (std::size_t i = 0; i < f.size(); i += 37) {
    const HPointD p = graph_point(plane, v0_point(f.node(i)));
    CHECK(p.y_n() == doctest::Approx(f[i]));
    CHECK(coord_err(project_along(plane.w(), p), v0_point(f.node(i))) < 1e-10);
  }
}

TEST_CASE("graph/projection duality holds at every node") {
  for (auto fam : {Family::SmoothBump, Family::RandomLipschitz}) {
    const IntrinsicGraph G = make_family(spec_of(fam, 9));
    double worst = 0;
    for (std::size_t i = 0; i < G.f().size(); ++i) {
      const HPointD v = v0_point(G.f().node(i));
      worst = std::max(worst, coord_err(project_along(G.w(), graph_point(G, v)), v));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("check_cone_condition examples") {
  CHECK(check_cone_condition(flat_graph(2), 500, 1).worst_ratio == 0.0);
  const IntrinsicGraph plane = make_family(spec_of(Family::VerticalPlane, 2));
  const ConeCheck pc = check_cone_condition(plane, 2000, 3);
  CHECK(pc.pass);
  CHECK(pc.worst_ratio > 0.0);
  CHECK(pc.worst_ratio < 1.0);

  // f(v) = ||v|| climbs along Y_n as fast as the gauge: violates Cone_lambda.
  IntrinsicGraph bad(Direction::canonical(2),
                     GridFunction::sample(flat_graph(2).domain(), 16,
                                          [](const VecD& c) { return gauge_norm(v0_point(c)); }),
                     0.3, 0.72);
  const ConeCheck bc = check_cone_condition(bad, 2000, 5);
  CHECK_FALSE(bc.pass);
  CHECK(bc.worst_ratio > 0.3);
  CHECK_THROWS(check_cone_condition(plane, 0, 1));
}

TEST_CASE("every emitted family graph passes an independent cone check") {
  for (auto fam : {Family::VerticalPlane, Family::SmoothBump, Family::RandomLipschitz}) {
    for (std::uint64_t seed : {1u, 2u}) {
      const IntrinsicGraph G = make_family(spec_of(fam, seed));
      const ConeCheck c = check_cone_condition(G, 10000, 1000 + seed);
      CHECK_MESSAGE(c.pass, family_name(fam), " worst ratio ", c.worst_ratio);
    }
  }
}

TEST_CASE("make_family is deterministic and validates its spec") {
  const IntrinsicGraph a = make_family(spec_of(Family::RandomLipschitz, 77));
  const IntrinsicGraph b = make_family(spec_of(Family::RandomLipschitz, 77));
  CHECK(a.f().max_abs_diff(b.f()) == 0.0);
  const IntrinsicGraph c = make_family(spec_of(Family::RandomLipschitz, 78));
  CHECK(a.f().max_abs_diff(c.f()) > 0.0);

  GraphFamilySpec zero = spec_of(Family::VerticalPlane);
  zero.amplitude = 0.0;
  const IntrinsicGraph z = make_family(zero);
  for (double v : z.f().values()) CHECK(v == 0.0);

  GraphFamilySpec bad = spec_of(Family::SmoothBump);
  bad.resolution = 12;
  CHECK_THROWS(make_family(bad));
  bad.resolution = 4;
  CHECK_THROWS(make_family(bad));
  CHECK_THROWS(parse_family("cubic"));
  CHECK(parse_family("smooth-bump") == Family::SmoothBump);
}

TEST_CASE("cone condition is dilation invariant") {
  for (auto fam : {Family::SmoothBump, Family::RandomLipschitz}) {
    const IntrinsicGraph G = make_family(spec_of(fam, 5));
    const ConeCheck base = check_cone_condition(G, 4000, 8);
    for (double t : {0.5, 2.0}) {
      const IntrinsicGraph D = dilate_graph(G, t);
      const ConeCheck c = check_cone_condition(D, 4000, 8);
      CHECK(c.pass == base.pass);
      // the sampled pairs are the dilated pairs, so the ratios agree
      CHECK(c.worst_ratio == doctest::Approx(base.worst_ratio).epsilon(1e-9));
    }
  }
  // a violating graph stays violating
  IntrinsicGraph bad(Direction::canonical(2),
                     GridFunction::sample(flat_graph(2).domain(), 16,
                                          [](const VecD& c) { return gauge_norm(v0_point(c)); }),
                     0.3, 0.72);
  CHECK_FALSE(check_cone_condition(dilate_graph(bad, 2.0), 2000, 5).pass);
}

TEST_CASE("reparametrize with w' = w leaves f unchanged") {
  const IntrinsicGraph G = make_family(spec_of(Family::SmoothBump, 3));
  const Reparametrized R = reparametrize(G, G.w());
  CHECK(R.shrink == 1.0);
  CHECK(R.graph.f().max_abs_diff(G.f()) < 1e-8);
}

TEST_CASE("reparametrize: affine graph along a commuting direction stays affine") {
  // w' = Y_2 + 0.2 X_1 + 0.1 Y_1 commutes with w = Y_2 only if Omega vanishes,
  // which it does: Omega(Y_2, X_1) = 0 and Omega(Y_2, Y_1) = 0.
  const IntrinsicGraph plane = make_family(spec_of(Family::VerticalPlane, 6));
  const Direction wp = Direction::perturbed(2, VecD{{0.2, 0, 0.1, 0}});
  CHECK(std::abs(commutator(plane.w().point(), wp.point()).z) < 1e-12);
  const Reparametrized R = reparametrize(plane, wp);
  const GridFunction& fp = R.graph.f();
  // least-squares affine fit in the horizontal coordinates
  MatD A(fp.size(), 4);
  VecD b(fp.size());
  for (std::size_t i = 0; i < fp.size(); ++i) {
    const VecD c = fp.node(i);
    A.row(i) << c(0), c(1), c(2), 1.0;
    b(i) = fp[i];
  }
  const VecD coef = A.colPivHouseholderQr().solve(b);
  CHECK((A * coef - b).cwiseAbs().maxCoeff() < 1e-8);
  // Lip of the original slope
  const auto& f = plane.f();
  MatD A0(f.size(), 4);
  VecD b0(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const VecD c = f.node(i);
    A0.row(i) << c(0), c(1), c(2), 1.0;
    b0(i) = f[i];
  }
  const VecD coef0 = A0.colPivHouseholderQr().solve(b0);
  CHECK(coef.head(3).norm() < 2 * coef0.head(3).norm());
}

TEST_CASE("reparametrize round trip w -> w' -> w") {
  const IntrinsicGraph plane = make_family(spec_of(Family::VerticalPlane, 8));
  const Direction wp = Direction::perturbed(2, VecD{{0.1, 0, -0.1, 0}});
  const Reparametrized there = reparametrize(plane, wp);
  const Reparametrized back = reparametrize(there.graph, plane.w());
  const GridFunction& fb = back.graph.f();
  double worst = 0;
  for (std::size_t i = 0; i < fb.size(); ++i) worst = std::max(worst, std::abs(fb[i] - plane.f()(fb.node(i))));
  CHECK(worst < 1e-6);
}

TEST_CASE("reparametrize rejects directions outside the cone") {
  const IntrinsicGraph G = make_family(spec_of(Family::SmoothBump, 3));
  CHECK_THROWS(reparametrize(G, Direction::perturbed(2, VecD{{3, 0, 0, 0}})));
}

TEST_CASE("slice_lipschitz_bound examples") {
  const HPointD g = v0_point(VecD{{0.3, -0.2, 0.1, 0.5}});
  CHECK(slice_lipschitz_bound(flat_graph(2), g, 500, 1).max_quotient == 0.0);

  // slope only along X_n: constant on P_{Y_n} cosets
  IntrinsicGraph xn(Direction::canonical(2),
                    GridFunction::sample(flat_graph(2).domain(), 8, [](const VecD& c) { return 0.2 * c(1); }),
                    0.3, 0.72);
  CHECK(slice_lipschitz_bound(xn, g, 500, 2).max_quotient < 1e-12);

  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const IntrinsicGraph G = make_family(spec_of(Family::RandomLipschitz, seed));
    Rng rng(seed, {99});
    for (int s = 0; s < 5; ++s) {
      const HPointD gs = v0_point(VecD{{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0}});
      const SliceLipschitz sl = slice_lipschitz_bound(G, gs, 400, s);
      CHECK(sl.bound == doctest::Approx(2 * 0.3 * 0.72 / 0.42));
      CHECK(sl.pass());
    }
  }
  CHECK_THROWS(slice_lipschitz_bound(flat_graph(2), v0_point(VecD{{0, 50, 0, 0}}), 50, 1));
}

TEST_CASE("graph serialization round-trips") {
  const IntrinsicGraph G = make_family(spec_of(Family::RandomLipschitz, 12));
  const IntrinsicGraph back = IntrinsicGraph::from_container(grid_container_from_json(to_json(G.container())));
  CHECK(back.f().max_abs_diff(G.f()) == 0.0);
  CHECK(back.lambda_prime() == G.lambda_prime());
  CHECK(back.w().point() == G.w().point());
}
