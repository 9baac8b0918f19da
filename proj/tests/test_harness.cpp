#include <doctest.h>

#include <cmath>
#include <numbers>

#include <hbeta/harness.hpp>
#include <hbeta/suites.hpp>

#include "support.hpp"

using namespace hbeta;

namespace {

RunConfig small_config(Family fam) {
  RunConfig cfg;
  cfg.family.family = fam;
  cfg.num_scales = 3;
  cfg.centers_per_scale = 6;
  cfg.samples_per_beta = 300;
  cfg.dense_samples = 600;
  cfg.cone_trials = 2000;
  cfg.empirical_c = 2.5;
  cfg.slices = 2;
  cfg.theta_points = 20;
  cfg.theta_lattice = 6;
  return cfg;
}

/// inf over affine g of the integral of (F - g)^2 on B(0, r) in H_1, by plain Monte
/// Carlo and normal equations on the sample moments.
double theta_monte_carlo(const std::function<double(const HPointD&)>& F, double r, int samples, Rng& rng) {
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  double ff = 0.0;
  int kept = 0;
  for (int i = 0; i < samples; ++i) {
    const HPointD p(VecD::Constant(1, rng.uniform(-r, r)), VecD::Constant(1, rng.uniform(-r, r)),
                    rng.uniform(-r * r / 4, r * r / 4));
    if (gauge_norm(p) > r) continue;
    ++kept;
    const Eigen::Vector3d row(1.0, p.x(0), p.y(0));
    const double f = F(p);
    M += row * row.transpose();
    b += row * f;
    ff += f * f;
  }
  const Eigen::Vector3d coef = M.ldlt().solve(b);
  const double vol = std::pow(2 * r, 2) * r * r / 2;
  const double mean_sq = (ff - coef.dot(b)) / samples;
  return mean_sq * vol / std::pow(r, 6);
}

}  // namespace

TEST_CASE("run config JSON") {
  RunConfig cfg;
  CHECK(cfg.R_max == 0.5);
  CHECK(cfg.family.coarse == 16);
  const auto j = nlohmann::json::parse(R"({"n": 3, "family": "random-lipschitz", "lambda": 0.4, "R_max": 2,
                                           "num_scales": 4, "seed": 9, "center": "origin"})");
  const RunConfig c2 = run_config_from_json(j);
  CHECK(c2.n() == 3);
  CHECK(c2.family.family == Family::RandomLipschitz);
  CHECK(c2.family.lambda == 0.4);
  CHECK(c2.R_max == 2.0);
  CHECK(c2.num_scales == 4);
  CHECK(c2.seed == 9);
  CHECK(c2.center == "origin");
  // to_json round-trips
  const RunConfig c3 = run_config_from_json(nlohmann::json::parse(to_json(c2).dump()));
  CHECK(to_json(c3).dump() == to_json(c2).dump());

  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"radius": 1})")), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"num_scales": 2})")), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"R_max": -1})")), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"seed": "x"})")), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"nested": {"a": 1}})")), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse("[1, 2]")), ConfigError);
  CHECK_THROWS(run_config_from_json(nlohmann::json::parse(R"({"family": "sphere"})")));
}

TEST_CASE("ball_center") {
  GraphFamilySpec s;
  s.family = Family::VerticalPlane;
  const IntrinsicGraph G = make_family(s);
  const HPointD node = ball_center(G, "node");
  // cell-centered nodes of the 16-point grid on [-4, 4] and [-16, 16]
  CHECK(node.x(0) == doctest::Approx(0.25));
  CHECK(node.x(1) == doctest::Approx(0.25));
  CHECK(node.y(0) == doctest::Approx(0.25));
  const HPointD o = ball_center(G, "origin");
  CHECK(o.x(0) == 0.0);
  CHECK_THROWS(ball_center(G, "corner"));
}

TEST_CASE("calibrate_c on the flat plane is the ball/box shape constant") {
  GraphFamilySpec s;
  s.family = Family::VerticalPlane;
  s.amplitude = 0.0;
  const IntrinsicGraph G = make_family(s);
  CalibrationOptions o;
  o.pairs_per_radius = 6;
  o.samples_per_pair = 400;
  const CalibrationReport rep = calibrate_c(G, o);
  // Gamma = V_0: the farthest box node (s, |p|, t) = (1, 1, 1) has gauge (2^2 + 16)^{1/4}
  CHECK(rep.inner == doctest::Approx(std::pow(20.0, 0.25)).epsilon(1e-3));
  CHECK(rep.outer <= 1.0);
  CHECK(rep.outer > 0.9);
  CHECK(rep.c == rep.inner);
  CHECK(rep.points > 0);
  CHECK(rep.nodes > 0);
}

TEST_CASE("calibrate_c is dilation invariant and r independent on planes") {
  GraphFamilySpec s;
  s.family = Family::SmoothBump;
  s.tuning_trials = 4000;
  s.tuning_climb = 50;
  const IntrinsicGraph G = make_family(s);
  CalibrationOptions o;
  o.pairs_per_radius = 8;
  o.samples_per_pair = 300;
  o.radii = {1.0};
  const double c1 = calibrate_c(G, o).c;
  o.radii = {2.0};
  const double c2 = calibrate_c(dilate_graph(G, 2.0), o).c;
  CHECK(c2 == doctest::Approx(c1).epsilon(0.05));

  GraphFamilySpec p;
  p.family = Family::VerticalPlane;
  const IntrinsicGraph P = make_family(p);
  std::vector<double> cs;
  for (double r : {0.25, 1.0, 4.0}) {
    o.radii = {r};
    cs.push_back(calibrate_c(P, o).c);
  }
  CHECK(cs[1] == doctest::Approx(cs[0]).epsilon(0.01));
  CHECK(cs[2] == doctest::Approx(cs[0]).epsilon(0.01));
}

TEST_CASE("calibrate_c grows with lambda") {
  std::vector<double> cs;
  for (double lam : {0.2, 0.4, 0.6}) {
    GraphFamilySpec s;
    s.family = Family::VerticalPlane;
    s.lambda = lam;
    CalibrationOptions o;
    o.pairs_per_radius = 6;
    o.samples_per_pair = 300;
    cs.push_back(calibrate_c(make_family(s), o).c);
  }
  CHECK(cs[0] < cs[1]);
  CHECK(cs[1] < cs[2]);
  for (double c : cs) CHECK(c <= 64.0);
}

TEST_CASE("calibrate_c errors") {
  GraphFamilySpec s;
  s.family = Family::VerticalPlane;
  const IntrinsicGraph G = make_family(s);
  CalibrationOptions o;
  o.radii = {};
  CHECK_THROWS_AS(calibrate_c(G, o), std::invalid_argument);
  o.radii = {-1.0};
  CHECK_THROWS_AS(calibrate_c(G, o), std::invalid_argument);
  o.radii = {1.0};
  o.c_max = 1.5;  // below the shape constant
  o.pairs_per_radius = 2;
  CHECK_THROWS_AS(calibrate_c(G, o), CalibrationFailed);
}

TEST_CASE("run_carleson on a vertical plane is zero") {
  const CarlesonReport rep = run_carleson(small_config(Family::VerticalPlane));
  REQUIRE(rep.balls.size() == 3);
  for (const auto& b : rep.balls) {
    CHECK(b.I <= 3 * b.std_error);
    for (const auto& sc : b.per_scale) {
      for (const auto& beta : sc.betas) CHECK(beta.value <= 3 * beta.std_error + 1e-12);
    }
  }
  CHECK(rep.ratio_envelope <= 3 * rep.full().std_error / std::pow(rep.full().R, 5));
}

TEST_CASE("run_carleson bookkeeping and determinism") {
  RunConfig cfg = small_config(Family::SmoothBump);
  const CarlesonReport rep = run_carleson(cfg);
  REQUIRE(rep.balls.size() == 3);
  CHECK(rep.cone.pass);
  double prev = -1.0;
  for (std::size_t b = 0; b < rep.balls.size(); ++b) {
    const auto& ball = rep.balls[b];
    double sum = 0.0;
    for (const auto& sc : ball.per_scale) {
      CHECK(sc.contribution >= 0.0);
      CHECK(sc.r <= ball.R * (1 + 1e-12));
      CHECK(sc.centers == static_cast<int>(sc.betas.size()));
      double cells = 0.0;
      for (double m : sc.cell_measure) cells += m;
      CHECK(cells == doctest::Approx(ball.measure));  // nothing dropped at these radii
      sum += sc.contribution;
    }
    CHECK(std::abs(ball.I - sum) <= 1e-12 * std::max(1.0, ball.I));
    CHECK(ball.I >= prev);
    prev = ball.I;
    CHECK(ball.per_scale.size() == b + 1);  // scales r_k <= R
  }
  CHECK(rep.ratio_envelope > 0.0);
  CHECK(std::isfinite(rep.exponent));

  const std::string a = to_json(rep).dump();
  CHECK(to_json(run_carleson(cfg)).dump() == a);
  cfg.threads = 3;
  CHECK(to_json(run_carleson(cfg)).dump() == a);

  const auto j = to_json(rep);
  const auto& beta = j["balls"][0]["per_scale"][0]["betas"][0];
  for (const char* key : {"x", "r", "beta", "stderr", "plane", "samples"}) CHECK(beta.contains(key));
  CHECK(beta["plane"].contains("normal"));
  CHECK(beta["plane"].contains("offset"));
  const std::string csv = carleson_csv(rep);
  CHECK(csv.rfind("k,r,contribution\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("run_carleson: doubling samples moves I(R_max) by less than 3 stderr") {
  RunConfig cfg = small_config(Family::RandomLipschitz);
  cfg.samples_per_beta = 400;
  const CarlesonReport a = run_carleson(cfg);
  cfg.samples_per_beta = 800;
  const CarlesonReport b = run_carleson(cfg);
  const double se = std::hypot(a.full().std_error, b.full().std_error);
  CHECK(std::abs(a.full().I - b.full().I) < 3 * se);
}

TEST_CASE("run_carleson erodes the box") {
  RunConfig cfg = small_config(Family::SmoothBump);
  cfg.R_max = 2.0;
  const CarlesonReport rep = run_carleson(cfg);
  CHECK(rep.full().per_scale.front().dropped > 0);
  for (const auto& b : rep.full().per_scale.front().betas) CHECK(b.clipped == 0);
  CHECK_FALSE(rep.warnings.empty());
}

TEST_CASE("koranyi_ball_volume") {
  CHECK(koranyi_ball_volume(1) == doctest::Approx(std::numbers::pi * std::numbers::pi / 8));
  Rng rng(3);
  for (int m : {1, 2}) {
    int in = 0;
    const int N = 400000;
    for (int i = 0; i < N; ++i) {
      VecD h(2 * m);
      for (int k = 0; k < 2 * m; ++k) h(k) = rng.uniform(-1, 1);
      if (gauge_norm(HPointD::from_horizontal(h, rng.uniform(-0.25, 0.25))) <= 1) ++in;
    }
    const double mc = std::pow(2.0, 2 * m) * 0.5 * in / N;
    CHECK(koranyi_ball_volume(m) == doctest::Approx(mc).epsilon(0.01));
  }
}

TEST_CASE("ThetaEvaluator") {
  const ThetaEvaluator theta(1, 12);
  const HPointD x(VecD::Constant(1, 0.3), VecD::Constant(1, -0.2), 0.1);
  // affine fields have theta = 0
  auto affine = [](const HPointD& p) { return 2.0 * p.x(0) - p.y(0) + 3.0; };
  CHECK(theta(affine, x, 0.5) < 1e-20);
  // z is not affine on H_1
  auto quad = [](const HPointD& p) { return p.x(0) * p.x(0) + p.z; };
  Rng rng(5);
  for (double r : {0.25, 1.0}) {
    const double mc = theta_monte_carlo(quad, r, 400000, rng);
    CHECK(theta(quad, HPointD::identity(1), r) == doctest::Approx(mc).epsilon(0.05));
  }
  // theta is dilation invariant for 1-homogeneous-in-scale fields: F(delta_t p) = t^2 F(p) gives theta(t r) = t^2 theta(r)
  CHECK(theta(quad, HPointD::identity(1), 2.0) == doctest::Approx(4 * theta(quad, HPointD::identity(1), 1.0)));
  // off-domain nodes are dropped and counted
  int clipped = 0;
  auto half = [](const HPointD& p) { return p.x(0) > 0.9 ? std::numeric_limits<double>::quiet_NaN() : p.x(0); };
  CHECK(theta(half, HPointD::identity(1), 1.0, &clipped) < 1e-20);
  CHECK(clipped > 0);
  CHECK_THROWS(ThetaEvaluator(0, 8));
}

TEST_CASE("run_theta_slices") {
  RunConfig cfg = small_config(Family::SmoothBump);
  const ThetaReport rep = run_theta_slices(cfg);
  CHECK(rep.per_slice.size() + rep.skipped == 2);
  for (const auto& s : rep.per_slice) {
    CHECK(s.integral >= 0.0);
    CHECK(s.lip > 0.0);
    CHECK(s.ratio == doctest::Approx(s.integral / s.bound));
  }
  CHECK(rep.max_ratio > 0.0);
  cfg.num_scales = 6;
  const ThetaReport twice = run_theta_slices(cfg);
  CHECK(twice.max_ratio == doctest::Approx(rep.max_ratio).epsilon(0.3));
  CHECK(to_json(run_theta_slices(cfg)).dump() == to_json(twice).dump());

  // affine f: theta vanishes
  GraphFamilySpec s;
  s.family = Family::VerticalPlane;
  const IntrinsicGraph P = make_family(s);
  const ThetaReport flat = run_theta_slices(P, cfg);
  for (const auto& sl : flat.per_slice) CHECK(sl.integral < 1e-20);

  // preconditions
  RunConfig c1 = cfg;
  c1.family.n = 1;
  CHECK_THROWS_AS(run_theta_slices(c1), ConfigError);
  Rng rng(1);
  const IntrinsicGraph tilted(testing::random_direction(2, rng, 0.1), P.f(), P.lambda(), P.lambda_prime());
  CHECK_THROWS_AS(run_theta_slices(tilted, cfg), ConfigError);
}

TEST_CASE("identity suites") {
  const SuiteReport alg = run_algebraic_suite(40, 1);
  CHECK(alg.pass());
  CHECK(alg.checks.size() == 24);
  for (const auto& c : alg.checks) CHECK(c.max_error < 1e-12);
  const SuiteReport wav = run_wavelet_suite(2, 1, {3, 4}, {2});
  CHECK(wav.pass());
  CHECK(wav.checks.size() == 10);
  CHECK(to_json(wav)["pass"] == true);
}
