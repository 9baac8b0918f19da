#include "hbeta/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "hbeta/rng.hpp"

namespace hbeta {

double default_lambda_prime(double lambda) { return (1.0 + lambda) / 2.0 + 0.1 * (1.0 - lambda); }

IntrinsicGraph::IntrinsicGraph(Direction w, GridFunction f, double lambda, double lambda_prime)
    : w_(std::move(w)), f_(std::move(f)), lambda_(lambda), lambda_prime_(lambda_prime) {
  if (!(lambda_ > 0.0 && lambda_ < 1.0)) throw std::invalid_argument("IntrinsicGraph: lambda must lie in (0, 1)");
  if (!(lambda_prime_ > lambda_ && lambda_prime_ < 1.0)) {
    throw std::invalid_argument("IntrinsicGraph: lambda' must lie in (lambda, 1)");
  }
  if (f_.dim() != 2 * w_.n()) throw DimensionMismatch("IntrinsicGraph: grid must live on V_0 (dimension 2n)");
  if (!cone_contains(lambda_prime_, w_.point())) {
    throw std::invalid_argument("IntrinsicGraph: direction w is outside Cone_{lambda'}");
  }
}

bool IntrinsicGraph::in_domain(const HPointD& v) const { return f_.contains(to_v0_coords(v)); }

double IntrinsicGraph::field(const HPointD& v) const { return f_(to_v0_coords(v)); }

double IntrinsicGraph::field_or_nan(const HPointD& v) const { return f_.value_or_nan(to_v0_coords(v)); }

GraphHeader IntrinsicGraph::header() const { return {n(), w_.horizontal(), lambda_, lambda_prime_}; }

IntrinsicGraph IntrinsicGraph::from_container(const GridContainer& c) {
  if (!c.graph) throw FormatError("container does not hold a graph");
  const auto& h = *c.graph;
  return IntrinsicGraph(Direction(HPointD::from_horizontal(h.w, 0.0)), c.grid, h.lambda, h.lambda_prime);
}

HPointD graph_point(const IntrinsicGraph& G, const HPointD& v) { return v * G.w().power(G.field(v)); }

IntrinsicGraph dilate_graph(const IntrinsicGraph& G, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("dilate_graph: t must be positive");
  const Box& b = G.domain();
  VecD scale = VecD::Constant(b.dim(), t);
  scale(b.dim() - 1) = t * t;
  Box nb(b.lo.cwiseProduct(scale), b.hi.cwiseProduct(scale));
  std::vector<double> vals(G.f().values().begin(), G.f().values().end());
  for (double& v : vals) v *= t;
  return IntrinsicGraph(G.w(), GridFunction(nb, G.f().points_per_axis(), std::move(vals)), G.lambda(),
                        G.lambda_prime());
}

namespace {

VecD random_in_box(const Box& b, Rng& rng) {
  VecD p(b.dim());
  for (int i = 0; i < b.dim(); ++i) p(i) = rng.uniform(b.lo(i), b.hi(i));
  return p;
}

/// Random V_0 element of unit gauge norm.
HPointD random_unit_v0(int n, Rng& rng) {
  VecD c(2 * n);
  for (int i = 0; i < 2 * n; ++i) c(i) = rng.normal();
  HPointD e = v0_point(c);
  return dilate(1.0 / gauge_norm(e), e);
}

double log_uniform(Rng& rng, double lo, double hi) { return lo * std::exp(rng.uniform() * std::log(hi / lo)); }

double horizontal_extent(const Box& b) {
  const VecD w = b.width();
  return w.head(w.size() - 1).maxCoeff();
}

}  // namespace

namespace {

double cone_ratio(const IntrinsicGraph& G, const HPointD& u, const HPointD& v) {
  const HPointD h = group_inv(graph_point(G, u)) * graph_point(G, v);
  const double nrm = gauge_norm(h);
  return nrm == 0.0 ? -1.0 : std::abs(h.y_n()) / nrm;
}

struct Pair {
  double ratio;
  HPointD u, v;
};

}  // namespace

ConeCheck check_cone_condition(const IntrinsicGraph& G, int trials, std::uint64_t seed, double slack,
                               int climb_steps) {
  if (trials < 1) throw std::invalid_argument("check_cone_condition: trials must be >= 1");
  const Box& box = G.domain();
  const double extent = horizontal_extent(box);
  if (!(extent > 0.0)) throw std::invalid_argument("check_cone_condition: degenerate domain");
  Rng rng(seed, {0xc0e});
  ConeCheck out;
  constexpr std::size_t kKeep = 16;
  std::vector<Pair> top;
  auto record = [&](double ratio, const HPointD& u, const HPointD& v) {
    if (ratio > out.worst_ratio) {
      out.worst_ratio = ratio;
      out.worst_u = u;
      out.worst_v = v;
    }
  };
  for (int k = 0; k < trials; ++k) {
    const HPointD u = v0_point(random_in_box(box, rng));
    HPointD v;
    if (k % 3 == 0) {
      v = v0_point(random_in_box(box, rng));
    } else {
      const double rho = log_uniform(rng, 1e-3 * extent, extent);
      HPointD e = dilate(rho, random_unit_v0(G.n(), rng));
      if (k % 3 == 2) {
        // z(Psi(u)^-1 Psi(u e)) = z(e) + (f(u) + O(rho)) Omega(e, w); cancelling the
        // first-order part aims e along the horizontal directions of the graph.
        e.z = -G.field(u) * omega_bar(e, G.w().point());
      }
      v = u * e;
      if (!G.in_domain(v)) continue;
    }
    const double ratio = cone_ratio(G, u, v);
    if (ratio < 0.0) continue;
    ++out.pairs;
    record(ratio, u, v);
    if (climb_steps > 0) {
      top.push_back({ratio, u, v});
      std::sort(top.begin(), top.end(), [](const Pair& a, const Pair& b) { return a.ratio > b.ratio; });
      if (top.size() > kKeep) top.pop_back();
    }
  }
  for (Pair p : top) {
    double step = 0.5 * gauge_dist(p.u, p.v);
    for (int s = 0; s < climb_steps; ++s, step *= 0.98) {
      // Move one endpoint, or translate the pair together.
      const int which = rng.uniform_int(3);
      const HPointD e = dilate(step, random_unit_v0(G.n(), rng));
      HPointD u = p.u, v = p.v;
      if (which == 0) u = u * e;
      if (which == 1) v = v * e;
      if (which == 2) {
        u = e * u;
        v = e * v;
      }
      if (!G.in_domain(u) || !G.in_domain(v)) continue;
      const double ratio = cone_ratio(G, u, v);
      if (ratio > p.ratio) p = {ratio, u, v};
    }
    record(p.ratio, p.u, p.v);
  }
  out.pass = out.worst_ratio <= slack * G.lambda();
  return out;
}

namespace {

/// Solves f(Pi_w(v' w'^t)) = t. Returns NaN when the search leaves the domain.
double solve_node(const IntrinsicGraph& G, const Direction& wp, const HPointD& vp, double tol) {
  auto F = [&](double t) {
    const HPointD q = project_along(G.w(), vp * wp.power(t));
    return G.field_or_nan(q) - t;
  };
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double t = 0.0;
  for (int iter = 0; iter < 400; ++iter) {
    const double Ft = F(t);
    if (std::isnan(Ft)) return std::numeric_limits<double>::quiet_NaN();
    if (std::abs(Ft) <= tol) return t;
    // F decreases across the unique root.
    (Ft > 0.0 ? lo : hi) = t;
    const bool bracketed = std::isfinite(lo) && std::isfinite(hi);
    if (bracketed && hi - lo <= tol) return 0.5 * (lo + hi);
    double next = t + Ft;  // fixed-point step t <- f(Pi_w(v' w'^t))
    if (bracketed && (next <= lo || next >= hi || iter % 3 == 2)) next = 0.5 * (lo + hi);
    t = next;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Reparametrized reparametrize(const IntrinsicGraph& G, const Direction& w_prime, const ReparametrizeOptions& opts) {
  detail::require_same_n(G.n(), w_prime.n(), "reparametrize");
  if (!cone_contains(G.lambda_prime(), w_prime.point())) {
    throw std::invalid_argument("reparametrize: w' is outside Cone_{lambda'}");
  }
  const int res = opts.resolution > 0 ? opts.resolution : G.f().points_per_axis();
  const int d = G.domain().dim();
  double shrink = 1.0;
  for (int attempt = 1; attempt <= opts.max_shrinks + 1; ++attempt) {
    VecD factors = VecD::Constant(d, shrink);
    factors(d - 1) = shrink * shrink;
    GridFunction out(G.domain().scaled(factors), res);
    bool ok = true;
    for (std::size_t i = 0; i < out.size() && ok; ++i) {
      const double t = solve_node(G, w_prime, v0_point(out.node(i)), opts.tolerance);
      if (std::isnan(t)) ok = false;
      out[i] = t;
    }
    if (ok) return {IntrinsicGraph(w_prime, std::move(out), G.lambda(), G.lambda_prime()), shrink, attempt};
    shrink *= 0.8;
  }
  throw OutOfDomain("reparametrize: no root inside the sampled domain even after shrinking the output box");
}

namespace {

/// Uniform-ish sample of the coset g P_w inside the domain (z uniform over the box range).
std::optional<HPointD> sample_on_slice(const IntrinsicGraph& G, const HPointD& g, const MatD& cw, Rng& rng) {
  const Box& box = G.domain();
  const int n = G.n();
  const double extent = horizontal_extent(box) + (g.horizontal().norm());
  for (int attempt = 0; attempt < 64; ++attempt) {
    VecD h = VecD::Zero(2 * n);
    for (Eigen::Index j = 0; j < cw.cols(); ++j) h += cw.col(j) * rng.uniform(-extent, extent);
    HPointD p = HPointD::from_horizontal(h, 0.0);
    HPointD u = g * p;
    // Z lies in P_w, so any z keeps u on the coset.
    u.z = rng.uniform(box.lo(box.dim() - 1), box.hi(box.dim() - 1));
    if (G.in_domain(u)) return u;
  }
  return std::nullopt;
}

}  // namespace

SliceLipschitz slice_lipschitz_bound(const IntrinsicGraph& G, const HPointD& g, int trials, std::uint64_t seed,
                                     double slack) {
  if (trials < 1) throw std::invalid_argument("slice_lipschitz_bound: trials must be >= 1");
  const double lam = G.lambda();
  const double lamp = G.lambda_prime();
  SliceLipschitz out;
  out.bound = slack * lam * lamp / (lamp - lam);
  const MatD cw = c_w_basis(G.w());
  const double extent = horizontal_extent(G.domain());
  Rng rng(seed, {0x511ce});
  bool any = false;
  for (int k = 0; k < trials; ++k) {
    const auto u = sample_on_slice(G, g, cw, rng);
    if (!u) continue;
    any = true;
    HPointD v;
    if (k % 2 == 0) {
      const auto v2 = sample_on_slice(G, g, cw, rng);
      if (!v2) continue;
      v = *v2;
    } else {
      // Nearby point u delta_rho(e) with e a unit element of P_w.
      VecD h = VecD::Zero(2 * G.n());
      for (Eigen::Index j = 0; j < cw.cols(); ++j) h += cw.col(j) * rng.normal();
      HPointD e = HPointD::from_horizontal(h, rng.normal());
      e = dilate(1.0 / gauge_norm(e), e);
      v = u.value() * dilate(log_uniform(rng, 1e-3 * extent, extent), e);
      if (!G.in_domain(v)) continue;
    }
    const double dist = gauge_dist(*u, v);
    if (dist == 0.0) continue;
    ++out.pairs;
    out.max_quotient = std::max(out.max_quotient, std::abs(G.field(*u) - G.field(v)) / dist);
  }
  if (!any) throw std::invalid_argument("slice_lipschitz_bound: the coset g P_w misses the domain");
  return out;
}

Family parse_family(const std::string& name) {
  if (name == "vertical-plane") return Family::VerticalPlane;
  if (name == "smooth-bump") return Family::SmoothBump;
  if (name == "random-lipschitz") return Family::RandomLipschitz;
  throw std::invalid_argument("unknown graph family: " + name);
}

std::string family_name(Family f) {
  switch (f) {
    case Family::VerticalPlane:
      return "vertical-plane";
    case Family::SmoothBump:
      return "smooth-bump";
    case Family::RandomLipschitz:
      return "random-lipschitz";
  }
  return "?";
}

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

/// Unit-amplitude shape of the family, sampled on the graph grid.
GridFunction family_shape(const GraphFamilySpec& spec, const Box& box, Rng& rng) {
  const int n = spec.n;
  switch (spec.family) {
    case Family::VerticalPlane: {
      // Horizontal slope of unit Euclidean norm plus an offset; no z dependence.
      VecD slope(2 * n - 1);
      for (int i = 0; i < slope.size(); ++i) slope(i) = rng.normal();
      slope.normalize();
      const double offset = rng.uniform(-1.0, 1.0);
      return GridFunction::sample(box, spec.resolution,
                                  [&](const VecD& c) { return slope.dot(c.head(2 * n - 1)) + offset; });
    }
    case Family::SmoothBump: {
      const double s2 = spec.sigma * spec.sigma;
      return GridFunction::sample(box, spec.resolution, [&](const VecD& c) {
        const double r = gauge_norm(v0_point(c));
        return std::exp(-r * r / s2);
      });
    }
    case Family::RandomLipschitz: {
      if (spec.coarse < 2) throw std::invalid_argument("make_family: coarse grid needs >= 2 points per axis");
      GridFunction coarse(box, spec.coarse);
      for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = rng.uniform(-1.0, 1.0);
      return GridFunction::sample(box, spec.resolution, [&](const VecD& c) { return coarse(c); });
    }
  }
  throw std::invalid_argument("make_family: unknown family");
}

}  // namespace

IntrinsicGraph make_family(const GraphFamilySpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("make_family: n must be >= 1");
  if (!is_power_of_two(spec.resolution) || spec.resolution < 8) {
    throw std::invalid_argument("make_family: resolution must be a power of two >= 8");
  }
  if (!(spec.half_width > 0.0)) throw std::invalid_argument("make_family: half_width must be positive");
  const double lam = spec.lambda;
  if (!(lam > 0.0 && lam < 1.0)) throw std::invalid_argument("make_family: lambda must lie in (0, 1)");
  const double lamp = spec.lambda_prime.value_or(default_lambda_prime(lam));
  const int d = 2 * spec.n;
  VecD half = VecD::Constant(d, spec.half_width);
  half(d - 1) = spec.z_half_width.value_or(spec.half_width * spec.half_width);
  const Box box = Box::symmetric(half);
  const Direction w = Direction::canonical(spec.n);

  Rng rng(spec.seed, {0xfa, static_cast<std::uint64_t>(spec.family), static_cast<std::uint64_t>(spec.n)});
  const GridFunction shape = family_shape(spec, box, rng);
  auto scaled = [&](double a) {
    GridFunction g = shape;
    g *= a;
    return IntrinsicGraph(w, std::move(g), lam, lamp);
  };

  if (spec.amplitude) return scaled(*spec.amplitude);

  if (spec.family == Family::VerticalPlane) {
    // |Delta f| / ||h|| <= L / sqrt(1 + L^2) for slope L, so this keeps the ratio near margin * lambda.
    const double m = spec.margin * lam;
    return scaled(m / std::sqrt(1.0 - m * m));
  }

  // Bisection on the amplitude against a fixed set of sampled pairs.
  const double target = spec.margin * lam;
  const std::uint64_t check_seed = Rng(spec.seed, {0x7e57}).next_u64();
  auto ratio = [&](double a) {
    return check_cone_condition(scaled(a), spec.tuning_trials, check_seed, 1.0, spec.tuning_climb).worst_ratio;
  };
  double lo = 0.0;
  double hi = 1.0;
  int steps = 0;
  while (ratio(hi) <= target) {
    lo = hi;
    hi *= 2.0;
    if (++steps >= 60) throw std::runtime_error("make_family: amplitude search did not converge in 60 steps");
  }
  while (hi - lo > 1e-3 * hi) {
    const double mid = 0.5 * (lo + hi);
    (ratio(mid) <= target ? lo : hi) = mid;
    if (++steps >= 60) throw std::runtime_error("make_family: amplitude search did not converge in 60 steps");
  }
  return scaled(lo);
}

}  // namespace hbeta
