#include "hbeta/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "hbeta/parallel.hpp"
#include "hbeta/rng.hpp"

namespace hbeta {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config

void RunConfig::validate() const {
  if (n() < 1) throw ConfigError("n must be >= 1");
  if (!(R_max > 0.0)) throw ConfigError("R_max must be positive");
  if (num_scales < 3) throw ConfigError("num_scales must be >= 3");
  if (centers_per_scale < 1) throw ConfigError("centers_per_scale must be >= 1");
  if (samples_per_beta < 64) throw ConfigError("samples_per_beta must be >= 64");
  if (dense_samples < centers_per_scale) throw ConfigError("dense_samples must be >= centers_per_scale");
  if (slices < 1 || theta_points < 1) throw ConfigError("slices and theta_points must be >= 1");
  if (theta_lattice < 2) throw ConfigError("theta_lattice must be >= 2");
  if (cone_trials < 1) throw ConfigError("cone_trials must be >= 1");
  if (center != "node" && center != "origin") throw ConfigError("center must be 'node' or 'origin'");
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

RunConfig run_config_from_json(const json& j, RunConfig cfg) {
  if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
  GraphFamilySpec& f = cfg.family;
  try {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object() || value.is_array()) throw ConfigError("config key '" + key + "' must be a scalar");
      const char* k = key.c_str();
      if (key == "n") read(j, k, f.n);
      else if (key == "family") f.family = parse_family(value.get<std::string>());
      else if (key == "lambda") read(j, k, f.lambda);
      else if (key == "lambda_prime") f.lambda_prime = value.get<double>();
      else if (key == "graph_seed") read(j, k, f.seed);
      else if (key == "resolution") read(j, k, f.resolution);
      else if (key == "half_width") read(j, k, f.half_width);
      else if (key == "z_half_width") f.z_half_width = value.get<double>();
      else if (key == "amplitude") f.amplitude = value.get<double>();
      else if (key == "sigma") read(j, k, f.sigma);
      else if (key == "coarse") read(j, k, f.coarse);
      else if (key == "margin") read(j, k, f.margin);
      else if (key == "R_max") read(j, k, cfg.R_max);
      else if (key == "num_scales") read(j, k, cfg.num_scales);
      else if (key == "centers_per_scale") read(j, k, cfg.centers_per_scale);
      else if (key == "samples_per_beta") read(j, k, cfg.samples_per_beta);
      else if (key == "seed") read(j, k, cfg.seed);
      else if (key == "empirical_c") read(j, k, cfg.empirical_c);
      else if (key == "output_path") read(j, k, cfg.output_path);
      else if (key == "csv_path") read(j, k, cfg.csv_path);
      else if (key == "center") read(j, k, cfg.center);
      else if (key == "dense_samples") read(j, k, cfg.dense_samples);
      else if (key == "cone_trials") read(j, k, cfg.cone_trials);
      else if (key == "slices") read(j, k, cfg.slices);
      else if (key == "theta_points") read(j, k, cfg.theta_points);
      else if (key == "theta_lattice") read(j, k, cfg.theta_lattice);
      else if (key == "threads") read(j, k, cfg.threads);
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ordered_json to_json(const RunConfig& cfg) {
  const GraphFamilySpec& f = cfg.family;
  ordered_json j;
  j["n"] = f.n;
  j["family"] = family_name(f.family);
  j["lambda"] = f.lambda;
  if (f.lambda_prime) j["lambda_prime"] = *f.lambda_prime;
  j["graph_seed"] = f.seed;
  j["resolution"] = f.resolution;
  j["half_width"] = f.half_width;
  if (f.z_half_width) j["z_half_width"] = *f.z_half_width;
  if (f.amplitude) j["amplitude"] = *f.amplitude;
  j["sigma"] = f.sigma;
  j["coarse"] = f.coarse;
  j["margin"] = f.margin;
  j["R_max"] = cfg.R_max;
  j["num_scales"] = cfg.num_scales;
  j["centers_per_scale"] = cfg.centers_per_scale;
  j["samples_per_beta"] = cfg.samples_per_beta;
  j["seed"] = cfg.seed;
  j["empirical_c"] = cfg.empirical_c;
  j["center"] = cfg.center;
  j["dense_samples"] = cfg.dense_samples;
  j["cone_trials"] = cfg.cone_trials;
  j["slices"] = cfg.slices;
  j["theta_points"] = cfg.theta_points;
  j["theta_lattice"] = cfg.theta_lattice;
  return j;
}

// ---------------------------------------------------------------------------
// Calibration

namespace {

/// Node set of R_w in (s, p, t) coordinates, boundary-heavy: s, t on a 5-point
/// grid, p at 0 and on spheres of radius 1/2 and 1 along +-e_i and (+-e_i +- e_j)/sqrt 2.
std::vector<VecD> r_w_nodes(const QuasiBox& Q) {
  const MatD& cw = Q.cw();
  const auto q = cw.cols();
  std::vector<VecD> dirs;
  for (Eigen::Index i = 0; i < q; ++i) {
    for (int si : {-1, 1}) {
      dirs.push_back(si * cw.col(i));
      for (Eigen::Index k = i + 1; k < q; ++k) {
        for (int sk : {-1, 1}) dirs.push_back((si * cw.col(i) + sk * cw.col(k)) / std::numbers::sqrt2);
      }
    }
  }
  std::vector<VecD> ps{VecD::Zero(cw.rows())};
  for (const auto& d : dirs) {
    ps.push_back(0.5 * d);
    ps.push_back(d);
  }
  std::vector<VecD> out;
  const double ticks[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  for (double s : ticks) {
    for (const auto& p : ps) {
      for (double t : ticks) {
        VecD u(cw.rows() + 1);
        u.head(cw.rows()) = s * Q.nu() + p;
        u(cw.rows()) = t;
        out.push_back(std::move(u));
      }
    }
  }
  return out;
}

bool box_inside(const Box& inner, const Box& outer) {
  return outer.contains(inner.lo) && outer.contains(inner.hi);
}

HPointD random_central_point(const IntrinsicGraph& G, Rng& rng) {
  const Box& b = G.domain();
  const int dim = b.dim();
  VecD c(dim);
  for (int i = 0; i < dim; ++i) {
    const double frac = i == dim - 1 ? 1.0 / 16.0 : 0.25;
    const double mid = 0.5 * (b.lo(i) + b.hi(i));
    const double half = 0.5 * (b.hi(i) - b.lo(i)) * frac;
    c(i) = rng.uniform(mid - half, mid + half);
  }
  return graph_point(G, v0_point(c));
}

}  // namespace

CalibrationReport calibrate_c(const IntrinsicGraph& G, const CalibrationOptions& opts) {
  if (opts.radii.empty() || opts.pairs_per_radius < 1 || opts.samples_per_pair < 1) {
    throw std::invalid_argument("calibrate_c: need radii, pairs and samples");
  }
  struct Pair {
    HPointD x;
    double r;
    double outer = 0.0;
    long points = 0;
  };
  std::vector<Pair> pairs;
  for (std::size_t ri = 0; ri < opts.radii.size(); ++ri) {
    if (!(opts.radii[ri] > 0.0)) throw std::invalid_argument("calibrate_c: radii must be positive");
    for (int i = 0; i < opts.pairs_per_radius; ++i) {
      Rng rng(opts.seed, {0xca1, ri, static_cast<std::uint64_t>(i)});
      pairs.push_back({random_central_point(G, rng), opts.radii[ri]});
    }
  }
  const std::vector<VecD> nodes = r_w_nodes(QuasiBox(G.w(), pairs.front().x, 1.0));

  // Outer inclusion in closed form: q lies in Q_w(x, rho) iff rho >= max(|s|, |p|, sqrt|t|)
  // for the R_w coordinates of its radius-1 pullback.
  parallel_for(pairs.size(), [&](std::size_t i) {
    Pair& P = pairs[i];
    Rng rng(opts.seed, {0xca2, i});
    const BallSample ball = sample_graph_ball(G, P.x, P.r, opts.samples_per_pair, rng);
    const QuasiBox Q1(G.w(), P.x, 1.0);
    for (const auto& q : ball.points) {
      const auto rc = Q1.r_coords(Q1.pullback(q));
      const double rho = std::max({std::abs(rc.s), rc.p.norm(), std::sqrt(std::abs(rc.t))});
      P.outer = std::max(P.outer, rho / P.r);
    }
    P.points = static_cast<long>(ball.points.size());
  });

  CalibrationReport rep;
  rep.pairs = static_cast<int>(pairs.size());
  for (const auto& P : pairs) {
    rep.outer = std::max(rep.outer, P.outer);
    rep.points += P.points;
  }

  auto inner_holds = [&](double c, long* lifted) {
    std::vector<char> ok(pairs.size(), 1);
    std::vector<long> count(pairs.size(), 0);
    parallel_for(pairs.size(), [&](std::size_t i) {
      const Pair& P = pairs[i];
      const QuasiBox Q(G.w(), P.x, P.r / c);
      for (const auto& u : nodes) {
        const HPointD v = Q.map(u);
        if (!G.in_domain(v)) continue;
        ++count[i];
        if (gauge_dist(P.x, graph_point(G, v)) > P.r * (1.0 + 1e-12)) {
          ok[i] = 0;
          return;
        }
      }
    });
    if (lifted) {
      *lifted = 0;
      for (long k : count) *lifted += k;
    }
    return std::all_of(ok.begin(), ok.end(), [](char b) { return b != 0; });
  };

  double lo = 1.0, hi = opts.c_max;
  if (inner_holds(lo, nullptr)) {
    hi = lo;
  } else {
    if (!inner_holds(hi, nullptr)) {
      throw CalibrationFailed("calibrate_c: Q_w(x, r/c) does not lift into B(x, r) even at c = " +
                              std::to_string(opts.c_max));
    }
    while (hi / lo > 1.0 + opts.rel_tol) {
      const double mid = std::sqrt(lo * hi);
      (inner_holds(mid, nullptr) ? hi : lo) = mid;
    }
  }
  rep.inner = hi;
  if (rep.outer > opts.c_max) {
    throw CalibrationFailed("calibrate_c: ball projections need c = " + std::to_string(rep.outer) + " > " +
                            std::to_string(opts.c_max));
  }
  rep.c = std::max({1.0, rep.outer, rep.inner});
  inner_holds(rep.c, &rep.nodes);
  return rep;
}

// ---------------------------------------------------------------------------
// Carleson sums

IntrinsicGraph build_graph(const RunConfig& cfg) {
  cfg.validate();
  return make_family(cfg.family);
}

CarlesonReport run_carleson(const RunConfig& cfg) { return run_carleson(build_graph(cfg), cfg); }

HPointD ball_center(const IntrinsicGraph& G, const std::string& center) {
  const GridFunction& f = G.f();
  VecD c = f.box().center();
  if (center == "node") {
    for (int a = 0; a < f.dim(); ++a) {
      // nodes sit at lo + (i + 1/2) h; take the upper one on ties
      const double h = f.cell_width(a);
      const double lo = f.box().lo(a);
      const double i = std::floor((c(a) - lo) / h);
      c(a) = lo + (std::clamp(i, 0.0, f.points_per_axis() - 1.0) + 0.5) * h;
    }
  } else if (center != "origin") {
    throw ConfigError("center must be 'node' or 'origin'");
  }
  return graph_point(G, v0_point(c));
}

namespace {

struct BetaTask {
  std::size_t ball;
  std::size_t scale;  // index into BallReport::per_scale
  int k;
  int i;
  HPointD x;
  double r;
};

/// Greedy farthest-point net among the admissible points, at most `cap` centers
/// and pairwise spacing >= r. Starts from the admissible point nearest x0.
std::vector<std::size_t> farthest_point_net(const std::vector<HPointD>& pts, const std::vector<char>& admissible,
                                            const HPointD& x0, double r, int cap) {
  const std::size_t N = pts.size();
  std::vector<double> dist(N, std::numeric_limits<double>::infinity());
  std::size_t first = N;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < N; ++i) {
    if (!admissible[i]) continue;
    const double d = gauge_dist(x0, pts[i]);
    if (d < best) {
      best = d;
      first = i;
    }
  }
  std::vector<std::size_t> net;
  if (first == N) return net;
  std::size_t next = first;
  while (static_cast<int>(net.size()) < cap) {
    net.push_back(next);
    double far = -1.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (!admissible[i]) continue;
      dist[i] = std::min(dist[i], gauge_dist(pts[next], pts[i]));
      if (dist[i] > far) {
        far = dist[i];
        next = i;
      }
    }
    if (far < r) break;
  }
  return net;
}

}  // namespace

CarlesonReport run_carleson(const IntrinsicGraph& G, const RunConfig& cfg) {
  cfg.validate();
  if (G.n() != cfg.n()) throw ConfigError("run_carleson: graph and config disagree on n");
  const int n = G.n();
  const int K = cfg.num_scales;
  CarlesonReport rep;
  rep.config = cfg;
  rep.cone = check_cone_condition(G, cfg.cone_trials, cfg.seed ^ 0xc0e5ULL);
  if (!rep.cone.pass) {
    rep.warnings.push_back("cone check failed: worst |y_n|/||h|| = " + std::to_string(rep.cone.worst_ratio));
  }

  std::vector<double> scales(K);
  for (int k = 0; k < K; ++k) scales[k] = std::ldexp(cfg.R_max, -k);
  if (cfg.empirical_c > 0.0) {
    rep.empirical_c = cfg.empirical_c;
  } else {
    CalibrationOptions co;
    co.radii = scales;
    co.pairs_per_radius = 16;
    co.seed = cfg.seed;
    rep.empirical_c = calibrate_c(G, co).c;
  }
  rep.config.empirical_c = rep.empirical_c;
  const double c = rep.empirical_c;

  rep.x0 = ball_center(G, cfg.center);
  const double radii[] = {cfg.R_max / 4.0, cfg.R_max / 2.0, cfg.R_max};
  std::vector<BetaTask> tasks;
  std::vector<std::vector<HPointD>> dense(3);
  for (std::size_t b = 0; b < 3; ++b) {
    BallReport ball;
    ball.R = radii[b];
    Rng rng(cfg.seed, {0xde5e, b});
    BallSample S = sample_graph_ball(G, rep.x0, ball.R, cfg.dense_samples, rng);
    if (S.clipped > 0) {
      rep.warnings.push_back("ball R = " + std::to_string(ball.R) + " leaves the sampled box");
    }
    if (static_cast<int>(S.points.size()) < cfg.dense_samples) {
      rep.warnings.push_back("ball R = " + std::to_string(ball.R) + ": only " + std::to_string(S.points.size()) +
                             " surrogate points");
    }
    ball.measure = S.measure();
    dense[b] = std::move(S.points);
    const auto& pts = dense[b];
    for (int k = 0; k < K; ++k) {
      const double r = scales[k];
      if (r > ball.R * (1.0 + 1e-12)) continue;
      ScaleContribution sc;
      sc.k = k;
      sc.r = r;
      std::vector<char> admissible(pts.size(), 0);
      for (std::size_t p = 0; p < pts.size(); ++p) {
        admissible[p] = box_inside(QuasiBox(G.w(), pts[p], c * r).bounding_box(), G.domain());
        if (!admissible[p]) ++sc.dropped;
      }
      const auto net = farthest_point_net(pts, admissible, rep.x0, r, cfg.centers_per_scale);
      if (net.empty()) {
        rep.warnings.push_back("no admissible centers at scale r = " + std::to_string(r) +
                               " in ball R = " + std::to_string(ball.R) + "; scale dropped");
        continue;
      }
      sc.centers = static_cast<int>(net.size());
      sc.cell_measure.assign(net.size(), 0.0);
      const double unit = ball.measure / static_cast<double>(pts.size());
      for (std::size_t p = 0; p < pts.size(); ++p) {
        if (!admissible[p]) continue;
        double best = std::numeric_limits<double>::infinity();
        std::size_t own = 0;
        for (std::size_t i = 0; i < net.size(); ++i) {
          const double d = gauge_dist(pts[net[i]], pts[p]);
          if (d < best) {
            best = d;
            own = i;
          }
        }
        sc.cell_measure[own] += unit;
      }
      for (std::size_t i = 0; i < net.size(); ++i) {
        tasks.push_back({b, ball.per_scale.size(), k, static_cast<int>(i), pts[net[i]], r});
      }
      sc.betas.resize(net.size());
      ball.per_scale.push_back(std::move(sc));
    }
    rep.balls.push_back(std::move(ball));
  }

  std::vector<BetaEstimate> results(tasks.size());
  std::vector<char> failed(tasks.size(), 0);
  parallel_for(
      tasks.size(),
      [&](std::size_t t) {
        const BetaTask& T = tasks[t];
        const std::uint64_t s =
            Rng(cfg.seed, {0xbe7a, T.ball, static_cast<std::uint64_t>(T.k), static_cast<std::uint64_t>(T.i)})
                .next_u64();
        try {
          results[t] = beta_number(G, T.x, T.r, cfg.samples_per_beta, s);
        } catch (const TooFewSamples&) {
          failed[t] = 1;
          results[t].x = T.x;
          results[t].r = T.r;
        }
      },
      cfg.threads);

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const BetaTask& T = tasks[t];
    rep.balls[T.ball].per_scale[T.scale].betas[T.i] = results[t];
    if (failed[t]) rep.warnings.push_back("beta at a net point of scale " + std::to_string(T.r) + " failed");
  }

  const double hom = 2.0 * n + 1.0;
  for (auto& ball : rep.balls) {
    double var = 0.0;
    for (auto& sc : ball.per_scale) {
      double sum = 0.0, v = 0.0;
      for (std::size_t i = 0; i < sc.betas.size(); ++i) {
        const double b = sc.betas[i].value;
        const double w = std::numbers::ln2 * sc.cell_measure[i];
        sum += w * b * b;
        const double e = 2.0 * b * sc.betas[i].std_error * w;
        v += e * e;
      }
      sc.contribution = sum;
      sc.std_error = std::sqrt(v);
      ball.I += sum;
      var += v;
    }
    ball.std_error = std::sqrt(var);
    ball.ratio = ball.I / std::pow(ball.R, hom);
  }

  double rmin = std::numeric_limits<double>::infinity();
  bool positive = true;
  for (const auto& ball : rep.balls) {
    rep.ratio_envelope = std::max(rep.ratio_envelope, ball.ratio);
    rmin = std::min(rmin, ball.ratio);
    positive = positive && ball.I > 0.0;
  }
  rep.ratio_spread = positive ? rep.ratio_envelope / rmin : std::numeric_limits<double>::quiet_NaN();
  if (positive) {
    double mx = 0.0;
    for (const auto& ball : rep.balls) mx += std::log(ball.R) / 3.0;
    double sxx = 0.0, sxy = 0.0, my = 0.0;
    for (const auto& ball : rep.balls) my += std::log(ball.I) / 3.0;
    for (const auto& ball : rep.balls) {
      const double dx = std::log(ball.R) - mx;
      sxx += dx * dx;
      sxy += dx * (std::log(ball.I) - my);
    }
    rep.exponent = sxy / sxx;
    double v = 0.0;
    for (const auto& ball : rep.balls) {
      const double dx = std::log(ball.R) - mx;
      const double rel = ball.std_error / ball.I;
      v += (dx / sxx) * (dx / sxx) * rel * rel;
    }
    rep.exponent_std_error = std::sqrt(v);
  } else {
    rep.exponent = std::numeric_limits<double>::quiet_NaN();
    rep.exponent_std_error = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

namespace {

ordered_json point_json(const HPointD& p) {
  std::vector<double> c;
  for (Eigen::Index i = 0; i < p.x.size(); ++i) c.push_back(p.x(i));
  for (Eigen::Index i = 0; i < p.y.size(); ++i) c.push_back(p.y(i));
  c.push_back(p.z);
  return c;
}

}  // namespace

ordered_json to_json(const BetaEstimate& b) {
  ordered_json j;
  j["x"] = point_json(b.x);
  j["r"] = b.r;
  j["beta"] = b.value;
  j["stderr"] = b.std_error;
  j["plane"] = {{"normal", std::vector<double>(b.best_plane.normal.data(),
                                               b.best_plane.normal.data() + b.best_plane.normal.size())},
                {"offset", b.best_plane.offset}};
  j["samples"] = b.sample_count;
  return j;
}

ordered_json to_json(const CarlesonReport& rep) {
  ordered_json j;
  j["kind"] = "carleson";
  j["config"] = to_json(rep.config);
  j["empirical_c"] = rep.empirical_c;
  j["cone_check"] = {{"pass", rep.cone.pass}, {"worst_ratio", rep.cone.worst_ratio}, {"pairs", rep.cone.pairs}};
  j["x0"] = point_json(rep.x0);
  ordered_json balls = ordered_json::array();
  for (const auto& ball : rep.balls) {
    ordered_json bj;
    bj["R"] = ball.R;
    bj["measure"] = ball.measure;
    bj["I"] = ball.I;
    bj["stderr"] = ball.std_error;
    bj["ratio"] = ball.ratio;
    ordered_json ps = ordered_json::array();
    for (const auto& sc : ball.per_scale) {
      ordered_json sj;
      sj["k"] = sc.k;
      sj["r"] = sc.r;
      sj["contribution"] = sc.contribution;
      sj["stderr"] = sc.std_error;
      sj["centers"] = sc.centers;
      sj["dropped"] = sc.dropped;
      sj["cell_measure"] = sc.cell_measure;
      ordered_json bs = ordered_json::array();
      for (const auto& b : sc.betas) bs.push_back(to_json(b));
      sj["betas"] = std::move(bs);
      ps.push_back(std::move(sj));
    }
    bj["per_scale"] = std::move(ps);
    balls.push_back(std::move(bj));
  }
  j["balls"] = std::move(balls);
  j["I_R"] = rep.full().I;
  j["exponent_fit"] = {{"slope", rep.exponent}, {"stderr", rep.exponent_std_error}};
  j["ratio_envelope"] = rep.ratio_envelope;
  j["ratio_spread"] = rep.ratio_spread;
  j["warnings"] = rep.warnings;
  return j;
}

std::string carleson_csv(const CarlesonReport& rep) {
  std::ostringstream os;
  os << "k,r,contribution\n";
  char buf[96];
  for (const auto& sc : rep.full().per_scale) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", sc.k, sc.r, sc.contribution);
    os << buf;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// theta_f on slices

double koranyi_ball_volume(int m) {
  // int_{|h| <= 1} sqrt(1 - |h|^4) / 2 dh over R^{2m}
  return std::pow(std::numbers::pi, m) / (4.0 * std::tgamma(m)) * std::tgamma(0.5 * m) * std::tgamma(1.5) /
         std::tgamma(0.5 * m + 1.5);
}

ThetaEvaluator::ThetaEvaluator(int m, int lattice) : m_(m) {
  if (m < 1 || lattice < 2) throw std::invalid_argument("ThetaEvaluator: need m >= 1 and lattice >= 2");
  const int dim = 2 * m + 1;
  std::vector<int> idx(dim, 0);
  cell_ = std::pow(2.0 / lattice, 2 * m) * (0.5 / lattice);
  for (;;) {
    VecD h(2 * m);
    for (int i = 0; i < 2 * m; ++i) h(i) = -1.0 + (idx[i] + 0.5) * 2.0 / lattice;
    const double z = -0.25 + (idx[dim - 1] + 0.5) * 0.5 / lattice;
    HPointD p = HPointD::from_horizontal(h, z);
    if (gauge_norm_pow4(p) <= 1.0) unit_nodes_.push_back(std::move(p));
    int a = dim - 1;
    while (a >= 0 && ++idx[a] == lattice) idx[a--] = 0;
    if (a < 0) break;
  }
  design_.resize(static_cast<Eigen::Index>(unit_nodes_.size()), 2 * m + 1);
  for (std::size_t i = 0; i < unit_nodes_.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    design_(row, 0) = 1.0;
    design_.row(row).tail(2 * m) = unit_nodes_[i].horizontal().transpose();
  }
  qr_.compute(design_);
}

double ThetaEvaluator::eval(const std::vector<double>& values, const std::vector<char>& keep) const {
  const std::size_t N = values.size();
  const auto kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 1));
  if (2 * kept < N) return std::numeric_limits<double>::quiet_NaN();
  VecD y(static_cast<Eigen::Index>(kept));
  if (kept == N) {
    for (std::size_t i = 0; i < N; ++i) y(static_cast<Eigen::Index>(i)) = values[i];
    const VecD res = y - design_ * qr_.solve(y);
    return res.squaredNorm() * cell_;
  }
  MatD A(static_cast<Eigen::Index>(kept), design_.cols());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!keep[i]) continue;
    A.row(row) = design_.row(static_cast<Eigen::Index>(i));
    y(row++) = values[i];
  }
  const VecD res = y - A * A.colPivHouseholderQr().solve(y);
  // only the kept part of the ball is seen; rescale to the full ball
  return res.squaredNorm() * cell_ * static_cast<double>(N) / static_cast<double>(kept);
}

ThetaReport run_theta_slices(const RunConfig& cfg) { return run_theta_slices(build_graph(cfg), cfg); }

ThetaReport run_theta_slices(const IntrinsicGraph& G, const RunConfig& cfg) {
  cfg.validate();
  const int n = G.n();
  if (n < 2) throw ConfigError("run_theta_slices: needs n >= 2 (slices are copies of H_{n-1})");
  if (G.w().horizontal() != Direction::canonical(n).horizontal()) {
    throw ConfigError("run_theta_slices: needs w = Y_n, whose P_w is the standard copy of H_{n-1}");
  }
  const int m = n - 1;
  const int K = cfg.num_scales;
  ThetaReport rep;
  rep.config = cfg;
  rep.R = cfg.R_max;
  rep.scales = K;
  const ThetaEvaluator theta(m, cfg.theta_lattice);
  const double R = cfg.R_max;
  const double vol = koranyi_ball_volume(m) * std::pow(R, 2 * m + 2);
  const Box& box = G.domain();
  const double xn_mid = 0.5 * (box.lo(n - 1) + box.hi(n - 1));
  const double xn_half = 0.5 * (box.hi(n - 1) - box.lo(n - 1));

  for (int id = 0; id < cfg.slices; ++id) {
    Rng rng(cfg.seed, {0x7e7a, static_cast<std::uint64_t>(id)});
    ThetaSlice sl;
    sl.id = id;
    sl.offset = rng.uniform(xn_mid - 0.5 * xn_half, xn_mid + 0.5 * xn_half);
    // p in H_m -> the V_0 point with x_n = offset (u_s p for u_s = offset X_n; Omega vanishes)
    auto embed = [&](const HPointD& p) {
      VecD c(2 * n);
      c.head(m) = p.x;
      c(m) = sl.offset;
      c.segment(n, m) = p.y;
      c(2 * n - 1) = p.z;
      return v0_point(c);
    };
    auto F = [&](const HPointD& p) { return G.field_or_nan(embed(p)); };

    std::vector<HPointD> xs;
    while (static_cast<int>(xs.size()) < cfg.theta_points) {
      VecD h(2 * m);
      for (int i = 0; i < 2 * m; ++i) h(i) = rng.uniform(-R, R);
      HPointD p = HPointD::from_horizontal(h, rng.uniform(-0.25 * R * R, 0.25 * R * R));
      if (gauge_norm(p) <= R) xs.push_back(std::move(p));
    }
    std::vector<double> vals(xs.size(), 0.0);
    std::vector<int> clipped(xs.size(), 0);
    parallel_for(
        xs.size(),
        [&](std::size_t i) {
          double s = 0.0;
          for (int k = 0; k < K; ++k) s += std::numbers::ln2 * theta(F, xs[i], std::ldexp(R, -k), &clipped[i]);
          vals[i] = s;
        },
        cfg.threads);
    double s1 = 0.0, s2 = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sl.clipped += clipped[i];
      if (!std::isfinite(vals[i])) continue;
      ++used;
      s1 += vals[i];
      s2 += vals[i] * vals[i];
    }
    if (used == 0) {
      ++rep.skipped;
      continue;
    }
    const double mean = s1 / used;
    sl.integral = vol * mean;
    sl.std_error = vol * std::sqrt(std::max(s2 / used - mean * mean, 0.0) / used);
    sl.lip = slice_lipschitz_bound(G, embed(HPointD::identity(m)), 20000, cfg.seed ^ (0x11b0ULL + id), 1.0)
                 .max_quotient;
    sl.bound = sl.lip * sl.lip * std::pow(R, 2 * m + 2);
    sl.ratio = sl.bound > 0.0 ? sl.integral / sl.bound : 0.0;
    rep.max_ratio = std::max(rep.max_ratio, sl.ratio);
    rep.per_slice.push_back(sl);
  }
  return rep;
}

ordered_json to_json(const ThetaReport& rep) {
  ordered_json j;
  j["kind"] = "theta";
  j["config"] = to_json(rep.config);
  j["R"] = rep.R;
  j["scales"] = rep.scales;
  ordered_json ps = ordered_json::array();
  for (const auto& s : rep.per_slice) {
    ps.push_back({{"slice", s.id},
                  {"offset", s.offset},
                  {"integral", s.integral},
                  {"stderr", s.std_error},
                  {"lip", s.lip},
                  {"bound", s.bound},
                  {"ratio", s.ratio},
                  {"clipped", s.clipped}});
  }
  j["per_slice"] = std::move(ps);
  j["skipped"] = rep.skipped;
  j["max_ratio"] = rep.max_ratio;
  return j;
}

}  // namespace hbeta
