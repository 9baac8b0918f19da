#include "hbeta/suites.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "hbeta/exact.hpp"
#include "hbeta/rng.hpp"
#include "hbeta/wavelet.hpp"

namespace hbeta {

bool SuiteReport::pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const SuiteCheck& c) { return c.pass; });
}

namespace {

Rational rat(Rng& rng, int den = 64, int span = 128) {
  return Rational(static_cast<long>(rng.uniform_int(2 * span + 1)) - span, den);
}

HPointQ random_q(int n, Rng& rng) {
  VecQ x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = rat(rng);
    y(i) = rat(rng);
  }
  return HPointQ(x, y, rat(rng));
}

double exact_err(const HPointQ& a, const HPointQ& b) {
  Rational m = abs(a.z - b.z);
  for (int i = 0; i < a.n(); ++i) {
    m = std::max<Rational>(m, abs(a.x(i) - b.x(i)));
    m = std::max<Rational>(m, abs(a.y(i) - b.y(i)));
  }
  return to_double(m);
}

double exact_err(const Rational& a, const Rational& b) { return to_double(abs(a - b)); }

HPointD random_d(int n, Rng& rng) {
  VecD x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = rng.uniform(-2, 2);
    y(i) = rng.uniform(-2, 2);
  }
  return HPointD(x, y, rng.uniform(-4, 4));
}

}  // namespace

SuiteReport run_algebraic_suite(int instances, std::uint64_t seed, const std::vector<int>& ns, double tol) {
  SuiteReport rep;
  for (int n : ns) {
    using Check = std::function<double(Rng&)>;
    const HPointQ e = HPointQ::identity(n);
    const std::vector<std::pair<std::string, Check>> checks = {
        {"associativity",
         [&](Rng& r) {
           const auto a = random_q(n, r), b = random_q(n, r), c = random_q(n, r);
           return exact_err((a * b) * c, a * (b * c));
         }},
        {"identity_inverse",
         [&](Rng& r) {
           const auto a = random_q(n, r);
           return std::max({exact_err(a * e, a), exact_err(e * a, a), exact_err(a * group_inv(a), e),
                            exact_err(group_inv(a) * a, e)});
         }},
        {"dilation_homomorphism",
         [&](Rng& r) {
           const auto a = random_q(n, r), b = random_q(n, r);
           const Rational t = rat(r, 16, 64) + Rational(65, 16);  // t in [1/16, 8 + 1/16]
           return std::max(exact_err(dilate(t, a * b), dilate(t, a) * dilate(t, b)),
                           exact_err(dilate(t, dilate(Rational(1 / t), a)), a));
         }},
        {"dilation_gauge",
         [&](Rng& r) {
           // ||delta_t p||^4 = t^4 ||p||^4
           const auto a = random_q(n, r);
           const Rational t = rat(r, 16, 64) + Rational(65, 16);
           return exact_err(gauge_norm_pow4(dilate(t, a)), t * t * t * t * gauge_norm_pow4(a));
         }},
        {"left_invariance",
         [&](Rng& r) {
           const auto g = random_q(n, r), h = random_q(n, r), k = random_q(n, r);
           return exact_err(gauge_norm_pow4(group_inv(k * g) * (k * h)), gauge_norm_pow4(group_inv(g) * h));
         }},
        {"dilation_metric",
         [&](Rng& r) {
           // d(delta_t g, delta_t h) = t d(g, h) in floating point, relative
           const auto g = random_d(n, r), h = random_d(n, r);
           const double t = std::exp(r.uniform(-3, 3));
           const double d = gauge_dist(g, h);
           return std::abs(gauge_dist(dilate(t, g), dilate(t, h)) - t * d) / (t * d);
         }},
        {"commutator",
         [&](Rng& r) {
           const auto a = random_q(n, r), b = random_q(n, r);
           // [a, b] = Omega(a, b) Z
           return exact_err(commutator(a, b), HPointQ(VecQ::Zero(n), VecQ::Zero(n), omega_bar(a, b)));
         }},
        {"pi_invariance",
         [&](Rng& r) {
           VecQ hw(2 * n);
           for (int i = 0; i < 2 * n; ++i) hw(i) = rat(r, 64, 16);
           const DirectionQ w = DirectionQ::perturbed(n, hw);
           const auto h = random_q(n, r);
           const Rational s = rat(r);
           const HPointQ p = project_along(w, h);
           HPointQ v = random_q(n, r);
           v.y(n - 1) = 0;
           return std::max({exact_err(project_along(w, h * w.power(s)), p), exact_err(p.y_n(), Rational(0)),
                            exact_err(project_along(w, v), v)});
         }},
    };
    for (std::size_t ci = 0; ci < checks.size(); ++ci) {
      SuiteCheck c{checks[ci].first, n, instances, 0.0, false};
      Rng rng(seed, {static_cast<std::uint64_t>(n), ci});
      for (int i = 0; i < instances; ++i) c.max_error = std::max(c.max_error, checks[ci].second(rng));
      c.pass = c.max_error < tol;
      rep.checks.push_back(std::move(c));
    }
  }
  return rep;
}

SuiteReport run_wavelet_suite(int grids, std::uint64_t seed, const std::vector<int>& ds, const std::vector<int>& Js,
                              double tol) {
  SuiteReport rep;
  for (int d : ds) {
    for (int J : Js) {
      const char* names[] = {"regression", "sliced_regression", "g1_identity", "g2_sandwich", "global_sandwich"};
      std::vector<SuiteCheck> cs;
      for (const char* nm : names) cs.push_back({std::string(nm) + " J=" + std::to_string(J), d, grids, 0.0, true});
      auto rel = [](const IdentityCheck& c) {
        return std::abs(c.lhs - c.rhs) / std::max({std::abs(c.lhs), std::abs(c.rhs), 1e-300});
      };
      auto viol = [](const SandwichCheck& s) {
        return std::max({0.0, s.lower - s.middle, s.middle - s.upper}) / std::max(std::abs(s.middle), 1e-300);
      };
      for (int k = 0; k < grids; ++k) {
        Rng rng(seed, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(J), static_cast<std::uint64_t>(k)});
        GridFunction g = cube_grid(d, J);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.normal();
        const IdentityReport r = verify_identities(g, tol);
        cs[0].max_error = std::max(cs[0].max_error, rel(r.regression));
        cs[0].pass = cs[0].pass && r.regression.pass;
        for (const auto& s : r.sliced) {
          cs[1].max_error = std::max(cs[1].max_error, rel(s));
          cs[1].pass = cs[1].pass && s.pass;
        }
        cs[2].max_error = std::max(cs[2].max_error, rel(r.g1_identity));
        cs[2].pass = cs[2].pass && r.g1_identity.pass;
        cs[3].max_error = std::max(cs[3].max_error, viol(r.g2_sandwich));
        cs[3].pass = cs[3].pass && r.g2_sandwich.pass;
        cs[4].max_error = std::max(cs[4].max_error, viol(r.global_sandwich));
        cs[4].pass = cs[4].pass && r.global_sandwich.pass;
      }
      for (auto& c : cs) rep.checks.push_back(std::move(c));
    }
  }
  return rep;
}

nlohmann::ordered_json to_json(const SuiteReport& rep) {
  nlohmann::ordered_json j;
  j["pass"] = rep.pass();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : rep.checks) {
    arr.push_back({{"name", c.name}, {"n", c.n}, {"instances", c.instances}, {"max_error", c.max_error},
                   {"pass", c.pass}});
  }
  j["checks"] = std::move(arr);
  return j;
}

}  // namespace hbeta
