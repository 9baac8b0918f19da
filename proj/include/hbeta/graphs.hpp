#pragma once

// Intrinsic Lipschitz graphs Gamma_{f,w} = { v w^{f(v)} : v in V_0 } with f sampled
// on a grid over a box of V_0 (coordinates x_1..x_n, y_1..y_{n-1}, z).

#include <cstdint>
#include <optional>
#include <string>

#include "hbeta/grid.hpp"
#include "hbeta/grid_io.hpp"
#include "hbeta/heisenberg.hpp"

namespace hbeta {

/// (1 + lambda)/2 + (1 - lambda)/10, inside ((1 + lambda)/2, 1).
double default_lambda_prime(double lambda);

class IntrinsicGraph {
 public:
  IntrinsicGraph(Direction w, GridFunction f, double lambda, double lambda_prime);

  [[nodiscard]] const Direction& w() const { return w_; }
  [[nodiscard]] const GridFunction& f() const { return f_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double lambda_prime() const { return lambda_prime_; }
  [[nodiscard]] int n() const { return w_.n(); }
  [[nodiscard]] const Box& domain() const { return f_.box(); }

  [[nodiscard]] bool in_domain(const HPointD& v) const;
  /// f(v) for v in V_0; throws OutOfDomain outside the sampled box.
  [[nodiscard]] double field(const HPointD& v) const;
  /// f(v), or NaN outside the sampled box.
  [[nodiscard]] double field_or_nan(const HPointD& v) const;

  [[nodiscard]] GraphHeader header() const;
  [[nodiscard]] GridContainer container() const { return {f_, header()}; }
  static IntrinsicGraph from_container(const GridContainer& c);

 private:
  Direction w_;
  GridFunction f_;
  double lambda_;
  double lambda_prime_;
};

/// Psi(v) = v delta_{f(v)}(w).
HPointD graph_point(const IntrinsicGraph& G, const HPointD& v);

/// Point of V_0 from its 2n coordinates, and back.
inline HPointD v0_point(const VecD& c) { return from_v0_coords<double>(c); }

/// delta_t Gamma as an intrinsic graph over the dilated box (t > 0).
IntrinsicGraph dilate_graph(const IntrinsicGraph& G, double t);

struct ConeCheck {
  bool pass = false;
  double worst_ratio = 0.0;  // max |y_n(h)| / ||h|| over sampled pairs
  HPointD worst_u;
  HPointD worst_v;
  int pairs = 0;
};

/// Samples pairs u, v of the domain (half of them at random nearby scales) and
/// records max |y_n(h)| / ||h|| for h = Psi(u)^-1 Psi(v). Passes iff the max is
/// at most slack * lambda. With climb_steps > 0 the worst few pairs are then
/// pushed uphill by random local moves, which finds the thin high-ratio regions
/// plain sampling tends to miss.
ConeCheck check_cone_condition(const IntrinsicGraph& G, int trials, std::uint64_t seed, double slack = 1.0,
                               int climb_steps = 0);

struct ReparametrizeOptions {
  /// Output grid points per axis (0 keeps the input resolution).
  int resolution = 0;
  double tolerance = 1e-10;
  /// Attempts at shrinking the output box when some nodes have no root in range.
  int max_shrinks = 12;
};

struct Reparametrized {
  IntrinsicGraph graph;
  /// Horizontal scale of the output box relative to the input box (z scales by its square).
  double shrink = 1.0;
  int attempts = 1;
};

/// f_{w'}: the parametrization of the same graph along w'. Each output node v'
/// solves f(Pi_w(v' w'^t)) = t by bracketed bisection.
Reparametrized reparametrize(const IntrinsicGraph& G, const Direction& w_prime, const ReparametrizeOptions& opts = {});

struct SliceLipschitz {
  double max_quotient = 0.0;
  double bound = 0.0;  // slack * lambda lambda' / (lambda' - lambda)
  int pairs = 0;
  [[nodiscard]] bool pass() const { return max_quotient <= bound; }
};

/// Max of |f(u) - f(v)| / d(u, v) over sampled u, v on the coset g P_w.
SliceLipschitz slice_lipschitz_bound(const IntrinsicGraph& G, const HPointD& g, int trials, std::uint64_t seed,
                                     double slack = 2.0);

enum class Family { VerticalPlane, SmoothBump, RandomLipschitz };

Family parse_family(const std::string& name);
std::string family_name(Family f);

struct GraphFamilySpec {
  Family family = Family::SmoothBump;
  int n = 2;
  double lambda = 0.3;
  std::uint64_t seed = 1;
  int resolution = 16;
  double half_width = 4.0;
  /// z half-width of the box; defaults to half_width^2.
  std::optional<double> z_half_width;
  /// Fixes the amplitude instead of tuning it (0 gives f = 0).
  std::optional<double> amplitude;
  std::optional<double> lambda_prime;
  /// Bump width for the smooth-bump family.
  double sigma = 1.5;
  /// Coarse grid points per axis for the random-lipschitz family.
  int coarse = 4;
  /// Tuned amplitude keeps the worst sampled cone ratio at margin * lambda.
  double margin = 0.8;
  int tuning_trials = 20000;
  int tuning_climb = 200;
};

/// Builds a graph of the requested family with direction Y_n.
IntrinsicGraph make_family(const GraphFamilySpec& spec);

}  // namespace hbeta
