#pragma once

// beta numbers of intrinsic graphs and the parametric L2 functionals over
// quasiboxes Q_w(g, r) = Pi_w(g delta_r(R_w)).

#include <cstdint>
#include <functional>
#include <vector>

#include "hbeta/graphs.hpp"
#include "hbeta/heisenberg.hpp"
#include "hbeta/rng.hpp"

namespace hbeta {

/// A scalar field on V_0 (or on H_n). NaN means "outside the domain".
using Field = std::function<double(const HPointD&)>;

/// f of the graph, NaN off the sampled box.
inline Field graph_field(const IntrinsicGraph& G) {
  return [&G](const HPointD& v) { return G.field_or_nan(v); };
}

/// pi^{-1}({u : <u, normal> = offset}).
struct VerticalPlane {
  VecD normal;
  double offset = 0.0;

  VerticalPlane() = default;
  VerticalPlane(VecD normal_, double offset_);
};

/// |<pi(p), normal> - offset|: the vertical gap is free since the plane contains <Z>.
double dist_to_vertical_plane(const HPointD& p, const VerticalPlane& L);

/// delta_t L.
VerticalPlane dilate_plane(double t, const VerticalPlane& L);

class QuasiBox {
 public:
  QuasiBox(Direction w, HPointD center, double radius);

  [[nodiscard]] const Direction& w() const { return w_; }
  [[nodiscard]] const HPointD& center() const { return center_; }
  [[nodiscard]] double radius() const { return radius_; }
  [[nodiscard]] int n() const { return w_.n(); }
  /// nu and an orthonormal basis of C_w, as V_0 horizontal vectors (length 2n-1).
  [[nodiscard]] const VecD& nu() const { return nu_; }
  [[nodiscard]] const MatD& cw() const { return cw_; }

  /// Phi(u) = Pi_w(g delta_r(u)) for u in V_0 coordinates; affine, Jacobian r^{2n+1}.
  [[nodiscard]] HPointD map(const VecD& u) const;
  /// The unique u with Phi(u) = q, i.e. delta_{1/r} Pi_w(g^-1 q).
  [[nodiscard]] VecD pullback(const HPointD& q) const;

  struct RCoords {
    double s;
    VecD p;  // coordinates in the cw() basis
    double t;
  };
  /// u = s nu + p + t Z.
  [[nodiscard]] RCoords r_coords(const VecD& u) const;
  [[nodiscard]] static bool in_unit_r(const RCoords& c, double tol = 1e-12);

  [[nodiscard]] bool contains(const HPointD& q, double tol = 1e-12) const;
  /// Axis-aligned bounding box of Q in V_0 coordinates.
  [[nodiscard]] Box bounding_box() const;
  /// Lebesgue measure r^{2n+1} |R_w|.
  [[nodiscard]] double volume() const;

 private:
  Direction w_;
  HPointD center_;
  double radius_;
  VecD nu_;
  MatD cw_;
};

struct QuadratureOptions {
  int points_per_axis = 12;
};

/// Midpoint lattice on Q pulled from R_w, with its first axis normal to the
/// horizontal part of a slicing subgroup P, so each lattice layer is Q cap vP.
struct QuadratureNode {
  HPointD v;        // point of Q (in V_0)
  VecD local;       // lattice coordinates (a_0 = layer axis, then in-slice axes)
  int layer = 0;
};

struct Quadrature {
  std::vector<QuadratureNode> nodes;
  double weight = 0.0;  // Lebesgue measure of each cell in V_0
  int layers = 0;
  bool natural_frame = true;
};

/// With P = nullptr (or P = P_w) the frame is the R_w frame itself.
Quadrature quasibox_quadrature(const QuasiBox& Q, const VerticalSubspaceBasis* P, int points_per_axis);

/// sum alpha_i x_i + sum beta_i y_i + gamma on V_0.
struct AffineFit {
  VecD alpha;  // n
  VecD beta;   // n-1
  double gamma = 0.0;
  double residual = 0.0;  // L2(Q) norm of f - h
  int rank = 0;
  bool rank_deficient = false;
  int points = 0;
  int clipped = 0;

  [[nodiscard]] double operator()(const HPointD& v) const;
  /// Horizontal gradient in R^{2n} (y_n slot 0); its norm is the Lipschitz constant.
  [[nodiscard]] VecD gradient() const;
  [[nodiscard]] double lip() const { return gradient().norm(); }
};

struct SliceAffineFit {
  double residual = 0.0;
  int layers = 0;          // nonempty layers
  int flagged_layers = 0;  // layers fitted by a constant
  int points = 0;
  int clipped = 0;
};

AffineFit best_affine_fit(const Field& f, const QuasiBox& Q, const QuadratureOptions& opts = {});
SliceAffineFit best_slice_affine_fit(const Field& f, const QuasiBox& Q, const VerticalSubspaceBasis& P,
                                     const QuadratureOptions& opts = {});

// ---------------------------------------------------------------------------
// beta numbers

struct BetaEstimate {
  HPointD x;
  double r = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  VerticalPlane best_plane;
  int sample_count = 0;
  double measure = 0.0;  // surrogate measure of B(x, r) cap Gamma
  int clipped = 0;       // draws whose projection left the sampled box
  bool degenerate = false;
};

struct BallSample {
  std::vector<HPointD> points;  // points of Gamma cap B(x, r)
  long drawn = 0;
  int clipped = 0;
  double box_volume = 0.0;
  [[nodiscard]] double measure() const {
    return drawn == 0 ? 0.0 : box_volume * static_cast<double>(points.size()) / static_cast<double>(drawn);
  }
};

class TooFewSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Samples Gamma cap B(x, r) under the surrogate measure (Lebesgue on V_0
/// pushed forward by Psi) until `target` points are accepted.
BallSample sample_graph_ball(const IntrinsicGraph& G, const HPointD& x, double r, int target, Rng& rng);

BetaEstimate beta_number(const IntrinsicGraph& G, const HPointD& x, double r, int samples, std::uint64_t seed);

/// Total least squares over given points: the vertical plane minimizing the mean
/// squared distance, plus that mean. `degenerate` when the points span a plane.
struct PlaneFit {
  VerticalPlane plane;
  double mean_sq = 0.0;
  bool degenerate = false;
};
PlaneFit fit_vertical_plane(const std::vector<HPointD>& pts);

struct BetaAlphaReport {
  double beta = 0.0;
  double beta_stderr = 0.0;
  double residual = 0.0;  // inf_Aff ||f - h||_{L2(Q_w(x, c r))}
  double normalized = 0.0;  // r^{-(2n+3)/2} residual
  double ratio = 0.0;
  bool violation = false;
};

BetaAlphaReport beta_vs_parametric(const IntrinsicGraph& G, const HPointD& x, double r, double c, int samples,
                                   std::uint64_t seed, const QuadratureOptions& opts = {});

struct SaffCompareReport {
  double left = 0.0;   // min_SAff ||f' - sigma|| on Q_{w'}(x, r)
  double right = 0.0;  // min_SAff ||f - sigma|| on Q_w(x, c r)
  double ratio = 0.0;
  double shrink = 1.0;
};

/// Compares P_w-slice-affine approximation of f and of f' = f_{w'}. `reparam`
/// may carry a precomputed reparametrization of G along w'.
SaffCompareReport saff_compare(const IntrinsicGraph& G, const Direction& w_prime, const HPointD& x, double r,
                               double c, const QuadratureOptions& opts = {}, const Reparametrized* reparam = nullptr);

// ---------------------------------------------------------------------------
// Lipschitz bound for best affine fits on quasiballs of H_n.

/// U = u0 . {|x_i|, |y_i| <= rho, |z| <= rho^2/4}; B(u0, rho) subset U subset B(u0, mu rho)
/// with mu = (4n^2 + 1)^{1/4}.
struct QuasiBall {
  HPointD center;
  double rho = 1.0;

  [[nodiscard]] int n() const { return center.n(); }
  [[nodiscard]] double mu() const;
  [[nodiscard]] bool contains(const HPointD& p) const;
};

struct LipBoundReport {
  double fit_lip = 0.0;
  double sampled_lip = 0.0;
  double ratio = 0.0;
};

/// Lip(F) / Lip(f) for F the best affine approximation of f on U. The sampled
/// Lipschitz constant is the max of pair quotients and horizontal gradient norms.
LipBoundReport lip_of_best_fit(const Field& f, const QuasiBall& U, int points_per_axis, int trials,
                               std::uint64_t seed);

}  // namespace hbeta
