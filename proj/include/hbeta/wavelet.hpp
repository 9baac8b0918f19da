#pragma once

// Tensor Haar wavelets on [-1,1]^d at dyadic level J, with the affine and
// slice-affine projections. Grid functions are GridFunctions on [-1,1]^d with
// 2^J midpoint cells per axis; inner products are cell-volume weighted.

#include <cstdint>
#include <map>
#include <vector>

#include "hbeta/beta.hpp"
#include "hbeta/grid.hpp"

namespace hbeta {

/// Zero grid on [-1,1]^d with 2^J cells per axis.
GridFunction cube_grid(int d, int J);

/// J with points_per_axis = 2^J; throws unless g lives on [-1,1]^d at a dyadic level >= 1.
int dyadic_level(const GridFunction& g);

/// psi_{j,k}(t): 1 for j = 0; for j > 0 and 0 <= k < 2^{j-1}, -1 then +1 on halves
/// of [-1 + k 2^{2-j}, -1 + (k+1) 2^{2-j}).
double haar_1d(int j, int k, double t);

/// ||psi_{j,k}||^2 on [-1,1]: 2 for j = 0, else 2^{2-j}.
double haar_1d_norm2(int j);

/// Per-axis slot of (j, k): 0 for j = 0, else 2^{j-1} + k.
int haar_slot(int j, int k);
/// Inverse of haar_slot.
std::pair<int, int> haar_index(int slot);

struct HaarCoeffs {
  int d = 0;
  int J = 0;
  /// Row-major over per-axis slots (last axis fastest).
  std::vector<double> c;

  [[nodiscard]] int points_per_axis() const { return 1 << J; }
  [[nodiscard]] double at(const std::vector<int>& j, const std::vector<int>& k) const;
  /// supp(j) as a bit mask.
  [[nodiscard]] std::uint32_t support(std::size_t flat) const;
  [[nodiscard]] double basis_norm2(std::size_t flat) const;
};

HaarCoeffs analyze(const GridFunction& g);
GridFunction synthesize(const HaarCoeffs& c);

/// Psi_{j,k} sampled on the level-J grid.
GridFunction haar_tensor(int d, int J, const std::vector<int>& j, const std::vector<int>& k);

struct SupportDecomposition {
  /// f_S keyed by the bit mask of S.
  std::map<std::uint32_t, GridFunction> f;
  /// g_i = sum_{|S| = i} f_S, i = 0..d.
  std::vector<GridFunction> g;
};

SupportDecomposition decompose_by_support(const HaarCoeffs& c);
/// Only the g_i (cheaper than the full subset split).
std::vector<GridFunction> decompose_by_support_size(const HaarCoeffs& c);

/// Orthogonal projection onto span{1, t_1, ..., t_d}.
GridFunction project_affine(const GridFunction& g);
/// Orthogonal projection onto functions affine on every slice {t_axis = const} (axis is 0-based).
GridFunction project_slice_affine(const GridFunction& g, int axis);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct SandwichCheck {
  double lower = 0.0;
  double middle = 0.0;
  double upper = 0.0;
  bool pass = false;
};

struct IdentityReport {
  int d = 0;
  IdentityCheck regression;                // ||g - lambda g||^2 = ||g1 - lambda g1||^2 + sum_{i>=2} ||g_i||^2
  std::vector<IdentityCheck> sliced;       // per axis
  IdentityCheck g1_identity;               // sum_l ||g1 - lambda_l g1||^2 = (d-1) ||g1 - lambda g1||^2
  SandwichCheck g2_sandwich;               // (d-2)||g2||^2 <= sum_l ||g2 - lambda_l g2||^2 <= d ||g2||^2
  SandwichCheck global_sandwich;           // (d-2)||g - lambda g||^2 <= sum_l ||g - lambda_l g||^2 <= d ||g - lambda g||^2
  double max_cross_term = 0.0;             // max_l |<g1 - lambda_l g1, g2 - lambda_l g2>| / ||g||^2
  [[nodiscard]] bool pass() const;
};

/// Checks every identity behind the slicing-cube bound to relative `tol`. Needs d >= 3.
IdentityReport verify_identities(const GridFunction& g, double tol = 1e-9);

struct SlicingVerticalOptions {
  int level = 3;  // cube grid level J; the quasibox quadrature uses 2^J points per axis
  double max_condition = 1e6;
};

struct SlicingVerticalReport {
  double lhs = 0.0;  // min_Aff ||f - g||_{L2(Q(x, r))}
  double rhs = 0.0;  // sum_i min_{SAff_{P_i}} ||f - g||_{L2(Q(x, c_out r))}
  double ratio = 0.0;
  double condition = 0.0;  // of M
  bool well_conditioned = true;
  /// The same comparison for h = f o M^{-1} on the cube [-r, r]^{2n-1} around M pi(x):
  /// squared sides, whose ratio obeys the (d-2, d) sandwich.
  double cube_aff = 0.0;
  double cube_slices = 0.0;
  MatD M;
};

/// planes: 2n-1 vertical hyperplanes of V_0 (each 2n-2 horizontal generators plus Z)
/// with intersection <Z>; f vertical. Q uses w = Y_n.
SlicingVerticalReport slicing_vertical_reduce(const Field& f, const std::vector<VerticalSubspaceBasis>& planes,
                                              const QuasiBox& Q, double c_out,
                                              const SlicingVerticalOptions& opts = {});

}  // namespace hbeta
