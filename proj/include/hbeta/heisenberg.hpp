#pragma once

// Heisenberg group H_n in exponential coordinates (x, y, z), x, y in R^n.
//
//   (x,y,z) . (x',y',z') = (x+x', y+y', z+z' + Omega((x,y),(x',y'))/2)
//   Omega((x,y),(x',y')) = sum_i x_i y'_i - x'_i y_i
//
// Everything here is templated on the scalar so the algebra can run over
// double or over exact rationals (see exact.hpp). Metric quantities that need
// roots (gauge_norm, gauge_dist) are provided for floating scalars, with
// gauge_norm_pow4 available for exact comparisons.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace hbeta {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using VecD = Eigen::VectorXd;
using MatD = Eigen::MatrixXd;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename Scalar>
bool all_finite(const Vec<Scalar>& v) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return v.allFinite();
  } else {
    return true;
  }
}

template <typename Scalar>
bool is_finite(const Scalar& s) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return std::isfinite(s);
  } else {
    return true;
  }
}

inline void require_same_n(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": operands live in H_" + std::to_string(a) +
                            " and H_" + std::to_string(b));
  }
}

}  // namespace detail

/// A point of H_n.
template <typename Scalar>
struct HPoint {
  Vec<Scalar> x;
  Vec<Scalar> y;
  Scalar z{0};

  HPoint() = default;

  HPoint(Vec<Scalar> x_, Vec<Scalar> y_, Scalar z_)
      : x(std::move(x_)), y(std::move(y_)), z(std::move(z_)) {
    if (x.size() < 1 || x.size() != y.size()) {
      throw DimensionMismatch("HPoint: x and y must have the same length n >= 1");
    }
    if (!detail::all_finite(x) || !detail::all_finite(y) || !detail::is_finite(z)) {
      throw std::invalid_argument("HPoint: non-finite coordinate");
    }
  }

  static HPoint identity(int n) {
    return HPoint(Vec<Scalar>::Zero(n), Vec<Scalar>::Zero(n), Scalar(0));
  }
  static HPoint unit_x(int n, int i) {
    HPoint p = identity(n);
    p.x(i) = Scalar(1);
    return p;
  }
  static HPoint unit_y(int n, int i) {
    HPoint p = identity(n);
    p.y(i) = Scalar(1);
    return p;
  }
  /// The central direction Z = (0, 0, 1).
  static HPoint unit_z(int n) {
    HPoint p = identity(n);
    p.z = Scalar(1);
    return p;
  }
  /// Point with horizontal part h = (x, y) in R^{2n} and vertical part z.
  static HPoint from_horizontal(const Vec<Scalar>& h, Scalar z) {
    if (h.size() < 2 || h.size() % 2 != 0) {
      throw DimensionMismatch("HPoint::from_horizontal: horizontal vector must have even length");
    }
    const auto n = h.size() / 2;
    return HPoint(h.head(n), h.tail(n), std::move(z));
  }

  [[nodiscard]] int n() const { return static_cast<int>(x.size()); }
  [[nodiscard]] const Scalar& y_n() const { return y(x.size() - 1); }

  [[nodiscard]] Vec<Scalar> horizontal() const {
    Vec<Scalar> h(2 * x.size());
    h << x, y;
    return h;
  }

  template <typename Other>
  [[nodiscard]] HPoint<Other> cast() const {
    return HPoint<Other>(x.template cast<Other>(), y.template cast<Other>(), Other(z));
  }

  bool operator==(const HPoint& o) const { return x == o.x && y == o.y && z == o.z; }
};

using HPointD = HPoint<double>;

/// Omega(u, v) on R^{2n}, u = (x, y).
template <typename Derived1, typename Derived2>
auto symplectic_form(const Eigen::MatrixBase<Derived1>& u, const Eigen::MatrixBase<Derived2>& v) {
  using Scalar = typename Derived1::Scalar;
  if (u.size() != v.size() || u.size() % 2 != 0) {
    throw DimensionMismatch("symplectic_form: vectors must share an even length");
  }
  const auto n = u.size() / 2;
  Scalar s = u.head(n).dot(v.tail(n));
  s -= v.head(n).dot(u.tail(n));
  return s;
}

/// Omega lifted to H_n through the projection pi.
template <typename Scalar>
Scalar omega_bar(const HPoint<Scalar>& a, const HPoint<Scalar>& b) {
  detail::require_same_n(a.n(), b.n(), "omega_bar");
  Scalar s = a.x.dot(b.y);
  s -= b.x.dot(a.y);
  return s;
}

template <typename Scalar>
HPoint<Scalar> group_mul(const HPoint<Scalar>& a, const HPoint<Scalar>& b) {
  detail::require_same_n(a.n(), b.n(), "group_mul");
  HPoint<Scalar> out;
  out.x = a.x + b.x;
  out.y = a.y + b.y;
  out.z = a.z + b.z + omega_bar(a, b) / Scalar(2);
  return out;
}

template <typename Scalar>
HPoint<Scalar> operator*(const HPoint<Scalar>& a, const HPoint<Scalar>& b) {
  return group_mul(a, b);
}

template <typename Scalar>
HPoint<Scalar> group_inv(const HPoint<Scalar>& a) {
  HPoint<Scalar> out;
  out.x = -a.x;
  out.y = -a.y;
  out.z = -a.z;
  return out;
}

/// [a, b] = a b a^-1 b^-1, which equals Omega_bar(a, b) Z.
template <typename Scalar>
HPoint<Scalar> commutator(const HPoint<Scalar>& a, const HPoint<Scalar>& b) {
  detail::require_same_n(a.n(), b.n(), "commutator");
  return group_mul(group_mul(a, b), group_mul(group_inv(a), group_inv(b)));
}

/// delta_t(x, y, z) = (t x, t y, t^2 z).
template <typename Scalar>
HPoint<Scalar> dilate(const Scalar& t, const HPoint<Scalar>& p) {
  HPoint<Scalar> out;
  out.x = p.x * t;
  out.y = p.y * t;
  out.z = p.z * (t * t);
  return out;
}

/// (|x|^2 + |y|^2)^2 + 16 z^2, the fourth power of the Koranyi gauge.
template <typename Scalar>
Scalar gauge_norm_pow4(const HPoint<Scalar>& p) {
  Scalar h2 = p.x.squaredNorm() + p.y.squaredNorm();
  return h2 * h2 + Scalar(16) * p.z * p.z;
}

/// Koranyi gauge ((|x|^2+|y|^2)^2 + 16 z^2)^{1/4}; bi-Lipschitz to the CC norm.
template <typename Scalar>
Scalar gauge_norm(const HPoint<Scalar>& p) {
  static_assert(std::is_floating_point_v<Scalar>, "gauge_norm needs a floating scalar");
  const Scalar h2 = p.x.squaredNorm() + p.y.squaredNorm();
  return std::sqrt(std::hypot(h2, Scalar(4) * p.z));
}

/// Left-invariant distance d(a, b) = ||a^-1 b||.
template <typename Scalar>
Scalar gauge_dist(const HPoint<Scalar>& a, const HPoint<Scalar>& b) {
  return gauge_norm(group_mul(group_inv(a), b));
}

/// Membership in the open double cone {p : lambda ||p|| < |y_n(p)|}.
inline bool cone_contains(double lambda, const HPointD& p) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("cone_contains: lambda must lie in (0, 1)");
  }
  return lambda * gauge_norm(p) < std::abs(p.y_n());
}

/// pi(x, y, z) = (x, y).
template <typename Scalar>
Vec<Scalar> project_pi(const HPoint<Scalar>& p) {
  return p.horizontal();
}

/// A horizontal vector w with z(w) = 0 and y_n(w) = 1, used as a graph direction.
template <typename Scalar>
class HorizontalDirection {
 public:
  explicit HorizontalDirection(HPoint<Scalar> w) : w_(std::move(w)) {
    if (w_.z != Scalar(0) || w_.y_n() != Scalar(1)) {
      throw std::invalid_argument("HorizontalDirection: need z(w) = 0 and y_n(w) = 1");
    }
  }

  /// Y_n itself.
  static HorizontalDirection canonical(int n) { return HorizontalDirection(HPoint<Scalar>::unit_y(n, n - 1)); }

  /// Y_n + h, for h horizontal with vanishing y_n-component.
  static HorizontalDirection perturbed(int n, const Vec<Scalar>& h) {
    if (h.size() != 2 * n) throw DimensionMismatch("HorizontalDirection::perturbed: length must be 2n");
    Vec<Scalar> v = h;
    v(2 * n - 1) = Scalar(1);
    return HorizontalDirection(HPoint<Scalar>::from_horizontal(v, Scalar(0)));
  }

  [[nodiscard]] const HPoint<Scalar>& point() const { return w_; }
  [[nodiscard]] int n() const { return w_.n(); }
  [[nodiscard]] Vec<Scalar> horizontal() const { return w_.horizontal(); }

  /// w^alpha = delta_alpha(w).
  [[nodiscard]] HPoint<Scalar> power(const Scalar& alpha) const { return dilate(alpha, w_); }

  template <typename Other>
  [[nodiscard]] HorizontalDirection<Other> cast() const {
    return HorizontalDirection<Other>(w_.template cast<Other>());
  }

 private:
  HPoint<Scalar> w_;
};

using Direction = HorizontalDirection<double>;

/// Pi_w(h) = h w^{-y_n(h)}: the point where the coset h<w> meets V_0.
template <typename Scalar>
HPoint<Scalar> project_along(const HorizontalDirection<Scalar>& w, const HPoint<Scalar>& h) {
  detail::require_same_n(w.n(), h.n(), "project_along");
  HPoint<Scalar> out = group_mul(h, w.power(-h.y_n()));
  // y_n vanishes exactly in exact arithmetic; pin it in floating point too.
  out.y(out.n() - 1) = Scalar(0);
  return out;
}

// ---------------------------------------------------------------------------
// Coordinates on the vertical plane V_0 = {y_n = 0}.
//
// A point of V_0 is stored as the 2n-vector (x_1..x_n, y_1..y_{n-1}, z); its
// horizontal part is the (2n-1)-vector (x_1..x_n, y_1..y_{n-1}).

template <typename Scalar>
Vec<Scalar> to_v0_coords(const HPoint<Scalar>& p) {
  const int n = p.n();
  Vec<Scalar> c(2 * n);
  c.head(n) = p.x;
  c.segment(n, n - 1) = p.y.head(n - 1);
  c(2 * n - 1) = p.z;
  return c;
}

template <typename Scalar>
HPoint<Scalar> from_v0_coords(const Vec<Scalar>& c) {
  if (c.size() < 2 || c.size() % 2 != 0) throw DimensionMismatch("from_v0_coords: length must be 2n");
  const auto n = c.size() / 2;
  Vec<Scalar> y = Vec<Scalar>::Zero(n);
  y.head(n - 1) = c.segment(n, n - 1);
  return HPoint<Scalar>(c.head(n), y, c(2 * n - 1));
}

/// Embeds a horizontal V_0 vector (length 2n-1) into R^{2n} (y_n = 0).
inline VecD v0_horizontal_to_full(const VecD& a) {
  const auto n = (a.size() + 1) / 2;
  VecD h = VecD::Zero(2 * n);
  h.head(2 * n - 1) = a;
  return h;
}

/// Drops the (vanishing) y_n slot of a horizontal vector of V_0.
inline VecD full_to_v0_horizontal(const VecD& h) { return h.head(h.size() - 1); }

// ---------------------------------------------------------------------------
// Linear algebra on horizontal vectors.

/// Modified Gram-Schmidt with column pivoting: orthonormal basis of span(cols).
/// Columns whose remaining norm falls below `tol` are discarded.
inline MatD orthonormalize(const MatD& cols, double tol = 1e-10) {
  MatD work = cols;
  const Eigen::Index m = work.cols();
  MatD basis(work.rows(), 0);
  std::vector<bool> used(static_cast<size_t>(m), false);
  for (Eigen::Index step = 0; step < m; ++step) {
    Eigen::Index best = -1;
    double best_norm = tol;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      const double nrm = work.col(j).norm();
      if (nrm > best_norm) {
        best_norm = nrm;
        best = j;
      }
    }
    if (best < 0) break;
    used[static_cast<size_t>(best)] = true;
    VecD q = work.col(best) / best_norm;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = q;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!used[static_cast<size_t>(j)]) work.col(j) -= q * q.dot(work.col(j));
    }
  }
  return basis;
}

/// Orthonormal basis of {v : c_i . v = 0 for every row c_i of `constraints`}.
inline MatD null_space(const MatD& constraints, double tol = 1e-10) {
  const Eigen::Index dim = constraints.cols();
  const MatD rows = orthonormalize(constraints.transpose(), tol);
  MatD candidates = MatD::Identity(dim, dim) - rows * rows.transpose();
  MatD basis = orthonormalize(candidates, tol);
  // Pivoting can let rounding leak an extra direction; the dimension is known.
  const Eigen::Index expect = dim - rows.cols();
  if (basis.cols() > expect) basis = basis.leftCols(expect).eval();
  return basis;
}

/// Orthonormal basis (columns) of the symplectic complement of span(S).
inline MatD symplectic_complement(const MatD& S) {
  if (S.rows() < 2 || S.rows() % 2 != 0) {
    throw DimensionMismatch("symplectic_complement: vectors must have even length 2n");
  }
  if (S.cols() > 0 && orthonormalize(S).cols() != S.cols()) {
    throw std::invalid_argument("symplectic_complement: input vectors are linearly dependent");
  }
  const Eigen::Index n = S.rows() / 2;
  // Omega(v, s) = v^T J s with J = [[0, I], [-I, 0]], so the constraint row is (J s)^T.
  MatD constraints(S.cols(), S.rows());
  for (Eigen::Index j = 0; j < S.cols(); ++j) {
    VecD js(S.rows());
    js.head(n) = S.col(j).tail(n);
    js.tail(n) = -S.col(j).head(n);
    constraints.row(j) = js.transpose();
  }
  if (S.cols() == 0) return MatD::Identity(S.rows(), S.rows());
  return null_space(constraints);
}

/// Basis of a vertical subgroup: Z plus horizontal vectors.
struct VerticalSubspaceBasis {
  std::vector<HPointD> vectors;

  [[nodiscard]] int n() const { return vectors.empty() ? 0 : vectors.front().n(); }
  [[nodiscard]] int dim() const { return static_cast<int>(vectors.size()); }

  /// Horizontal basis vectors as columns of a 2n x (dim-1) matrix (Z excluded).
  [[nodiscard]] MatD horizontal() const {
    const int nn = n();
    std::vector<VecD> cols;
    for (const auto& v : vectors) {
      if (v.x.isZero(0.0) && v.y.isZero(0.0)) continue;
      cols.push_back(v.horizontal());
    }
    MatD m(2 * nn, static_cast<Eigen::Index>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = cols[j];
    return m;
  }

  /// Builds a basis from horizontal columns, appending Z.
  static VerticalSubspaceBasis from_horizontal(const MatD& cols) {
    VerticalSubspaceBasis b;
    const int n = static_cast<int>(cols.rows() / 2);
    for (Eigen::Index j = 0; j < cols.cols(); ++j) b.vectors.push_back(HPointD::from_horizontal(cols.col(j), 0.0));
    b.vectors.push_back(HPointD::unit_z(n));
    return b;
  }
};

/// Orthonormal basis of C_w = V_0 cap w^Omega, a (2n-2)-dimensional horizontal subspace.
inline MatD c_w_basis(const Direction& w) {
  const int n = w.n();
  const VecD wh = w.horizontal();
  MatD constraints(2, 2 * n);
  constraints.setZero();
  constraints(0, 2 * n - 1) = 1.0;  // y_n = 0
  // Omega(u, w) = u_x . w_y - w_x . u_y
  constraints.row(1).head(n) = wh.tail(n).transpose();
  constraints.row(1).tail(n) = -wh.head(n).transpose();
  return null_space(constraints);
}

/// P_w = V_0 cap w^{Omega bar} = C_w + <Z>, a (2n-1)-dimensional vertical subgroup.
inline VerticalSubspaceBasis plane_p_w(const Direction& w) {
  return VerticalSubspaceBasis::from_horizontal(c_w_basis(w));
}

/// Unit horizontal vector nu of V_0 orthogonal to C_w (sign fixed by nu . X_n >= 0).
inline VecD transverse_unit(const Direction& w) {
  const int n = w.n();
  MatD constraints(1 + 2 * n - 2, 2 * n);
  constraints.setZero();
  constraints(0, 2 * n - 1) = 1.0;
  const MatD cw = c_w_basis(w);
  for (Eigen::Index j = 0; j < cw.cols(); ++j) constraints.row(1 + j) = cw.col(j).transpose();
  VecD nu = null_space(constraints).col(0);
  if (nu(n - 1) < 0.0) nu = -nu;
  return nu;
}

}  // namespace hbeta
