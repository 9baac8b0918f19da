#pragma once

// Affine functions on P_w and the switch from direction w to a commuting w'.
// Everything is templated on the scalar so the graph identity can be checked
// exactly over rationals.

#include <cmath>
#include <stdexcept>
#include <type_traits>

#include "hbeta/heisenberg.hpp"

namespace hbeta {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

class NotInvertible : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Solves A X = B by Gaussian elimination with partial pivoting (largest
/// magnitude pivot; exact for rational scalars).
template <typename Scalar>
Mat<Scalar> gauss_solve(Mat<Scalar> A, Mat<Scalar> B) {
  using std::abs;
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n) throw DimensionMismatch("gauss_solve: need square A and matching B");
  Scalar scale(0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) scale = std::max<Scalar>(scale, abs(A(i, j)));
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index i = k + 1; i < n; ++i)
      if (abs(A(i, k)) > abs(A(piv, k))) piv = i;
    bool singular = A(piv, k) == Scalar(0);
    if constexpr (std::is_floating_point_v<Scalar>) singular = singular || abs(A(piv, k)) <= 1e-14 * scale;
    if (singular) throw NotInvertible("gauss_solve: singular matrix");
    A.row(k).swap(A.row(piv));
    B.row(k).swap(B.row(piv));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const Scalar f = A(i, k) / A(k, k);
      if (f == Scalar(0)) continue;
      A.row(i) -= f * A.row(k);
      B.row(i) -= f * B.row(k);
    }
  }
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    for (Eigen::Index j = k + 1; j < n; ++j) B.row(k) -= A(k, j) * B.row(j);
    B.row(k) /= A(k, k);
  }
  return B;
}

/// Basis of C_w with rational entries: one vector per free coordinate
/// x_1..x_{n-1}, y_1..y_{n-1}; y_n = 0 and x_n is solved from Omega(u, w) = 0.
/// Columns are 2n-vectors; the coordinates of u in C_w are its free coordinates.
template <typename Scalar>
Mat<Scalar> c_w_free_basis(const HorizontalDirection<Scalar>& w) {
  const int n = w.n();
  const Vec<Scalar> wh = w.horizontal();
  Mat<Scalar> E = Mat<Scalar>::Zero(2 * n, 2 * n - 2);
  for (int j = 0; j < 2 * n - 2; ++j) {
    Vec<Scalar> u = Vec<Scalar>::Zero(2 * n);
    const int slot = j < n - 1 ? j : n + (j - (n - 1));
    u(slot) = Scalar(1);
    Scalar acc(0);
    for (int i = 0; i < n - 1; ++i) acc += u(i) * wh(n + i) - wh(i) * u(n + i);
    u(n - 1) = -acc;
    E.col(j) = u;
  }
  return E;
}

/// Free coordinates of a C_w vector.
template <typename Scalar>
Vec<Scalar> c_w_coords(const Vec<Scalar>& u) {
  const auto n = u.size() / 2;
  Vec<Scalar> c(2 * n - 2);
  c.head(n - 1) = u.head(n - 1);
  c.tail(n - 1) = u.segment(n, n - 1);
  return c;
}

/// T(p) = <gradient, pi(p)> + constant on P_w, with gradient in C_w.
template <typename Scalar>
struct AffineOnPlane {
  Vec<Scalar> gradient;
  Scalar constant{0};

  Scalar operator()(const HPoint<Scalar>& p) const { return gradient.dot(p.horizontal()) + constant; }
};

/// Euclidean norm of the gradient (double only).
inline double lip(const AffineOnPlane<double>& T) { return T.gradient.norm(); }

namespace detail {

template <typename Scalar>
bool is_zero(const Scalar& v, double tol) {
  using std::abs;
  if constexpr (std::is_floating_point_v<Scalar>) {
    return abs(v) < tol;
  } else {
    (void)tol;
    return v == Scalar(0);
  }
}

}  // namespace detail

/// T' with Gamma_{T,w} = Gamma_{T',w'}. M(p) = p s^{T(p)} (s = w - w') acts on
/// C_w as m(c) = c + tau(c) s; T' = tau o m^{-1} o pi.
template <typename Scalar>
AffineOnPlane<Scalar> switch_affine(const AffineOnPlane<Scalar>& T, const HorizontalDirection<Scalar>& w,
                                    const HorizontalDirection<Scalar>& w_prime) {
  const int n = w.n();
  detail::require_same_n(n, w_prime.n(), "switch_affine");
  if (n < 2) throw DimensionMismatch("switch_affine: C_w is trivial for n = 1");
  if (T.gradient.size() != 2 * n) throw DimensionMismatch("switch_affine: gradient must lie in R^{2n}");
  if (!detail::is_zero(omega_bar(w.point(), w_prime.point()), 1e-12)) {
    throw std::invalid_argument("switch_affine: w and w' must commute");
  }
  const Vec<Scalar> wh = w.horizontal();
  const Vec<Scalar> a = T.gradient;
  if (!detail::is_zero(a(2 * n - 1), 1e-12) || !detail::is_zero(symplectic_form(a, wh), 1e-12)) {
    throw std::invalid_argument("switch_affine: gradient must lie in C_w");
  }
  const Vec<Scalar> s = wh - w_prime.horizontal();
  // |s| Lip(T) < 1/2, compared squared so rationals stay exact
  if (!(Scalar(4) * s.squaredNorm() * a.squaredNorm() < Scalar(1))) {
    throw std::invalid_argument("switch_affine: need |w - w'| Lip(T) < 1/2");
  }

  const Mat<Scalar> E = c_w_free_basis(w);
  const int k = 2 * n - 2;
  const Vec<Scalar> g = E.transpose() * a;  // tau(xi) = g . xi + b
  const Vec<Scalar> sigma = c_w_coords(s);  // s = E sigma
  const Mat<Scalar> Mm = Mat<Scalar>::Identity(k, k) + sigma * g.transpose();
  // tau o m^{-1}(eta) = g' . eta + b - b g' . sigma with M^T g' = g
  const Vec<Scalar> gp = gauss_solve<Scalar>(Mm.transpose(), g);
  AffineOnPlane<Scalar> out;
  out.constant = T.constant - T.constant * gp.dot(sigma);
  // gradient in C_w with E^T a' = g'
  const Vec<Scalar> lam = gauss_solve<Scalar>(E.transpose() * E, gp);
  out.gradient = E * lam;
  return out;
}

/// Gamma_{T,w} and Gamma_{T',w'} at the point over p in P_w: returns A^{-1} B
/// with A = p w^{T(p)}, B = q w'^{T'(q)}, q = Pi_{w'}(A). Zero iff they agree.
template <typename Scalar>
HPoint<Scalar> switch_affine_defect(const AffineOnPlane<Scalar>& T, const HorizontalDirection<Scalar>& w,
                                    const AffineOnPlane<Scalar>& Tp, const HorizontalDirection<Scalar>& w_prime,
                                    const HPoint<Scalar>& p) {
  const HPoint<Scalar> A = p * w.power(T(p));
  const HPoint<Scalar> q = project_along(w_prime, A);
  const HPoint<Scalar> B = q * w_prime.power(Tp(q));
  return group_inv(A) * B;
}

}  // namespace hbeta
