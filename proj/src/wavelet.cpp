#include "hbeta/wavelet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/SVD>

namespace hbeta {
namespace {

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

/// In-place 1D Haar analysis (or synthesis) along `axis` of a row-major N^d array.
void transform_axis(std::vector<double>& a, int N, int d, int axis, bool inverse) {
  const std::size_t stride = ipow(static_cast<std::size_t>(N), d - 1 - axis);
  const std::size_t block = stride * static_cast<std::size_t>(N);
  std::vector<double> line(static_cast<std::size_t>(N)), tmp(static_cast<std::size_t>(N));
  for (std::size_t outer = 0; outer < a.size(); outer += block) {
    for (std::size_t inner = 0; inner < stride; ++inner) {
      const std::size_t base = outer + inner;
      for (int i = 0; i < N; ++i) line[static_cast<std::size_t>(i)] = a[base + static_cast<std::size_t>(i) * stride];
      if (!inverse) {
        // averages shrink to the front; level-j details land in slots [2^{j-1}, 2^j)
        for (int len = N; len > 1; len /= 2) {
          const int h = len / 2;
          for (int k = 0; k < h; ++k) {
            tmp[static_cast<std::size_t>(k)] = 0.5 * (line[2 * k] + line[2 * k + 1]);
            tmp[static_cast<std::size_t>(h + k)] = 0.5 * (line[2 * k + 1] - line[2 * k]);
          }
          std::copy(tmp.begin(), tmp.begin() + len, line.begin());
        }
      } else {
        for (int len = 2; len <= N; len *= 2) {
          const int h = len / 2;
          for (int k = 0; k < h; ++k) {
            tmp[static_cast<std::size_t>(2 * k)] = line[k] - line[h + k];
            tmp[static_cast<std::size_t>(2 * k + 1)] = line[k] + line[h + k];
          }
          std::copy(tmp.begin(), tmp.begin() + len, line.begin());
        }
      }
      for (int i = 0; i < N; ++i) a[base + static_cast<std::size_t>(i) * stride] = line[static_cast<std::size_t>(i)];
    }
  }
}

bool close_rel(double a, double b, double tol, double floor) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)) + floor;
}

}  // namespace

GridFunction cube_grid(int d, int J) {
  if (d < 1 || J < 1 || J > 20) throw std::invalid_argument("cube_grid: need d >= 1 and 1 <= J <= 20");
  return GridFunction(Box::symmetric(VecD::Ones(d)), 1 << J);
}

int dyadic_level(const GridFunction& g) {
  const int N = g.points_per_axis();
  if (N < 2 || !std::has_single_bit(static_cast<unsigned>(N))) {
    throw std::invalid_argument("wavelet: points per axis must be 2^J with J >= 1");
  }
  const VecD ones = VecD::Ones(g.dim());
  if (g.box().lo != -ones || g.box().hi != ones) throw std::invalid_argument("wavelet: grid must live on [-1,1]^d");
  for (double v : g.values())
    if (!std::isfinite(v)) throw std::invalid_argument("wavelet: non-finite grid value");
  return std::countr_zero(static_cast<unsigned>(N));
}

double haar_1d(int j, int k, double t) {
  if (j < 0 || k < 0 || k >= std::max(1, j == 0 ? 1 : 1 << (j - 1))) throw std::invalid_argument("haar_1d: invalid (j, k)");
  if (j == 0) return 1.0;
  const double h = std::ldexp(1.0, -j + 1);
  const double a = 2 * k * h - 1;
  if (t >= a && t < a + h) return -1.0;
  if (t >= a + h && t < a + 2 * h) return 1.0;
  return 0.0;
}

double haar_1d_norm2(int j) { return j == 0 ? 2.0 : std::ldexp(1.0, 2 - j); }

int haar_slot(int j, int k) { return j == 0 ? 0 : (1 << (j - 1)) + k; }

std::pair<int, int> haar_index(int slot) {
  if (slot == 0) return {0, 0};
  const int j = std::bit_width(static_cast<unsigned>(slot));
  return {j, slot - (1 << (j - 1))};
}

double HaarCoeffs::at(const std::vector<int>& j, const std::vector<int>& k) const {
  if (static_cast<int>(j.size()) != d || static_cast<int>(k.size()) != d) {
    throw DimensionMismatch("HaarCoeffs::at: index length must be d");
  }
  std::size_t flat = 0;
  for (int i = 0; i < d; ++i) {
    if (j[i] < 0 || j[i] > J || k[i] < 0 || k[i] >= std::max(1, j[i] == 0 ? 1 : 1 << (j[i] - 1))) {
      throw std::out_of_range("HaarCoeffs::at: index out of range");
    }
    flat = flat * static_cast<std::size_t>(points_per_axis()) + static_cast<std::size_t>(haar_slot(j[i], k[i]));
  }
  return c[flat];
}

std::uint32_t HaarCoeffs::support(std::size_t flat) const {
  std::uint32_t mask = 0;
  const auto N = static_cast<std::size_t>(points_per_axis());
  for (int i = d - 1; i >= 0; --i) {
    if (flat % N != 0) mask |= 1u << i;
    flat /= N;
  }
  return mask;
}

double HaarCoeffs::basis_norm2(std::size_t flat) const {
  double out = 1.0;
  const auto N = static_cast<std::size_t>(points_per_axis());
  for (int i = 0; i < d; ++i) {
    out *= haar_1d_norm2(haar_index(static_cast<int>(flat % N)).first);
    flat /= N;
  }
  return out;
}

HaarCoeffs analyze(const GridFunction& g) {
  HaarCoeffs out;
  out.J = dyadic_level(g);
  out.d = g.dim();
  out.c.assign(g.values().begin(), g.values().end());
  for (int axis = 0; axis < out.d; ++axis) transform_axis(out.c, g.points_per_axis(), out.d, axis, false);
  return out;
}

GridFunction synthesize(const HaarCoeffs& c) {
  GridFunction g = cube_grid(c.d, c.J);
  if (c.c.size() != g.size()) throw DimensionMismatch("synthesize: coefficient count does not match (d, J)");
  std::vector<double> a = c.c;
  for (int axis = 0; axis < c.d; ++axis) transform_axis(a, g.points_per_axis(), c.d, axis, true);
  std::copy(a.begin(), a.end(), g.values().begin());
  return g;
}

GridFunction haar_tensor(int d, int J, const std::vector<int>& j, const std::vector<int>& k) {
  GridFunction g = cube_grid(d, J);
  if (static_cast<int>(j.size()) != d || static_cast<int>(k.size()) != d) {
    throw DimensionMismatch("haar_tensor: index length must be d");
  }
  for (int i = 0; i < d; ++i)
    if (j[i] > J) throw std::out_of_range("haar_tensor: level above J");
  for (std::size_t f = 0; f < g.size(); ++f) {
    const VecD t = g.node(f);
    double v = 1.0;
    for (int i = 0; i < d; ++i) v *= haar_1d(j[i], k[i], t(i));
    g[f] = v;
  }
  return g;
}

namespace {

GridFunction synthesize_masked(const HaarCoeffs& c, auto&& keep) {
  HaarCoeffs part = c;
  for (std::size_t f = 0; f < part.c.size(); ++f)
    if (!keep(c.support(f))) part.c[f] = 0.0;
  return synthesize(part);
}

}  // namespace

SupportDecomposition decompose_by_support(const HaarCoeffs& c) {
  if (c.d > 16) throw std::invalid_argument("decompose_by_support: d too large for the subset split");
  SupportDecomposition out;
  for (std::uint32_t S = 0; S < (1u << c.d); ++S) {
    out.f.emplace(S, synthesize_masked(c, [S](std::uint32_t m) { return m == S; }));
  }
  out.g.assign(static_cast<std::size_t>(c.d + 1), cube_grid(c.d, c.J));
  for (const auto& [S, fs] : out.f) out.g[static_cast<std::size_t>(std::popcount(S))] += fs;
  return out;
}

std::vector<GridFunction> decompose_by_support_size(const HaarCoeffs& c) {
  std::vector<GridFunction> g;
  for (int i = 0; i <= c.d; ++i) {
    g.push_back(synthesize_masked(c, [i](std::uint32_t m) { return std::popcount(m) == i; }));
  }
  return g;
}

// On a full midpoint tensor grid, 1 and the centered coordinates t_m are
// mutually orthogonal, so both projections have closed forms.

GridFunction project_affine(const GridFunction& g) {
  dyadic_level(g);
  const int d = g.dim();
  const int N = g.points_per_axis();
  VecD t(N);
  for (int i = 0; i < N; ++i) t(i) = g.node_coord(0, i);
  const double t2 = t.squaredNorm() * static_cast<double>(ipow(static_cast<std::size_t>(N), d - 1));
  double mean = 0.0;
  VecD s = VecD::Zero(d);
  for (std::size_t f = 0; f < g.size(); ++f) {
    const auto idx = g.unflatten(f);
    mean += g[f];
    for (int m = 0; m < d; ++m) s(m) += g[f] * t(idx[static_cast<std::size_t>(m)]);
  }
  mean /= static_cast<double>(g.size());
  const VecD coef = s / t2;
  GridFunction out = g;
  for (std::size_t f = 0; f < g.size(); ++f) {
    const auto idx = g.unflatten(f);
    double v = mean;
    for (int m = 0; m < d; ++m) v += coef(m) * t(idx[static_cast<std::size_t>(m)]);
    out[f] = v;
  }
  return out;
}

GridFunction project_slice_affine(const GridFunction& g, int axis) {
  dyadic_level(g);
  const int d = g.dim();
  if (axis < 0 || axis >= d) throw std::out_of_range("project_slice_affine: invalid axis");
  const int N = g.points_per_axis();
  VecD t(N);
  for (int i = 0; i < N; ++i) t(i) = g.node_coord(0, i);
  const auto per_slice = static_cast<double>(ipow(static_cast<std::size_t>(N), d - 1));
  const double t2 = d >= 2 ? t.squaredNorm() * static_cast<double>(ipow(static_cast<std::size_t>(N), d - 2)) : 1.0;
  MatD s = MatD::Zero(N, d);  // column axis holds the slice sums, others the t_m moments
  for (std::size_t f = 0; f < g.size(); ++f) {
    const auto idx = g.unflatten(f);
    const int sl = idx[static_cast<std::size_t>(axis)];
    for (int m = 0; m < d; ++m) s(sl, m) += m == axis ? g[f] : g[f] * t(idx[static_cast<std::size_t>(m)]);
  }
  GridFunction out = g;
  for (std::size_t f = 0; f < g.size(); ++f) {
    const auto idx = g.unflatten(f);
    const int sl = idx[static_cast<std::size_t>(axis)];
    double v = s(sl, axis) / per_slice;
    for (int m = 0; m < d; ++m)
      if (m != axis) v += s(sl, m) / t2 * t(idx[static_cast<std::size_t>(m)]);
    out[f] = v;
  }
  return out;
}

bool IdentityReport::pass() const {
  bool ok = regression.pass && g1_identity.pass && g2_sandwich.pass && global_sandwich.pass;
  for (const auto& s : sliced) ok = ok && s.pass;
  return ok;
}

IdentityReport verify_identities(const GridFunction& g, double tol) {
  dyadic_level(g);
  const int d = g.dim();
  if (d < 3) throw std::invalid_argument("verify_identities: need d >= 3");
  const HaarCoeffs c = analyze(g);
  const std::vector<GridFunction> gi = decompose_by_support_size(c);
  const double norm2 = g.dot(g);
  // Cancellation floor: identities are exact up to roundoff relative to ||g||^2.
  const double floor = 1e-13 * norm2;
  auto sq = [](const GridFunction& h) { return h.dot(h); };

  IdentityReport rep;
  rep.d = d;
  const GridFunction& g1 = gi[1];
  const GridFunction& g2 = gi[2];
  double tail2 = 0.0, tail3 = 0.0;
  for (int i = 2; i <= d; ++i) tail2 += sq(gi[static_cast<std::size_t>(i)]);
  for (int i = 3; i <= d; ++i) tail3 += sq(gi[static_cast<std::size_t>(i)]);

  const double aff = sq(g - project_affine(g));
  const double g1_aff = sq(g1 - project_affine(g1));
  rep.regression = {aff, g1_aff + tail2, false};
  rep.regression.pass = close_rel(rep.regression.lhs, rep.regression.rhs, tol, floor);

  double sum_g = 0.0, sum_g1 = 0.0, sum_g2 = 0.0;
  for (int l = 0; l < d; ++l) {
    const GridFunction rg = g - project_slice_affine(g, l);
    const GridFunction r1 = g1 - project_slice_affine(g1, l);
    const GridFunction r2 = g2 - project_slice_affine(g2, l);
    const double a = sq(rg), b1 = sq(r1), b2 = sq(r2);
    IdentityCheck s{a, b1 + b2 + tail3, false};
    s.pass = close_rel(s.lhs, s.rhs, tol, floor);
    rep.sliced.push_back(s);
    rep.max_cross_term = std::max(rep.max_cross_term, norm2 > 0 ? std::abs(r1.dot(r2)) / norm2 : 0.0);
    sum_g += a;
    sum_g1 += b1;
    sum_g2 += b2;
  }
  rep.g1_identity = {sum_g1, (d - 1) * g1_aff, false};
  rep.g1_identity.pass = close_rel(rep.g1_identity.lhs, rep.g1_identity.rhs, tol, floor);

  const double g2n = sq(g2);
  auto sandwich = [&](double lo, double mid, double hi) {
    SandwichCheck s{lo, mid, hi, false};
    const double slack = tol * std::max({std::abs(lo), std::abs(mid), std::abs(hi)}) + floor;
    s.pass = lo <= mid + slack && mid <= hi + slack;
    return s;
  };
  rep.g2_sandwich = sandwich((d - 2) * g2n, sum_g2, d * g2n);
  rep.global_sandwich = sandwich((d - 2) * aff, sum_g, d * aff);
  return rep;
}

SlicingVerticalReport slicing_vertical_reduce(const Field& f, const std::vector<VerticalSubspaceBasis>& planes,
                                              const QuasiBox& Q, double c_out, const SlicingVerticalOptions& opts) {
  const int n = Q.n();
  const int D = 2 * n - 1;
  if (n < 2) throw std::invalid_argument("slicing_vertical_reduce: need n >= 2");
  if (static_cast<int>(planes.size()) != D) throw std::invalid_argument("slicing_vertical_reduce: need 2n-1 planes");
  if (!(c_out >= 1.0)) throw std::invalid_argument("slicing_vertical_reduce: c_out must be >= 1");
  if (opts.level < 1) throw std::invalid_argument("slicing_vertical_reduce: level must be >= 1");

  SlicingVerticalReport rep;
  rep.M.resize(D, D);
  for (int i = 0; i < D; ++i) {
    const auto& P = planes[static_cast<std::size_t>(i)];
    if (P.n() != n) throw DimensionMismatch("slicing_vertical_reduce: plane lives in another H_n");
    const MatD H = P.horizontal();
    if (H.cols() != D - 1 || H.row(2 * n - 1).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("slicing_vertical_reduce: each plane must be a vertical hyperplane of V_0");
    }
    const MatD nu = null_space(orthonormalize(H.topRows(D)).transpose());
    if (nu.cols() != 1) throw std::invalid_argument("slicing_vertical_reduce: plane has dependent generators");
    rep.M.row(i) = nu.col(0).transpose();  // (M v)_i = 0 exactly on pi(P_i)
  }
  Eigen::JacobiSVD<MatD> svd(rep.M);
  const VecD sv = svd.singularValues();
  if (sv(D - 1) <= 1e-12 * sv(0)) {
    throw std::invalid_argument("slicing_vertical_reduce: planes are not in general position");
  }
  rep.condition = sv(0) / sv(D - 1);
  rep.well_conditioned = rep.condition <= opts.max_condition;

  const int m = 1 << opts.level;
  const Quadrature quad = quasibox_quadrature(Q, nullptr, std::min(m, 8));
  const double r = Q.radius();
  for (std::size_t i = 0; i < quad.nodes.size(); i += std::max<std::size_t>(1, quad.nodes.size() / 8)) {
    const HPointD& v = quad.nodes[i].v;
    const double a = f(v);
    const double b = f(v * dilate(r, HPointD::unit_z(n)));
    if (std::isfinite(a) && std::isfinite(b) && std::abs(a - b) > 1e-9 * (1.0 + std::abs(a))) {
      throw std::invalid_argument("slicing_vertical_reduce: f is not vertical");
    }
  }

  rep.lhs = best_affine_fit(f, Q, {m}).residual;
  const QuasiBox big(Q.w(), Q.center(), c_out * r);
  for (const auto& P : planes) rep.rhs += best_slice_affine_fit(f, big, P, {m}).residual;
  if (rep.rhs <= 1e-12) {
    rep.ratio = rep.lhs <= 1e-9 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    rep.ratio = rep.lhs / rep.rhs;
  }

  // h = f o M^{-1} on the cube around M pi(x), rescaled to [-1,1]^D.
  const VecD c0 = rep.M * to_v0_coords(project_along(Q.w(), Q.center())).head(D);
  const MatD Minv = rep.M.inverse();
  GridFunction h = cube_grid(D, opts.level);
  for (std::size_t k = 0; k < h.size(); ++k) {
    VecD v = VecD::Zero(2 * n);
    v.head(D) = Minv * (c0 + r * h.node(k));
    h[k] = f(v0_point(v));
    if (!std::isfinite(h[k])) throw OutOfDomain("slicing_vertical_reduce: cube leaves the domain of f");
  }
  rep.cube_aff = (h - project_affine(h)).dot(h - project_affine(h));
  for (int l = 0; l < D; ++l) {
    const GridFunction res = h - project_slice_affine(h, l);
    rep.cube_slices += res.dot(res);
  }
  return rep;
}

}  // namespace hbeta
