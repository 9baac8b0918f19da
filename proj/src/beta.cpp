#include "hbeta/beta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace hbeta {

VerticalPlane::VerticalPlane(VecD normal_, double offset_) : normal(std::move(normal_)), offset(offset_) {
  if (normal.size() < 2 || normal.size() % 2 != 0) throw DimensionMismatch("VerticalPlane: normal must lie in R^{2n}");
  if (std::abs(normal.norm() - 1.0) > 1e-12) throw std::invalid_argument("VerticalPlane: normal must be a unit vector");
  if (!std::isfinite(offset)) throw std::invalid_argument("VerticalPlane: non-finite offset");
}

double dist_to_vertical_plane(const HPointD& p, const VerticalPlane& L) {
  if (p.horizontal().size() != L.normal.size()) throw DimensionMismatch("dist_to_vertical_plane: dimension mismatch");
  return std::abs(project_pi(p).dot(L.normal) - L.offset);
}

VerticalPlane dilate_plane(double t, const VerticalPlane& L) {
  // delta_t maps {<u, nu> = c} to {<u, nu> = t c}; keep the normal oriented for t < 0.
  return t >= 0 ? VerticalPlane(L.normal, t * L.offset) : VerticalPlane(-L.normal, -t * L.offset);
}

// ---------------------------------------------------------------------------
// QuasiBox

QuasiBox::QuasiBox(Direction w, HPointD center, double radius)
    : w_(std::move(w)), center_(std::move(center)), radius_(radius) {
  detail::require_same_n(w_.n(), center_.n(), "QuasiBox");
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) throw std::invalid_argument("QuasiBox: radius must be positive");
  nu_ = full_to_v0_horizontal(transverse_unit(w_));
  const MatD cw = c_w_basis(w_);
  cw_ = cw.topRows(cw.rows() - 1);
}

HPointD QuasiBox::map(const VecD& u) const {
  return project_along(w_, center_ * dilate(radius_, from_v0_coords<double>(u)));
}

VecD QuasiBox::pullback(const HPointD& q) const {
  return to_v0_coords(dilate(1.0 / radius_, project_along(w_, group_inv(center_) * q)));
}

QuasiBox::RCoords QuasiBox::r_coords(const VecD& u) const {
  const auto d = u.size() - 1;
  const VecD uh = u.head(d);
  RCoords c;
  c.s = nu_.dot(uh);
  c.p = cw_.transpose() * (uh - c.s * nu_);
  c.t = u(d);
  return c;
}

bool QuasiBox::in_unit_r(const RCoords& c, double tol) {
  return std::abs(c.s) <= 1.0 + tol && c.p.norm() <= 1.0 + tol && std::abs(c.t) <= 1.0 + tol;
}

bool QuasiBox::contains(const HPointD& q, double tol) const { return in_unit_r(r_coords(pullback(q)), tol); }

namespace {

/// Phi(u) = c0 + A u in V_0 coordinates (Phi is affine, so differences of images are exact).
std::pair<VecD, MatD> affine_form(const QuasiBox& Q) {
  const int dim = 2 * Q.n();
  const VecD c0 = to_v0_coords(Q.map(VecD::Zero(dim)));
  MatD A(dim, dim);
  for (int j = 0; j < dim; ++j) {
    VecD e = VecD::Zero(dim);
    e(j) = 1.0;
    A.col(j) = to_v0_coords(Q.map(e)) - c0;
  }
  return {c0, A};
}

double unit_ball_volume(int k) { return std::pow(std::numbers::pi, k / 2.0) / std::tgamma(k / 2.0 + 1.0); }

}  // namespace

Box QuasiBox::bounding_box() const {
  const auto [c0, A] = affine_form(*this);
  const int dim = static_cast<int>(c0.size());
  VecD half(dim);
  for (int i = 0; i < dim; ++i) {
    const VecD ah = A.row(i).head(dim - 1).transpose();
    half(i) = std::abs(ah.dot(nu_)) + (cw_.transpose() * ah).norm() + std::abs(A(i, dim - 1));
  }
  return Box(c0 - half, c0 + half);
}

double QuasiBox::volume() const {
  const int n = this->n();
  return std::pow(radius_, 2 * n + 1) * 4.0 * unit_ball_volume(2 * n - 2);
}

// ---------------------------------------------------------------------------
// Quadrature

Quadrature quasibox_quadrature(const QuasiBox& Q, const VerticalSubspaceBasis* P, int m) {
  if (m < 2) throw std::invalid_argument("quasibox_quadrature: need at least 2 points per axis");
  const int n = Q.n();
  const int D = 2 * n - 1;  // horizontal dimension of V_0
  MatD frame(D, D);
  frame.col(0) = Q.nu();
  frame.rightCols(D - 1) = Q.cw();
  double B = 1.0;
  Quadrature out;
  if (P != nullptr) {
    if (P->n() != n) throw DimensionMismatch("quasibox_quadrature: slicing subgroup lives in another H_n");
    const MatD H = P->horizontal();
    if (H.cols() != 2 * n - 2 || H.row(2 * n - 1).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("quasibox_quadrature: P must be a (2n-1)-dimensional vertical subgroup of V_0");
    }
    const MatD Hv = orthonormalize(H.topRows(D));
    if (Hv.cols() != D - 1) throw std::invalid_argument("quasibox_quadrature: P has dependent generators");
    const MatD nuP = null_space(Hv.transpose());
    if (std::abs(nuP.col(0).dot(Q.nu())) < 1.0 - 1e-12) {
      // Generic slicing: R_w's horizontal part fits in the ball of radius sqrt(2).
      frame.col(0) = nuP.col(0);
      frame.rightCols(D - 1) = Hv;
      B = std::sqrt(2.0);
      out.natural_frame = false;
    }
  }
  const auto [c0, A] = affine_form(Q);
  const double hs = 2.0 * B / m;
  const double ht = 2.0 / m;
  out.weight = std::pow(hs, D) * ht * std::pow(Q.radius(), 2 * n + 1);
  out.layers = m;

  std::vector<int> idx(static_cast<std::size_t>(D + 1), 0);
  VecD a(D);
  VecD u(D + 1);
  std::size_t total = 1;
  for (int k = 0; k <= D; ++k) total *= static_cast<std::size_t>(m);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int k = D; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = static_cast<int>(rem % static_cast<std::size_t>(m));
      rem /= static_cast<std::size_t>(m);
    }
    for (int k = 0; k < D; ++k) a(k) = -B + (idx[static_cast<std::size_t>(k)] + 0.5) * hs;
    u.head(D) = frame * a;
    u(D) = -1.0 + (idx[static_cast<std::size_t>(D)] + 0.5) * ht;
    if (!QuasiBox::in_unit_r(Q.r_coords(u), 0.0)) continue;
    QuadratureNode node;
    node.v = from_v0_coords<double>(VecD(c0 + A * u));
    node.local = a;
    node.layer = idx[0];
    out.nodes.push_back(std::move(node));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Affine and slice-affine fits

double AffineFit::operator()(const HPointD& v) const {
  const int n = static_cast<int>(alpha.size());
  return alpha.dot(v.x) + beta.dot(v.y.head(n - 1)) + gamma;
}

VecD AffineFit::gradient() const {
  const int n = static_cast<int>(alpha.size());
  VecD g = VecD::Zero(2 * n);
  g.head(n) = alpha;
  g.segment(n, n - 1) = beta;
  return g;
}

AffineFit best_affine_fit(const Field& f, const QuasiBox& Q, const QuadratureOptions& opts) {
  const Quadrature quad = quasibox_quadrature(Q, nullptr, opts.points_per_axis);
  const int n = Q.n();
  const int D = 2 * n - 1;
  const VecD ch = to_v0_coords(Q.map(VecD::Zero(2 * n))).head(D);
  const double r = Q.radius();

  std::vector<VecD> rows;
  std::vector<double> vals;
  AffineFit fit;
  for (const auto& node : quad.nodes) {
    const double fv = f(node.v);
    if (std::isnan(fv)) {
      ++fit.clipped;
      continue;
    }
    rows.push_back((to_v0_coords(node.v).head(D) - ch) / r);
    vals.push_back(fv);
  }
  fit.points = static_cast<int>(rows.size());
  if (fit.points == 0) throw OutOfDomain("best_affine_fit: the quasibox misses the domain");
  MatD X(fit.points, D + 1);
  VecD y(fit.points);
  for (int i = 0; i < fit.points; ++i) {
    X.row(i).head(D) = rows[static_cast<std::size_t>(i)].transpose();
    X(i, D) = 1.0;
    y(i) = vals[static_cast<std::size_t>(i)];
  }
  Eigen::CompleteOrthogonalDecomposition<MatD> cod(X);
  const VecD coef = cod.solve(y);
  fit.rank = static_cast<int>(cod.rank());
  fit.rank_deficient = fit.rank < D + 1;
  fit.residual = std::sqrt((X * coef - y).squaredNorm() * quad.weight);
  const VecD slope = coef.head(D) / r;
  fit.alpha = slope.head(n);
  fit.beta = slope.segment(n, n - 1);
  fit.gamma = coef(D) - slope.dot(ch);
  return fit;
}

SliceAffineFit best_slice_affine_fit(const Field& f, const QuasiBox& Q, const VerticalSubspaceBasis& P,
                                     const QuadratureOptions& opts) {
  const Quadrature quad = quasibox_quadrature(Q, &P, opts.points_per_axis);
  const int D = 2 * Q.n() - 1;
  std::map<int, std::pair<std::vector<VecD>, std::vector<double>>> layers;
  SliceAffineFit fit;
  for (const auto& node : quad.nodes) {
    const double fv = f(node.v);
    if (std::isnan(fv)) {
      ++fit.clipped;
      continue;
    }
    auto& [rows, vals] = layers[node.layer];
    rows.push_back(node.local.tail(D - 1));
    vals.push_back(fv);
    ++fit.points;
  }
  if (fit.points == 0) throw OutOfDomain("best_slice_affine_fit: the quasibox misses the domain");
  double sq = 0.0;
  for (const auto& [layer, data] : layers) {
    const auto& [rows, vals] = data;
    const auto count = static_cast<Eigen::Index>(vals.size());
    ++fit.layers;
    const VecD y = Eigen::Map<const VecD>(vals.data(), count);
    if (count < D) {
      ++fit.flagged_layers;
      sq += (y.array() - y.mean()).square().sum();
      continue;
    }
    MatD X(count, D);
    for (Eigen::Index i = 0; i < count; ++i) {
      X.row(i).head(D - 1) = rows[static_cast<std::size_t>(i)].transpose();
      X(i, D - 1) = 1.0;
    }
    Eigen::CompleteOrthogonalDecomposition<MatD> cod(X);
    sq += (X * cod.solve(y) - y).squaredNorm();
  }
  fit.residual = std::sqrt(sq * quad.weight);
  return fit;
}

// ---------------------------------------------------------------------------
// beta numbers

BallSample sample_graph_ball(const IntrinsicGraph& G, const HPointD& x, double r, int target, Rng& rng) {
  if (!(r > 0.0)) throw std::invalid_argument("sample_graph_ball: r must be positive");
  const int n = G.n();
  const VecD wh = G.w().horizontal();
  // Pi_w(q) for ||q|| <= r: |coordinate i| <= r sqrt(1 + w_i^2), |z| <= r^2/4 + r^2 |pi w| / 2.
  VecD half(2 * n);
  const VecD wv = full_to_v0_horizontal(wh);
  for (int i = 0; i < 2 * n - 1; ++i) half(i) = r * std::sqrt(1.0 + wv(i) * wv(i));
  half(2 * n - 1) = r * r * (0.25 + 0.5 * wh.norm());
  BallSample out;
  out.box_volume = (2.0 * half).prod();
  const long max_draws = 400L * target + 20000L;
  VecD u(2 * n);
  while (static_cast<int>(out.points.size()) < target && out.drawn < max_draws) {
    ++out.drawn;
    for (int i = 0; i < 2 * n; ++i) u(i) = rng.uniform(-half(i), half(i));
    const HPointD v = project_along(G.w(), x * from_v0_coords<double>(u));
    if (!G.in_domain(v)) {
      ++out.clipped;
      continue;
    }
    const HPointD p = graph_point(G, v);
    if (gauge_dist(x, p) <= r) out.points.push_back(p);
  }
  return out;
}

PlaneFit fit_vertical_plane(const std::vector<HPointD>& pts) {
  if (pts.empty()) throw std::invalid_argument("fit_vertical_plane: no points");
  const auto dim = pts.front().horizontal().size();
  MatD H(dim, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) H.col(static_cast<Eigen::Index>(i)) = project_pi(pts[i]);
  const VecD mean = H.rowwise().mean();
  H.colwise() -= mean;
  const MatD C = H * H.transpose() / static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<MatD> es(C);
  const VecD ev = es.eigenvalues();
  VecD normal = es.eigenvectors().col(0);
  PlaneFit out;
  const double lmax = std::max(ev(dim - 1), 0.0);
  out.degenerate = ev(0) <= 1e-12 * lmax;
  out.mean_sq = out.degenerate ? 0.0 : ev(0);
  // Deterministic orientation: largest-magnitude component positive.
  Eigen::Index k = 0;
  normal.cwiseAbs().maxCoeff(&k);
  if (normal(k) < 0) normal = -normal;
  normal.normalize();
  out.plane = VerticalPlane(normal, normal.dot(mean));
  return out;
}

BetaEstimate beta_number(const IntrinsicGraph& G, const HPointD& x, double r, int samples, std::uint64_t seed) {
  if (samples < 64) throw std::invalid_argument("beta_number: need at least 64 samples");
  Rng rng(seed, {0xbe7a});
  const BallSample ball = sample_graph_ball(G, x, r, samples, rng);
  if (ball.points.size() < 64) {
    throw TooFewSamples("beta_number: only " + std::to_string(ball.points.size()) +
                        " in-ball samples (ball mostly outside the sampled domain?)");
  }
  BetaEstimate est;
  est.x = x;
  est.r = r;
  est.sample_count = static_cast<int>(ball.points.size());
  est.measure = ball.measure();
  est.clipped = ball.clipped;
  const PlaneFit fit = fit_vertical_plane(ball.points);
  est.best_plane = fit.plane;
  est.degenerate = fit.degenerate;
  if (fit.degenerate) return est;

  // beta^2 = K mean_j(Y_j) over all draws, Y_j = (d_j / r)^2 for accepted draws and 0 otherwise.
  const int n = G.n();
  const double K = std::pow(r, -(2 * n + 1)) * ball.box_volume;
  double s1 = 0.0, s2 = 0.0;
  for (const auto& p : ball.points) {
    const double d = dist_to_vertical_plane(p, fit.plane) / r;
    s1 += d * d;
    s2 += d * d * d * d;
  }
  const auto N = static_cast<double>(ball.drawn);
  const double m1 = s1 / N;
  const double var = std::max(s2 / N - m1 * m1, 0.0);
  const double beta2 = K * m1;
  const double se2 = K * std::sqrt(var / N);
  est.value = std::sqrt(beta2);
  // delta method; near zero fall back to the square root of the beta^2 error
  est.std_error = beta2 > se2 ? se2 / (2.0 * est.value) : std::sqrt(se2);
  return est;
}

BetaAlphaReport beta_vs_parametric(const IntrinsicGraph& G, const HPointD& x, double r, double c, int samples,
                                   std::uint64_t seed, const QuadratureOptions& opts) {
  BetaAlphaReport out;
  const BetaEstimate b = beta_number(G, x, r, samples, seed);
  out.beta = b.value;
  out.beta_stderr = b.std_error;
  const AffineFit fit = best_affine_fit(graph_field(G), QuasiBox(G.w(), x, c * r), opts);
  out.residual = fit.residual;
  out.normalized = std::pow(r, -(2.0 * G.n() + 3.0) / 2.0) * fit.residual;
  constexpr double kZero = 1e-9;
  if (out.normalized <= kZero) {
    const bool beta_zero = b.value == 0.0 || b.value <= 3.0 * b.std_error;
    out.violation = !beta_zero;
    out.ratio = beta_zero ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    out.ratio = b.value / out.normalized;
  }
  return out;
}

SaffCompareReport saff_compare(const IntrinsicGraph& G, const Direction& w_prime, const HPointD& x, double r,
                               double c, const QuadratureOptions& opts, const Reparametrized* reparam) {
  if (std::abs(omega_bar(G.w().point(), w_prime.point())) > 1e-12) {
    throw std::invalid_argument("saff_compare: w and w' must commute");
  }
  std::optional<Reparametrized> own;
  if (reparam == nullptr) {
    own = reparametrize(G, w_prime);
    reparam = &*own;
  }
  const IntrinsicGraph& Gp = reparam->graph;
  const VerticalSubspaceBasis P = plane_p_w(G.w());
  SaffCompareReport out;
  out.shrink = reparam->shrink;
  const SliceAffineFit left = best_slice_affine_fit(graph_field(Gp), QuasiBox(w_prime, x, r), P, opts);
  if (left.clipped > 0) throw OutOfDomain("saff_compare: Q_{w'}(x, r) leaves the reparametrized domain");
  const SliceAffineFit right = best_slice_affine_fit(graph_field(G), QuasiBox(G.w(), x, c * r), P, opts);
  out.left = left.residual;
  out.right = right.residual;
  if (out.right <= 1e-12) {
    out.ratio = out.left <= 1e-9 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    out.ratio = out.left / out.right;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lipschitz bound

double QuasiBall::mu() const {
  const double nn = n();
  return std::pow(4.0 * nn * nn + 1.0, 0.25);
}

bool QuasiBall::contains(const HPointD& p) const {
  const HPointD q = group_inv(center) * p;
  return q.x.cwiseAbs().maxCoeff() <= rho && q.y.cwiseAbs().maxCoeff() <= rho && std::abs(q.z) <= rho * rho / 4.0;
}

LipBoundReport lip_of_best_fit(const Field& f, const QuasiBall& U, int m, int trials, std::uint64_t seed) {
  if (m < 2 || trials < 1) throw std::invalid_argument("lip_of_best_fit: need m >= 2 and trials >= 1");
  const int n = U.n();
  const int dim = 2 * n + 1;
  VecD half = VecD::Constant(dim, U.rho);
  half(dim - 1) = U.rho * U.rho / 4.0;
  auto local_point = [&](const VecD& q) { return U.center * HPointD::from_horizontal(q.head(2 * n), q(2 * n)); };

  // Least squares on the midpoint lattice of the (left-translated) box; Haar measure is Lebesgue.
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(m);
  MatD X(static_cast<Eigen::Index>(total), 2 * n + 1);
  VecD y(static_cast<Eigen::Index>(total));
  VecD q(dim);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int k = dim - 1; k >= 0; --k) {
      const int i = static_cast<int>(rem % static_cast<std::size_t>(m));
      rem /= static_cast<std::size_t>(m);
      q(k) = -half(k) + (i + 0.5) * 2.0 * half(k) / m;
    }
    const HPointD p = local_point(q);
    const auto row = static_cast<Eigen::Index>(flat);
    X.row(row).head(2 * n) = (project_pi(p) - project_pi(U.center)).transpose() / U.rho;
    X(row, 2 * n) = 1.0;
    y(row) = f(p);
  }
  const VecD coef = Eigen::CompleteOrthogonalDecomposition<MatD>(X).solve(y);
  LipBoundReport out;
  out.fit_lip = coef.head(2 * n).norm() / U.rho;

  Rng rng(seed, {0x1b});
  auto random_point = [&] {
    for (int k = 0; k < dim; ++k) q(k) = rng.uniform(-half(k), half(k));
    return local_point(q);
  };
  const double h = 1e-6 * U.rho;
  for (int t = 0; t < trials; ++t) {
    const HPointD a = random_point();
    const HPointD b = random_point();
    const double d = gauge_dist(a, b);
    if (d > 0) out.sampled_lip = std::max(out.sampled_lip, std::abs(f(a) - f(b)) / d);
    // Horizontal gradient by central differences along X_i, Y_i (left-invariant).
    VecD grad(2 * n);
    for (int i = 0; i < 2 * n; ++i) {
      VecD e = VecD::Zero(2 * n);
      e(i) = h;
      grad(i) = (f(a * HPointD::from_horizontal(e, 0.0)) - f(a * HPointD::from_horizontal(-e, 0.0))) / (2 * h);
    }
    out.sampled_lip = std::max(out.sampled_lip, grad.norm());
  }
  out.ratio = out.sampled_lip > 0 ? out.fit_lip / out.sampled_lip : 0.0;
  return out;
}

}  // namespace hbeta
