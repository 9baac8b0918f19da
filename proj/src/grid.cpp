#include "hbeta/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hbeta {

Box::Box(VecD lo_, VecD hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size() || lo.size() == 0) throw DimensionMismatch("Box: lo/hi length mismatch");
  if (!lo.allFinite() || !hi.allFinite() || ((hi - lo).array() <= 0.0).any()) {
    throw std::invalid_argument("Box: degenerate or non-finite extent");
  }
}

Box Box::symmetric(const VecD& half_widths) { return Box(-half_widths, half_widths); }

bool Box::contains(const VecD& p, double rel_tol) const {
  if (p.size() != lo.size()) throw DimensionMismatch("Box::contains: dimension mismatch");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double slack = rel_tol * (hi(i) - lo(i));
    if (!(p(i) >= lo(i) - slack && p(i) <= hi(i) + slack)) return false;
  }
  return true;
}

Box Box::scaled(const VecD& factors) const {
  const VecD c = center();
  const VecD half = width().cwiseProduct(factors) / 2.0;
  return Box(c - half, c + half);
}

GridFunction::GridFunction(Box box, int points_per_axis) : box_(std::move(box)), points_(points_per_axis) {
  if (points_ < 2) throw std::invalid_argument("GridFunction: need at least 2 points per axis");
  std::size_t total = 1;
  for (int a = 0; a < dim(); ++a) total *= static_cast<std::size_t>(points_);
  values_.assign(total, 0.0);
}

GridFunction::GridFunction(Box box, int points_per_axis, std::vector<double> values)
    : GridFunction(std::move(box), points_per_axis) {
  if (values.size() != values_.size()) {
    throw DimensionMismatch("GridFunction: expected " + std::to_string(values_.size()) + " values, got " +
                            std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("GridFunction: non-finite value");
  }
  values_ = std::move(values);
}

double GridFunction::cell_width(int axis) const { return (box_.hi(axis) - box_.lo(axis)) / points_; }

double GridFunction::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= cell_width(a);
  return v;
}

double GridFunction::node_coord(int axis, int i) const { return box_.lo(axis) + (i + 0.5) * cell_width(axis); }

std::vector<int> GridFunction::unflatten(std::size_t flat) const {
  std::vector<int> idx(static_cast<std::size_t>(dim()));
  for (int a = dim() - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % static_cast<std::size_t>(points_));
    flat /= static_cast<std::size_t>(points_);
  }
  return idx;
}

std::size_t GridFunction::flatten(std::span<const int> idx) const {
  std::size_t flat = 0;
  for (int i : idx) flat = flat * static_cast<std::size_t>(points_) + static_cast<std::size_t>(i);
  return flat;
}

VecD GridFunction::node(std::size_t flat) const {
  const auto idx = unflatten(flat);
  VecD p(dim());
  for (int a = 0; a < dim(); ++a) p(a) = node_coord(a, idx[static_cast<std::size_t>(a)]);
  return p;
}

double GridFunction::interpolate(const VecD& p) const {
  const int d = dim();
  // Per axis: base index in [0, N-2] and fractional offset (outside [0,1] in the
  // boundary half cells, which gives linear extrapolation).
  std::vector<int> base(static_cast<std::size_t>(d));
  std::vector<double> frac(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    const double u = (p(a) - box_.lo(a)) / cell_width(a) - 0.5;
    int i = static_cast<int>(std::floor(u));
    i = std::clamp(i, 0, points_ - 2);
    base[static_cast<std::size_t>(a)] = i;
    frac[static_cast<std::size_t>(a)] = u - i;
  }
  double acc = 0.0;
  const unsigned corners = 1u << d;
  for (unsigned mask = 0; mask < corners; ++mask) {
    double weight = 1.0;
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) {
      const bool up = (mask >> (d - 1 - a)) & 1u;
      const double t = frac[static_cast<std::size_t>(a)];
      weight *= up ? t : 1.0 - t;
      flat = flat * static_cast<std::size_t>(points_) + static_cast<std::size_t>(base[static_cast<std::size_t>(a)] + (up ? 1 : 0));
    }
    acc += weight * values_[flat];
  }
  return acc;
}

double GridFunction::operator()(const VecD& p) const {
  if (!box_.contains(p)) throw OutOfDomain("GridFunction: evaluation point outside the box");
  return interpolate(p);
}

double GridFunction::value_or_nan(const VecD& p) const {
  if (!box_.contains(p)) return std::numeric_limits<double>::quiet_NaN();
  return interpolate(p);
}

void GridFunction::require_compatible(const GridFunction& o, const char* what) const {
  if (!(box_ == o.box_) || points_ != o.points_) {
    throw DimensionMismatch(std::string(what) + ": grids differ");
  }
}

double GridFunction::dot(const GridFunction& o) const {
  require_compatible(o, "GridFunction::dot");
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * o.values_[i];
  return s * cell_volume();
}

double GridFunction::norm() const { return std::sqrt(dot(*this)); }

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  require_compatible(o, "GridFunction::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
  require_compatible(o, "GridFunction::operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

double GridFunction::max_abs_diff(const GridFunction& o) const {
  require_compatible(o, "GridFunction::max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) m = std::max(m, std::abs(values_[i] - o.values_[i]));
  return m;
}

}  // namespace hbeta
