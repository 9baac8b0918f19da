#pragma once

// Real values on a tensor grid over an axis-aligned box in R^d.
//
// Samples sit at cell midpoints: node i on an axis of N points over [lo, hi] is
// at lo + (i + 1/2) h with h = (hi - lo) / N. Values are stored row-major with
// the last axis fastest. Evaluation between nodes is multilinear; in the outer
// half cells it extrapolates linearly from the two nearest nodes, so affine
// data is reproduced exactly on the whole box.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hbeta/heisenberg.hpp"

namespace hbeta {

class OutOfDomain : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct Box {
  VecD lo;
  VecD hi;

  Box() = default;
  Box(VecD lo_, VecD hi_);

  /// [-h_i, h_i] on every axis.
  static Box symmetric(const VecD& half_widths);

  [[nodiscard]] int dim() const { return static_cast<int>(lo.size()); }
  [[nodiscard]] VecD width() const { return hi - lo; }
  [[nodiscard]] VecD center() const { return (lo + hi) / 2.0; }
  [[nodiscard]] double volume() const { return width().prod(); }
  [[nodiscard]] bool contains(const VecD& p, double rel_tol = 1e-12) const;
  /// Shrinks every axis about the center by the given per-axis factor.
  [[nodiscard]] Box scaled(const VecD& factors) const;
  bool operator==(const Box& o) const { return lo == o.lo && hi == o.hi; }
};

class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(Box box, int points_per_axis);
  GridFunction(Box box, int points_per_axis, std::vector<double> values);

  template <typename F>
  static GridFunction sample(const Box& box, int points_per_axis, F&& f) {
    GridFunction g(box, points_per_axis);
    for (std::size_t i = 0; i < g.size(); ++i) g.values_[i] = f(g.node(i));
    return g;
  }

  [[nodiscard]] int dim() const { return box_.dim(); }
  [[nodiscard]] int points_per_axis() const { return points_; }
  [[nodiscard]] const Box& box() const { return box_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] double& operator[](std::size_t i) { return values_[i]; }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

  [[nodiscard]] double cell_width(int axis) const;
  [[nodiscard]] double cell_volume() const;
  [[nodiscard]] double node_coord(int axis, int i) const;
  /// Coordinates of the node with flat index i.
  [[nodiscard]] VecD node(std::size_t flat) const;
  [[nodiscard]] std::vector<int> unflatten(std::size_t flat) const;
  [[nodiscard]] std::size_t flatten(std::span<const int> idx) const;

  [[nodiscard]] bool contains(const VecD& p) const { return box_.contains(p); }
  /// Multilinear interpolation; throws OutOfDomain outside the box.
  [[nodiscard]] double operator()(const VecD& p) const;
  /// As operator(), but returns NaN outside the box.
  [[nodiscard]] double value_or_nan(const VecD& p) const;

  /// Cell-volume weighted inner product and norm.
  [[nodiscard]] double dot(const GridFunction& o) const;
  [[nodiscard]] double norm() const;

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(double s);
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }

  /// Largest absolute entry difference.
  [[nodiscard]] double max_abs_diff(const GridFunction& o) const;

 private:
  void require_compatible(const GridFunction& o, const char* what) const;
  [[nodiscard]] double interpolate(const VecD& p) const;

  Box box_;
  int points_ = 0;
  std::vector<double> values_;
};

}  // namespace hbeta
