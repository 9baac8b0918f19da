#pragma once

// Exact rational scalar for algebraic identity checks. The group law, dilations,
// projections and the affine switch all instantiate over this type.

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/eigen.hpp>

#include "hbeta/heisenberg.hpp"

namespace hbeta {

using Rational = boost::multiprecision::mpq_rational;
using VecQ = Vec<Rational>;
using HPointQ = HPoint<Rational>;
using DirectionQ = HorizontalDirection<Rational>;

/// Doubles are dyadic rationals, so this conversion is exact.
inline HPointQ to_exact(const HPointD& p) { return p.cast<Rational>(); }

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

}  // namespace hbeta
