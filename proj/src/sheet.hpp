#pragma once

#include <cmath>
#include <optional>

#include "ellcov/theta.hpp"

namespace ellcov::detail {

// sqrt((l - a)(l - b)) with its cut on the segment [a, b] and ~ l at infinity.
inline cplx cut_root(cplx lambda, cplx a, cplx b) {
  const cplx c = 0.5 * (a + b);
  const cplx r = 0.5 * (b - a);
  const cplx u = lambda - c;
  if (std::abs(u) <= 1e-300) return cplx(0.0, 1.0) * r;
  const cplx q = r / u;
  return u * std::sqrt(1.0 - q * q);
}

// Parameter t in (0, 1) at which the segment p0 -> p1 crosses the segment
// a -> b, if it does.
inline std::optional<double> segment_crossing(cplx p0, cplx p1, cplx a, cplx b) {
  const cplx d = p1 - p0;
  const cplx e = b - a;
  const double den = (std::conj(d) * e).imag();
  if (std::abs(den) <= 1e-15 * std::abs(d) * std::abs(e)) return std::nullopt;
  const cplx w = a - p0;
  const double t = (std::conj(w) * e).imag() / den;
  const double s = (std::conj(w) * d).imag() / den;
  if (t > 0.0 && t < 1.0 && s > 0.0 && s < 1.0) return t;
  return std::nullopt;
}

// Distance from x to the segment [p, q].
inline double distance_to_segment(cplx x, cplx p, cplx q) {
  const cplx d = q - p;
  const double n = std::norm(d);
  if (n == 0.0) return std::abs(x - p);
  double t = std::real(std::conj(d) * (x - p)) / n;
  t = std::fmin(1.0, std::fmax(0.0, t));
  return std::abs(x - (p + t * d));
}

}  // namespace ellcov::detail
