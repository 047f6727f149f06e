#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <complex>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ellcov/errors.hpp"

namespace ellcov::detail {

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

inline constexpr double kQuadTol = 1e-11;
inline constexpr unsigned kQuadDepth = 20;
inline constexpr double kQuadAccept = 1e-9;

// Adaptive 15-point Gauss-Kronrod over [a, b] for a complex integrand.
// Fails unless the error estimate is within kQuadAccept of the L1 norm.
template <class F>
std::complex<double> integrate(F&& f, double a, double b, const char* what,
                               double tol = kQuadTol) {
  double err = 0.0;
  double l1 = 0.0;
  const std::complex<double> r =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, kQuadDepth, tol,
                                                                    &err, &l1);
  if (!std::isfinite(r.real()) || !std::isfinite(r.imag()) || err > std::max(kQuadAccept, tol) * std::max(l1, 1e-300)) {
    throw QuadratureFailure(std::string(what) + ": error estimate " + fmt(err) + " for integral of size " + fmt(l1));
  }
  return r;
}

}  // namespace ellcov::detail
