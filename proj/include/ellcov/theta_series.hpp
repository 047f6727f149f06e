#pragma once

// Truncated lattice sum for theta functions with characteristics,
//
//   theta[p,q](g; mu) = sum_m exp(i pi mu (m+p)^2 + 2 i pi (m+p)(g+q)),
//
// written once as a template over the complex type so the same summation can
// be instantiated with std::complex<double> (the library path) or with an
// extended-precision complex type (used by tests that probe effects below
// double resolution).

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>

#include "ellcov/errors.hpp"

namespace ellcov::detail {

// Inclusive index window [first, last] over m.
struct SeriesWindow {
  std::int64_t first = 0;
  std::int64_t last = -1;

  std::int64_t size() const { return last - first + 1; }
};

// Chooses the window so that the discarded terms are bounded by
// abs_tol * max(1, dominant term). With b = Im mu and y = Im g the modulus of
// the n-th term (n = m + p) is exp(-pi b (n - n*)^2 + pi b n*^2) with
// n* = -y / b; the tails beyond |n - n*| >= D are dominated by a geometric
// series with ratio exp(-2 pi b D). The order-th derivative factor
// |2 pi n|^order is folded into the bound.
inline SeriesWindow theta_window(double p, double mu_im, double gamma_im,
                                 int order, double abs_tol, int max_terms) {
  constexpr double pi = 3.14159265358979323846;
  if (!(mu_im > 0.0)) {
    throw InvalidModulus("theta: Im(mu) must be positive");
  }
  const double b = mu_im;
  const double n_star = -gamma_im / b;
  const double log_peak = pi * b * n_star * n_star;
  const double target = std::log(abs_tol) + std::max(0.0, log_peak);
  const double log_two = std::log(2.0);

  for (std::int64_t d = 1; d <= max_terms; ++d) {
    const double dd = static_cast<double>(d);
    const double reach = std::abs(n_star) + dd;
    const double growth = order > 0 ? order / reach : 0.0;
    const double ratio_exp = growth - 2.0 * pi * b * dd;
    if (ratio_exp >= 0.0) continue;
    double tail = log_peak - pi * b * dd * dd + log_two -
                  std::log1p(-std::exp(ratio_exp));
    if (order > 0) tail += order * std::log(2.0 * pi * reach);
    if (tail < target) {
      SeriesWindow w;
      w.first = static_cast<std::int64_t>(std::ceil(n_star - dd - p));
      w.last = static_cast<std::int64_t>(std::floor(n_star + dd - p));
      if (w.size() > max_terms) break;
      return w;
    }
    if (2 * d + 1 > max_terms) break;
  }
  throw NonConvergent("theta: truncation window exceeds max_terms (" +
                      std::to_string(max_terms) + ")");
}

template <class C>
auto to_double(const C& x) {
  return static_cast<double>(x);
}

// Derivatives 0..max_order (max_order <= 4) of theta[p,q] in g, summed over
// the given window. Requires R to be the real type of C.
template <class C, class R>
std::array<C, 5> theta_series_jet_window(const R& p, const R& q, const C& g,
                                         const C& mu, int max_order,
                                         const SeriesWindow& window) {
  using std::exp;
  using std::atan;
  const R pi = R(4) * atan(R(1));
  const C i_unit(R(0), R(1));
  const C two_pi_i = C(R(2) * pi) * i_unit;
  const C pi_i_mu = C(pi) * i_unit * mu;
  const C shift = g + C(q);

  std::array<C, 5> acc;
  acc.fill(C(R(0)));
  for (std::int64_t m = window.first; m <= window.last; ++m) {
    const R n = R(static_cast<double>(m)) + p;
    const C term = exp(pi_i_mu * C(n * n) + two_pi_i * C(n) * shift);
    const C factor = two_pi_i * C(n);
    C t = term;
    for (int k = 0; k <= max_order; ++k) {
      acc[static_cast<std::size_t>(k)] += t;
      t *= factor;
    }
  }
  return acc;
}

template <class C, class R>
std::array<C, 5> theta_series_jet(const R& p, const R& q, const C& g,
                                  const C& mu, int max_order, double abs_tol,
                                  int max_terms) {
  using std::imag;
  const SeriesWindow window =
      theta_window(to_double(p), to_double(R(imag(mu))),
                   to_double(R(imag(g))), max_order, abs_tol, max_terms);
  return theta_series_jet_window(p, q, g, mu, max_order, window);
}

}  // namespace ellcov::detail
