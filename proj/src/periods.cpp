#include <algorithm>
#include <cmath>
#include <string>

#include "ellcov/covering.hpp"
#include "ellcov/errors.hpp"
#include "quadrature.hpp"
#include "sheet.hpp"

namespace ellcov {

namespace {

constexpr cplx kI{0.0, 1.0};

// Branch of sqrt(z) analytic off the ray {t * dir : t > 0}.
cplx sqrt_cut_along(cplx z, cplx dir) {
  const cplx u = -dir / std::abs(dir);
  return std::sqrt(u) * std::sqrt(z / u);
}

// Unit direction from the segment [p, q] to the point x, pointing away from
// the segment.
cplx away_from_segment(cplx x, cplx p, cplx q) {
  const cplx d = q - p;
  double t = std::real(std::conj(d) * (x - p)) / std::norm(d);
  t = std::clamp(t, 0.0, 1.0);
  const cplx off = x - (p + t * d);
  if (std::abs(off) < 1e-12 * std::abs(d)) {
    throw DegenerateInput("period segment passes through a branch point");
  }
  return off / std::abs(off);
}

// 2 i int_0^pi d theta / S(c - r cos theta) over the segment [p, q], where
// S is an analytic branch of sqrt((l - x1)(l - x2)) along the segment.
cplx segment_period(cplx p, cplx q, cplx x1, cplx x2, const char* what,
                    double tol = detail::kQuadTol) {
  const cplx c = 0.5 * (p + q);
  const cplx r = 0.5 * (q - p);
  const cplx d1 = away_from_segment(x1, p, q);
  const cplx d2 = away_from_segment(x2, p, q);
  const auto S = [&](double th) {
    const cplx l = c - r * std::cos(th);
    return sqrt_cut_along(l - x1, d1) * sqrt_cut_along(l - x2, d2);
  };
  const cplx I = detail::integrate([&](double th) { return 1.0 / S(th); }, 0.0, kPi, what, tol);
  return 2.0 * kI * I;
}

}  // namespace

cplx agm(cplx a, cplx b) {
  for (int it = 0; it < 64; ++it) {
    if (std::abs(a - b) <= 1e-15 * std::abs(a)) break;
    const cplx an = 0.5 * (a + b);
    cplx bn = std::sqrt(a * b);
    if (std::abs(an - bn) > std::abs(an + bn)) bn = -bn;
    a = an;
    b = bn;
  }
  return 0.5 * (a + b);
}

cplx elliptic_k(cplx k2) {
  const cplx kp = std::sqrt(1.0 - k2);
  const cplx m = agm(1.0, kp);
  if (std::abs(m) == 0.0 || !std::isfinite(std::abs(m))) {
    throw DegenerateBranchPoints("elliptic_k: modulus at a singular value");
  }
  return kPi / (2.0 * m);
}

cplx modulus_k2(const BranchPoints& l) {
  return (l[0] - l[1]) * (l[2] - l[3]) / ((l[0] - l[2]) * (l[1] - l[3]));
}

void check_branch_points(const BranchPoints& l) {
  double dmin = INFINITY;
  double dmax = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(l[i].real()) || !std::isfinite(l[i].imag())) {
      throw DegenerateBranchPoints("branch points must be finite");
    }
    for (int j = i + 1; j < 4; ++j) {
      const double d = std::abs(l[i] - l[j]);
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
  }
  if (!(dmin > 1e-9 * dmax)) {
    throw DegenerateBranchPoints("branch points coincide (min distance " + std::to_string(dmin) +
                                 ")");
  }
}

namespace {

// Only integer coordinates are read off these values, so a loose tolerance
// suffices there.
constexpr double kMatchTol = 1e-7;

cplx a_cycle(const BranchPoints& l, double tol) {
  const cplx A = segment_period(l[0], l[1], l[2], l[3], "a-period quadrature", tol);
  // Orientation: counterclockwise around [l1, l2] starting on sheet 0 near
  // l1, where the remaining root equals g34.
  const cplx d1 = away_from_segment(l[2], l[0], l[1]);
  const cplx d2 = away_from_segment(l[3], l[0], l[1]);
  const cplx s_at_l1 = sqrt_cut_along(l[0] - l[2], d1) * sqrt_cut_along(l[0] - l[3], d2);
  const cplx g34 = detail::cut_root(l[0], l[2], l[3]);
  return std::real(g34 / s_at_l1) > 0.0 ? A : -A;
}

cplx b_cycle(const BranchPoints& l, double tol) {
  return segment_period(l[1], l[2], l[0], l[3], "b-period quadrature", tol);
}

}  // namespace

cplx a_period_quadrature(const BranchPoints& l) {
  check_branch_points(l);
  return a_cycle(l, detail::kQuadTol);
}

cplx b_period_quadrature(const BranchPoints& l) {
  check_branch_points(l);
  return b_cycle(l, detail::kQuadTol);
}

CyclePeriods cycle_periods(const BranchPoints& l) {
  check_branch_points(l);
  const cplx k2 = modulus_k2(l);
  const cplx K = elliptic_k(k2);
  const cplx Kp = elliptic_k(1.0 - k2);
  const cplx s = std::sqrt((l[0] - l[2]) * (l[1] - l[3]));
  const cplx P1 = 4.0 * kI * K / s;
  const cplx P2 = -4.0 * Kp / s;

  const double det = P1.real() * P2.imag() - P2.real() * P1.imag();
  if (std::abs(det) < 1e-14 * std::norm(P1)) {
    throw DegenerateBranchPoints("cycle_periods: AGM periods are collinear");
  }
  const auto coords = [&](cplx v, long& n1, long& n2) {
    const double x = (v.real() * P2.imag() - P2.real() * v.imag()) / det;
    const double y = (P1.real() * v.imag() - v.real() * P1.imag()) / det;
    n1 = std::lround(x);
    n2 = std::lround(y);
    if (std::abs(x - n1) > 1e-3 || std::abs(y - n2) > 1e-3) {
      throw QuadratureFailure("cycle_periods: cycle is not an integer combination of AGM periods");
    }
  };
  long a1, a2, b1, b2;
  coords(a_cycle(l, kMatchTol), a1, a2);
  coords(b_cycle(l, kMatchTol), b1, b2);
  if (std::abs(a1 * b2 - a2 * b1) != 1) {
    throw QuadratureFailure("cycle_periods: a/b cycles do not form a lattice basis");
  }
  CyclePeriods out{static_cast<double>(a1) * P1 + static_cast<double>(a2) * P2,
                   static_cast<double>(b1) * P1 + static_cast<double>(b2) * P2};
  if ((out.B / out.A).imag() < 0.0) out.B = -out.B;
  return out;
}

cplx a_period(const BranchPoints& l) { return cycle_periods(l).A; }

ModularParameter modulus_from_branch_points(const BranchPoints& l) {
  const CyclePeriods p = cycle_periods(l);
  return ModularParameter(p.B / p.A);
}

ModularParameter modulus_from_branch_points(cplx l1, cplx l2, cplx l3, cplx l4) {
  return modulus_from_branch_points(BranchPoints{l1, l2, l3, l4});
}

cplx omega0(const BranchPoints& l, cplx lambda) {
  return detail::cut_root(lambda, l[0], l[1]) * detail::cut_root(lambda, l[2], l[3]);
}

}  // namespace ellcov
