#include <algorithm>
#include <cmath>
#include <vector>

#include "ellcov/covering.hpp"
#include "ellcov/errors.hpp"
#include "quadrature.hpp"
#include "sheet.hpp"

namespace ellcov {

namespace {

constexpr int kMaxDetourDepth = 4;
// Legs are rerouted when they pass closer than this fraction of the minimal
// branch point separation; detour vertices sit at kDetourRadius.
constexpr double kRouteClearance = 0.1;
constexpr double kDetourRadius = 0.25;

double min_separation(const BranchPoints& l, int m) {
  double d = INFINITY;
  for (int k = 0; k < 4; ++k)
    if (k != m) d = std::min(d, std::abs(l[m] - l[k]));
  return d;
}

}  // namespace

AbelMap::AbelMap(const BranchPoints& l) : l_(l) {
  check_branch_points(l_);
  periods_ = cycle_periods(l_);
  mu_ = periods_.B / periods_.A;
  min_dist_ = INFINITY;
  for (int m = 0; m < 4; ++m) min_dist_ = std::min(min_dist_, min_separation(l_, m));
  guard_ = 1e-3 * min_dist_;
}

// int_{inf^(0)}^{end} d lambda / w along the ray through end, in t = 1 / lambda.
cplx AbelMap::from_infinity(cplx end) const {
  const cplx t0 = 1.0 / end;
  const cplx c12 = 0.5 * (l_[0] + l_[1]), r12 = 0.5 * (l_[1] - l_[0]);
  const cplx c34 = 0.5 * (l_[2] + l_[3]), r34 = 0.5 * (l_[3] - l_[2]);
  const auto tg = [](cplx t, cplx c, cplx r) {
    const cplx den = 1.0 - c * t;
    const cplx q = r * t / den;
    return den * std::sqrt(1.0 - q * q);
  };
  return detail::integrate(
      [&](double s) {
        const cplx t = t0 * s;
        return -t0 / (tg(t, c12, r12) * tg(t, c34, r34));
      },
      0.0, 1.0, "abel map near infinity");
}

cplx AbelMap::straight_leg(cplx a, cplx b, int& sheet) const {
  std::vector<double> cuts{0.0};
  for (const auto& [p, q] : {std::pair{l_[0], l_[1]}, std::pair{l_[2], l_[3]}}) {
    if (auto t = detail::segment_crossing(a, b, p, q)) cuts.push_back(*t);
  }
  std::sort(cuts.begin() + 1, cuts.end());
  cuts.push_back(1.0);
  cplx total = 0.0;
  const cplx d = b - a;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double sgn = sheet == 0 ? 1.0 : -1.0;
    total += detail::integrate(
        [&](double u) { return sgn * d / omega0(l_, a + u * d); }, cuts[i], cuts[i + 1],
        "abel map leg");
    if (i + 2 < cuts.size()) sheet = 1 - sheet;
  }
  return total;
}

// From (from, sheet) straight into l_m with lambda = l_m + d tau^2, where
// w / tau stays analytic and nonzero along the leg.
cplx AbelMap::final_leg_to_branch(cplx from, int sheet, int m) const {
  const cplx d = from - l_[m];
  cplx C = d;
  std::array<cplx, 3> others{};
  for (int k = 0, j = 0; k < 4; ++k) {
    if (k == m) continue;
    C *= l_[m] - l_[k];
    others[j++] = l_[m] - l_[k];
  }
  C = std::sqrt(C);
  const auto Q = [&](double tau) {
    cplx v = C;
    for (const cplx o : others) v *= std::sqrt(1.0 + d * tau * tau / o);
    return v;
  };
  const cplx w_from = (sheet == 0 ? 1.0 : -1.0) * omega0(l_, from);
  const double sigma = std::real(w_from / Q(1.0)) > 0.0 ? 1.0 : -1.0;
  return -detail::integrate([&](double tau) { return 2.0 * d / (sigma * Q(tau)); }, 0.0, 1.0,
                            "abel map final leg");
}

std::vector<cplx> AbelMap::route(cplx from, cplx to, int depth) const {
  const double clearance = kRouteClearance * min_dist_;
  int worst = -1;
  double worst_d = clearance;
  for (int k = 0; k < 4; ++k) {
    if (std::abs(l_[k] - to) < clearance || std::abs(l_[k] - from) < clearance) continue;
    const double dk = detail::distance_to_segment(l_[k], from, to);
    if (dk < worst_d) {
      worst_d = dk;
      worst = k;
    }
  }
  if (worst < 0) return {to};
  if (depth >= kMaxDetourDepth) {
    throw PathThroughBranchPoint("abel map: could not route around branch points");
  }
  const cplx dir = (to - from) / std::abs(to - from);
  const cplx left = cplx(0.0, 1.0) * dir;
  // Pass on the side opposite to where the branch point lies.
  const double side = std::real(std::conj(left) * (l_[worst] - from)) >= 0.0 ? -1.0 : 1.0;
  const cplx v = l_[worst] + side * kDetourRadius * min_dist_ * left;
  std::vector<cplx> out = route(from, v, depth + 1);
  const std::vector<cplx> rest = route(v, to, depth + 1);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

AbelValue AbelMap::integrate_to_branch_point(int m) const {
  if (m < 0 || m > 3) throw IndexError("abel map: branch point index out of range");
  double R = 0.0;
  for (const cplx x : l_) R = std::max(R, std::abs(x));
  const cplx ls = (4.0 * R + 1.0) * std::exp(cplx(0.0, 0.7));
  const cplx p0 = l_[m] + 0.5 * min_separation(l_, m) * std::exp(cplx(0.0, 2.0));
  int sheet = 0;
  cplx total = from_infinity(ls);
  cplx at = ls;
  for (const cplx v : route(ls, p0)) {
    total += straight_leg(at, v, sheet);
    at = v;
  }
  total += final_leg_to_branch(p0, sheet, m);
  return {total / periods_.A, sheet, false};
}

AbelValue AbelMap::integrate(const SheetPoint& target) const {
  for (int k = 0; k < 4; ++k) {
    if (std::abs(target.lambda - l_[k]) <= 1e-14 * (1.0 + std::abs(l_[k]))) {
      return integrate_to_branch_point(k);
    }
  }
  double R = std::abs(target.lambda);
  for (const cplx x : l_) R = std::max(R, std::abs(x));
  const cplx ls = (4.0 * R + 1.0) * std::exp(cplx(0.0, 0.7));
  int sheet = 0;
  cplx total = from_infinity(ls);
  cplx at = ls;
  for (const cplx v : route(ls, target.lambda)) {
    total += straight_leg(at, v, sheet);
    at = v;
  }
  AbelValue out{total / periods_.A, sheet, false};
  if (sheet != target.sheet) {
    // Hyperelliptic involution: nu(P*) = 2 nu(P1) - nu(P).
    out.raw = 2.0 * integrate_to_branch_point(0).raw - out.raw;
    out.path_sheet = target.sheet;
    out.used_involution = true;
  }
  return out;
}

AbelValue AbelMap::continue_along(const SheetPoint& start, cplx start_value,
                                  const std::vector<cplx>& vertices) const {
  int sheet = start.sheet;
  cplx at = start.lambda;
  cplx total = 0.0;
  for (const cplx v : vertices) {
    for (int k = 0; k < 4; ++k) {
      if (detail::distance_to_segment(l_[k], at, v) < guard_) {
        throw PathThroughBranchPoint("abel map: path passes within the guard radius of a branch point");
      }
    }
    total += straight_leg(at, v, sheet);
    at = v;
  }
  return {start_value + total / periods_.A, sheet, false};
}

cplx AbelMap::value(const SheetPoint& target) const {
  return reduce_to_cell(integrate(target).raw, mu_);
}

cplx abel_map(const BranchPoints& l, const SheetPoint& target) {
  return AbelMap(l).value(target);
}

}  // namespace ellcov
