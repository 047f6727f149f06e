#include <algorithm>
#include <cmath>
#include <string>

#include "ellcov/covering.hpp"
#include "ellcov/errors.hpp"

namespace ellcov {

namespace {

// Limit of cot(pi gamma) as Im gamma -> -infinity, reached by the common
// shift of all gamma when lambda_Q runs off to infinity.
constexpr cplx kCotAtShiftedInfinity{0.0, 1.0};

cplx cot_pi(cplx z) {
  const cplx s = std::sin(kPi * z);
  if (std::abs(s) < kSingularityGuard) {
    throw NearSingularity("cot: argument at an integer");
  }
  return std::cos(kPi * z) / s;
}

cplx csc2_pi(cplx z) {
  const cplx s = std::sin(kPi * z);
  if (std::abs(s) < kSingularityGuard) {
    throw NearSingularity("csc: argument at an integer");
  }
  return 1.0 / (s * s);
}

}  // namespace

TrigCoveringState build_trig_two_sheet(cplx l1, cplx l2, std::optional<cplx> lambda_Q) {
  const double scale = std::max({1.0, std::abs(l1), std::abs(l2)});
  if (std::abs(l1 - l2) <= 1e-9 * scale) {
    throw DegenerateInput("trig covering: branch points coincide");
  }
  TrigCoveringState s;
  s.lambda = {l1, l2};
  s.lambda_Q = lambda_Q;
  const cplx mid = 0.5 * (l1 + l2);
  const cplx c = 1.0 / (2.0 * kPi * kPi);
  if (lambda_Q) {
    const cplx q = *lambda_Q;
    if (std::abs(q - l1) <= 1e-9 * scale || std::abs(q - l2) <= 1e-9 * scale) {
      throw DegenerateInput("trig covering: lambda_Q coincides with a branch point");
    }
    const cplx root = std::sqrt((q - l1) * (q - l2));
    s.kappa1 = 0.5 * (q + mid + root);
    s.kappa2 = 0.5 * (q + mid - root);
    const cplx zeta[2] = {(3.0 * l1 + l2) / 4.0, (l1 + 3.0 * l2) / 4.0};
    for (const cplx z : zeta) {
      s.gamma.push_back(std::log((z - *s.kappa1) / (z - s.kappa2)) / kTwoPiI);
    }
    s.alpha0 = {-c * ((l2 - q) / (l1 - q)) / (l1 - l2), -c * ((l1 - q) / (l2 - q)) / (l2 - l1)};
  } else {
    s.kappa2 = mid;
    s.gamma_shift_infinite = true;
    const cplx g1 = -std::log(0.25 * (l1 - l2)) / kTwoPiI;
    s.gamma = {g1, g1 - 0.5};
    s.alpha0 = {-c / (l1 - l2), c / (l1 - l2)};
  }
  // gamma_1 - gamma_2 = +1/2 up to an integer; fix the integer.
  const double n = std::round((s.gamma[0] - s.gamma[1]).real() - 0.5);
  s.gamma[1] += n;
  return s;
}

// The equations for d gamma_m, d alpha0_m carry no terms from the double
// point; they follow the two-point map exactly only for lambda_Q = infinity.
TrigFlowRhs trig_flow_rhs(const TrigCoveringState& s, int m) {
  const std::size_t n = s.gamma.size();
  if (m < 0 || static_cast<std::size_t>(m) >= n || s.alpha0.size() != n) {
    throw IndexError("trig_flow_rhs: index " + std::to_string(m) + " out of range");
  }
  const auto cot_of = [&](cplx g) { return s.gamma_shift_infinite ? kCotAtShiftedInfinity : cot_pi(g); };
  TrigFlowRhs out{std::vector<cplx>(n, 0.0), std::vector<cplx>(n, 0.0)};
  const cplx gm = s.gamma[m];
  const cplx am = s.alpha0[m];
  const cplx cot_m = cot_of(gm);
  for (std::size_t k = 0; k < n; ++k) {
    if (static_cast<int>(k) == m) continue;
    const cplx d = s.gamma[k] - gm;
    const cplx ak = s.alpha0[k];
    const cplx csc2 = csc2_pi(d);
    out.dgamma[k] = -kPi * am * (cot_pi(d) + cot_m);
    out.dgamma[m] += kPi * ak * (cot_pi(-d) + cot_of(s.gamma[k]));
    out.dalpha0[k] = 2.0 * kPi * kPi * ak * am * csc2;
    out.dalpha0[m] -= 2.0 * kPi * kPi * ak * am * csc2;
  }
  return out;
}

}  // namespace ellcov
