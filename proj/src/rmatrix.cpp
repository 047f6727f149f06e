#include "ellcov/rmatrix.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "ellcov/errors.hpp"

namespace ellcov {

namespace {

constexpr cplx kI{0.0, 1.0};
// Below this distance from an integer point Z switches to its Taylor
// expansion about 0; the quotient form loses ~1e-16/|delta| there.
constexpr double kZLimitRadius = 1e-6;

}  // namespace

Characteristic twisted_characteristic(int A, int B, int K) {
  return {Rational(A, K) - Rational(1, 2), Rational(1, 2) - Rational(B, K)};
}

RContext::RContext(SigmaAlgebra alg, ModularParameter mu, TruncationPolicy pol)
    : alg_(std::move(alg)), mu_(mu), pol_(pol) {
  const int K = alg_.K();
  zero_.resize(static_cast<std::size_t>(K * K - 1));
  for (const auto& idx : alg_.indices()) {
    AtZero z;
    z.ch = twisted_characteristic(idx.A, idx.B, K);
    const auto j = theta_jet(z.ch, 0.0, mu_, 3, pol_);
    z.theta0 = j[0];
    const cplx r1 = j[1] / j[0];
    const cplx r2 = j[2] / j[0];
    const cplx r3 = j[3] / j[0];
    z.L0 = r1;
    z.L1 = r2 - r1 * r1;
    z.L2 = r3 - 3.0 * r2 * r1 + 2.0 * r1 * r1 * r1;
    z.second_ratio = r2;
    zero_[static_cast<std::size_t>(idx.linear(K))] = z;
  }
  const auto odd = theta_jet(twisted_characteristic(0, 0, K), 0.0, mu_, 3, pol_);
  odd_d1_ = odd[1];
  odd_d3_ = odd[3];
}

RContext::RContext(int K, cplx mu, TruncationPolicy pol)
    : RContext(SigmaAlgebra(K), ModularParameter(mu), pol) {}

void RContext::check_pole(cplx gamma, const char* what) const {
  const LatticePoint lp = nearest_lattice_point(gamma, mu_.value());
  if (lp.distance < kSingularityGuard) {
    throw NearSingularity(std::string(what) + ": argument on the pole lattice (" +
                          std::to_string(lp.n) + " + " + std::to_string(lp.k) + " mu)");
  }
}

RContext::OddAt RContext::odd_at(cplx gamma, int order) const {
  const auto j = theta_jet(twisted_characteristic(0, 0, alg_.K()), gamma, mu_, order, pol_);
  return {odd_d1_ / j[0], j[1] / j[0], j[2] / j[0]};
}

cplx RContext::w(const SigmaIndex& idx, cplx gamma) const {
  check_pole(gamma, "w");
  const AtZero& z = at_zero(idx);
  return theta(z.ch, gamma, mu_, pol_) * odd_at(gamma, 0).prefactor_base / z.theta0;
}

cplx RContext::w_prime(const SigmaIndex& idx, cplx gamma) const {
  check_pole(gamma, "w_prime");
  const AtZero& z = at_zero(idx);
  const OddAt odd = odd_at(gamma, 1);
  const auto j = theta_jet(z.ch, gamma, mu_, 1, pol_);
  return (j[1] - j[0] * odd.log_d1) * odd.prefactor_base / z.theta0;
}

cplx RContext::w_dmu(const SigmaIndex& idx, cplx gamma) const {
  check_pole(gamma, "w_dmu");
  const AtZero& z = at_zero(idx);
  const OddAt odd = odd_at(gamma, 2);
  const auto j = theta_jet(z.ch, gamma, mu_, 2, pol_);
  const cplx p = odd.prefactor_base / z.theta0;
  const cplx wv = j[0] * p;
  return (j[2] * p + wv * (odd_d3_ / odd_d1_ - z.second_ratio - odd.second_ratio)) /
         (4.0 * kPi * kI);
}

cplx RContext::Z_at_zero(const SigmaIndex& idx) const {
  return at_zero(idx).L1 / kTwoPiI;
}

cplx RContext::Z_near_zero(const SigmaIndex& idx, cplx delta) const {
  const AtZero& z = at_zero(idx);
  return (z.L1 + (0.5 * z.L2 + z.L0 * z.L1) * delta) / kTwoPiI;
}

cplx RContext::Z_regular(const AtZero& z, const OddAt& odd, cplx gamma) const {
  const auto j = theta_jet(z.ch, gamma, mu_, 1, pol_);
  return (j[1] - j[0] * z.L0) * odd.prefactor_base / z.theta0 / kTwoPiI;
}

cplx RContext::Z(const SigmaIndex& idx, cplx gamma) const {
  const LatticePoint lp = nearest_lattice_point(gamma, mu_.value());
  if (lp.k == 0 && lp.distance < kZLimitRadius) {
    // Z(g + n) = eps^{A n} Z(g).
    return alg_.eps_pow(static_cast<long>(idx.A) * static_cast<long>(lp.n % alg_.K())) *
           Z_near_zero(idx, gamma - static_cast<double>(lp.n));
  }
  if (lp.distance < kSingularityGuard) {
    throw NearSingularity("Z: pole at " + std::to_string(lp.n) + " + " + std::to_string(lp.k) +
                          " mu");
  }
  return Z_regular(at_zero(idx), odd_at(gamma, 0), gamma);
}

SlkCoefficients RContext::w_table(cplx gamma) const {
  check_pole(gamma, "w");
  const OddAt odd = odd_at(gamma, 0);
  SlkCoefficients t(alg_.K());
  for (const auto& idx : alg_.indices()) {
    const AtZero& z = at_zero(idx);
    t[idx] = theta(z.ch, gamma, mu_, pol_) * odd.prefactor_base / z.theta0;
  }
  return t;
}

SlkCoefficients RContext::w_prime_table(cplx gamma) const {
  check_pole(gamma, "w_prime");
  const OddAt odd = odd_at(gamma, 1);
  SlkCoefficients t(alg_.K());
  for (const auto& idx : alg_.indices()) {
    const AtZero& z = at_zero(idx);
    const auto j = theta_jet(z.ch, gamma, mu_, 1, pol_);
    t[idx] = (j[1] - j[0] * odd.log_d1) * odd.prefactor_base / z.theta0;
  }
  return t;
}

SlkCoefficients RContext::w_dmu_table(cplx gamma) const {
  check_pole(gamma, "w_dmu");
  const OddAt odd = odd_at(gamma, 2);
  const cplx common = odd_d3_ / odd_d1_ - odd.second_ratio;
  SlkCoefficients t(alg_.K());
  for (const auto& idx : alg_.indices()) {
    const AtZero& z = at_zero(idx);
    const auto j = theta_jet(z.ch, gamma, mu_, 2, pol_);
    const cplx p = odd.prefactor_base / z.theta0;
    t[idx] = (j[2] * p + j[0] * p * (common - z.second_ratio)) / (4.0 * kPi * kI);
  }
  return t;
}

SlkCoefficients RContext::Z_table(cplx gamma) const {
  SlkCoefficients t(alg_.K());
  const LatticePoint lp = nearest_lattice_point(gamma, mu_.value());
  if (lp.k == 0 && lp.distance < kZLimitRadius) {
    for (const auto& idx : alg_.indices()) t[idx] = Z(idx, gamma);
    return t;
  }
  if (lp.distance < kSingularityGuard) {
    throw NearSingularity("Z: pole at " + std::to_string(lp.n) + " + " + std::to_string(lp.k) +
                          " mu");
  }
  const OddAt odd = odd_at(gamma, 0);
  for (const auto& idx : alg_.indices()) t[idx] = Z_regular(at_zero(idx), odd, gamma);
  return t;
}

namespace {

void check_rank(const RContext& ctx, const SlkCoefficients& J) {
  if (J.K() != ctx.K()) {
    throw InvalidIndex("contract: coefficient table has rank " + std::to_string(J.K()) +
                       ", context has " + std::to_string(ctx.K()));
  }
}

}  // namespace

Matrix RContext::contract_r(cplx gamma, const SlkCoefficients& J) const {
  check_rank(*this, J);
  return alg_.reconstruct(w_table(gamma).hadamard(J));
}

Matrix RContext::contract_r_prime(cplx gamma, const SlkCoefficients& J) const {
  check_rank(*this, J);
  return alg_.reconstruct(w_prime_table(gamma).hadamard(J));
}

Matrix RContext::contract_r_dmu(cplx gamma, const SlkCoefficients& J) const {
  check_rank(*this, J);
  return alg_.reconstruct(w_dmu_table(gamma).hadamard(J));
}

Matrix RContext::contract_Z(cplx gamma, const SlkCoefficients& J) const {
  check_rank(*this, J);
  return alg_.reconstruct(Z_table(gamma).hadamard(J));
}

namespace {

void check_trig_pole(cplx gamma) {
  if (std::abs(gamma - std::round(gamma.real())) < kSingularityGuard) {
    throw NearSingularity("contract_r_trig: sin(pi g) vanishes");
  }
}

}  // namespace

Matrix contract_r_trig(cplx gamma, const PauliCoefficients& J) {
  check_trig_pole(gamma);
  const cplx s = std::sin(kPi * gamma);
  const cplx c = std::cos(kPi * gamma);
  return (kPi / s) * (J[0] * pauli(1) + J[1] * pauli(2)) + (kPi * c / s) * J[2] * pauli(3);
}

Matrix contract_r_trig_prime(cplx gamma, const PauliCoefficients& J) {
  check_trig_pole(gamma);
  const cplx s = std::sin(kPi * gamma);
  const cplx c = std::cos(kPi * gamma);
  const cplx s2 = s * s;
  return (-kPi * kPi * c / s2) * (J[0] * pauli(1) + J[1] * pauli(2)) -
         (kPi * kPi / s2) * J[2] * pauli(3);
}

}  // namespace ellcov
