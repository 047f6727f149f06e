#pragma once

#include <vector>

#include "ellcov/sigma.hpp"
#include "ellcov/theta.hpp"

namespace ellcov {

// Characteristic [A/K - 1/2, 1/2 - B/K] attached to sigma_AB.
Characteristic twisted_characteristic(int A, int B, int K);

// Coefficient functions of the elliptic r-matrix
//
//   r(g) = sum_{AB} w_AB(g) sigma_AB (x) sigma^AB,
//   w_AB(g) = theta_AB(g) theta_00'(0) / (theta_AB(0) theta_00(g)),
//
// and Z_AB(g) = (w_AB(g) / 2 pi i) (theta_AB'/theta_AB (g) - theta_AB'/theta_AB (0)).
// The values at 0 that every evaluation needs are computed once per context.
class RContext {
 public:
  RContext(SigmaAlgebra alg, ModularParameter mu, TruncationPolicy pol = {});
  RContext(int K, cplx mu, TruncationPolicy pol = {});

  const SigmaAlgebra& algebra() const { return alg_; }
  const ModularParameter& mu() const { return mu_; }
  const TruncationPolicy& policy() const { return pol_; }
  int K() const { return alg_.K(); }

  cplx w(const SigmaIndex& idx, cplx gamma) const;
  cplx w_prime(const SigmaIndex& idx, cplx gamma) const;
  // d/dmu at fixed gamma, from the heat equation.
  cplx w_dmu(const SigmaIndex& idx, cplx gamma) const;
  // Regular at integer points (closed-form limit used within 1e-6 of them);
  // poles at n + k mu with k != 0 raise NearSingularity.
  cplx Z(const SigmaIndex& idx, cplx gamma) const;
  // Z_AB(0) = (1/2 pi i) d^2/dg^2 log theta_AB at 0.
  cplx Z_at_zero(const SigmaIndex& idx) const;

  // All coefficients at one point, indexed like SlkCoefficients.
  SlkCoefficients w_table(cplx gamma) const;
  SlkCoefficients w_prime_table(cplx gamma) const;
  SlkCoefficients w_dmu_table(cplx gamma) const;
  SlkCoefficients Z_table(cplx gamma) const;

  // tr_2(r_12(g) (1 (x) J)) = sum_AB w_AB(g) J^AB sigma_AB, and analogues.
  Matrix contract_r(cplx gamma, const SlkCoefficients& J) const;
  Matrix contract_r_prime(cplx gamma, const SlkCoefficients& J) const;
  Matrix contract_r_dmu(cplx gamma, const SlkCoefficients& J) const;
  Matrix contract_Z(cplx gamma, const SlkCoefficients& J) const;

 private:
  struct AtZero {
    Characteristic ch;
    cplx theta0;  // theta_AB(0)
    cplx L0;      // (log theta_AB)'(0)
    cplx L1;      // (log theta_AB)''(0)
    cplx L2;      // (log theta_AB)'''(0)
    cplx second_ratio;  // theta_AB''(0) / theta_AB(0)
  };

  struct OddAt {
    cplx prefactor_base;  // theta_00'(0) / theta_00(g)
    cplx log_d1;          // theta_00'/theta_00 (g)
    cplx second_ratio;    // theta_00''/theta_00 (g)
  };

  const AtZero& at_zero(const SigmaIndex& idx) const {
    return zero_[static_cast<std::size_t>(idx.linear(alg_.K()))];
  }
  void check_pole(cplx gamma, const char* what) const;
  OddAt odd_at(cplx gamma, int order) const;
  cplx Z_regular(const AtZero& z, const OddAt& odd, cplx gamma) const;
  cplx Z_near_zero(const SigmaIndex& idx, cplx delta) const;

  SigmaAlgebra alg_;
  ModularParameter mu_;
  TruncationPolicy pol_;
  std::vector<AtZero> zero_;
  cplx odd_d1_;  // theta_00'(0)
  cplx odd_d3_;  // theta_00'''(0)
};

// mu -> i infinity limit for K = 2:
//   (pi / sin pi g)(J1 s1 + J2 s2) + pi cot(pi g) J3 s3.
Matrix contract_r_trig(cplx gamma, const PauliCoefficients& J);
Matrix contract_r_trig_prime(cplx gamma, const PauliCoefficients& J);

}  // namespace ellcov
