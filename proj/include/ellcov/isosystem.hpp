#pragma once

#include <memory>
#include <vector>

#include "ellcov/covering.hpp"
#include "ellcov/rmatrix.hpp"
#include "ellcov/sigma.hpp"

namespace ellcov {

// The matrices J_m, one per branch point, as sigma-basis coefficients.
struct JState {
  int K = 2;
  std::vector<SlkCoefficients> J;

  std::size_t size() const { return J.size(); }
  // Every entry has K^2 - 1 coefficients (tracelessness is built in).
  void validate() const;
};

// r-matrix context matching the covering modulus.
RContext make_context(const EllipticCoveringState& cov, int K, TruncationPolicy pol = {});

// U_m(nu) = tr_2(r(nu - gamma_m) J_m), the coefficient of the linear system.
Matrix u_matrix(const RContext& ctx, const EllipticCoveringState& cov, const JState& J, int m,
                cplx nu);

// dJ_m / d lambda_n for m != n:
//   -alpha_n rho'(g) J_m - alpha_m tr_2(r'(g) J_n) - [J_m, tr_2(r(g) J_n)],  g = gamma_m - gamma_n.
SlkCoefficients j_flow_rhs(const RContext& ctx, const EllipticCoveringState& cov, const JState& J,
                           int m, int n);

// d[k][n] = dJ_k / d lambda_n, from any source.
struct JDerivatives {
  std::vector<std::vector<SlkCoefficients>> d;
};

struct CompatibilitySample {
  cplx nu;
  double norm;
};

struct CompatibilityResidual {
  double max_norm = 0.0;
  std::vector<CompatibilitySample> samples;
  std::vector<cplx> skipped;  // samples that hit NearSingularity
};

// (U_m)_{lambda_n} - (U_n)_{lambda_m} + [U_m, U_n] at one point, with the
// total derivatives taken through nu, gamma, mu and J.
Matrix compatibility_lhs(const RContext& ctx, const EllipticCoveringState& cov, const JState& J,
                         const JDerivatives& dJ, int m, int n, cplx nu);
CompatibilityResidual compatibility_residual(const RContext& ctx, const EllipticCoveringState& cov,
                                             const JState& J, const JDerivatives& dJ, int m, int n,
                                             const std::vector<cplx>& nu_samples);

// Uniform points of the fundamental cell at distance >= 1e-2 from every gamma_k.
std::vector<cplx> sample_nu_points(const EllipticCoveringState& cov, int count, unsigned seed);

// ---------------------------------------------------------------------------
// Closed forms for K = 2 in Pauli components J = J1 s1 + J2 s2 + J3 s3.
//
// The two displays below equal -j_flow_rhs(-J) (the quadratic term enters
// with the opposite sign); they are kept verbatim for comparison.

// dJ_1 / d lambda_2 on the two-sheet covering through theta constants.
PauliCoefficients two_sheet_display_rhs(const EllipticCoveringState& cov,
                                        const PauliCoefficients& J1, const PauliCoefficients& J2);

// mu -> i infinity limit of j_flow_rhs on a trigonometric covering:
// rho -> pi cot, r -> the trigonometric r-matrix.
PauliCoefficients trig_j_flow_rhs(const TrigCoveringState& trig,
                                  const std::vector<PauliCoefficients>& J, int m, int n);
// The component equations with csc^2, cot and cos coefficients.
PauliCoefficients trig_display_rhs(const TrigCoveringState& trig,
                                   const std::vector<PauliCoefficients>& J, int m, int n);
// Two-point covering with lambda_Q = infinity: dJ_1/d lambda_2 (m = 0) or
// dJ_2/d lambda_1 (m = 1).
PauliCoefficients trig_two_point_limit_rhs(cplx l1, cplx l2, const PauliCoefficients& J1,
                                           const PauliCoefficients& J2, int m);

// ---------------------------------------------------------------------------
// Tau function: d log tau / d lambda_m = tr(J_m^2) / (2 alpha_m).

cplx tau_rhs(const SigmaAlgebra& alg, const EllipticCoveringState& cov, const JState& J, int m);
// d^2 log tau / d lambda_m d lambda_n = -tr(J_m tr_2(r'(gamma_m - gamma_n) J_n)).
cplx tau_mixed_second(const RContext& ctx, const EllipticCoveringState& cov, const JState& J,
                      int m, int n);

// A family J(lambda) given by an ODE in the branch points.
class JSource {
 public:
  virtual ~JSource() = default;
  virtual std::vector<cplx> state() const = 0;
  // d state / d lambda_m at y.
  virtual void derivative(int m, const std::vector<cplx>& y, std::vector<cplx>& dy) const = 0;
  // tr(J_m^2) / (2 alpha_m) at y.
  virtual cplx log_tau_rate(int m, const std::vector<cplx>& y) const = 0;
  // Copy positioned at y with lambda_m set to lambda.
  virtual std::unique_ptr<JSource> at(const std::vector<cplx>& y, int m, cplx lambda) const = 0;
};

struct LogTauIncrement {
  cplx delta;
  std::unique_ptr<JSource> end;
};

// Integrates d log tau along the path together with the source's own flow.
LogTauIncrement integrate_log_tau(const JSource& source, const FlowPath& path);

}  // namespace ellcov
