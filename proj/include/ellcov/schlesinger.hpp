#pragma once

#include <functional>
#include <vector>

#include "ellcov/covering.hpp"
#include "ellcov/isosystem.hpp"
#include "ellcov/rmatrix.hpp"

namespace ellcov {

// Poles z_j with traceless residues A_j on the torus with modulus mu.
struct SchlesingerState {
  int K = 2;
  std::vector<cplx> z;
  std::vector<SlkCoefficients> A;
  ModularParameter mu{cplx(0.0, 1.0)};
  // tr A_j^2 at construction, for drift monitoring.
  std::vector<cplx> trA2;

  std::size_t L() const { return z.size(); }
  // Sizes, coefficient counts, z pairwise distinct mod the lattice.
  void validate() const;
};

// Fills trA2 and validates.
SchlesingerState make_schlesinger_state(int K, std::vector<cplx> z, std::vector<SlkCoefficients> A,
                                        ModularParameter mu);
// Random traceless A_j with entries uniform in [-scale, scale]^2.
SchlesingerState random_schlesinger_state(int K, std::vector<cplx> z, ModularParameter mu,
                                          unsigned seed, double scale = 0.5);

std::vector<cplx> trace_squares(const SigmaAlgebra& alg, const SchlesingerState& sch);

// A(gamma) = sum_j tr_2(r(gamma - z_j) A_j).
Matrix a_field(const RContext& ctx, const SchlesingerState& sch, cplx gamma);

struct SchlesingerRhs {
  std::vector<std::vector<SlkCoefficients>> dz;  // dz[i][j] = dA_i / dz_j
  std::vector<SlkCoefficients> dmu;              // dA_i / dmu
};

//   dA_i/dz_j = [A_i, tr_2(r(z_i - z_j) A_j)],  j != i
//   dA_i/dz_i = -sum_{j != i} dA_i/dz_j
//   dA_i/dmu  = -sum_j [A_i, tr_2(Z(z_i - z_j) A_j)]   (j = i through Z(0))
SchlesingerRhs schlesinger_rhs(const RContext& ctx, const SchlesingerState& sch);

struct Hamiltonians {
  std::vector<cplx> H;  // H_i = sum_{j != i} tr(A_i tr_2(r(z_i - z_j) A_j))
  cplx H_mu;            // (1/2) sum_{i,j} tr(A_i tr_2(Z(z_i - z_j) A_j))
};

Hamiltonians hamiltonians(const RContext& ctx, const SchlesingerState& sch);

// Straight path in one time: z_j (variable = j) or mu (variable = -1).
struct SchlesingerPath {
  int variable = 0;
  cplx start;
  cplx end;
  double max_step = 0.05;
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
};

struct SchlesingerRun {
  SchlesingerState end;
  std::vector<double> trA2_drift;  // max |tr A_j^2 - initial| along the path
  // max |H - H(start)| along the path; entries H_1..H_L, then H_mu.
  std::vector<double> hamiltonian_variation;
};

SchlesingerRun integrate_schlesinger(const SchlesingerState& sch, const SchlesingerPath& path,
                                     TruncationPolicy pol = {});

// ---------------------------------------------------------------------------
// Schlesinger data carried by the branch-point flows.

struct CoupledState {
  EllipticCoveringState cov;
  SchlesingerState sch;
  // Fixed points Q_j of the covering; z_j = nu(Q_j).
  std::vector<SheetPoint> Q;

  void validate() const;
};

// z_j = nu(Q_j) on the two-sheet covering of cov.lambda, A_j as given.
CoupledState make_coupled_state(const EllipticCoveringState& cov, const std::vector<SheetPoint>& Q,
                                std::vector<SlkCoefficients> A, int K);
CoupledState random_coupled_state(const EllipticCoveringState& cov, const std::vector<SheetPoint>& Q,
                                  int K, unsigned seed, double scale = 0.5);

// J_m = -alpha_m sum_j tr_2(r(gamma_m - z_j) A_j).
JState induced_j(const RContext& ctx, const CoupledState& c);
// Every dJ_k / d lambda_n of the induced J by the chain rule through alpha,
// gamma, mu, z and A (including k = n).
JDerivatives induced_j_derivative(const RContext& ctx, const CoupledState& c);

// d z_j / d lambda_m and d A_i / d lambda_m.
struct CoupledRhs {
  FlowRhs cov;
  std::vector<cplx> dz;
  std::vector<SlkCoefficients> dA;
};
CoupledRhs coupled_rhs(const RContext& ctx, const CoupledState& c, int m);

using CoupledObserver = std::function<void(double t, const CoupledState&)>;

CoupledState coupled_flow(const CoupledState& c, const FlowPath& path, TruncationPolicy pol = {},
                          const CoupledObserver& observer = {});

// tr(J_m^2)/(2 alpha_m) minus the Schlesinger-side expression
//   sum_i H_i nu_{lambda_m}(z_i) + H_mu 2 pi i alpha_m
//     + sum_j (tr A_j^2 / 2)(-alpha_m rho'(z_j - gamma_m)).
cplx tau_relation_residual(const RContext& ctx, const CoupledState& c, int m);

// The induced J along coupled flows, for integrate_log_tau.
class CoupledJSource : public JSource {
 public:
  explicit CoupledJSource(CoupledState c, TruncationPolicy pol = {});

  const CoupledState& coupled() const { return c_; }

  std::vector<cplx> state() const override;
  void derivative(int m, const std::vector<cplx>& y, std::vector<cplx>& dy) const override;
  cplx log_tau_rate(int m, const std::vector<cplx>& y) const override;
  std::unique_ptr<JSource> at(const std::vector<cplx>& y, int m, cplx lambda) const override;

 private:
  CoupledState unpack(const std::vector<cplx>& y) const;

  CoupledState c_;
  TruncationPolicy pol_;
};

}  // namespace ellcov
