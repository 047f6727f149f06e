#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "ellcov/theta.hpp"

namespace ellcov {

using BranchPoints = std::array<cplx, 4>;

// ---------------------------------------------------------------------------
// Periods of the two-sheet covering  w^2 = (l - l1)(l - l2)(l - l3)(l - l4).
//
// Sheet 0 is the branch w0 = g12(l) g34(l), g(l) = (l - c) sqrt(1 - r^2/(l - c)^2),
// with cuts on the segments [l1, l2] and [l3, l4] and w0 ~ +l^2 at infinity.
// The a-cycle is the counterclockwise loop around [l1, l2] on sheet 0, the
// b-cycle the loop around [l2, l3]; mu = B / A with the b orientation chosen
// so that Im mu > 0.

// Arithmetic-geometric mean with the "right" sign choice |a - b| <= |a + b|.
cplx agm(cplx a, cplx b);
// Complete elliptic integral K(k) = pi / (2 agm(1, k')), k'^2 = 1 - k^2.
cplx elliptic_k(cplx k2);

// Cross ratio k^2 = (l1 - l2)(l3 - l4) / ((l1 - l3)(l2 - l4)).
cplx modulus_k2(const BranchPoints& l);

struct CyclePeriods {
  cplx A;  // a-period of d lambda / w
  cplx B;  // b-period, oriented so that Im(B / A) > 0
};

// AGM values expressed in the a/b cycle basis above.
CyclePeriods cycle_periods(const BranchPoints& l);
cplx a_period(const BranchPoints& l);
// Independent route: adaptive quadrature of the segment integrals.
cplx a_period_quadrature(const BranchPoints& l);
cplx b_period_quadrature(const BranchPoints& l);

ModularParameter modulus_from_branch_points(const BranchPoints& l);
ModularParameter modulus_from_branch_points(cplx l1, cplx l2, cplx l3, cplx l4);

// Throws DegenerateBranchPoints if a point is not finite or two points are
// closer than 1e-9 times the largest separation. Crossing cuts are allowed.
void check_branch_points(const BranchPoints& l);

// Sheet-0 value w0(l).
cplx omega0(const BranchPoints& l, cplx lambda);

// ---------------------------------------------------------------------------
// Abel map nu(P) = int_{inf^(0)}^P d lambda / (w A).

struct SheetPoint {
  cplx lambda;
  int sheet = 0;  // 0 or 1; ignored at branch points
};

struct AbelValue {
  cplx raw;            // value continued along the path (not reduced)
  int path_sheet = 0;  // sheet on which the path arrived
  bool used_involution = false;
};

class AbelMap {
 public:
  explicit AbelMap(const BranchPoints& l);

  const BranchPoints& branch_points() const { return l_; }
  cplx A() const { return periods_.A; }
  cplx mu() const { return mu_; }

  // Integral from inf^(0) to the target along an automatic piecewise-straight
  // path that detours around branch points.
  AbelValue integrate(const SheetPoint& target) const;
  AbelValue integrate_to_branch_point(int m) const;

  // Continuation of nu from (start point, start value) along explicit
  // vertices; throws PathThroughBranchPoint if a leg passes within the guard
  // radius of a branch point. Returns the end value and the end sheet.
  AbelValue continue_along(const SheetPoint& start, cplx start_value,
                           const std::vector<cplx>& vertices) const;

  // Representative in the fundamental cell.
  cplx value(const SheetPoint& target) const;

  double guard_radius() const { return guard_; }

 private:
  cplx from_infinity(cplx end) const;
  // Straight leg on the given sheet; returns the integral of d lambda / w and
  // updates the sheet for every cut crossed.
  cplx straight_leg(cplx a, cplx b, int& sheet) const;
  cplx final_leg_to_branch(cplx from, int sheet, int m) const;
  std::vector<cplx> route(cplx from, cplx to, int depth = 0) const;

  BranchPoints l_;
  CyclePeriods periods_;
  cplx mu_;
  double min_dist_;
  double guard_;
};

cplx abel_map(const BranchPoints& l, const SheetPoint& target);

// ---------------------------------------------------------------------------
// Elliptic covering state and the branch-point flows.

struct EllipticCoveringState {
  int N = 2;
  std::vector<cplx> lambda;
  std::vector<cplx> gamma;
  std::vector<cplx> alpha;
  ModularParameter mu{cplx(0.0, 1.0)};
  cplx basepoint_shift{0.0, 0.0};

  std::size_t size() const { return gamma.size(); }
  // Sizes, distinct branch points, sum of residues below 1e-9 (relative).
  void validate() const;
};

// Two-sheet covering: mu from the periods, gamma = gamma~ + h with
// gamma~ = (0, 1/2, 1/2 + mu/2, mu/2) and h = nu(P1), alpha from the
// theta-constant closed forms.
EllipticCoveringState two_sheet_covering(const BranchPoints& l);
EllipticCoveringState two_sheet_covering(cplx l1, cplx l2, cplx l3, cplx l4);

// alpha_m = 2 / (A^2 prod_{k != m}(l_m - l_k)), the direct formula.
std::array<cplx, 4> alpha_direct(const BranchPoints& l, cplx A);
// Closed forms through theta_4(mu).
std::array<cplx, 4> alpha_thomae(const BranchPoints& l, const ModularParameter& mu);

// d nu / d lambda at a point with image nu: sum_k alpha_k [rho(nu - g_k) + rho(g_k)].
cplx nu_lambda(const EllipticCoveringState& s, cplx nu);
// d nu / d lambda_m at fixed lambda: -alpha_m [rho(nu - g_m) + rho(g_m)].
cplx nu_lambda_m(const EllipticCoveringState& s, cplx nu, int m);

struct FlowRhs {
  std::vector<cplx> dgamma;
  std::vector<cplx> dalpha;
  cplx dmu;
};

// Derivatives of (gamma, alpha, mu) with respect to lambda_m.
FlowRhs flow_rhs(const EllipticCoveringState& s, int m);

struct FlowPath {
  int m = 0;
  cplx start;
  cplx end;
  double max_step = 0.05;  // in units of |end - start|
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
};

using FlowObserver = std::function<void(double t, const EllipticCoveringState&)>;

// Moves lambda_m along the straight path; start must equal lambda_m.
EllipticCoveringState integrate_flow(const EllipticCoveringState& s, const FlowPath& path,
                                     const FlowObserver& observer = {});

// ---------------------------------------------------------------------------
// Degenerate (trigonometric) covering.

struct TrigCoveringState {
  std::vector<cplx> lambda;
  std::vector<cplx> gamma;
  std::vector<cplx> alpha0;
  // nullopt encodes lambda_Q = infinity.
  std::optional<cplx> lambda_Q;
  std::optional<cplx> kappa1;  // nullopt when lambda_Q is infinite
  cplx kappa2;
  // For lambda_Q = infinity all gamma share a common shift with Im -> -inf;
  // gamma then holds finite representatives with the right differences and
  // cot(pi gamma_m) is replaced by its limit +i.
  bool gamma_shift_infinite = false;
};

// zeta_m = (3 l1 + l2)/4, (l1 + 3 l2)/4; kappa_{1,2} and gamma_m from the
// two-point map; gamma_1 - gamma_2 fixed to +1/2.
TrigCoveringState build_trig_two_sheet(cplx l1, cplx l2, std::optional<cplx> lambda_Q);

struct TrigFlowRhs {
  std::vector<cplx> dgamma;
  std::vector<cplx> dalpha0;
};

TrigFlowRhs trig_flow_rhs(const TrigCoveringState& s, int m);

}  // namespace ellcov
