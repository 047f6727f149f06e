#include <cmath>
#include <random>
#include <string>

#include "ellcov/errors.hpp"
#include "ellcov/isosystem.hpp"
#include "ode.hpp"

namespace ellcov {

namespace {

void check_pair(std::size_t size, int m, int n, const char* what) {
  const auto bad = [&](int k) { return k < 0 || static_cast<std::size_t>(k) >= size; };
  if (bad(m) || bad(n)) {
    throw IndexError(std::string(what) + ": index out of range");
  }
  if (m == n) {
    throw IndexError(std::string(what) + ": requires m != n");
  }
}

void check_inputs(const RContext& ctx, const EllipticCoveringState& cov, const JState& J) {
  if (ctx.K() != J.K) throw InvalidIndex("J and r-matrix context have different rank");
  if (J.size() != cov.size()) throw InvalidIndex("J must have one entry per branch point");
  if (std::abs(ctx.mu().value() - cov.mu.value()) > 1e-14 * (1.0 + std::abs(cov.mu.value()))) {
    throw InvalidModulus("r-matrix context modulus differs from the covering modulus");
  }
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

}  // namespace

void JState::validate() const {
  const std::size_t n = static_cast<std::size_t>(K * K - 1);
  for (std::size_t m = 0; m < J.size(); ++m) {
    if (J[m].values().size() != n) {
      throw InvalidIndex("J[" + std::to_string(m) + "] has the wrong number of coefficients");
    }
  }
}

RContext make_context(const EllipticCoveringState& cov, int K, TruncationPolicy pol) {
  return RContext(SigmaAlgebra(K), cov.mu, pol);
}

Matrix u_matrix(const RContext& ctx, const EllipticCoveringState& cov, const JState& J, int m,
                cplx nu) {
  check_inputs(ctx, cov, J);
  if (m < 0 || static_cast<std::size_t>(m) >= J.size()) throw IndexError("u_matrix: index out of range");
  return ctx.contract_r(nu - cov.gamma[m], J.J[m]);
}

SlkCoefficients j_flow_rhs(const RContext& ctx, const EllipticCoveringState& cov, const JState& J,
                           int m, int n) {
  check_inputs(ctx, cov, J);
  check_pair(J.size(), m, n, "j_flow_rhs");
  const cplx g = cov.gamma[m] - cov.gamma[n];
  const Matrix Jm = ctx.algebra().reconstruct(J.J[m]);
  const Matrix R = ctx.contract_r(g, J.J[n]);
  const Matrix Rp = ctx.contract_r_prime(g, J.J[n]);
  const Matrix out = -cov.alpha[n] * rho_prime(g, cov.mu) * Jm - cov.alpha[m] * Rp - commutator(Jm, R);
  return ctx.algebra().expand(out);
}

Matrix compatibility_lhs(const RContext& ctx, const EllipticCoveringState& cov, const JState& J,
                         const JDerivatives& dJ, int m, int n, cplx nu) {
  check_inputs(ctx, cov, J);
  check_pair(J.size(), m, n, "compatibility_lhs");
  if (dJ.d.size() != J.size()) throw InvalidIndex("derivative table must cover every J_k");
  for (const auto& row : dJ.d)
    if (row.size() != J.size()) throw InvalidIndex("derivative table rows must cover every lambda");

  // Total derivative of U_a along lambda_b.
  const auto dU = [&](int a, int b) {
    const cplx g = nu - cov.gamma[a];
    const cplx dmu = kTwoPiI * cov.alpha[b];
    const cplx dg = nu_lambda_m(cov, nu, b) - flow_rhs(cov, b).dgamma[a];
    return Matrix(ctx.contract_r_dmu(g, J.J[a]) * dmu + ctx.contract_r_prime(g, J.J[a]) * dg +
                  ctx.contract_r(g, dJ.d[a][b]));
  };
  const Matrix Um = ctx.contract_r(nu - cov.gamma[m], J.J[m]);
  const Matrix Un = ctx.contract_r(nu - cov.gamma[n], J.J[n]);
  return dU(m, n) - dU(n, m) + commutator(Um, Un);
}

CompatibilityResidual compatibility_residual(const RContext& ctx, const EllipticCoveringState& cov,
                                             const JState& J, const JDerivatives& dJ, int m, int n,
                                             const std::vector<cplx>& nu_samples) {
  CompatibilityResidual out;
  for (const cplx nu : nu_samples) {
    try {
      const double norm = compatibility_lhs(ctx, cov, J, dJ, m, n, nu).norm();
      out.samples.push_back({nu, norm});
      out.max_norm = std::max(out.max_norm, norm);
    } catch (const NearSingularity&) {
      out.skipped.push_back(nu);
    }
  }
  return out;
}

std::vector<cplx> sample_nu_points(const EllipticCoveringState& cov, int count, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const cplx mu = cov.mu.value();
  std::vector<cplx> out;
  while (static_cast<int>(out.size()) < count) {
    const cplx nu = u(gen) + u(gen) * mu;
    bool ok = true;
    for (const cplx g : cov.gamma) ok = ok && std::abs(reduce_near_zero(nu - g, mu)) >= 1e-2;
    if (ok) out.push_back(nu);
  }
  return out;
}

PauliCoefficients two_sheet_display_rhs(const EllipticCoveringState& cov,
                                        const PauliCoefficients& J1, const PauliCoefficients& J2) {
  if (cov.size() != 4) throw InvalidIndex("two_sheet_display_rhs: needs a two-sheet covering");
  const auto tc = theta_constants(cov.mu);
  const cplx &l1 = cov.lambda[0], &l2 = cov.lambda[1], &l3 = cov.lambda[2], &l4 = cov.lambda[3];
  const cplx t32 = tc.theta3 * tc.theta3;
  const cplx t42 = tc.theta4 * tc.theta4;
  const cplx I(0.0, 1.0);
  const cplx c = (l1 - l4) / (2.0 * kPi * kPi * (l2 - l1) * (l2 - l4)) / (t42 * t42) *
                 (tc.theta2_second / tc.theta2);
  return {c * J1[0] + 2.0 * kPi * I * J1[2] * J2[1] * t42,
          c * J1[1] - 2.0 * kPi * I * J1[2] * J2[0] * t32,
          c * J1[2] + (l3 - l2) / (2.0 * (l1 - l2) * (l1 - l3)) * J2[2] * t32 / t42 +
              2.0 * kPi * I * (J1[1] * J2[0] * t32 - J1[0] * J2[1] * t42)};
}

PauliCoefficients trig_j_flow_rhs(const TrigCoveringState& trig,
                                  const std::vector<PauliCoefficients>& J, int m, int n) {
  if (J.size() != trig.gamma.size()) throw InvalidIndex("trig_j_flow_rhs: one J per branch point");
  check_pair(J.size(), m, n, "trig_j_flow_rhs");
  const cplx g = trig.gamma[m] - trig.gamma[n];
  const cplx s = std::sin(kPi * g);
  const Matrix Jm = from_pauli(J[m]);
  const Matrix R = contract_r_trig(g, J[n]);
  const Matrix Rp = contract_r_trig_prime(g, J[n]);
  const cplx rho_p = -kPi * kPi / (s * s);
  return to_pauli(-trig.alpha0[n] * rho_p * Jm - trig.alpha0[m] * Rp - commutator(Jm, R));
}

PauliCoefficients trig_display_rhs(const TrigCoveringState& trig,
                                   const std::vector<PauliCoefficients>& J, int m, int n) {
  if (J.size() != trig.gamma.size()) throw InvalidIndex("trig_display_rhs: one J per branch point");
  check_pair(J.size(), m, n, "trig_display_rhs");
  const cplx x = kPi * (trig.gamma[m] - trig.gamma[n]);
  const cplx s = std::sin(x);
  const cplx c = std::cos(x);
  if (std::abs(s) < kSingularityGuard) throw NearSingularity("trig_display_rhs: integer difference");
  const cplx I(0.0, 1.0);
  const cplx an = trig.alpha0[n] * kPi * kPi / (s * s);
  const cplx am = trig.alpha0[m] * kPi * kPi / (s * s);
  const cplx q = 2.0 * kPi * I / s;
  const auto& a = J[m];
  const auto& b = J[n];
  return {an * a[0] + am * c * b[0] + q * (a[1] * b[2] * c - a[2] * b[1]),
          an * a[1] + am * c * b[1] + q * (a[2] * b[0] - a[0] * b[2] * c),
          an * a[2] + am * b[2] + q * (a[0] * b[1] - a[1] * b[0])};
}

PauliCoefficients trig_two_point_limit_rhs(cplx l1, cplx l2, const PauliCoefficients& J1,
                                           const PauliCoefficients& J2, int m) {
  const cplx I(0.0, 1.0);
  const cplx h = 0.5 / (l1 - l2);
  const cplx q = 2.0 * kPi * I;
  const cplx cross = q * (J1[0] * J2[1] - J1[1] * J2[0]);
  if (m == 0) {
    return {h * J1[0] - q * J1[2] * J2[1], h * J1[1] + q * J1[2] * J2[0], h * (J1[2] - J2[2]) + cross};
  }
  if (m == 1) {
    return {-h * J2[0] + q * J2[2] * J1[1], -h * J2[1] - q * J2[2] * J1[0], h * (J1[2] - J2[2]) + cross};
  }
  throw IndexError("trig_two_point_limit_rhs: m must be 0 or 1");
}

cplx tau_rhs(const SigmaAlgebra& alg, const EllipticCoveringState& cov, const JState& J, int m) {
  if (m < 0 || static_cast<std::size_t>(m) >= J.size() || J.size() != cov.size()) {
    throw IndexError("tau_rhs: index out of range");
  }
  if (std::abs(cov.alpha[m]) == 0.0) throw ZeroResidue("tau_rhs: alpha_m vanishes");
  const Matrix Jm = alg.reconstruct(J.J[m]);
  return (Jm * Jm).trace() / (2.0 * cov.alpha[m]);
}

cplx tau_mixed_second(const RContext& ctx, const EllipticCoveringState& cov, const JState& J,
                      int m, int n) {
  check_inputs(ctx, cov, J);
  check_pair(J.size(), m, n, "tau_mixed_second");
  const Matrix Jm = ctx.algebra().reconstruct(J.J[m]);
  return -(Jm * ctx.contract_r_prime(cov.gamma[m] - cov.gamma[n], J.J[n])).trace();
}

LogTauIncrement integrate_log_tau(const JSource& source, const FlowPath& path) {
  const cplx delta = path.end - path.start;
  std::vector<cplx> y0 = source.state();
  const std::size_t n = y0.size();
  if (delta == 0.0) return {0.0, source.at(y0, path.m, path.end)};
  y0.push_back(0.0);
  std::vector<cplx> inner(n), dinner(n);
  const auto f = [&](double, const detail::OdeState& y, detail::OdeState& dy) {
    inner.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    source.derivative(path.m, inner, dinner);
    dy.resize(n + 1);
    for (std::size_t k = 0; k < n; ++k) dy[k] = delta * dinner[k];
    dy[n] = delta * source.log_tau_rate(path.m, inner);
  };
  detail::OdeOptions opt;
  opt.max_step = path.max_step;
  opt.abs_tol = path.abs_tol;
  opt.rel_tol = path.rel_tol;
  const detail::OdeState y1 = detail::integrate_unit_interval(y0, f, opt);
  const std::vector<cplx> end(y1.begin(), y1.begin() + static_cast<std::ptrdiff_t>(n));
  return {y1[n], source.at(end, path.m, path.end)};
}

}  // namespace ellcov
