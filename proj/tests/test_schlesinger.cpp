#include <cmath>
#include <vector>

#include "doctest.h"
#include "ellcov/errors.hpp"
#include "ellcov/schlesinger.hpp"
#include "oracles.hpp"

using namespace ellcov;

namespace {

const cplx I(0.0, 1.0);
const BranchPoints kBase{cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(2.3, 0.4), cplx(4.0, -0.3)};
const std::vector<SheetPoint> kQ{{cplx(0.6, 1.4), 0}, {cplx(3.1, -1.2), 1}};

RContext ctx_of(const CoupledState& c) { return RContext(SigmaAlgebra(c.sch.K), c.sch.mu); }
RContext ctx_of(const SchlesingerState& s) { return RContext(SigmaAlgebra(s.K), s.mu); }

CoupledState base_state(int K, unsigned seed) {
  return random_coupled_state(two_sheet_covering(kBase), kQ, K, seed);
}

CoupledState moved(const CoupledState& c, int n, cplx d) {
  FlowPath p{n, c.cov.lambda[n], c.cov.lambda[n] + d};
  return coupled_flow(c, p);
}

double max_coeff_diff(const SlkCoefficients& a, const SlkCoefficients& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) d = std::max(d, std::abs(a.values()[k] - b.values()[k]));
  return d;
}

double max_coeff(const SlkCoefficients& a) {
  double d = 0.0;
  for (const cplx v : a.values()) d = std::max(d, std::abs(v));
  return d;
}

// Richardson finite difference of the induced J_k along lambda_n.
std::vector<SlkCoefficients> fd_induced(const CoupledState& c, int n, double h) {
  const auto J_at = [&](double s) {
    const CoupledState m = moved(c, n, s);
    return induced_j(ctx_of(m), m).J;
  };
  const auto jp = J_at(h), jm = J_at(-h), jp2 = J_at(0.5 * h), jm2 = J_at(-0.5 * h);
  std::vector<SlkCoefficients> out;
  for (std::size_t k = 0; k < jp.size(); ++k) {
    const SlkCoefficients d1 = (1.0 / (2.0 * h)) * (jp[k] - jm[k]);
    const SlkCoefficients d2 = (1.0 / h) * (jp2[k] - jm2[k]);
    out.push_back((1.0 / 3.0) * ((4.0 * d2) - d1));
  }
  return out;
}

}  // namespace

TEST_CASE("A has simple poles with residues A_j and twisted periodicity") {
  const ModularParameter mu(cplx(0.2, 1.1));
  for (int K : {2, 3}) {
    const auto sch = random_schlesinger_state(K, {cplx(0.2, 0.3), cplx(0.7, 0.6), cplx(0.45, 0.1)}, mu, 5);
    const RContext ctx = ctx_of(sch);
    const SigmaAlgebra& alg = ctx.algebra();
    for (std::size_t j = 0; j < sch.L(); ++j) {
      const cplx d = 1e-4 * cplx(0.8, -0.6);
      const Matrix res = 0.5 * d * (a_field(ctx, sch, sch.z[j] + d) - a_field(ctx, sch, sch.z[j] - d));
      CHECK(oracle::rel_err(res, alg.reconstruct(sch.A[j])) < 1e-6);
    }
    const Matrix Finv = alg.F().inverse();
    const Matrix Hinv = alg.H().inverse();
    for (const cplx g : {cplx(0.33, 0.52), cplx(0.9, 0.05), cplx(-0.2, 0.4)}) {
      const Matrix a0 = a_field(ctx, sch, g);
      CHECK((a_field(ctx, sch, g + 1.0) - Finv * a0 * alg.F()).norm() < 1e-9 * std::max(1.0, a0.norm()));
      CHECK((a_field(ctx, sch, g + mu.value()) - alg.H() * a0 * Hinv).norm() < 1e-9 * std::max(1.0, a0.norm()));
    }
  }
  const auto zero = make_schlesinger_state(2, {0.1, 0.6}, {SlkCoefficients(2), SlkCoefficients(2)}, mu);
  CHECK(a_field(ctx_of(zero), zero, 0.3 + 0.2 * I).norm() == 0.0);
  CHECK_THROWS_AS(make_schlesinger_state(2, {0.1, 1.1}, {SlkCoefficients(2), SlkCoefficients(2)}, mu),
                  DegenerateInput);
}

TEST_CASE("Schlesinger right-hand side") {
  const ModularParameter mu(cplx(-0.1, 0.9));
  const auto one = random_schlesinger_state(2, {cplx(0.3, 0.2)}, mu, 7);
  CHECK(max_coeff(schlesinger_rhs(ctx_of(one), one).dz[0][0]) == 0.0);

  for (int K : {2, 3}) {
    const auto sch = random_schlesinger_state(K, {cplx(0.1, 0.1), cplx(0.6, 0.3), cplx(0.35, 0.7)}, mu, 11);
    const RContext ctx = ctx_of(sch);
    const SigmaAlgebra& alg = ctx.algebra();
    const SchlesingerRhs r = schlesinger_rhs(ctx, sch);
    for (std::size_t j = 0; j < 3; ++j) {
      // tr A_i^2 is stationary under every time.
      for (std::size_t i = 0; i < 3; ++i) {
        const Matrix Ai = alg.reconstruct(sch.A[i]);
        CHECK(std::abs((Ai * alg.reconstruct(r.dz[i][j])).trace()) < 1e-12);
        CHECK(std::abs((Ai * alg.reconstruct(r.dmu[i])).trace()) < 1e-12);
      }
      // Translating all poles together leaves every A_i fixed.
      SlkCoefficients total(K);
      for (std::size_t i = 0; i < 3; ++i) total = total + r.dz[j][i];
      CHECK(max_coeff(total) < 1e-12);
      // Off-diagonal entries against tr_2([A_i (x) 1, r_12(z_i - z_j)](1 (x) A_j)).
      for (std::size_t i = 0; i < 3; ++i) {
        if (i == j) continue;
        const Matrix rd = oracle::dense_tensor(alg, ctx.w_table(sch.z[i] - sch.z[j]));
        const Matrix Ai = Eigen::kroneckerProduct(alg.reconstruct(sch.A[i]), Matrix::Identity(K, K)).eval();
        const Matrix dense = oracle::partial_trace_second(Ai * rd - rd * Ai, alg.reconstruct(sch.A[j]), K);
        CHECK((alg.reconstruct(r.dz[i][j]) - dense).norm() < 1e-12 * std::max(1.0, dense.norm()));
      }
    }
  }
}

TEST_CASE("Schlesinger flows conserve tr A^2 and are reversible") {
  const ModularParameter mu(cplx(0.1, 1.2));
  const auto sch = random_schlesinger_state(2, {cplx(0.2, 0.3), cplx(0.7, 0.8)}, mu, 13);
  SchlesingerPath p{0, sch.z[0], sch.z[0] + cplx(0.1, 0.05)};
  const auto out = integrate_schlesinger(sch, p);
  for (double d : out.trA2_drift) CHECK(d < 1e-8);
  CHECK(max_coeff_diff(out.end.A[0], sch.A[0]) > 1e-3);
  SchlesingerPath back{0, p.end, p.start};
  const auto ret = integrate_schlesinger(out.end, back);
  for (std::size_t j = 0; j < 2; ++j) CHECK(max_coeff_diff(ret.end.A[j], sch.A[j]) < 1e-8);

  SchlesingerPath pm{-1, mu.value(), mu.value() + cplx(0.05, 0.1)};
  const auto outm = integrate_schlesinger(sch, pm);
  for (double d : outm.trA2_drift) CHECK(d < 1e-8);
  CHECK(std::abs(outm.end.mu.value() - pm.end) == 0.0);

  SchlesingerPath zero{1, sch.z[1], sch.z[1]};
  const auto same = integrate_schlesinger(sch, zero);
  CHECK(max_coeff_diff(same.end.A[1], sch.A[1]) == 0.0);
  CHECK_THROWS_AS(integrate_schlesinger(sch, SchlesingerPath{2, 0.0, 1.0}), IndexError);
  CHECK_THROWS_AS(integrate_schlesinger(sch, SchlesingerPath{0, 0.0, 1.0}), DegenerateInput);
}

TEST_CASE("Hamiltonians are residues of tr A^2 / (4 pi i)") {
  const ModularParameter mu(cplx(0.15, 1.05));
  const auto sch = random_schlesinger_state(2, {cplx(0.2, 0.25), cplx(0.65, 0.7)}, mu, 17);
  const RContext ctx = ctx_of(sch);
  const Hamiltonians h = hamiltonians(ctx, sch);
  for (std::size_t i = 0; i < 2; ++i) {
    const double r = 0.1;
    const auto integrand = [&](double t) {
      const cplx e = std::exp(I * t);
      const Matrix A = a_field(ctx, sch, sch.z[i] + r * e);
      return (A * A).trace() * I * r * e;
    };
    const cplx contour = oracle::periodic_trapezoid(integrand, 0.0, 2.0 * kPi) / (4.0 * kPi * I);
    CHECK(std::abs(contour - h.H[i]) < 1e-7);
  }
  // The mu Hamiltonian as an a-cycle integral: (1/4 pi i) int_0^1 tr A^2 over a
  // horizontal line below both poles.
  const auto line = [&](double t) {
    const Matrix A = a_field(ctx, sch, cplx(t, 0.05));
    return cplx((A * A).trace());
  };
  CHECK(std::abs(oracle::periodic_trapezoid(line, 0.0, 1.0) / (4.0 * kPi * I) - h.H_mu) < 1e-7);

  const auto zero = make_schlesinger_state(2, {0.1, 0.6}, {SlkCoefficients(2), SlkCoefficients(2)}, mu);
  const Hamiltonians hz = hamiltonians(ctx_of(zero), zero);
  CHECK(hz.H[0] == 0.0);
  CHECK(hz.H_mu == 0.0);
}

TEST_CASE("induced J: zero data, tracelessness and the chain rule") {
  const auto cov = two_sheet_covering(kBase);
  const auto zero = make_coupled_state(cov, kQ, {SlkCoefficients(2), SlkCoefficients(2)}, 2);
  for (const auto& j : induced_j(ctx_of(zero), zero).J) CHECK(max_coeff(j) == 0.0);
  CHECK(std::abs(tau_relation_residual(ctx_of(zero), zero, 1)) == 0.0);

  const auto c = base_state(2, 19);
  const RContext ctx = ctx_of(c);
  for (const auto& j : induced_j(ctx, c).J) {
    CHECK(std::abs(ctx.algebra().reconstruct(j).trace()) < 1e-12);
  }
  // Chain-rule derivative table against finite differences of the flow.
  const JDerivatives dJ = induced_j_derivative(ctx, c);
  for (int n = 0; n < 4; ++n) {
    const auto fd = fd_induced(c, n, 1e-3);
    for (int k = 0; k < 4; ++k) {
      CHECK(max_coeff_diff(fd[k], dJ.d[k][n]) < 1e-6 * std::max(1.0, max_coeff(dJ.d[k][n])));
    }
  }
}

TEST_CASE("Schlesinger-induced J solves the isomonodromic system") {
  for (int K : {2, 3}) {
    const auto c = base_state(K, 23 + K);
    const RContext ctx = ctx_of(c);
    const JState J = induced_j(ctx, c);
    for (int n = 0; n < 4; ++n) {
      const auto fd = fd_induced(c, n, 1e-3);
      for (int m = 0; m < 4; ++m) {
        if (m == n) continue;
        const SlkCoefficients rhs = j_flow_rhs(ctx, c.cov, J, m, n);
        CHECK(max_coeff_diff(fd[m], rhs) / std::max(1e-300, max_coeff(rhs)) < 1e-5);
      }
    }
    const JDerivatives dJ = induced_j_derivative(ctx, c);
    const auto nus = sample_nu_points(c.cov, 20, 101);
    for (int m = 0; m < 4; ++m)
      for (int n = m + 1; n < 4; ++n) {
        const auto res = compatibility_residual(ctx, c.cov, J, dJ, m, n, nus);
        CHECK(res.max_norm < 1e-6);
        CHECK(res.skipped.empty());
      }
  }
}

TEST_CASE("coupled flow keeps z on the Abel image and conserves tr A^2") {
  const auto c = base_state(2, 29);
  const SigmaAlgebra alg(2);
  const auto tr0 = trace_squares(alg, c.sch);
  double drift = 0.0;
  FlowPath p{3, c.cov.lambda[3], c.cov.lambda[3] + cplx(0.2, 0.3)};
  const auto end = coupled_flow(c, p, {}, [&](double, const CoupledState& s) {
    const auto tr = trace_squares(alg, s.sch);
    for (std::size_t j = 0; j < tr.size(); ++j) drift = std::max(drift, std::abs(tr[j] - tr0[j]));
  });
  CHECK(drift < 1e-8);
  const BranchPoints l{end.cov.lambda[0], end.cov.lambda[1], end.cov.lambda[2], end.cov.lambda[3]};
  const AbelMap abel(l);
  const cplx mu = end.cov.mu.value();
  CHECK(std::abs(abel.mu() - mu) < 1e-6);
  for (std::size_t j = 0; j < kQ.size(); ++j) {
    const cplx fresh = abel.integrate(kQ[j]).raw;
    CHECK(std::abs(reduce_near_zero(fresh - end.sch.z[j], mu)) < 1e-6);
  }
  const auto same = coupled_flow(c, FlowPath{1, c.cov.lambda[1], c.cov.lambda[1]});
  CHECK(same.sch.z == c.sch.z);
}

TEST_CASE("tau relation between the two tau functions") {
  for (int K : {2, 3}) {
    for (unsigned seed : {31u, 37u}) {
      const auto c = base_state(K, seed + K);
      const RContext ctx = ctx_of(c);
      for (int m = 0; m < 4; ++m) {
        const JState J = induced_j(ctx, c);
        const cplx scale = tau_rhs(ctx.algebra(), c.cov, J, m);
        CHECK(std::abs(tau_relation_residual(ctx, c, m)) < 1e-7 * std::max(1.0, std::abs(scale)));
      }
    }
  }
}

TEST_CASE("mixed second derivative of log tau along the coupled flow") {
  const auto c = base_state(2, 41);
  const RContext ctx = ctx_of(c);
  const JState J = induced_j(ctx, c);
  const double h = 1e-3;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) {
      if (m == n) continue;
      const auto rate = [&](double s) {
        const auto x = moved(c, n, s);
        const RContext cx = ctx_of(x);
        return tau_rhs(cx.algebra(), x.cov, induced_j(cx, x), m);
      };
      const cplx d1 = (rate(h) - rate(-h)) / (2.0 * h);
      const cplx d2 = (rate(0.5 * h) - rate(-0.5 * h)) / h;
      const cplx fd = (4.0 * d2 - d1) / 3.0;
      const cplx exact = tau_mixed_second(ctx, c.cov, J, m, n);
      CHECK(std::abs(fd - exact) < 1e-5 * std::max(1.0, std::abs(exact)));
    }
}

TEST_CASE("log tau integrates to a closed form around a loop") {
  const auto c = base_state(2, 43);
  const CoupledJSource src(c);
  const cplx dm(0.15, 0.05), dn(-0.05, 0.12);
  const int m = 1, n = 3;
  const auto leg = [](const JSource& s, int k, cplx from, cplx d) {
    return integrate_log_tau(s, FlowPath{k, from, from + d});
  };
  const cplx lm = c.cov.lambda[m], ln = c.cov.lambda[n];
  auto a1 = leg(src, m, lm, dm);
  auto a2 = leg(*a1.end, n, ln, dn);
  auto b1 = leg(src, n, ln, dn);
  auto b2 = leg(*b1.end, m, lm, dm);
  CHECK(std::abs((a1.delta + a2.delta) - (b1.delta + b2.delta)) < 1e-6);
  // The closed loop returns to the start.
  auto a3 = leg(*a2.end, m, lm + dm, -dm);
  auto a4 = leg(*a3.end, n, ln + dn, -dn);
  CHECK(std::abs(a1.delta + a2.delta + a3.delta + a4.delta) < 1e-6);
  CHECK(std::abs(a1.delta) > 1e-3);
  CHECK(integrate_log_tau(src, FlowPath{m, lm, lm}).delta == 0.0);
}
