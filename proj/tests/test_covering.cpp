#include <cmath>
#include <vector>

#include "doctest.h"
#include "ellcov/covering.hpp"
#include "ellcov/errors.hpp"
#include "oracles.hpp"

using namespace ellcov;

namespace {

const BranchPoints kBase{cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(2.3, 0.4), cplx(4.0, -0.3)};

double lattice_dist(cplx z, cplx mu) { return std::abs(reduce_near_zero(z, mu)); }

// Generic configurations, including ones whose cut segments cross.
std::vector<BranchPoints> configurations() {
  std::vector<BranchPoints> out{
      kBase,
      {cplx(-1.0, 0.2), cplx(0.5, -0.7), cplx(1.8, 1.1), cplx(-0.4, 2.0)},
      {cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(0.5, 0.8), cplx(0.5, -0.8)},  // crossing cuts
  };
  oracle::Rng rng(31);
  for (int i = 0; i < 6; ++i) {
    BranchPoints l;
    for (auto& x : l) x = rng.point(-2, 2, -2, 2);
    out.push_back(l);
  }
  return out;
}

BranchPoints moved(BranchPoints l, int m, cplx d) {
  l[m] += d;
  return l;
}

}  // namespace

TEST_CASE("a-period satisfies the theta-constant relation") {
  for (const auto& l : configurations()) {
    const cplx A = a_period(l);
    const ModularParameter mu = modulus_from_branch_points(l);
    const cplx t4 = theta_constants(mu).theta4;
    const cplx rhs = 4.0 * kPi * kPi * std::pow(t4, 4) / ((l[0] - l[3]) * (l[2] - l[1]));
    CHECK(std::abs(A * A - rhs) / std::abs(A * A) < 1e-8);
  }
}

TEST_CASE("periods scale inversely with the branch points") {
  for (const cplx c : {cplx(2.5, 0.0), cplx(0.3, -1.2)}) {
    BranchPoints s = kBase;
    for (auto& x : s) x *= c;
    CHECK(oracle::rel_err(a_period(s), a_period(kBase) / c) < 1e-12);
    CHECK(std::abs(modulus_from_branch_points(s).value() - modulus_from_branch_points(kBase).value()) < 1e-12);
  }
}

TEST_CASE("quadrature and AGM periods agree") {
  for (const auto& l : configurations()) {
    const CyclePeriods p = cycle_periods(l);
    const cplx Aq = a_period_quadrature(l);
    cplx Bq = b_period_quadrature(l);
    if ((Bq / Aq).imag() < 0.0) Bq = -Bq;
    CHECK(oracle::rel_err(Aq, p.A) < 1e-9);
    CHECK(oracle::rel_err(Bq, p.B) < 1e-9);
    CHECK((p.B / p.A).imag() > 0.0);
  }
}

TEST_CASE("cross ratio is recovered from theta constants") {
  for (const auto& l : configurations()) {
    const auto tc = theta_constants(modulus_from_branch_points(l));
    const cplx k = tc.theta2 * tc.theta2 / (tc.theta3 * tc.theta3);
    CHECK(std::abs(k * k - modulus_k2(l)) < 1e-9 * std::max(1.0, std::abs(modulus_k2(l))));
  }
}

TEST_CASE("shrinking the cut [l3, l4] sends Im mu to infinity") {
  double prev = 0.0;
  for (const double x : {3.0, 2.5, 2.1, 2.01, 2.001, 2.0001}) {
    const double im = modulus_from_branch_points(0.0, 1.0, 2.0, x).value().imag();
    CHECK(im > prev);
    prev = im;
  }
  CHECK(prev > 3.0);
}

TEST_CASE("symmetric real configuration has purely imaginary modulus") {
  for (const double t : {0.7, 1.0, 2.5}) {
    const cplx mu = modulus_from_branch_points(0.0, 1.0, 0.5 + t, 0.5 - t).value();
    CHECK(std::abs(mu.real() - std::round(mu.real())) < 1e-10);
  }
}

TEST_CASE("a-cycle through a branch point is refused") {
  CHECK_THROWS_AS(modulus_from_branch_points(0.0, 1.0, 0.7, 0.3), DegenerateInput);
}

TEST_CASE("coinciding branch points are rejected") {
  CHECK_THROWS_AS(modulus_from_branch_points(0.0, 1.0, 1.0, 3.0), DegenerateBranchPoints);
  CHECK_THROWS_AS(a_period({cplx(0.0), cplx(1.0), cplx(2.0), cplx(1e-12)}), DegenerateBranchPoints);
  CHECK_THROWS_AS(two_sheet_covering(cplx(0.0), cplx(1.0), cplx(2.0), cplx(NAN)), DegenerateBranchPoints);
}

TEST_CASE("two-sheet covering data") {
  for (const auto& l : configurations()) {
    const auto s = two_sheet_covering(l);
    const cplx mu = s.mu.value();
    const cplx h = s.basepoint_shift;
    CHECK(std::abs(s.gamma[0] - h) == 0.0);
    CHECK(std::abs(s.gamma[1] - h - 0.5) < 1e-15);
    CHECK(std::abs(s.gamma[2] - h - 0.5 - 0.5 * mu) < 1e-14);
    CHECK(std::abs(s.gamma[3] - h - 0.5 * mu) < 1e-14);

    double amax = 0.0;
    cplx sum = 0.0;
    for (const cplx a : s.alpha) {
      sum += a;
      amax = std::max(amax, std::abs(a));
    }
    CHECK(std::abs(sum) < 1e-10 * amax);
    CHECK_NOTHROW(s.validate());

    const auto direct = alpha_direct(l, a_period(l));
    for (int m = 0; m < 4; ++m) CHECK(oracle::rel_err(direct[m], s.alpha[m]) < 1e-9);
  }
}

TEST_CASE("state validation") {
  auto s = two_sheet_covering(kBase);
  s.alpha[0] += 1e-3;
  CHECK_THROWS_AS(s.validate(), DegenerateInput);
  s = two_sheet_covering(kBase);
  s.lambda[1] = s.lambda[0];
  CHECK_THROWS_AS(s.validate(), DegenerateBranchPoints);
  s = two_sheet_covering(kBase);
  s.gamma.pop_back();
  CHECK_THROWS_AS(s.validate(), DegenerateInput);
}

TEST_CASE("Abel images of the branch points") {
  for (const auto& l : configurations()) {
    const AbelMap abel(l);
    const auto s = two_sheet_covering(l);
    const cplx mu = s.mu.value();
    cplx nu[4];
    for (int k = 0; k < 4; ++k) {
      nu[k] = abel.integrate_to_branch_point(k).raw;
      CHECK(lattice_dist(nu[k] - s.gamma[k], mu) < 1e-7);
    }
    CHECK(lattice_dist(nu[2] - nu[1] - 0.5 * mu, mu) < 1e-7);
    CHECK(lattice_dist(nu[1] - nu[0] - 0.5, mu) < 1e-7);
  }
}

TEST_CASE("Abel map vanishes at the base point") {
  const AbelMap abel(kBase);
  CHECK(std::abs(abel.integrate({cplx(1e9, 3e8), 0}).raw) < 1e-8);
  CHECK(std::abs(abel.integrate({cplx(-2e9, 1e9), 0}).raw) < 1e-8);
}

TEST_CASE("a-cycle continuation adds one") {
  const AbelMap abel(kBase);
  const SheetPoint start{cplx(-0.3, 0.0), 0};
  const cplx v0 = abel.integrate(start).raw;
  const std::vector<cplx> loop{cplx(-0.3, -0.3), cplx(1.3, -0.3), cplx(1.3, 0.3), cplx(-0.3, 0.3),
                               cplx(-0.3, 0.0)};
  const AbelValue once = abel.continue_along(start, v0, loop);
  CHECK(once.path_sheet == 0);
  CHECK(std::abs(once.raw - v0 - 1.0) < 1e-7);
  const AbelValue twice = abel.continue_along(start, once.raw, loop);
  CHECK(std::abs(twice.raw - v0 - 2.0) < 1e-7);

  // A loop around a single branch point changes the sheet.
  const std::vector<cplx> around_l1{cplx(-0.2, -0.2), cplx(0.3, -0.2), cplx(0.3, 0.2), cplx(-0.2, 0.2),
                                    cplx(-0.3, 0.0)};
  CHECK(abel.continue_along(start, v0, around_l1).path_sheet == 1);
}

TEST_CASE("paths through a branch point are refused") {
  const AbelMap abel(kBase);
  const SheetPoint start{cplx(-0.3, 0.0), 0};
  CHECK_THROWS_AS(abel.continue_along(start, 0.0, {cplx(0.5, 0.0)}), PathThroughBranchPoint);
  CHECK_NOTHROW(abel.continue_along(start, 0.0, {cplx(0.5, 0.3)}));
}

TEST_CASE("sheet-1 points agree with explicit continuation") {
  for (const auto& l : configurations()) {
    const AbelMap abel(l);
    // Continue from a sheet-0 point straight across the cut [l1, l2].
    const cplx mid = 0.5 * (l[0] + l[1]);
    const cplx n = cplx(0.0, 1.0) * (l[1] - l[0]) * 0.2;
    const SheetPoint p{mid + n, 0};
    const cplx q = mid - n;
    const AbelValue across = abel.continue_along(p, abel.integrate(p).raw, {q});
    const cplx direct = abel.integrate({q, across.path_sheet}).raw;
    CHECK(lattice_dist(across.raw - direct, abel.mu()) < 1e-8);
    const cplx other = abel.integrate({q, 1 - across.path_sheet}).raw;
    CHECK(lattice_dist(across.raw - other, abel.mu()) > 1e-3);
  }
}

TEST_CASE("nu_lambda matches the derivative of the Abel map") {
  const auto s = two_sheet_covering(kBase);
  const AbelMap abel(kBase);
  CHECK(std::abs(nu_lambda(s, 0.0)) < 1e-12);
  for (const cplx target : {cplx(0.7, 0.9), cplx(3.0, 1.5), cplx(-1.0, -0.5)}) {
    const auto nu_at = [&](cplx x) { return abel.integrate({x, 0}).raw; };
    const cplx fd = oracle::richardson(nu_at, target, 1e-3);
    const cplx nu = nu_at(target);
    CHECK(oracle::rel_err(nu_lambda(s, nu), fd) < 1e-5);
    // Double periodicity.
    const cplx mu = s.mu.value();
    CHECK(std::abs(nu_lambda(s, nu + 1.0) - nu_lambda(s, nu)) < 1e-10);
    CHECK(std::abs(nu_lambda(s, nu + mu) - nu_lambda(s, nu)) < 1e-10);
  }
}

TEST_CASE("nu_lambda_m matches moving a branch point") {
  const auto s = two_sheet_covering(kBase);
  const cplx mu = s.mu.value();
  const cplx target(0.7, 0.9);
  for (int m = 0; m < 4; ++m) {
    CHECK(std::abs(nu_lambda_m(s, 0.0, m)) < 1e-12);
    const auto nu_at = [&](cplx d) { return AbelMap(moved(kBase, m, d)).integrate({target, 0}).raw; };
    const cplx fd = oracle::richardson(nu_at, 0.0, 1e-3);
    const cplx nu = nu_at(0.0);
    CHECK(oracle::rel_err(nu_lambda_m(s, nu, m), fd) < 1e-5);
    const cplx jump = nu_lambda_m(s, nu + mu, m) - nu_lambda_m(s, nu, m);
    CHECK(std::abs(jump - kTwoPiI * s.alpha[m]) < 1e-10 * std::abs(s.alpha[m]));
  }
}

TEST_CASE("flow right-hand side") {
  for (const auto& l : configurations()) {
    const auto s = two_sheet_covering(l);
    const cplx mu = s.mu.value();
    for (int m = 0; m < 4; ++m) {
      const FlowRhs r = flow_rhs(s, m);
      cplx sum = 0.0;
      for (const cplx d : r.dalpha) sum += d;
      CHECK(std::abs(sum) < 1e-12 * std::abs(r.dalpha[m]));
      // Lattice rigidity of the differences.
      CHECK(std::abs(r.dgamma[0] - r.dgamma[1]) < 1e-6 * std::abs(r.dgamma[0]) + 1e-10);
      CHECK(std::abs(r.dgamma[1] - r.dgamma[2] + 0.5 * kTwoPiI * s.alpha[m] ) < 1e-6 * std::abs(s.alpha[m]));

      // Rauch formula against five-point differences of the AGM modulus.
      const double h = 1e-3 * std::abs(l[1] - l[0]);
      const auto mu_at = [&](cplx d) { return modulus_from_branch_points(moved(l, m, d)).value(); };
      CHECK(std::abs(oracle::richardson(mu_at, 0.0, h) - r.dmu) / std::abs(s.alpha[m]) < 1e-5);

      // All flows against differences of fresh coverings.
      const auto sp = two_sheet_covering(moved(l, m, h));
      const auto sm = two_sheet_covering(moved(l, m, -h));
      for (int k = 0; k < 4; ++k) {
        const cplx dg = reduce_near_zero(sp.gamma[k] - sm.gamma[k], mu) / (2.0 * h);
        CHECK(std::abs(dg - r.dgamma[k]) < 1e-4 * std::max(1.0, std::abs(r.dgamma[k])));
        const cplx da = (sp.alpha[k] - sm.alpha[k]) / (2.0 * h);
        CHECK(std::abs(da - r.dalpha[k]) < 1e-4 * std::abs(r.dalpha[m]));
      }
    }
  }
  const auto s = two_sheet_covering(kBase);
  CHECK_THROWS_AS(flow_rhs(s, 4), IndexError);
  auto bad = s;
  bad.gamma[1] = bad.gamma[0] + 1.0;
  CHECK_THROWS_AS(flow_rhs(bad, 0), NearSingularity);
}

TEST_CASE("integrated flow reproduces fresh coverings") {
  const auto s = two_sheet_covering(kBase);
  CHECK(integrate_flow(s, {3, kBase[3], kBase[3]}).gamma == s.gamma);

  const cplx end = kBase[3] + cplx(0.4, 0.3);
  double worst_rigidity = 0.0;
  const auto e = integrate_flow(s, {3, kBase[3], end}, [&](double, const EllipticCoveringState& st) {
    const cplx mu = st.mu.value();
    worst_rigidity = std::max(worst_rigidity, std::abs(st.gamma[0] - st.gamma[1] + 0.5));
    worst_rigidity = std::max(worst_rigidity, std::abs(st.gamma[1] - st.gamma[2] + 0.5 * mu));
  });
  CHECK(worst_rigidity < 1e-6);
  CHECK(e.lambda[3] == end);

  const auto fresh = two_sheet_covering(moved(kBase, 3, end - kBase[3]));
  const cplx mu = fresh.mu.value();
  CHECK(std::abs(e.mu.value() - mu) < 1e-6);
  cplx sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    CHECK(lattice_dist(e.gamma[k] - fresh.gamma[k], mu) < 1e-6);
    CHECK(std::abs(e.alpha[k] - fresh.alpha[k]) < 1e-6 * std::abs(fresh.alpha[k]));
    sum += e.alpha[k];
  }
  CHECK(std::abs(sum) < 1e-8 * std::abs(e.alpha[0]));

  const auto back = integrate_flow(e, {3, end, kBase[3]});
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(back.gamma[k] - s.gamma[k]) < 1e-8);
    CHECK(std::abs(back.alpha[k] - s.alpha[k]) < 1e-8 * std::abs(s.alpha[k]));
  }
  CHECK(std::abs(back.mu.value() - s.mu.value()) < 1e-8);
}

TEST_CASE("flows commute around a rectangle") {
  const auto s = two_sheet_covering(kBase);
  const cplx d1(0.2, 0.1), d3(-0.1, 0.25);
  const auto a = integrate_flow(integrate_flow(s, {1, kBase[1], kBase[1] + d1}), {3, kBase[3], kBase[3] + d3});
  const auto b = integrate_flow(integrate_flow(s, {3, kBase[3], kBase[3] + d3}), {1, kBase[1], kBase[1] + d1});
  CHECK(std::abs(a.mu.value() - b.mu.value()) < 1e-6);
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(a.gamma[k] - b.gamma[k]) < 1e-6);
    CHECK(std::abs(a.alpha[k] - b.alpha[k]) < 1e-6 * std::abs(a.alpha[k]));
  }
}

TEST_CASE("flow path errors") {
  const auto s = two_sheet_covering(kBase);
  CHECK_THROWS_AS(integrate_flow(s, {3, kBase[2], kBase[3]}), DegenerateInput);
  // Driving l4 onto l3 collides gamma_3 and gamma_4 only in the limit; the
  // integrator must stop with a singularity or step failure, not return.
  CHECK_THROWS_AS(integrate_flow(s, {3, kBase[3], kBase[2]}), Error);
}

TEST_CASE("trigonometric two-point covering") {
  const cplx l1(0.3, -0.2), l2(1.7, 0.4);
  for (const std::optional<cplx> q : {std::optional<cplx>(cplx(3.0, 1.0)), std::optional<cplx>(cplx(-2.0, 0.5)),
                                      std::optional<cplx>()}) {
    const auto s = build_trig_two_sheet(l1, l2, q);
    CHECK(std::abs(std::exp(kTwoPiI * s.gamma[0]) + std::exp(kTwoPiI * s.gamma[1])) <
          1e-12 * std::abs(std::exp(kTwoPiI * s.gamma[0])));
    CHECK(std::abs(s.gamma[0] - s.gamma[1] - 0.5) < 1e-12);
    CHECK(s.gamma_shift_infinite == !q.has_value());
    const auto r = trig_flow_rhs(s, 0);
    CHECK(std::abs(r.dalpha0[0] + r.dalpha0[1]) < 1e-12 * std::abs(r.dalpha0[0]));
    if (!q) CHECK(std::abs(r.dgamma[0] - r.dgamma[1]) < 1e-10 * std::abs(r.dgamma[0]));
  }
  // Residues cancel as lambda_Q runs off.
  double prev = INFINITY;
  for (const double R : {1e2, 1e4, 1e6}) {
    const auto s = build_trig_two_sheet(l1, l2, cplx(R, 0.3 * R));
    const double sum = std::abs(s.alpha0[0] + s.alpha0[1]);
    CHECK(sum < prev);
    CHECK(sum < 10.0 / R);
    prev = sum;
  }
  CHECK_THROWS_AS(build_trig_two_sheet(l1, l1, std::nullopt), DegenerateInput);
  CHECK_THROWS_AS(build_trig_two_sheet(l1, l2, l2), DegenerateInput);
}

TEST_CASE("trigonometric flows follow the two-point map") {
  const cplx l1(0.3, -0.2), l2(1.7, 0.4);
  const auto at = [&](cplx a, cplx b, std::optional<cplx> q) { return build_trig_two_sheet(a, b, q); };
  for (const std::optional<cplx> q : {std::optional<cplx>(cplx(3.0, 1.0)), std::optional<cplx>()}) {
    const auto s = at(l1, l2, q);
    for (int m = 0; m < 2; ++m) {
      const int n = 1 - m;
      const auto r = trig_flow_rhs(s, m);
      const auto coord = [&](cplx d, auto get) {
        return m == 0 ? get(at(l1 + d, l2, q)) : get(at(l1, l2 + d, q));
      };
      const cplx dgn = oracle::richardson([&](cplx d) { return coord(d, [&](const TrigCoveringState& t) { return t.gamma[n]; }); }, 0.0, 1e-3);
      const cplx dan = oracle::richardson([&](cplx d) { return coord(d, [&](const TrigCoveringState& t) { return t.alpha0[n]; }); }, 0.0, 1e-3);
      CHECK(oracle::rel_err(r.dgamma[n], dgn) < 1e-8);
      CHECK(oracle::rel_err(r.dalpha0[n], dan) < 1e-8);
      if (!q) {
        // The diagonal equations carry no double-point terms, which vanish
        // only for lambda_Q at infinity.
        const cplx dgm = oracle::richardson([&](cplx d) { return coord(d, [&](const TrigCoveringState& t) { return t.gamma[m]; }); }, 0.0, 1e-3);
        const cplx dam = oracle::richardson([&](cplx d) { return coord(d, [&](const TrigCoveringState& t) { return t.alpha0[m]; }); }, 0.0, 1e-3);
        CHECK(oracle::rel_err(r.dgamma[m], dgm) < 1e-8);
        CHECK(oracle::rel_err(r.dalpha0[m], dam) < 1e-8);
      }
    }
  }
}

TEST_CASE("infinite lambda_Q is the limit of large lambda_Q") {
  const cplx l1(0.3, -0.2), l2(1.7, 0.4);
  const auto inf = build_trig_two_sheet(l1, l2, std::nullopt);
  const auto big = build_trig_two_sheet(l1, l2, cplx(1e7, 0.0));
  CHECK(std::abs(big.kappa2 - inf.kappa2) < 1e-6);
  CHECK(std::abs(big.alpha0[0] - inf.alpha0[0]) < 1e-6 * std::abs(inf.alpha0[0]));
  const cplx shift = big.gamma[0] - inf.gamma[0];
  CHECK(std::abs(big.gamma[1] - inf.gamma[1] - shift) < 1e-6);
  for (int m = 0; m < 2; ++m) {
    const auto a = trig_flow_rhs(big, m), b = trig_flow_rhs(inf, m);
    for (int k = 0; k < 2; ++k) {
      CHECK(std::abs(a.dgamma[k] - b.dgamma[k]) < 1e-5 * std::abs(b.dgamma[k]));
      CHECK(std::abs(a.dalpha0[k] - b.dalpha0[k]) < 1e-5 * std::abs(b.dalpha0[k]));
    }
  }
}

TEST_CASE("trigonometric flows are the large-modulus limit of the elliptic flows") {
  const auto t = build_trig_two_sheet(cplx(0.3, -0.2), cplx(1.7, 0.4), cplx(3.0, 1.0));
  EllipticCoveringState e;
  e.N = 1;
  e.lambda = t.lambda;
  e.gamma = t.gamma;
  e.alpha = t.alpha0;
  e.mu = ModularParameter(cplx(0.0, 20.0));
  for (int m = 0; m < 2; ++m) {
    const auto a = trig_flow_rhs(t, m);
    const auto b = flow_rhs(e, m);
    for (int k = 0; k < 2; ++k) {
      CHECK(std::abs(a.dgamma[k] - b.dgamma[k]) < 1e-9 * std::max(1.0, std::abs(a.dgamma[k])));
      CHECK(std::abs(a.dalpha0[k] - b.dalpha[k]) < 1e-9 * std::max(1.0, std::abs(a.dalpha0[k])));
    }
  }
}

TEST_CASE("elliptic Abel images converge to the cylinder as the second cut shrinks") {
  const cplx l1(0.3, -0.2), l2(1.7, 0.4), q(3.0, 1.0);
  const auto t = build_trig_two_sheet(l1, l2, q);
  std::vector<double> err;
  for (const double eps : {1e-2, 1e-3, 1e-4, 1e-6}) {
    const auto s = two_sheet_covering(l1, l2, q - eps, q + eps);
    // Images are compared up to the sign of the Abel map and an integer.
    const cplx d_plus = s.gamma[0] - t.gamma[0];
    const cplx d_minus = s.gamma[0] + t.gamma[0];
    const double e_plus = std::abs(d_plus - std::round(d_plus.real()));
    const double e_minus = std::abs(d_minus - std::round(d_minus.real()));
    err.push_back(std::min(e_plus, e_minus));
    MESSAGE("eps " << eps << " Im mu " << s.mu.value().imag() << " err " << err.back());
  }
  CHECK(err[1] < 0.2 * err[0]);
  CHECK(err[2] < 0.2 * err[1]);
  CHECK(err[3] < 1e-6);
}
