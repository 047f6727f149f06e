#include <algorithm>
#include <cmath>
#include <string>

#include "ellcov/covering.hpp"
#include "ellcov/errors.hpp"
#include "ode.hpp"

namespace ellcov {

namespace {

constexpr cplx kI{0.0, 1.0};

void check_index(const EllipticCoveringState& s, int m) {
  if (m < 0 || static_cast<std::size_t>(m) >= s.size()) {
    throw IndexError("branch point index " + std::to_string(m) + " out of range");
  }
}

}  // namespace

void EllipticCoveringState::validate() const {
  const std::size_t n = static_cast<std::size_t>(2 * N);
  if (N < 1 || lambda.size() != n || gamma.size() != n || alpha.size() != n) {
    throw DegenerateInput("covering state: lambda, gamma and alpha must each have 2N entries");
  }
  double scale = 0.0;
  for (const cplx x : lambda) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(lambda[i] - lambda[j]) <= 1e-9 * std::max(scale, 1.0)) {
        throw DegenerateBranchPoints("covering state: branch points " + std::to_string(i) + " and " +
                                     std::to_string(j) + " coincide");
      }
  cplx sum = 0.0;
  double amax = 0.0;
  for (const cplx a : alpha) {
    sum += a;
    amax = std::max(amax, std::abs(a));
  }
  if (std::abs(sum) > 1e-9 * std::max(amax, 1e-300)) {
    throw DegenerateInput("covering state: residues do not sum to zero (|sum| = " +
                          std::to_string(std::abs(sum)) + ")");
  }
}

std::array<cplx, 4> alpha_direct(const BranchPoints& l, cplx A) {
  std::array<cplx, 4> out{};
  for (int m = 0; m < 4; ++m) {
    cplx p = A * A;
    for (int k = 0; k < 4; ++k)
      if (k != m) p *= l[m] - l[k];
    out[m] = 2.0 / p;
  }
  return out;
}

std::array<cplx, 4> alpha_thomae(const BranchPoints& l, const ModularParameter& mu) {
  const cplx t4 = theta_constants(mu).theta4;
  const cplx c = 2.0 * kPi * kPi * t4 * t4 * t4 * t4;
  const cplx &l1 = l[0], &l2 = l[1], &l3 = l[2], &l4 = l[3];
  return {(l3 - l2) / (c * (l1 - l2) * (l1 - l3)), -(l1 - l4) / (c * (l2 - l1) * (l2 - l4)),
          (l1 - l4) / (c * (l3 - l1) * (l3 - l4)), -(l3 - l2) / (c * (l4 - l2) * (l4 - l3))};
}

EllipticCoveringState two_sheet_covering(const BranchPoints& l) {
  const AbelMap abel(l);
  EllipticCoveringState s;
  s.N = 2;
  s.mu = ModularParameter(abel.mu());
  const cplx mu = s.mu.value();
  s.lambda.assign(l.begin(), l.end());
  const auto a = alpha_thomae(l, s.mu);
  s.alpha.assign(a.begin(), a.end());
  s.basepoint_shift = reduce_to_cell(abel.integrate_to_branch_point(0).raw, mu);
  for (const cplx g : {cplx(0.0), cplx(0.5), 0.5 + 0.5 * mu, 0.5 * mu}) {
    s.gamma.push_back(g + s.basepoint_shift);
  }
  return s;
}

EllipticCoveringState two_sheet_covering(cplx l1, cplx l2, cplx l3, cplx l4) {
  return two_sheet_covering(BranchPoints{l1, l2, l3, l4});
}

cplx nu_lambda(const EllipticCoveringState& s, cplx nu) {
  cplx out = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    out += s.alpha[k] * (rho(nu - s.gamma[k], s.mu) + rho(s.gamma[k], s.mu));
  }
  return out;
}

cplx nu_lambda_m(const EllipticCoveringState& s, cplx nu, int m) {
  check_index(s, m);
  return -s.alpha[m] * (rho(nu - s.gamma[m], s.mu) + rho(s.gamma[m], s.mu));
}

FlowRhs flow_rhs(const EllipticCoveringState& s, int m) {
  check_index(s, m);
  const std::size_t n = s.size();
  FlowRhs out{std::vector<cplx>(n, 0.0), std::vector<cplx>(n, 0.0), kTwoPiI * s.alpha[m]};
  const cplx gm = s.gamma[m];
  const cplx am = s.alpha[m];
  const cplx rho_m = rho(gm, s.mu);
  for (std::size_t k = 0; k < n; ++k) {
    if (static_cast<int>(k) == m) continue;
    const cplx d = s.gamma[k] - gm;
    const cplx rp = rho_prime(d, s.mu);
    out.dgamma[k] = -am * (rho(d, s.mu) + rho_m);
    out.dgamma[m] += s.alpha[k] * (rho(-d, s.mu) + rho(s.gamma[k], s.mu));
    out.dalpha[k] = -2.0 * s.alpha[k] * am * rp;
    out.dalpha[m] += 2.0 * s.alpha[k] * am * rp;
  }
  return out;
}

EllipticCoveringState integrate_flow(const EllipticCoveringState& s, const FlowPath& path,
                                     const FlowObserver& observer) {
  check_index(s, path.m);
  if (std::abs(s.lambda[path.m] - path.start) > 1e-12 * (1.0 + std::abs(path.start))) {
    throw DegenerateInput("integrate_flow: path start does not match lambda_m");
  }
  const std::size_t n = s.size();
  const cplx delta = path.end - path.start;
  if (delta == 0.0) return s;

  EllipticCoveringState work = s;
  const auto unpack = [&](const detail::OdeState& y, double t) {
    for (std::size_t k = 0; k < n; ++k) {
      work.gamma[k] = y[k];
      work.alpha[k] = y[n + k];
    }
    work.mu = ModularParameter(y[2 * n]);
    work.lambda[path.m] = path.start + t * delta;
  };

  detail::OdeState y0(2 * n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    y0[k] = s.gamma[k];
    y0[n + k] = s.alpha[k];
  }
  y0[2 * n] = s.mu.value();

  const auto f = [&](double t, const detail::OdeState& y, detail::OdeState& dy) {
    unpack(y, t);
    const FlowRhs r = flow_rhs(work, path.m);
    dy.resize(y.size());
    for (std::size_t k = 0; k < n; ++k) {
      dy[k] = delta * r.dgamma[k];
      dy[n + k] = delta * r.dalpha[k];
    }
    dy[2 * n] = delta * r.dmu;
  };

  detail::OdeOptions opt;
  opt.max_step = path.max_step;
  opt.abs_tol = path.abs_tol;
  opt.rel_tol = path.rel_tol;
  std::function<void(double, const detail::OdeState&)> obs;
  if (observer) {
    obs = [&](double t, const detail::OdeState& y) {
      unpack(y, t);
      observer(t, work);
    };
  }
  const detail::OdeState y1 = detail::integrate_unit_interval(y0, f, opt, obs);
  unpack(y1, 1.0);
  work.lambda[path.m] = path.end;
  return work;
}

}  // namespace ellcov
