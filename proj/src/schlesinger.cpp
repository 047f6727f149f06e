#include <cmath>
#include <random>
#include <string>

#include "ellcov/errors.hpp"
#include "ellcov/schlesinger.hpp"
#include "ode.hpp"

namespace ellcov {

namespace {

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

std::size_t coeff_count(int K) { return static_cast<std::size_t>(K * K - 1); }

RContext context_for(int K, const ModularParameter& mu, const TruncationPolicy& pol) {
  return RContext(SigmaAlgebra(K), mu, pol);
}

void check_context(const RContext& ctx, const SchlesingerState& sch) {
  if (ctx.K() != sch.K) throw InvalidIndex("Schlesinger data and r-matrix context have different rank");
  if (std::abs(ctx.mu().value() - sch.mu.value()) > 1e-14 * (1.0 + std::abs(sch.mu.value()))) {
    throw InvalidModulus("r-matrix context modulus differs from the Schlesinger modulus");
  }
}

SlkCoefficients random_traceless(std::mt19937_64& gen, const SigmaAlgebra& alg, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  const int K = alg.K();
  Matrix M(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) M(i, j) = cplx(u(gen), u(gen));
  M -= (M.trace() / static_cast<double>(K)) * Matrix::Identity(K, K);
  return alg.expand(M);
}

// Flat layout of a coupled state: gamma, alpha, mu, z, then the A_j coefficients.
struct CoupledLayout {
  std::size_t n;  // branch points
  std::size_t L;
  std::size_t c;  // coefficients per A_j

  explicit CoupledLayout(const CoupledState& s)
      : n(s.cov.size()), L(s.sch.L()), c(coeff_count(s.sch.K)) {}

  std::size_t size() const { return 2 * n + 1 + L + L * c; }
  std::size_t mu() const { return 2 * n; }
  std::size_t z(std::size_t j) const { return 2 * n + 1 + j; }
  std::size_t a(std::size_t j, std::size_t k) const { return 2 * n + 1 + L + j * c + k; }

  std::vector<cplx> pack(const CoupledState& s) const {
    std::vector<cplx> y(size());
    for (std::size_t k = 0; k < n; ++k) {
      y[k] = s.cov.gamma[k];
      y[n + k] = s.cov.alpha[k];
    }
    y[mu()] = s.cov.mu.value();
    for (std::size_t j = 0; j < L; ++j) {
      y[z(j)] = s.sch.z[j];
      for (std::size_t k = 0; k < c; ++k) y[a(j, k)] = s.sch.A[j].values()[k];
    }
    return y;
  }

  // Overwrites the flowing fields of s; the modulus constructor rejects
  // Im mu <= 0 with InvalidModulus.
  void unpack(const std::vector<cplx>& y, CoupledState& s) const {
    for (std::size_t k = 0; k < n; ++k) {
      s.cov.gamma[k] = y[k];
      s.cov.alpha[k] = y[n + k];
    }
    s.cov.mu = ModularParameter(y[mu()]);
    s.sch.mu = s.cov.mu;
    for (std::size_t j = 0; j < L; ++j) {
      s.sch.z[j] = y[z(j)];
      for (std::size_t k = 0; k < c; ++k) s.sch.A[j].values()[k] = y[a(j, k)];
    }
  }

  void pack_rhs(const CoupledRhs& r, std::vector<cplx>& dy) const {
    dy.assign(size(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      dy[k] = r.cov.dgamma[k];
      dy[n + k] = r.cov.dalpha[k];
    }
    dy[mu()] = r.cov.dmu;
    for (std::size_t j = 0; j < L; ++j) {
      dy[z(j)] = r.dz[j];
      for (std::size_t k = 0; k < c; ++k) dy[a(j, k)] = r.dA[j].values()[k];
    }
  }
};

}  // namespace

void SchlesingerState::validate() const {
  if (K < 2) throw InvalidIndex("Schlesinger state: K must be at least 2");
  if (A.size() != z.size()) throw InvalidIndex("Schlesinger state: one residue per pole");
  for (const auto& a : A)
    if (a.values().size() != coeff_count(K)) throw InvalidIndex("Schlesinger state: wrong coefficient count");
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = i + 1; j < z.size(); ++j)
      if (std::abs(reduce_near_zero(z[i] - z[j], mu.value())) < 1e-9) {
        throw DegenerateInput("Schlesinger state: poles " + std::to_string(i) + " and " +
                              std::to_string(j) + " coincide mod the lattice");
      }
}

std::vector<cplx> trace_squares(const SigmaAlgebra& alg, const SchlesingerState& sch) {
  std::vector<cplx> out;
  for (const auto& a : sch.A) {
    const Matrix M = alg.reconstruct(a);
    out.push_back((M * M).trace());
  }
  return out;
}

SchlesingerState make_schlesinger_state(int K, std::vector<cplx> z, std::vector<SlkCoefficients> A,
                                        ModularParameter mu) {
  SchlesingerState s;
  s.K = K;
  s.z = std::move(z);
  s.A = std::move(A);
  s.mu = mu;
  s.validate();
  s.trA2 = trace_squares(SigmaAlgebra(K), s);
  return s;
}

SchlesingerState random_schlesinger_state(int K, std::vector<cplx> z, ModularParameter mu,
                                          unsigned seed, double scale) {
  const SigmaAlgebra alg(K);
  std::mt19937_64 gen(seed);
  std::vector<SlkCoefficients> A;
  for (std::size_t j = 0; j < z.size(); ++j) A.push_back(random_traceless(gen, alg, scale));
  return make_schlesinger_state(K, std::move(z), std::move(A), mu);
}

Matrix a_field(const RContext& ctx, const SchlesingerState& sch, cplx gamma) {
  check_context(ctx, sch);
  Matrix out = Matrix::Zero(sch.K, sch.K);
  for (std::size_t j = 0; j < sch.L(); ++j) out += ctx.contract_r(gamma - sch.z[j], sch.A[j]);
  return out;
}

SchlesingerRhs schlesinger_rhs(const RContext& ctx, const SchlesingerState& sch) {
  check_context(ctx, sch);
  const SigmaAlgebra& alg = ctx.algebra();
  const std::size_t L = sch.L();
  std::vector<Matrix> A;
  for (const auto& a : sch.A) A.push_back(alg.reconstruct(a));

  SchlesingerRhs out;
  out.dz.assign(L, std::vector<SlkCoefficients>(L, SlkCoefficients(sch.K)));
  out.dmu.assign(L, SlkCoefficients(sch.K));
  for (std::size_t i = 0; i < L; ++i) {
    Matrix diag = Matrix::Zero(sch.K, sch.K);
    Matrix dmu = Matrix::Zero(sch.K, sch.K);
    for (std::size_t j = 0; j < L; ++j) {
      const cplx d = sch.z[i] - sch.z[j];
      dmu -= commutator(A[i], ctx.contract_Z(d, sch.A[j]));
      if (j == i) continue;
      const Matrix c = commutator(A[i], ctx.contract_r(d, sch.A[j]));
      out.dz[i][j] = alg.expand(c);
      diag -= c;
    }
    out.dz[i][i] = alg.expand(diag);
    out.dmu[i] = alg.expand(dmu);
  }
  return out;
}

Hamiltonians hamiltonians(const RContext& ctx, const SchlesingerState& sch) {
  check_context(ctx, sch);
  const SigmaAlgebra& alg = ctx.algebra();
  Hamiltonians out{std::vector<cplx>(sch.L(), 0.0), 0.0};
  for (std::size_t i = 0; i < sch.L(); ++i) {
    const Matrix Ai = alg.reconstruct(sch.A[i]);
    for (std::size_t j = 0; j < sch.L(); ++j) {
      const cplx d = sch.z[i] - sch.z[j];
      out.H_mu += 0.5 * (Ai * ctx.contract_Z(d, sch.A[j])).trace();
      if (j != i) out.H[i] += (Ai * ctx.contract_r(d, sch.A[j])).trace();
    }
  }
  return out;
}

SchlesingerRun integrate_schlesinger(const SchlesingerState& sch, const SchlesingerPath& path,
                                     TruncationPolicy pol) {
  sch.validate();
  const std::size_t L = sch.L();
  const bool along_mu = path.variable == -1;
  if (!along_mu && (path.variable < 0 || static_cast<std::size_t>(path.variable) >= L)) {
    throw IndexError("integrate_schlesinger: variable " + std::to_string(path.variable) + " out of range");
  }
  const cplx current = along_mu ? sch.mu.value() : sch.z[path.variable];
  if (std::abs(current - path.start) > 1e-12 * (1.0 + std::abs(path.start))) {
    throw DegenerateInput("integrate_schlesinger: path start does not match the current value");
  }

  const SigmaAlgebra alg(sch.K);
  const std::vector<cplx> tr0 = sch.trA2.size() == L ? sch.trA2 : trace_squares(alg, sch);
  const auto ham_values = [&](const SchlesingerState& s) {
    const Hamiltonians h = hamiltonians(context_for(s.K, s.mu, pol), s);
    std::vector<cplx> v = h.H;
    v.push_back(h.H_mu);
    return v;
  };
  const std::vector<cplx> h0 = ham_values(sch);

  SchlesingerRun run{sch, std::vector<double>(L, 0.0), std::vector<double>(L + 1, 0.0)};
  run.end.trA2 = tr0;
  const cplx delta = path.end - path.start;
  if (delta == 0.0) return run;

  const std::size_t c = coeff_count(sch.K);
  SchlesingerState work = sch;
  const auto unpack = [&](const detail::OdeState& y, double t) {
    for (std::size_t j = 0; j < L; ++j)
      for (std::size_t k = 0; k < c; ++k) work.A[j].values()[k] = y[j * c + k];
    const cplx x = path.start + t * delta;
    if (along_mu) {
      work.mu = ModularParameter(x);
    } else {
      work.z[path.variable] = x;
    }
  };
  detail::OdeState y0(L * c);
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t k = 0; k < c; ++k) y0[j * c + k] = sch.A[j].values()[k];

  const auto f = [&](double t, const detail::OdeState& y, detail::OdeState& dy) {
    unpack(y, t);
    const SchlesingerRhs r = schlesinger_rhs(context_for(work.K, work.mu, pol), work);
    dy.resize(y.size());
    for (std::size_t j = 0; j < L; ++j) {
      const SlkCoefficients& d = along_mu ? r.dmu[j] : r.dz[j][path.variable];
      for (std::size_t k = 0; k < c; ++k) dy[j * c + k] = delta * d.values()[k];
    }
  };
  const auto observe = [&](double t, const detail::OdeState& y) {
    unpack(y, t);
    const auto tr = trace_squares(alg, work);
    for (std::size_t j = 0; j < L; ++j) run.trA2_drift[j] = std::max(run.trA2_drift[j], std::abs(tr[j] - tr0[j]));
    const auto h = ham_values(work);
    for (std::size_t k = 0; k <= L; ++k)
      run.hamiltonian_variation[k] = std::max(run.hamiltonian_variation[k], std::abs(h[k] - h0[k]));
  };

  detail::OdeOptions opt;
  opt.max_step = path.max_step;
  opt.abs_tol = path.abs_tol;
  opt.rel_tol = path.rel_tol;
  const detail::OdeState y1 = detail::integrate_unit_interval(y0, f, opt, observe);
  unpack(y1, 1.0);
  if (along_mu) {
    work.mu = ModularParameter(path.end);
  } else {
    work.z[path.variable] = path.end;
  }
  run.end = work;
  run.end.trA2 = tr0;
  return run;
}

// ---------------------------------------------------------------------------

void CoupledState::validate() const {
  cov.validate();
  sch.validate();
  if (std::abs(cov.mu.value() - sch.mu.value()) > 1e-14 * (1.0 + std::abs(cov.mu.value()))) {
    throw InvalidModulus("coupled state: covering and Schlesinger moduli differ");
  }
  if (Q.size() != sch.L()) throw InvalidIndex("coupled state: one point Q_j per pole");
  for (std::size_t m = 0; m < cov.size(); ++m)
    for (std::size_t j = 0; j < sch.L(); ++j)
      if (std::abs(reduce_near_zero(cov.gamma[m] - sch.z[j], cov.mu.value())) < 1e-9) {
        throw DegenerateInput("coupled state: z_" + std::to_string(j) + " sits on gamma_" + std::to_string(m));
      }
}

CoupledState make_coupled_state(const EllipticCoveringState& cov, const std::vector<SheetPoint>& Q,
                                std::vector<SlkCoefficients> A, int K) {
  if (cov.N != 2 || cov.lambda.size() != 4) {
    throw DegenerateInput("make_coupled_state: needs a two-sheet covering");
  }
  const AbelMap abel(BranchPoints{cov.lambda[0], cov.lambda[1], cov.lambda[2], cov.lambda[3]});
  std::vector<cplx> z;
  for (const auto& q : Q) z.push_back(reduce_to_cell(abel.integrate(q).raw, cov.mu.value()));
  CoupledState c{cov, make_schlesinger_state(K, std::move(z), std::move(A), cov.mu), Q};
  c.validate();
  return c;
}

CoupledState random_coupled_state(const EllipticCoveringState& cov, const std::vector<SheetPoint>& Q,
                                  int K, unsigned seed, double scale) {
  const SigmaAlgebra alg(K);
  std::mt19937_64 gen(seed);
  std::vector<SlkCoefficients> A;
  for (std::size_t j = 0; j < Q.size(); ++j) A.push_back(random_traceless(gen, alg, scale));
  return make_coupled_state(cov, Q, std::move(A), K);
}

JState induced_j(const RContext& ctx, const CoupledState& c) {
  check_context(ctx, c.sch);
  JState J{c.sch.K, {}};
  for (std::size_t m = 0; m < c.cov.size(); ++m) {
    Matrix sum = Matrix::Zero(c.sch.K, c.sch.K);
    for (std::size_t j = 0; j < c.sch.L(); ++j) sum += ctx.contract_r(c.cov.gamma[m] - c.sch.z[j], c.sch.A[j]);
    J.J.push_back(ctx.algebra().expand(-c.cov.alpha[m] * sum));
  }
  return J;
}

namespace {

CoupledRhs coupled_rhs_from(const CoupledState& c, const SchlesingerRhs& srhs, int m) {
  CoupledRhs out{flow_rhs(c.cov, m), {}, {}};
  const std::size_t L = c.sch.L();
  for (std::size_t j = 0; j < L; ++j) out.dz.push_back(nu_lambda_m(c.cov, c.sch.z[j], m));
  const cplx dmu = out.cov.dmu;
  for (std::size_t i = 0; i < L; ++i) {
    SlkCoefficients d = dmu * srhs.dmu[i];
    for (std::size_t j = 0; j < L; ++j) d = d + out.dz[j] * srhs.dz[i][j];
    out.dA.push_back(d);
  }
  return out;
}

}  // namespace

CoupledRhs coupled_rhs(const RContext& ctx, const CoupledState& c, int m) {
  return coupled_rhs_from(c, schlesinger_rhs(ctx, c.sch), m);
}

JDerivatives induced_j_derivative(const RContext& ctx, const CoupledState& c) {
  check_context(ctx, c.sch);
  const SigmaAlgebra& alg = ctx.algebra();
  const std::size_t n = c.cov.size();
  const std::size_t L = c.sch.L();
  const SchlesingerRhs srhs = schlesinger_rhs(ctx, c.sch);
  JDerivatives out;
  out.d.assign(n, std::vector<SlkCoefficients>(n, SlkCoefficients(c.sch.K)));
  for (std::size_t b = 0; b < n; ++b) {
    const CoupledRhs r = coupled_rhs_from(c, srhs, static_cast<int>(b));
    for (std::size_t k = 0; k < n; ++k) {
      const cplx ak = c.cov.alpha[k];
      Matrix sum = Matrix::Zero(c.sch.K, c.sch.K);
      Matrix dsum = Matrix::Zero(c.sch.K, c.sch.K);
      for (std::size_t j = 0; j < L; ++j) {
        const cplx g = c.cov.gamma[k] - c.sch.z[j];
        const SlkCoefficients& A = c.sch.A[j];
        sum += ctx.contract_r(g, A);
        dsum += ctx.contract_r_prime(g, A) * (r.cov.dgamma[k] - r.dz[j]) +
                ctx.contract_r_dmu(g, A) * r.cov.dmu + ctx.contract_r(g, r.dA[j]);
      }
      out.d[k][b] = alg.expand(-r.cov.dalpha[k] * sum - ak * dsum);
    }
  }
  return out;
}

CoupledState coupled_flow(const CoupledState& c, const FlowPath& path, TruncationPolicy pol,
                          const CoupledObserver& observer) {
  if (path.m < 0 || static_cast<std::size_t>(path.m) >= c.cov.size()) {
    throw IndexError("coupled_flow: index " + std::to_string(path.m) + " out of range");
  }
  if (std::abs(c.cov.lambda[path.m] - path.start) > 1e-12 * (1.0 + std::abs(path.start))) {
    throw DegenerateInput("coupled_flow: path start does not match lambda_m");
  }
  const cplx delta = path.end - path.start;
  if (delta == 0.0) return c;

  const CoupledLayout layout(c);
  CoupledState work = c;
  const auto unpack = [&](const detail::OdeState& y, double t) {
    layout.unpack(y, work);
    work.cov.lambda[path.m] = path.start + t * delta;
  };
  const auto f = [&](double t, const detail::OdeState& y, detail::OdeState& dy) {
    unpack(y, t);
    const CoupledRhs r = coupled_rhs(context_for(work.sch.K, work.sch.mu, pol), work, path.m);
    layout.pack_rhs(r, dy);
    for (auto& v : dy) v *= delta;
  };
  std::function<void(double, const detail::OdeState&)> obs;
  if (observer) {
    obs = [&](double t, const detail::OdeState& y) {
      unpack(y, t);
      observer(t, work);
    };
  }
  detail::OdeOptions opt;
  opt.max_step = path.max_step;
  opt.abs_tol = path.abs_tol;
  opt.rel_tol = path.rel_tol;
  const detail::OdeState y1 = detail::integrate_unit_interval(layout.pack(c), f, opt, obs);
  unpack(y1, 1.0);
  work.cov.lambda[path.m] = path.end;
  return work;
}

cplx tau_relation_residual(const RContext& ctx, const CoupledState& c, int m) {
  if (m < 0 || static_cast<std::size_t>(m) >= c.cov.size()) {
    throw IndexError("tau_relation_residual: index " + std::to_string(m) + " out of range");
  }
  const JState J = induced_j(ctx, c);
  const cplx lhs = tau_rhs(ctx.algebra(), c.cov, J, m);
  const Hamiltonians h = hamiltonians(ctx, c.sch);
  const auto tr = trace_squares(ctx.algebra(), c.sch);
  const cplx am = c.cov.alpha[m];
  cplx rhs = h.H_mu * kTwoPiI * am;
  for (std::size_t j = 0; j < c.sch.L(); ++j) {
    rhs += h.H[j] * nu_lambda_m(c.cov, c.sch.z[j], m);
    rhs += 0.5 * tr[j] * (-am * rho_prime(c.sch.z[j] - c.cov.gamma[m], c.cov.mu));
  }
  return lhs - rhs;
}

// ---------------------------------------------------------------------------

CoupledJSource::CoupledJSource(CoupledState c, TruncationPolicy pol) : c_(std::move(c)), pol_(pol) {}

CoupledState CoupledJSource::unpack(const std::vector<cplx>& y) const {
  CoupledState s = c_;
  CoupledLayout(c_).unpack(y, s);
  return s;
}

std::vector<cplx> CoupledJSource::state() const { return CoupledLayout(c_).pack(c_); }

void CoupledJSource::derivative(int m, const std::vector<cplx>& y, std::vector<cplx>& dy) const {
  const CoupledState s = unpack(y);
  CoupledLayout(c_).pack_rhs(coupled_rhs(context_for(s.sch.K, s.sch.mu, pol_), s, m), dy);
}

cplx CoupledJSource::log_tau_rate(int m, const std::vector<cplx>& y) const {
  const CoupledState s = unpack(y);
  const RContext ctx = context_for(s.sch.K, s.sch.mu, pol_);
  return tau_rhs(ctx.algebra(), s.cov, induced_j(ctx, s), m);
}

std::unique_ptr<JSource> CoupledJSource::at(const std::vector<cplx>& y, int m, cplx lambda) const {
  CoupledState s = unpack(y);
  s.cov.lambda[static_cast<std::size_t>(m)] = lambda;
  return std::make_unique<CoupledJSource>(std::move(s), pol_);
}

}  // namespace ellcov
