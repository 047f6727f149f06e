#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include <boost/multiprecision/cpp_complex.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include "ellcov/errors.hpp"
#include "ellcov/scenario.hpp"
#include "ellcov/theta_series.hpp"
#include "theta_kernels.hpp"

namespace ellcov {

namespace {

constexpr cplx kI{0.0, 1.0};
const BranchPoints kDefaultBranchPoints{cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(2.3, 0.4), cplx(4.0, -0.3)};

using Tolerances = std::map<std::string, double>;

// ---------------------------------------------------------------------------
// Check bookkeeping.

class Checks {
 public:
  explicit Checks(const Json& tol) : tol_(tol) {}

  double tolerance(const std::string& family) const { return tol_.at(family).get<double>(); }

  void add(const std::string& name, const std::string& family, cplx value) {
    const double t = tolerance(family);
    const bool ok = std::isfinite(value.real()) && std::isfinite(value.imag()) && std::abs(value) < t;
    out_.push_back({name, value, t, ok, {}});
  }

  // Runs f and records its value; library errors become failed checks.
  template <class F>
  void run(const std::string& name, const std::string& family, F&& f) {
    try {
      add(name, family, f());
    } catch (const Error& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out_.push_back({name, cplx(nan, nan), tolerance(family), false, e.what()});
    }
  }

  // Runs a setup step; records a failed check only if it raises.
  template <class F>
  bool guard(const std::string& name, const std::string& family, F&& f) {
    try {
      f();
      return true;
    } catch (const Error& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out_.push_back({name, cplx(nan, nan), tolerance(family), false, e.what()});
      return false;
    }
  }

  std::vector<CheckRecord> take() { return std::move(out_); }

 private:
  const Json& tol_;
  std::vector<CheckRecord> out_;
};

struct ScenarioDef {
  Json params;  // defaults
  Tolerances tolerances;
  std::function<void(const ScenarioConfig&, Checks&)> run;
};

// Largest residual seen so far, kept with its phase.
struct Worst {
  cplx value{0.0, 0.0};
  void operator()(cplx v) {
    if (!(std::abs(v) <= std::abs(value))) value = v;
  }
};

std::string tag(const char* prefix, int k) { return std::string(prefix) + std::to_string(k); }

std::string mu_tag(cplx mu) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "mu=%g%+gi", mu.real(), mu.imag());
  return buf;
}

// ---------------------------------------------------------------------------
// Config helpers.

cplx param_complex(const Json& j, const std::string& key) {
  try {
    return complex_from_json(j.at(key), key);
  } catch (const StateFormatError& e) {
    throw ConfigError(e.what());
  }
}

int param_int(const Json& j, const std::string& key, int lo, int hi) {
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(key + ": expected an integer");
  const int x = v.get<int>();
  if (x < lo || x > hi) {
    throw ConfigError(key + ": " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return x;
}

double param_double(const Json& j, const std::string& key) {
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(key + ": expected a number");
  return v.get<double>();
}

BranchPoints param_branch_points(const Json& j) {
  const Json& v = j.at("branch_points");
  if (!v.is_array() || v.size() != 4) throw ConfigError("branch_points: expected four [re, im] pairs");
  BranchPoints l;
  double scale = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    try {
      l[k] = complex_from_json(v[k], "branch_points[" + std::to_string(k) + "]");
    } catch (const StateFormatError& e) {
      throw ConfigError(e.what());
    }
    if (!std::isfinite(l[k].real()) || !std::isfinite(l[k].imag())) {
      throw ConfigError("branch_points[" + std::to_string(k) + "] is not finite");
    }
    scale = std::max(scale, std::abs(l[k]));
  }
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b)
      if (std::abs(l[a] - l[b]) <= 1e-9 * std::max(scale, 1.0)) {
        throw ConfigError("branch_points[" + std::to_string(a) + "] and branch_points[" + std::to_string(b) +
                          "] coincide");
      }
  return l;
}

double min_separation(const BranchPoints& l) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) d = std::min(d, std::abs(l[a] - l[b]));
  return d;
}

double max_separation(const BranchPoints& l) {
  double d = 0.0;
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) d = std::max(d, std::abs(l[a] - l[b]));
  return d;
}

Json branch_points_json(const BranchPoints& l) {
  Json out = Json::array();
  for (const cplx z : l) out.push_back(complex_to_json(z));
  return out;
}

BranchPoints moved(BranchPoints l, int m, cplx d) {
  l[static_cast<std::size_t>(m)] += d;
  return l;
}

double distance_to_segment(cplx p, cplx a, cplx b) {
  const cplx d = b - a;
  const double t = std::clamp(((p - a) * std::conj(d)).real() / std::norm(d), 0.0, 1.0);
  return std::abs(p - (a + t * d));
}

double segment_distance(cplx a, cplx b, cplx c, cplx d) {
  // Proper crossings have distance 0.
  const auto orient = [](cplx p, cplx q, cplx r) { return ((q - p) * std::conj(r - p)).imag(); };
  const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 * o2 < 0.0 && o3 * o4 < 0.0) return 0.0;
  return std::min({distance_to_segment(c, a, b), distance_to_segment(d, a, b), distance_to_segment(a, c, d),
                   distance_to_segment(b, c, d)});
}

cplx richardson(const std::function<cplx(cplx)>& f, cplx x, cplx h) {
  const cplx d1 = (f(x + h) - f(x - h)) / (2.0 * h);
  const cplx d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

// ---------------------------------------------------------------------------
// Shared numerical pieces.

Matrix dense_r(const SigmaAlgebra& alg, const SlkCoefficients& w) {
  const int K = alg.K();
  Matrix r = Matrix::Zero(K * K, K * K);
  for (const auto& idx : alg.indices()) {
    r += w[idx] * Eigen::kroneckerProduct(alg.sigma(idx), alg.sigma_dual(idx)).eval();
  }
  return r;
}

Matrix swap_operator(int K) {
  Matrix P = Matrix::Zero(K * K, K * K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) P(i * K + j, j * K + i) = 1.0;
  return P;
}

PauliCoefficients random_pauli(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PauliCoefficients p;
  for (auto& v : p) v = cplx(u(gen), u(gen));
  return p;
}

PauliCoefficients negated(PauliCoefficients p) {
  for (auto& v : p) v = -v;
  return p;
}

cplx max_diff(const PauliCoefficients& a, const PauliCoefficients& b) {
  Worst w;
  for (int i = 0; i < 3; ++i) w(a[i] - b[i]);
  return w.value;
}

cplx max_diff(const SlkCoefficients& a, const SlkCoefficients& b) {
  Worst w;
  for (std::size_t k = 0; k < a.values().size(); ++k) w(a.values()[k] - b.values()[k]);
  return w.value;
}

RContext context_of(const CoupledState& c) { return RContext(SigmaAlgebra(c.sch.K), c.sch.mu); }

CoupledState coupled_moved(const CoupledState& c, int n, cplx d) {
  return coupled_flow(c, FlowPath{n, c.cov.lambda[n], c.cov.lambda[n] + d});
}

// ---------------------------------------------------------------------------
// identity-suite

void run_identity_suite(const ScenarioConfig& cfg, Checks& checks) {
  const Json& p = cfg.params;
  const int K = param_int(p, "K", 2, 6);
  const cplx mu_v = param_complex(p, "mu");
  const int samples = param_int(p, "samples", 1, 100000);
  std::mt19937_64 gen(cfg.seed);
  std::uniform_real_distribution<double> u(0.1, 0.9);

  const ModularParameter mu(mu_v);
  const RContext ctx(K, mu_v);
  const SigmaAlgebra& alg = ctx.algebra();
  const auto cell_point = [&] { return u(gen) + u(gen) * mu_v; };
  const auto off_lattice = [&](cplx z) { return std::abs(reduce_near_zero(z, mu_v)) > 0.05; };
  std::vector<cplx> pts;
  while (static_cast<int>(pts.size()) < samples) {
    const cplx g = cell_point();
    if (off_lattice(g)) pts.push_back(g);
  }
  const std::string suffix = "[K=" + std::to_string(K) + "," + mu_tag(mu_v) + "]";

  // Heat equation: d theta / d mu (finite differences) = theta'' / (4 pi i).
  const std::pair<const char*, Characteristic> chars[] = {
      {"theta1", Characteristic::odd()},
      {"theta2", Characteristic::theta2()},
      {"theta3", Characteristic::theta3()},
      {"theta4", Characteristic::theta4()},
  };
  for (const auto& [name, ch] : chars) {
    checks.run(std::string("heat.") + name + suffix, "heat", [&] {
      Worst w;
      for (const cplx g : pts) {
        const auto f = [&](cplx m) { return theta(ch, g, ModularParameter(m)); };
        const cplx fd = richardson(f, mu_v, 1e-4);
        const cplx rhs = theta_dgamma(ch, g, mu, 2) / (4.0 * kPi * kI);
        w((fd - rhs) / std::max(1.0, std::abs(rhs)));
      }
      return w.value;
    });
  }

  checks.run("rho_period.one" + suffix, "rho_period", [&] {
    Worst w;
    for (const cplx g : pts) w(rho(g + 1.0, mu) - rho(g, mu));
    return w.value;
  });
  checks.run("rho_period.mu" + suffix, "rho_period", [&] {
    Worst w;
    for (const cplx g : pts) w(rho(g + mu_v, mu) - rho(g, mu) + kTwoPiI);
    return w.value;
  });

  const auto per_index = [&](const std::function<cplx(const SigmaIndex&, cplx)>& f) {
    Worst w;
    for (const cplx g : pts)
      for (const auto& idx : alg.indices()) w(f(idx, g));
    return w.value;
  };
  checks.run("w_twist.one" + suffix, "w_twist", [&] {
    return per_index([&](const SigmaIndex& i, cplx g) {
      const cplx v = ctx.w(i, g);
      return (ctx.w(i, g + 1.0) - alg.eps_pow(i.A) * v) / std::max(1.0, std::abs(v));
    });
  });
  checks.run("w_twist.mu" + suffix, "w_twist", [&] {
    return per_index([&](const SigmaIndex& i, cplx g) {
      const cplx v = ctx.w(i, g);
      return (ctx.w(i, g + mu_v) - alg.eps_pow(i.B) * v) / std::max(1.0, std::abs(v));
    });
  });
  checks.run("Z_twist.one" + suffix, "Z_twist", [&] {
    return per_index([&](const SigmaIndex& i, cplx g) {
      const cplx z = ctx.Z(i, g);
      return (ctx.Z(i, g + 1.0) - alg.eps_pow(i.A) * z) / std::max(1.0, std::abs(z));
    });
  });
  checks.run("Z_twist.mu" + suffix, "Z_twist", [&] {
    return per_index([&](const SigmaIndex& i, cplx g) {
      const cplx ref = alg.eps_pow(i.B) * (ctx.Z(i, g) - ctx.w(i, g));
      return (ctx.Z(i, g + mu_v) - ref) / std::max(1.0, std::abs(ref));
    });
  });

  // d_mu w (differences in mu) = d_gamma Z (differences in gamma).
  checks.run("der_link" + suffix, "der_link", [&] {
    const double h = 1e-5;
    const RContext up(K, mu_v + h), down(K, mu_v - h), up2(K, mu_v + 0.5 * h), down2(K, mu_v - 0.5 * h);
    return per_index([&](const SigmaIndex& i, cplx g) {
      const cplx d1 = (up.w(i, g) - down.w(i, g)) / (2.0 * h);
      const cplx d2 = (up2.w(i, g) - down2.w(i, g)) / h;
      const cplx dmu = (4.0 * d2 - d1) / 3.0;
      const cplx dz = richardson([&](cplx x) { return ctx.Z(i, x); }, g, 1e-4);
      return (dmu - dz) / std::max(1.0, std::abs(dz));
    });
  });

  const Matrix P = swap_operator(K);
  const Matrix IdK = Matrix::Identity(K, K);
  checks.run("r_antisymmetry" + suffix, "r_antisymmetry", [&] {
    Worst w;
    for (const cplx g : pts) {
      const Matrix r = dense_r(alg, ctx.w_table(g));
      const Matrix rn = dense_r(alg, ctx.w_table(-g));
      w((r + P * rn * P).norm() / std::max(1.0, r.norm()));
    }
    return w.value;
  });
  checks.run("bundle.one" + suffix, "bundle", [&] {
    const Matrix F1 = Eigen::kroneckerProduct(alg.F(), IdK).eval();
    const Matrix F1inv = Eigen::kroneckerProduct(Matrix(alg.F().inverse()), IdK).eval();
    Worst w;
    for (const cplx g : pts) {
      const Matrix r = dense_r(alg, ctx.w_table(g));
      w((dense_r(alg, ctx.w_table(g + 1.0)) - F1inv * r * F1).norm() / std::max(1.0, r.norm()));
    }
    return w.value;
  });
  checks.run("bundle.mu" + suffix, "bundle", [&] {
    const Matrix H1 = Eigen::kroneckerProduct(alg.H(), IdK).eval();
    const Matrix H1inv = Eigen::kroneckerProduct(Matrix(alg.H().inverse()), IdK).eval();
    Worst w;
    for (const cplx g : pts) {
      const Matrix r = dense_r(alg, ctx.w_table(g));
      w((dense_r(alg, ctx.w_table(g + mu_v)) - H1 * r * H1inv).norm() / std::max(1.0, r.norm()));
    }
    return w.value;
  });

  // Auxiliary identities; triples with differences near the lattice are redrawn.
  std::vector<std::array<cplx, 3>> triples;
  while (static_cast<int>(triples.size()) < samples) {
    const cplx g = cell_point(), zi = cell_point(), zj = cell_point();
    if (off_lattice(zi - zj) && off_lattice(g - zi) && off_lattice(g - zj) && off_lattice(g) && off_lattice(0.5 * g)) {
      triples.push_back({g, zi, zj});
    }
  }
  const auto rel = [](cplx a, cplx b) { return (a - b) / std::max(1.0, std::abs(a)); };
  checks.run("A1" + suffix, "A1", [&] {
    Worst w;
    for (const auto& [g, zi, zj] : triples)
      for (const auto& i : alg.indices()) {
        const auto n = i.negated(K);
        const cplx lhs = ctx.w(i, zi - zj) * (rho(zj - g, mu) - rho(zi - g, mu));
        const cplx rhs = ctx.w(i, g - zj) * ctx.w(n, g - zi) - kTwoPiI * ctx.Z(i, zi - zj);
        w(rel(lhs, rhs));
      }
    return w.value;
  });
  checks.run("A2" + suffix, "A2", [&] {
    Worst w;
    for (const auto& t : triples)
      for (const auto& i : alg.indices()) {
        const cplx h = 0.5 * t[0];
        const cplx lhs = 2.0 * ctx.w(i, 2.0 * h) * rho(h, mu);
        const cplx wh = ctx.w(i, h);
        w(rel(lhs, wh * wh + kTwoPiI * ctx.Z(i, 2.0 * h)));
      }
    return w.value;
  });
  checks.run("A3" + suffix, "A3", [&] {
    Worst w;
    for (const auto& t : triples)
      for (const auto& i : alg.indices()) {
        const cplx lhs = ctx.w(i, t[0]) * ctx.w(i.negated(K), t[0]);
        w(rel(lhs, kTwoPiI * ctx.Z_at_zero(i) - rho_prime(t[0], mu)));
      }
    return w.value;
  });
}

// ---------------------------------------------------------------------------
// two-sheet-flow

void run_two_sheet_flow(const ScenarioConfig& cfg, Checks& checks) {
  const Json& p = cfg.params;
  const BranchPoints l = param_branch_points(p);
  const int m = param_int(p, "m", 0, 3);
  const cplx delta = param_complex(p, "delta");
  const int rm = param_int(p, "rect_m", 0, 3);
  const int rn = param_int(p, "rect_n", 0, 3);
  if (rm == rn) throw ConfigError("rect_m and rect_n must differ");
  const cplx drm = param_complex(p, "rect_delta_m");
  const cplx drn = param_complex(p, "rect_delta_n");

  std::optional<EllipticCoveringState> cov;
  checks.run("thomae", "thomae", [&] {
    const cplx A = a_period(l);
    const cplx t4 = theta_constants(modulus_from_branch_points(l)).theta4;
    const cplx rhs = 4.0 * kPi * kPi * std::pow(t4, 4) / ((l[0] - l[3]) * (l[2] - l[1]));
    return (A * A - rhs) / std::abs(A * A);
  });
  checks.run("alpha_sum", "alpha_sum", [&] {
    cov = two_sheet_covering(l);
    double amax = 0.0;
    cplx sum = 0.0;
    for (const cplx a : cov->alpha) {
      sum += a;
      amax = std::max(amax, std::abs(a));
    }
    return sum / amax;
  });
  const double h = 1e-3 * min_separation(l);
  for (int k = 0; k < 4; ++k) {
    checks.run(tag("rauch.m", k), "rauch", [&] {
      const cplx alpha = cov ? cov->alpha[k] : two_sheet_covering(l).alpha[k];
      const auto mu_at = [&](cplx d) { return modulus_from_branch_points(moved(l, k, d)).value(); };
      return (richardson(mu_at, 0.0, h) - kTwoPiI * alpha) / std::abs(alpha);
    });
  }
  checks.run("a_cycle_closure", "a_cycle", [&] {
    const double gap = std::min({distance_to_segment(l[2], l[0], l[1]), distance_to_segment(l[3], l[0], l[1]),
                                 segment_distance(l[0], l[1], l[2], l[3]), std::abs(l[1] - l[0])});
    if (gap <= 1e-9 * max_separation(l)) {
      throw DegenerateInput("a-cycle closure needs the cut [l3, l4] away from [l1, l2]");
    }
    const double d = 0.25 * gap;
    const cplx c = 0.5 * (l[0] + l[1]);
    const cplx dir = (l[1] - l[0]) / std::abs(l[1] - l[0]);
    const double r = 0.5 * std::abs(l[1] - l[0]);
    const auto at = [&](double a, double b) { return c + dir * cplx(a, b); };
    const AbelMap abel(l);
    const SheetPoint start{at(-r - d, 0.0), 0};
    const cplx v0 = abel.integrate(start).raw;
    const std::vector<cplx> loop{at(-r - d, -d), at(r + d, -d), at(r + d, d), at(-r - d, d), at(-r - d, 0.0)};
    return abel.continue_along(start, v0, loop).raw - v0 - 1.0;
  });

  // Flow of lambda_m against fresh constructions.
  checks.guard("flow_endpoint", "flow_endpoint", [&] {
    const auto s = two_sheet_covering(l);
    double rigid12 = 0.0, rigid23 = 0.0;
    const auto e = integrate_flow(s, {m, l[m], l[m] + delta}, [&](double, const EllipticCoveringState& st) {
      const cplx mu = st.mu.value();
      rigid12 = std::max(rigid12, std::abs(st.gamma[0] - st.gamma[1] + 0.5));
      rigid23 = std::max(rigid23, std::abs(st.gamma[1] - st.gamma[2] + 0.5 * mu));
    });
    checks.add("rigidity.gamma1_gamma2", "rigidity", rigid12);
    checks.add("rigidity.gamma2_gamma3", "rigidity", rigid23);
    const auto fresh = two_sheet_covering(moved(l, m, delta));
    const cplx mu = fresh.mu.value();
    Worst gd, al;
    for (int k = 1; k < 4; ++k) {
      gd(reduce_near_zero((e.gamma[k] - e.gamma[0]) - (fresh.gamma[k] - fresh.gamma[0]), mu));
    }
    for (int k = 0; k < 4; ++k) al((e.alpha[k] - fresh.alpha[k]) / std::abs(fresh.alpha[k]));
    checks.add("flow_endpoint.gamma_differences", "flow_endpoint", gd.value);
    checks.add("flow_endpoint.alpha", "flow_endpoint", al.value);
    checks.add("flow_endpoint.mu", "flow_endpoint", e.mu.value() - mu);
  });

  checks.run("rectangle", "rectangle", [&] {
    const auto s = two_sheet_covering(l);
    const auto a = integrate_flow(integrate_flow(s, {rm, l[rm], l[rm] + drm}), {rn, l[rn], l[rn] + drn});
    const auto b = integrate_flow(integrate_flow(s, {rn, l[rn], l[rn] + drn}), {rm, l[rm], l[rm] + drm});
    Worst w;
    w(a.mu.value() - b.mu.value());
    for (int k = 0; k < 4; ++k) {
      w(a.gamma[k] - b.gamma[k]);
      w((a.alpha[k] - b.alpha[k]) / std::abs(a.alpha[k]));
    }
    return w.value;
  });
}

// ---------------------------------------------------------------------------
// schlesinger-verification

void run_schlesinger_verification(const ScenarioConfig& cfg, Checks& checks) {
  const Json& p = cfg.params;
  const BranchPoints l = param_branch_points(p);
  const int K = param_int(p, "K", 2, 6);
  const int L = param_int(p, "L", 1, 8);
  const int samples = param_int(p, "samples", 1, 10000);
  const double fd_step = param_double(p, "fd_step") * min_separation(l);
  const int dm = param_int(p, "drift_m", 0, 3);
  const cplx dd = param_complex(p, "drift_delta");
  const std::string suffix = "[K=" + std::to_string(K) + "]";

  std::optional<CoupledState> c;
  if (!checks.guard("setup" + suffix, "j_flow_fd", [&] { c = seeded_coupled_state(l, K, L, cfg.seed); })) return;
  const RContext ctx = context_of(*c);
  const JState J = induced_j(ctx, *c);

  for (int n = 0; n < 4; ++n) {
    std::vector<SlkCoefficients> fd;
    std::string err;
    try {
      const auto J_at = [&](double s) {
        const CoupledState x = coupled_moved(*c, n, s);
        return induced_j(context_of(x), x).J;
      };
      const double hh = fd_step;
      const auto jp = J_at(hh), jm = J_at(-hh), jp2 = J_at(0.5 * hh), jm2 = J_at(-0.5 * hh);
      for (std::size_t k = 0; k < jp.size(); ++k) {
        const SlkCoefficients d1 = (1.0 / (2.0 * hh)) * (jp[k] - jm[k]);
        const SlkCoefficients d2 = (1.0 / hh) * (jp2[k] - jm2[k]);
        fd.push_back((1.0 / 3.0) * ((4.0 * d2) - d1));
      }
    } catch (const Error& e) {
      err = e.what();
    }
    for (int mm = 0; mm < 4; ++mm) {
      if (mm == n) continue;
      checks.run("j_flow_fd.m" + std::to_string(mm) + "n" + std::to_string(n) + suffix, "j_flow_fd", [&] {
        if (!err.empty()) throw SingularityOnPath(err);
        const SlkCoefficients rhs = j_flow_rhs(ctx, c->cov, J, mm, n);
        return max_diff(fd[mm], rhs) / rhs.max_abs();
      });
    }
  }

  const auto nus = sample_nu_points(c->cov, samples, cfg.seed);
  std::optional<JDerivatives> dJ;
  for (int mm = 0; mm < 4; ++mm)
    for (int n = mm + 1; n < 4; ++n) {
      checks.run("compatibility.m" + std::to_string(mm) + "n" + std::to_string(n) + suffix, "compatibility", [&] {
        if (!dJ) dJ = induced_j_derivative(ctx, *c);
        const auto r = compatibility_residual(ctx, c->cov, J, *dJ, mm, n, nus);
        if (!r.skipped.empty()) throw NearSingularity("compatibility: sample hit a singularity");
        return cplx(r.max_norm);
      });
    }

  checks.guard("coupled_flow" + suffix, "trA2_drift", [&] {
    const SigmaAlgebra alg(K);
    const auto tr0 = trace_squares(alg, c->sch);
    std::vector<double> drift(static_cast<std::size_t>(L), 0.0);
    const auto end = coupled_flow(*c, FlowPath{dm, c->cov.lambda[dm], c->cov.lambda[dm] + dd}, {},
                                  [&](double, const CoupledState& s) {
                                    const auto tr = trace_squares(alg, s.sch);
                                    for (std::size_t j = 0; j < tr.size(); ++j)
                                      drift[j] = std::max(drift[j], std::abs(tr[j] - tr0[j]));
                                  });
    for (int j = 0; j < L; ++j) checks.add(tag("trA2_drift.j", j) + suffix, "trA2_drift", drift[j]);
    const AbelMap abel(BranchPoints{end.cov.lambda[0], end.cov.lambda[1], end.cov.lambda[2], end.cov.lambda[3]});
    const cplx mu = end.cov.mu.value();
    for (int j = 0; j < L; ++j) {
      const cplx fresh = abel.integrate(c->Q[j]).raw;
      checks.add(tag("abel_consistency.z", j) + suffix, "abel_consistency",
                 reduce_near_zero(fresh - end.sch.z[j], mu));
    }
  });
}

// ---------------------------------------------------------------------------
// trig-limit

void run_trig_limit(const ScenarioConfig& cfg, Checks& checks) {
  const Json& p = cfg.params;
  const BranchPoints l = param_branch_points(p);
  const cplx g0 = param_complex(p, "gamma");
  const Json& ladder_j = p.at("mu_ladder");
  if (!ladder_j.is_array() || ladder_j.empty()) throw ConfigError("mu_ladder: expected a non-empty array");
  std::vector<double> ladder;
  for (std::size_t k = 0; k < ladder_j.size(); ++k) {
    const cplx v = [&] {
      try {
        return complex_from_json(ladder_j[k], "mu_ladder");
      } catch (const StateFormatError& e) {
        throw ConfigError(e.what());
      }
    }();
    if (v.real() != 0.0 || v.imag() <= 0.0) throw ConfigError("mu_ladder: entries must be purely imaginary, Im > 0");
    if (k > 0 && v.imag() <= ladder.back()) throw ConfigError("mu_ladder: entries must increase");
    ladder.push_back(v.imag());
  }
  std::mt19937_64 gen(cfg.seed);

  // Theta-constant display on the two-sheet covering.
  checks.run("display_two_sheet", "display_two_sheet", [&] {
    const auto cov = two_sheet_covering(l);
    const RContext ctx(SigmaAlgebra(2), cov.mu);
    Worst w;
    for (int trial = 0; trial < 4; ++trial) {
      const PauliCoefficients J1 = random_pauli(gen), J2 = random_pauli(gen);
      const JState minus{2, {pauli_to_slk(negated(J1)), pauli_to_slk(negated(J2)), SlkCoefficients(2), SlkCoefficients(2)}};
      w(max_diff(two_sheet_display_rhs(cov, J1, J2), negated(slk_to_pauli(j_flow_rhs(ctx, cov, minus, 0, 1)))));
    }
    return w.value;
  });

  // Elliptic system on a ladder of moduli against its trigonometric limit.
  const std::vector<cplx> gammas{cplx(0.05, 0.1), cplx(0.3, -0.2), cplx(0.55, 0.15), cplx(0.8, -0.05)};
  std::vector<cplx> alpha;
  {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    cplx sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      alpha.emplace_back(u(gen), u(gen));
      sum += alpha.back();
    }
    alpha.push_back(-sum);
  }
  std::vector<PauliCoefficients> Jp;
  JState J{2, {}};
  for (int k = 0; k < 4; ++k) {
    Jp.push_back(random_pauli(gen));
    J.J.push_back(pauli_to_slk(Jp.back()));
  }
  TrigCoveringState trig;
  trig.lambda = {0.0, 1.0, 2.0, 3.0};
  trig.gamma = gammas;
  trig.alpha0 = alpha;
  const auto deviation_at = [&](double b) {
    EllipticCoveringState cov;
    cov.N = 2;
    cov.mu = ModularParameter(cplx(0.0, b));
    cov.lambda = trig.lambda;
    cov.gamma = gammas;
    cov.alpha = alpha;
    const RContext ctx(SigmaAlgebra(2), cov.mu);
    Worst w;
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n)
        if (m != n) w(max_diff(trig_j_flow_rhs(trig, Jp, m, n), slk_to_pauli(j_flow_rhs(ctx, cov, J, m, n))));
    return w.value;
  };
  // Lower rungs only have to shrink; the tolerance applies at the top rung.
  std::vector<double> devs;
  checks.guard("trig_vs_elliptic", "trig_vs_elliptic", [&] {
    for (const double b : ladder) devs.push_back(std::abs(deviation_at(b)));
  });
  if (devs.size() == ladder.size()) {
    for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
      checks.add("trig_vs_elliptic.shrink[" + mu_tag(cplx(0.0, ladder[k])) + "->" + mu_tag(cplx(0.0, ladder[k + 1])) +
                     "]",
                 "trig_vs_elliptic_shrink", devs[k + 1] / devs[k]);
    }
    checks.add("trig_vs_elliptic[" + mu_tag(cplx(0.0, ladder.back())) + "]", "trig_vs_elliptic", devs.back());
  }
  checks.run("trig_display", "trig_display", [&] {
    std::vector<PauliCoefficients> Jm;
    for (const auto& q : Jp) Jm.push_back(negated(q));
    Worst w;
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n)
        if (m != n) w(max_diff(trig_display_rhs(trig, Jp, m, n), negated(trig_j_flow_rhs(trig, Jm, m, n))));
    return w.value;
  });
  checks.run("two_point_limit", "two_point_limit", [&] {
    const cplx l1 = l[0], l2 = l[1];
    const auto t = build_trig_two_sheet(l1, l2, std::nullopt);
    const std::vector<PauliCoefficients> J2{random_pauli(gen), random_pauli(gen)};
    const std::vector<PauliCoefficients> J2m{negated(J2[0]), negated(J2[1])};
    Worst w;
    for (int m = 0; m < 2; ++m) {
      const PauliCoefficients lim = trig_two_point_limit_rhs(l1, l2, J2[0], J2[1], m);
      w(max_diff(trig_display_rhs(t, J2, m, 1 - m), lim));
      w(max_diff(negated(trig_j_flow_rhs(t, J2m, m, 1 - m)), lim));
    }
    return w.value;
  });

  // rho - pi cot(pi g) ~ 4 pi q sin(2 pi g) with q = exp(2 pi i mu); the
  // deviations fall below double resolution, so the series is summed in
  // 100-digit arithmetic.
  using R = boost::multiprecision::cpp_bin_float_100;
  using C = boost::multiprecision::cpp_complex_100;
  const R pi = R(4) * atan(R(1));
  const R half(R(1) / R(2));
  const C g(R(g0.real()), R(g0.imag()));
  const auto deviation = [&](double b) {
    const C mu(R(0), R(b));
    const auto jet = detail::theta_series_jet<C, R>(half, half, g, mu, 1, 1e-90, 4000);
    const C cot = C(pi) * cos(C(pi) * g) / sin(C(pi) * g);
    return static_cast<double>(abs(jet[1] / jet[0] - cot));
  };
  for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
    const std::string name = "decay_ratio[" + mu_tag(cplx(0.0, ladder[k])) + "->" + mu_tag(cplx(0.0, ladder[k + 1])) + "]";
    checks.run(name, "decay_ratio", [&] {
      const double observed = deviation(ladder[k + 1]) / deviation(ladder[k]);
      const double predicted = std::exp(-2.0 * kPi * (ladder[k + 1] - ladder[k]));
      // log2 of observed / predicted: |value| < 1 is agreement within a factor 2.
      return cplx(std::log2(observed / predicted));
    });
  }
}

// ---------------------------------------------------------------------------
// tau-relation

void run_tau_relation(const ScenarioConfig& cfg, Checks& checks) {
  const Json& p = cfg.params;
  const BranchPoints l = param_branch_points(p);
  const int K = param_int(p, "K", 2, 6);
  const int L = param_int(p, "L", 1, 8);
  const double fd_step = param_double(p, "fd_step") * min_separation(l);
  const int lm = param_int(p, "loop_m", 0, 3);
  const int ln = param_int(p, "loop_n", 0, 3);
  if (lm == ln) throw ConfigError("loop_m and loop_n must differ");
  const cplx dm = param_complex(p, "loop_delta_m");
  const cplx dn = param_complex(p, "loop_delta_n");
  const std::string suffix = "[K=" + std::to_string(K) + "]";

  std::optional<CoupledState> c;
  if (!checks.guard("setup" + suffix, "tau_relation", [&] { c = seeded_coupled_state(l, K, L, cfg.seed); })) return;
  const RContext ctx = context_of(*c);
  const JState J = induced_j(ctx, *c);

  for (int m = 0; m < 4; ++m) {
    checks.run(tag("tau_relation.m", m) + suffix, "tau_relation", [&] {
      const cplx scale = tau_rhs(ctx.algebra(), c->cov, J, m);
      return tau_relation_residual(ctx, *c, m) / std::max(1.0, std::abs(scale));
    });
  }
  for (int m = 0; m < 4; ++m)
    for (int n = m + 1; n < 4; ++n) {
      const std::string mn = "m" + std::to_string(m) + "n" + std::to_string(n);
      checks.run("tau_symmetry." + mn + suffix, "tau_symmetry", [&] {
        const cplx a = tau_mixed_second(ctx, c->cov, J, m, n);
        return (a - tau_mixed_second(ctx, c->cov, J, n, m)) / std::max(1.0, std::abs(a));
      });
      checks.run("tau_mixed_fd." + mn + suffix, "tau_mixed_fd", [&] {
        const auto rate = [&](cplx s) {
          const auto x = coupled_moved(*c, n, s);
          const RContext cx = context_of(x);
          return tau_rhs(cx.algebra(), x.cov, induced_j(cx, x), m);
        };
        const cplx fd = richardson(rate, 0.0, fd_step);
        const cplx exact = tau_mixed_second(ctx, c->cov, J, m, n);
        return (fd - exact) / std::max(1.0, std::abs(exact));
      });
    }

  checks.run("log_tau_loop" + suffix, "loop_closure", [&] {
    const CoupledJSource src(*c);
    const cplx a = c->cov.lambda[lm], b = c->cov.lambda[ln];
    const auto l1 = integrate_log_tau(src, FlowPath{lm, a, a + dm});
    const auto l2 = integrate_log_tau(*l1.end, FlowPath{ln, b, b + dn});
    const auto l3 = integrate_log_tau(*l2.end, FlowPath{lm, a + dm, a});
    const auto l4 = integrate_log_tau(*l3.end, FlowPath{ln, b + dn, b});
    return l1.delta + l2.delta + l3.delta + l4.delta;
  });
}

// ---------------------------------------------------------------------------

const std::map<std::string, ScenarioDef>& registry() {
  static const std::map<std::string, ScenarioDef> defs = [] {
    const Json bp = branch_points_json(kDefaultBranchPoints);
    std::map<std::string, ScenarioDef> s;
    s["identity-suite"] = {
        Json{{"K", 2}, {"mu", complex_to_json(kI)}, {"samples", 20}},
        {{"heat", 1e-7}, {"rho_period", 1e-10}, {"w_twist", 1e-10}, {"Z_twist", 1e-10}, {"der_link", 1e-7},
         {"r_antisymmetry", 1e-10}, {"bundle", 1e-10}, {"A1", 1e-9}, {"A2", 1e-9}, {"A3", 1e-9}},
        run_identity_suite};
    s["two-sheet-flow"] = {
        Json{{"branch_points", bp}, {"m", 3}, {"delta", nullptr}, {"rect_m", 1}, {"rect_n", 3},
             {"rect_delta_m", complex_to_json({0.2, 0.1})}, {"rect_delta_n", complex_to_json({-0.1, 0.25})}},
        {{"thomae", 1e-8}, {"alpha_sum", 1e-10}, {"rauch", 1e-5}, {"a_cycle", 1e-6}, {"flow_endpoint", 1e-6},
         {"rigidity", 1e-6}, {"rectangle", 1e-6}},
        run_two_sheet_flow};
    s["schlesinger-verification"] = {
        Json{{"branch_points", bp}, {"K", 2}, {"L", 2}, {"samples", 20}, {"fd_step", 1e-3}, {"drift_m", 3},
             {"drift_delta", complex_to_json({0.2, 0.3})}},
        {{"j_flow_fd", 1e-4}, {"compatibility", 1e-6}, {"trA2_drift", 1e-8},
         {"abel_consistency", 1e-6}},
        run_schlesinger_verification};
    s["trig-limit"] = {
        Json{{"branch_points", bp},
             {"gamma", complex_to_json({0.3, 0.0})},
             {"mu_ladder", Json::array({complex_to_json({0.0, 5.0}), complex_to_json({0.0, 10.0}),
                                        complex_to_json({0.0, 20.0})})}},
        {{"display_two_sheet", 1e-10}, {"trig_vs_elliptic", 1e-9},
         {"trig_vs_elliptic_shrink", 1.0}, {"trig_display", 1e-12},
         {"two_point_limit", 1e-12}, {"decay_ratio", 1.0}},
        run_trig_limit};
    s["tau-relation"] = {
        Json{{"branch_points", bp}, {"K", 2}, {"L", 2}, {"fd_step", 1e-3}, {"loop_m", 1}, {"loop_n", 3},
             {"loop_delta_m", complex_to_json({0.15, 0.05})}, {"loop_delta_n", complex_to_json({-0.05, 0.12})}},
        {{"tau_relation", 1e-7}, {"tau_symmetry", 1e-10}, {"tau_mixed_fd", 1e-5},
         {"loop_closure", 1e-6}},
        run_tau_relation};
    return s;
  }();
  return defs;
}

std::string format_double(double x) {
  if (!std::isfinite(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json environment_stamp() {
  Json e;
#if defined(__clang__)
  e["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  e["compiler"] = std::string("gcc ") + __VERSION__;
#else
  e["compiler"] = "unknown";
#endif
#ifdef NDEBUG
  e["assertions"] = false;
#else
  e["assertions"] = true;
#endif
  e["theta_kernel"] = kernels::kernel_name(kernels::active_kernel());
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------

Json ScenarioConfig::to_json() const {
  Json j;
  j["scenario"] = scenario;
  j["seed"] = seed;
  for (const auto& [k, v] : params.items()) j[k] = v;
  j["tolerances"] = tolerances;
  Json out;
  if (output_path) out["path"] = *output_path;
  out["format"] = format;
  j["output"] = out;
  return j;
}

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> out;
  for (const auto& [name, def] : registry()) out.push_back(name);
  return out;
}

ScenarioConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  if (!doc.contains("scenario") || !doc["scenario"].is_string()) throw ConfigError("config: missing 'scenario'");
  ScenarioConfig cfg;
  cfg.scenario = doc["scenario"].get<std::string>();
  const auto it = registry().find(cfg.scenario);
  if (it == registry().end()) throw ConfigError("unknown scenario '" + cfg.scenario + "'");
  const ScenarioDef& def = it->second;

  cfg.params = def.params;
  for (const auto& [key, value] : doc.items()) {
    if (key == "scenario") continue;
    if (key == "seed") {
      if (!value.is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
      cfg.seed = value.get<unsigned>();
    } else if (key == "tolerances") {
      if (!value.is_object()) throw ConfigError("tolerances: expected an object");
    } else if (key == "output") {
      if (!value.is_object()) throw ConfigError("output: expected an object");
      for (const auto& [ok, ov] : value.items()) {
        if (ok == "path") {
          if (!ov.is_string()) throw ConfigError("output.path: expected a string");
          cfg.output_path = ov.get<std::string>();
        } else if (ok == "format") {
          if (!ov.is_string() || (ov != "csv" && ov != "json")) throw ConfigError("output.format: csv or json");
          cfg.format = ov.get<std::string>();
        } else {
          throw ConfigError("output: unknown field '" + ok + "'");
        }
      }
    } else if (cfg.params.contains(key)) {
      cfg.params[key] = value;
    } else {
      throw ConfigError("unknown field '" + key + "' for scenario '" + cfg.scenario + "'");
    }
  }

  Json tol = Json::object();
  for (const auto& [k, v] : def.tolerances) tol[k] = v;
  if (doc.contains("tolerances")) {
    for (const auto& [k, v] : doc["tolerances"].items()) {
      if (!tol.contains(k)) throw ConfigError("tolerances: unknown check family '" + k + "'");
      if (!v.is_number() || !(v.get<double>() > 0.0)) throw ConfigError("tolerances." + k + ": expected a positive number");
      tol[k] = v;
    }
  }
  cfg.tolerances = tol;

  // Validate parameters and fill data-dependent defaults.
  if (cfg.params.contains("branch_points")) {
    const BranchPoints l = param_branch_points(cfg.params);
    if (cfg.params.contains("delta") && cfg.params["delta"].is_null()) {
      cfg.params["delta"] = complex_to_json(0.1 * max_separation(l) * cplx(0.8, 0.6));
    }
  }
  if (cfg.params.contains("K")) param_int(cfg.params, "K", 2, 6);
  if (cfg.params.contains("mu")) {
    const cplx mu = param_complex(cfg.params, "mu");
    if (!(mu.imag() > 0.0)) throw ConfigError("mu: Im mu must be positive");
  }
  return cfg;
}

Report run_scenario(const ScenarioConfig& cfg) {
  const auto it = registry().find(cfg.scenario);
  if (it == registry().end()) throw ConfigError("unknown scenario '" + cfg.scenario + "'");
  Report report;
  report.config = cfg;
  const auto t0 = std::chrono::steady_clock::now();
  Checks checks(report.config.tolerances);
  it->second.run(report.config, checks);
  report.checks = checks.take();
  report.environment = environment_stamp();
  report.environment["runtime_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string report_csv(const Report& r) {
  std::ostringstream os;
  os << "check_name,value_re,value_im,abs_value,tolerance,pass\n";
  for (const auto& c : r.checks) {
    os << c.name << ',' << format_double(c.value.real()) << ',' << format_double(c.value.imag()) << ','
       << format_double(std::abs(c.value)) << ',' << format_double(c.tolerance) << ',' << (c.pass ? "true" : "false")
       << '\n';
  }
  return os.str();
}

std::string report_json(const Report& r, bool with_environment) {
  Json j;
  j["scenario"] = r.config.scenario;
  j["seed"] = r.config.seed;
  j["config"] = r.config.to_json();
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json cj;
    cj["name"] = c.name;
    cj["value"] = complex_to_json(c.value);
    cj["abs_value"] = std::abs(c.value);
    cj["tolerance"] = c.tolerance;
    cj["pass"] = c.pass;
    if (!c.error.empty()) cj["error"] = c.error;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  j["status"] = r.passed() ? "pass" : "fail";
  if (with_environment) j["environment"] = r.environment;
  return j.dump(2) + "\n";
}

CoupledState seeded_coupled_state(const BranchPoints& l, int K, int L, unsigned seed) {
  const auto cov = two_sheet_covering(l);
  const AbelMap abel(l);
  const cplx mu = cov.mu.value();
  const double sep = min_separation(l);
  const double scale = max_separation(l);
  double re_lo = l[0].real(), re_hi = re_lo, im_lo = l[0].imag(), im_hi = im_lo;
  for (const cplx z : l) {
    re_lo = std::min(re_lo, z.real());
    re_hi = std::max(re_hi, z.real());
    im_lo = std::min(im_lo, z.imag());
    im_hi = std::max(im_hi, z.imag());
  }
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ure(re_lo - 0.3 * scale, re_hi + 0.3 * scale);
  std::uniform_real_distribution<double> uim(im_lo - 0.3 * scale, im_hi + 0.3 * scale);
  std::vector<SheetPoint> Q;
  std::vector<cplx> z;
  for (int attempt = 0; static_cast<int>(Q.size()) < L; ++attempt) {
    if (attempt > 10000) throw DegenerateInput("seeded_coupled_state: no admissible points found");
    const SheetPoint q{cplx(ure(gen), uim(gen)), static_cast<int>(gen() & 1u)};
    bool ok = true;
    for (const cplx b : l) ok = ok && std::abs(q.lambda - b) > 0.2 * sep;
    if (!ok) continue;
    cplx zq;
    try {
      zq = reduce_to_cell(abel.integrate(q).raw, mu);
    } catch (const Error&) {
      continue;
    }
    for (const cplx g : cov.gamma) ok = ok && std::abs(reduce_near_zero(zq - g, mu)) > 0.08;
    for (const cplx zj : z) ok = ok && std::abs(reduce_near_zero(zq - zj, mu)) > 0.08;
    if (!ok) continue;
    Q.push_back(q);
    z.push_back(zq);
  }
  return random_coupled_state(cov, Q, K, static_cast<unsigned>(gen()));
}

}  // namespace ellcov
