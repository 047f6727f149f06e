#include "ellcov/theta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ellcov/errors.hpp"
#include "ellcov/theta_series.hpp"
#include "theta_kernels.hpp"

namespace ellcov {

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw InvalidIndex("Rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  num_ = g ? num / g : 0;
  den_ = g ? den / g : 1;
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
}

ModularParameter::ModularParameter(cplx mu) : mu_(mu) {
  if (!(mu.imag() > 0.0) || !std::isfinite(mu.real()) || !std::isfinite(mu.imag())) {
    throw InvalidModulus("ModularParameter: Im(mu) must be positive, got " +
                         std::to_string(mu.imag()));
  }
}

cplx ModularParameter::nome() const { return std::exp(cplx(0.0, kPi) * mu_); }

namespace {

void check_order(int order) {
  if (order < 0 || order > 4) {
    throw InvalidIndex("theta: derivative order must be in [0, 4]");
  }
}

}  // namespace

std::array<cplx, 5> theta_jet(const Characteristic& ch, cplx gamma,
                              const ModularParameter& mu, int max_order,
                              const TruncationPolicy& pol) {
  check_order(max_order);
  auto jet = detail::theta_series_jet<cplx, double>(ch.p.value(), ch.q.value(), gamma,
                                                    mu.value(), max_order, pol.abs_tol,
                                                    pol.max_terms);
  for (int k = max_order + 1; k < 5; ++k) jet[static_cast<std::size_t>(k)] = 0.0;
  return jet;
}

cplx theta(const Characteristic& ch, cplx gamma, const ModularParameter& mu,
           const TruncationPolicy& pol) {
  return theta_jet(ch, gamma, mu, 0, pol)[0];
}

cplx theta_dgamma(const Characteristic& ch, cplx gamma,
                  const ModularParameter& mu, int order,
                  const TruncationPolicy& pol) {
  check_order(order);
  return theta_jet(ch, gamma, mu, order, pol)[static_cast<std::size_t>(order)];
}

cplx theta_dmu(const Characteristic& ch, cplx gamma, const ModularParameter& mu,
               const TruncationPolicy& pol) {
  return theta_dgamma(ch, gamma, mu, 2, pol) / (4.0 * kPi * cplx(0.0, 1.0));
}

namespace {

void guard_theta1_zero(cplx gamma, const ModularParameter& mu) {
  const LatticePoint lp = nearest_lattice_point(gamma, mu.value());
  if (lp.distance < kSingularityGuard) {
    throw NearSingularity("rho: argument on a zero of theta_1 (lattice point " +
                          std::to_string(lp.n) + " + " + std::to_string(lp.k) + " mu)");
  }
}

}  // namespace

cplx rho(cplx gamma, const ModularParameter& mu, const TruncationPolicy& pol) {
  guard_theta1_zero(gamma, mu);
  const auto jet = theta_jet(Characteristic::odd(), gamma, mu, 1, pol);
  return jet[1] / jet[0];
}

cplx rho_prime(cplx gamma, const ModularParameter& mu, const TruncationPolicy& pol) {
  guard_theta1_zero(gamma, mu);
  const auto jet = theta_jet(Characteristic::odd(), gamma, mu, 2, pol);
  const cplx l1 = jet[1] / jet[0];
  return jet[2] / jet[0] - l1 * l1;
}

ThetaConstants theta_constants(const ModularParameter& mu, const TruncationPolicy& pol) {
  const auto t2 = theta_jet(Characteristic::theta2(), 0.0, mu, 2, pol);
  return {t2[0], theta(Characteristic::theta3(), 0.0, mu, pol),
          theta(Characteristic::theta4(), 0.0, mu, pol), t2[2]};
}

void theta_batch(const Characteristic& ch, std::span<const cplx> gammas,
                 const ModularParameter& mu, int order, std::span<cplx> out,
                 const TruncationPolicy& pol) {
  check_order(order);
  if (out.size() != gammas.size()) {
    throw InvalidIndex("theta_batch: output size does not match input size");
  }
  if (gammas.empty()) return;

  const double p = ch.p.value();
  const double q = ch.q.value();
  const cplx m = mu.value();

  std::int64_t first = 0;
  std::int64_t last = 0;
  double max_abs_im = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const auto w = detail::theta_window(p, m.imag(), gammas[i].imag(), order, pol.abs_tol,
                                        pol.max_terms);
    first = i == 0 ? w.first : std::min(first, w.first);
    last = i == 0 ? w.last : std::max(last, w.last);
    max_abs_im = std::max(max_abs_im, std::abs(gammas[i].imag()));
  }
  const std::int64_t center = first + (last - first) / 2;
  const std::int64_t reach = std::max(last - center, center - first);
  const double n_center = static_cast<double>(center) + p;

  // Lanes whose windows are far apart would need a large common window and
  // powers of r that leave the double range; those fall back to the direct sum.
  const double log_span = 2.0 * kPi * (std::abs(n_center) + static_cast<double>(reach)) * max_abs_im;
  if (log_span > 600.0 || last - first + 1 > pol.max_terms) {
    for (std::size_t i = 0; i < gammas.size(); ++i) {
      out[i] = theta_dgamma(ch, gammas[i], mu, order, pol);
    }
    return;
  }

  kernels::CoefficientTable table;
  const auto coeff = [&](std::int64_t idx) {
    const double n = static_cast<double>(idx) + p;
    cplx c = std::exp(cplx(0.0, kPi) * m * (n * n) + kTwoPiI * (n * q));
    for (int k = 0; k < order; ++k) c *= kTwoPiI * n;
    return c;
  };
  for (std::int64_t k = 0; center + k <= last; ++k) {
    const cplx c = coeff(center + k);
    table.pos_re.push_back(c.real());
    table.pos_im.push_back(c.imag());
  }
  for (std::int64_t k = 1; center - k >= first; ++k) {
    const cplx c = coeff(center - k);
    table.neg_re.push_back(c.real());
    table.neg_im.push_back(c.imag());
  }

  std::vector<cplx> base(gammas.size()), ratio(gammas.size()), inv_ratio(gammas.size());
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    base[i] = std::exp(kTwoPiI * n_center * gammas[i]);
    ratio[i] = std::exp(kTwoPiI * gammas[i]);
    inv_ratio[i] = std::exp(-kTwoPiI * gammas[i]);
  }
  kernels::horner(kernels::active_kernel(), table, {base, ratio, inv_ratio}, out);
}

LatticePoint nearest_lattice_point(cplx gamma, cplx mu) {
  const double t = gamma.imag() / mu.imag();
  const auto k0 = static_cast<std::int64_t>(std::llround(t));
  LatticePoint best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::int64_t k = k0 - 1; k <= k0 + 1; ++k) {
    const cplx shifted = gamma - static_cast<double>(k) * mu;
    const auto n0 = static_cast<std::int64_t>(std::llround(shifted.real()));
    for (std::int64_t n = n0 - 1; n <= n0 + 1; ++n) {
      const double d = std::abs(shifted - static_cast<double>(n));
      if (d < best.distance) best = {n, k, d};
    }
  }
  return best;
}

cplx reduce_to_cell(cplx gamma, cplx mu) {
  const double k = std::floor(gamma.imag() / mu.imag());
  cplx g = gamma - k * mu;
  g -= std::floor(g.real() - (g.imag() / mu.imag()) * mu.real());
  return g;
}

cplx reduce_near_zero(cplx gamma, cplx mu) {
  const LatticePoint lp = nearest_lattice_point(gamma, mu);
  return gamma - static_cast<double>(lp.n) - static_cast<double>(lp.k) * mu;
}

}  // namespace ellcov
