#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>

namespace ellcov {

using cplx = std::complex<double>;

// Exact rational, always normalized (gcd 1, positive denominator).
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Theta characteristic [p, q], stored exactly so that half-integer and
// 1/K-shifted characteristics carry no rounding.
struct Characteristic {
  Rational p;
  Rational q;

  // theta[1/2,1/2] = -theta_1; its logarithmic derivative is rho.
  static Characteristic odd() { return {Rational(1, 2), Rational(1, 2)}; }
  static Characteristic theta2() { return {Rational(1, 2), Rational(0)}; }
  static Characteristic theta3() { return {Rational(0), Rational(0)}; }
  static Characteristic theta4() { return {Rational(0), Rational(1, 2)}; }
};

// Period ratio mu of the torus C / {1, mu}; Im(mu) > 0.
class ModularParameter {
 public:
  explicit ModularParameter(cplx mu);

  cplx value() const { return mu_; }
  // exp(i pi mu); |nome| < 1.
  cplx nome() const;

 private:
  cplx mu_;
};

struct TruncationPolicy {
  double abs_tol = 1e-14;
  int max_terms = 4000;
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kTwoPiI{0.0, 2.0 * kPi};

// Distance below which an argument is treated as sitting on a zero of
// theta_1 (or on the pole lattice of the r-matrix coefficients).
inline constexpr double kSingularityGuard = 1e-12;

cplx theta(const Characteristic& ch, cplx gamma, const ModularParameter& mu,
           const TruncationPolicy& pol = {});

// order-th derivative in gamma, 0 <= order <= 4.
cplx theta_dgamma(const Characteristic& ch, cplx gamma,
                  const ModularParameter& mu, int order,
                  const TruncationPolicy& pol = {});

// All derivatives 0..max_order from a single pass over the series; entries
// above max_order are zero.
std::array<cplx, 5> theta_jet(const Characteristic& ch, cplx gamma,
                              const ModularParameter& mu, int max_order,
                              const TruncationPolicy& pol = {});

// d/dmu via the heat equation theta'' = 4 pi i d theta / d mu.
cplx theta_dmu(const Characteristic& ch, cplx gamma,
               const ModularParameter& mu, const TruncationPolicy& pol = {});

// rho = theta_1' / theta_1.
cplx rho(cplx gamma, const ModularParameter& mu,
         const TruncationPolicy& pol = {});
cplx rho_prime(cplx gamma, const ModularParameter& mu,
               const TruncationPolicy& pol = {});

struct ThetaConstants {
  cplx theta2;
  cplx theta3;
  cplx theta4;
  cplx theta2_second;
};

ThetaConstants theta_constants(const ModularParameter& mu,
                               const TruncationPolicy& pol = {});

// Batched evaluation of the order-th gamma-derivative at many points with a
// shared characteristic and modulus. Uses the vectorized kernel when the CPU
// supports it; results agree with theta_dgamma to rounding.
void theta_batch(const Characteristic& ch, std::span<const cplx> gammas,
                 const ModularParameter& mu, int order, std::span<cplx> out,
                 const TruncationPolicy& pol = {});

// Lattice helpers for the lattice {n + k mu}.
struct LatticePoint {
  std::int64_t n = 0;
  std::int64_t k = 0;
  double distance = 0.0;
};

LatticePoint nearest_lattice_point(cplx gamma, cplx mu);

// Representative of gamma in the cell {s + t mu : 0 <= s, t < 1}.
cplx reduce_to_cell(cplx gamma, cplx mu);

// Representative of gamma with the smallest modulus.
cplx reduce_near_zero(cplx gamma, cplx mu);

}  // namespace ellcov
