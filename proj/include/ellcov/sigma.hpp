#pragma once

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "ellcov/theta.hpp"

namespace ellcov {

using Matrix = Eigen::MatrixXcd;

// Pair (A, B) reduced mod K, never (0, 0).
struct SigmaIndex {
  int A = 0;
  int B = 1;

  SigmaIndex() = default;
  // Reduces both entries mod K; throws InvalidIndex for (0, 0) mod K.
  SigmaIndex(int a, int b, int K);

  // Position in coefficient tables: A*K + B - 1, in [0, K*K - 1).
  int linear(int K) const { return A * K + B - 1; }
  SigmaIndex negated(int K) const { return SigmaIndex(-A, -B, K); }

  friend bool operator==(const SigmaIndex&, const SigmaIndex&) = default;
};

// Coefficients c_AB of an sl(K) element in the sigma basis.
class SlkCoefficients {
 public:
  SlkCoefficients() = default;
  explicit SlkCoefficients(int K);

  int K() const { return K_; }
  std::size_t size() const { return c_.size(); }

  cplx& operator[](const SigmaIndex& idx) { return c_[static_cast<std::size_t>(idx.linear(K_))]; }
  const cplx& operator[](const SigmaIndex& idx) const {
    return c_[static_cast<std::size_t>(idx.linear(K_))];
  }
  cplx& at(int A, int B) { return (*this)[SigmaIndex(A, B, K_)]; }
  const cplx& at(int A, int B) const { return (*this)[SigmaIndex(A, B, K_)]; }

  std::vector<cplx>& values() { return c_; }
  const std::vector<cplx>& values() const { return c_; }

  SlkCoefficients& operator+=(const SlkCoefficients& o);
  SlkCoefficients& operator-=(const SlkCoefficients& o);
  SlkCoefficients& operator*=(cplx s);

  // Entrywise product, used to apply a coefficient-diagonal operator.
  SlkCoefficients hadamard(const SlkCoefficients& o) const;

  double max_abs() const;

 private:
  int K_ = 0;
  std::vector<cplx> c_;
};

SlkCoefficients operator+(SlkCoefficients a, const SlkCoefficients& b);
SlkCoefficients operator-(SlkCoefficients a, const SlkCoefficients& b);
SlkCoefficients operator*(cplx s, SlkCoefficients a);

// Basis sigma_AB = H^A F^B of gl(K) / scalars, with F = diag(eps^k) and H the
// cyclic shift (H)_{i, i+1 mod K} = 1.
class SigmaAlgebra {
 public:
  explicit SigmaAlgebra(int K);

  int K() const { return K_; }
  cplx epsilon() const { return eps_; }
  const Matrix& F() const { return F_; }
  const Matrix& H() const { return H_; }

  SigmaIndex index(int A, int B) const { return SigmaIndex(A, B, K_); }
  // All K*K - 1 indices in table order.
  const std::vector<SigmaIndex>& indices() const { return indices_; }

  const Matrix& sigma(const SigmaIndex& idx) const;
  // (eps^{-AB} / K) sigma_{-A,-B}; tr(sigma_AB sigma^CD) = delta delta.
  const Matrix& sigma_dual(const SigmaIndex& idx) const;

  // c_AB = tr(sigma^AB M). Throws NotTraceless unless |tr M| <= 1e-10 |M|.
  SlkCoefficients expand(const Matrix& M) const;
  Matrix reconstruct(const SlkCoefficients& c) const;

  // eps^n for any integer n.
  cplx eps_pow(long n) const;

 private:
  int K_;
  cplx eps_;
  Matrix F_;
  Matrix H_;
  std::vector<SigmaIndex> indices_;
  std::vector<Matrix> sigma_;
  std::vector<Matrix> dual_;
};

// K = 2 dictionary. Pauli coefficients (J1, J2, J3) of J1 s1 + J2 s2 + J3 s3.
// With sigma_11 = HF = -i s2 the sigma coefficients are
// (J^10, J^11, J^01) = (J1, i J2, J3).
using PauliCoefficients = std::array<cplx, 3>;

Matrix pauli(int i);  // i in {1, 2, 3}
Matrix from_pauli(const PauliCoefficients& J);
PauliCoefficients to_pauli(const Matrix& M);
SlkCoefficients pauli_to_slk(const PauliCoefficients& J);
PauliCoefficients slk_to_pauli(const SlkCoefficients& c);

}  // namespace ellcov
