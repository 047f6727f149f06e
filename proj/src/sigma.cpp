#include "ellcov/sigma.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ellcov/errors.hpp"

namespace ellcov {

namespace {

int mod(int a, int K) { return ((a % K) + K) % K; }

}  // namespace

SigmaIndex::SigmaIndex(int a, int b, int K) {
  if (K < 2) throw InvalidIndex("SigmaIndex: K must be at least 2");
  A = mod(a, K);
  B = mod(b, K);
  if (A == 0 && B == 0) {
    throw InvalidIndex("SigmaIndex: (0,0) is not a traceless basis element");
  }
}

SlkCoefficients::SlkCoefficients(int K) : K_(K) {
  if (K < 2) throw InvalidIndex("SlkCoefficients: K must be at least 2");
  c_.assign(static_cast<std::size_t>(K * K - 1), cplx(0.0));
}

namespace {

void check_same_rank(const SlkCoefficients& a, const SlkCoefficients& b) {
  if (a.K() != b.K()) throw InvalidIndex("SlkCoefficients: rank mismatch");
}

}  // namespace

SlkCoefficients& SlkCoefficients::operator+=(const SlkCoefficients& o) {
  check_same_rank(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

SlkCoefficients& SlkCoefficients::operator-=(const SlkCoefficients& o) {
  check_same_rank(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

SlkCoefficients& SlkCoefficients::operator*=(cplx s) {
  for (auto& v : c_) v *= s;
  return *this;
}

SlkCoefficients SlkCoefficients::hadamard(const SlkCoefficients& o) const {
  check_same_rank(*this, o);
  SlkCoefficients r(K_);
  for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] = c_[i] * o.c_[i];
  return r;
}

double SlkCoefficients::max_abs() const {
  double m = 0.0;
  for (const auto& v : c_) m = std::max(m, std::abs(v));
  return m;
}

SlkCoefficients operator+(SlkCoefficients a, const SlkCoefficients& b) { return a += b; }
SlkCoefficients operator-(SlkCoefficients a, const SlkCoefficients& b) { return a -= b; }
SlkCoefficients operator*(cplx s, SlkCoefficients a) { return a *= s; }

SigmaAlgebra::SigmaAlgebra(int K) : K_(K) {
  if (K < 2) throw InvalidIndex("SigmaAlgebra: K must be at least 2, got " + std::to_string(K));
  eps_ = std::polar(1.0, 2.0 * kPi / K);
  F_ = Matrix::Zero(K, K);
  H_ = Matrix::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    F_(k, k) = eps_pow(k);
    H_(k, (k + 1) % K) = 1.0;
  }

  const std::size_t n = static_cast<std::size_t>(K * K - 1);
  indices_.reserve(n);
  sigma_.resize(n);
  dual_.resize(n);
  Matrix Ha = Matrix::Identity(K, K);
  for (int a = 0; a < K; ++a) {
    Matrix HaFb = Ha;
    for (int b = 0; b < K; ++b) {
      if (a != 0 || b != 0) {
        const SigmaIndex idx(a, b, K);
        indices_.push_back(idx);
        sigma_[static_cast<std::size_t>(idx.linear(K))] = HaFb;
      }
      HaFb = HaFb * F_;
    }
    Ha = Ha * H_;
  }
  for (const auto& idx : indices_) {
    const SigmaIndex neg = idx.negated(K);
    dual_[static_cast<std::size_t>(idx.linear(K))] =
        (eps_pow(-static_cast<long>(idx.A) * idx.B) / static_cast<double>(K)) *
        sigma_[static_cast<std::size_t>(neg.linear(K))];
  }
}

cplx SigmaAlgebra::eps_pow(long n) const {
  // Exact residues keep eps^K = 1 free of accumulated phase error.
  const long r = ((n % K_) + K_) % K_;
  return std::polar(1.0, 2.0 * kPi * static_cast<double>(r) / K_);
}

const Matrix& SigmaAlgebra::sigma(const SigmaIndex& idx) const {
  return sigma_[static_cast<std::size_t>(idx.linear(K_))];
}

const Matrix& SigmaAlgebra::sigma_dual(const SigmaIndex& idx) const {
  return dual_[static_cast<std::size_t>(idx.linear(K_))];
}

SlkCoefficients SigmaAlgebra::expand(const Matrix& M) const {
  if (M.rows() != K_ || M.cols() != K_) {
    throw InvalidIndex("expand: matrix is not " + std::to_string(K_) + "x" + std::to_string(K_));
  }
  const double tr = std::abs(M.trace());
  if (tr > 1e-10 * M.norm()) {
    throw NotTraceless("expand: |tr M| = " + std::to_string(tr));
  }
  SlkCoefficients c(K_);
  for (const auto& idx : indices_) {
    // tr(D M) without forming the product.
    c[idx] = (sigma_dual(idx).transpose().cwiseProduct(M)).sum();
  }
  return c;
}

Matrix SigmaAlgebra::reconstruct(const SlkCoefficients& c) const {
  if (c.K() != K_) throw InvalidIndex("reconstruct: rank mismatch");
  Matrix M = Matrix::Zero(K_, K_);
  for (const auto& idx : indices_) {
    const cplx v = c[idx];
    if (v != cplx(0.0)) M += v * sigma(idx);
  }
  return M;
}

Matrix pauli(int i) {
  Matrix s = Matrix::Zero(2, 2);
  const cplx I(0.0, 1.0);
  switch (i) {
    case 1:
      s(0, 1) = 1.0;
      s(1, 0) = 1.0;
      break;
    case 2:
      s(0, 1) = -I;
      s(1, 0) = I;
      break;
    case 3:
      s(0, 0) = 1.0;
      s(1, 1) = -1.0;
      break;
    default:
      throw InvalidIndex("pauli: index must be 1, 2 or 3");
  }
  return s;
}

Matrix from_pauli(const PauliCoefficients& J) {
  return J[0] * pauli(1) + J[1] * pauli(2) + J[2] * pauli(3);
}

PauliCoefficients to_pauli(const Matrix& M) {
  if (M.rows() != 2 || M.cols() != 2) throw InvalidIndex("to_pauli: matrix is not 2x2");
  const cplx I(0.0, 1.0);
  return {0.5 * (M(0, 1) + M(1, 0)), 0.5 * I * (M(0, 1) - M(1, 0)), 0.5 * (M(0, 0) - M(1, 1))};
}

SlkCoefficients pauli_to_slk(const PauliCoefficients& J) {
  SlkCoefficients c(2);
  c.at(1, 0) = J[0];
  c.at(1, 1) = cplx(0.0, 1.0) * J[1];
  c.at(0, 1) = J[2];
  return c;
}

PauliCoefficients slk_to_pauli(const SlkCoefficients& c) {
  if (c.K() != 2) throw InvalidIndex("slk_to_pauli: K must be 2");
  return {c.at(1, 0), cplx(0.0, -1.0) * c.at(1, 1), c.at(0, 1)};
}

}  // namespace ellcov
