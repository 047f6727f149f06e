#pragma once

// Batched theta kernels. For a window of indices centred at m_c the sum is
// split as
//
//   theta^(d)(g) = E(g) * ( sum_{k>=0} c_k r^k + sum_{k>=1} c_{-k} r^{-k} ),
//
// with r = exp(2 pi i g), E(g) = exp(2 pi i (m_c + p) g) and lane-independent
// coefficients c_k = exp(i pi mu n^2 + 2 pi i n q) (2 pi i n)^d,
// n = m_c + k + p. Each lane is then two Horner recurrences, which is the
// data-parallel inner loop the SIMD variants vectorize.

#include <complex>
#include <span>
#include <vector>

namespace ellcov::kernels {

using cplx = std::complex<double>;

struct CoefficientTable {
  // pos[k] = c_k for k = 0..M, neg[k-1] = c_{-k} for k = 1..M.
  // Stored split into real/imaginary arrays for the vector kernels.
  std::vector<double> pos_re, pos_im, neg_re, neg_im;

  std::size_t pos_size() const { return pos_re.size(); }
  std::size_t neg_size() const { return neg_re.size(); }
};

// Per-lane inputs: base = E(g), ratio = r, inv_ratio = 1/r.
struct LaneInputs {
  std::span<const cplx> base;
  std::span<const cplx> ratio;
  std::span<const cplx> inv_ratio;
};

void horner_scalar(const CoefficientTable& table, const LaneInputs& lanes,
                   std::span<cplx> out);

#if defined(ELLCOV_HAVE_AVX2_KERNEL)
void horner_avx2(const CoefficientTable& table, const LaneInputs& lanes,
                 std::span<cplx> out);
#endif

enum class KernelKind { Scalar, Avx2 };

// Best kernel for this CPU; ELLCOV_SIMD=scalar in the environment forces the
// scalar kernel.
KernelKind active_kernel();
const char* kernel_name(KernelKind kind);
bool kernel_available(KernelKind kind);

void horner(KernelKind kind, const CoefficientTable& table,
            const LaneInputs& lanes, std::span<cplx> out);

}  // namespace ellcov::kernels
