#include <immintrin.h>

#include "theta_kernels.hpp"

namespace ellcov::kernels {

namespace {

// Four lanes of complex numbers held as separate real/imaginary registers.
struct Cx4 {
  __m256d re;
  __m256d im;
};

inline Cx4 load_lanes(const cplx* p) {
  // p holds 4 interleaved complex values: r0 i0 r1 i1 | r2 i2 r3 i3.
  const __m256d a = _mm256_loadu_pd(reinterpret_cast<const double*>(p));
  const __m256d b = _mm256_loadu_pd(reinterpret_cast<const double*>(p + 2));
  // unpacklo/hi interleave within 128-bit halves: re = r0 r2 r1 r3.
  const __m256d re = _mm256_unpacklo_pd(a, b);
  const __m256d im = _mm256_unpackhi_pd(a, b);
  // Restore lane order 0 1 2 3.
  return {_mm256_permute4x64_pd(re, 0xD8), _mm256_permute4x64_pd(im, 0xD8)};
}

inline void store_lanes(cplx* p, const Cx4& v) {
  const __m256d re = _mm256_permute4x64_pd(v.re, 0xD8);
  const __m256d im = _mm256_permute4x64_pd(v.im, 0xD8);
  _mm256_storeu_pd(reinterpret_cast<double*>(p), _mm256_unpacklo_pd(re, im));
  _mm256_storeu_pd(reinterpret_cast<double*>(p + 2), _mm256_unpackhi_pd(re, im));
}

// acc * r + c for a broadcast coefficient c.
inline Cx4 mul_add(const Cx4& acc, const Cx4& r, __m256d c_re, __m256d c_im) {
  const __m256d re = _mm256_fmsub_pd(acc.re, r.re, _mm256_fmsub_pd(acc.im, r.im, c_re));
  const __m256d im = _mm256_fmadd_pd(acc.re, r.im, _mm256_fmadd_pd(acc.im, r.re, c_im));
  return {re, im};
}

inline Cx4 mul(const Cx4& a, const Cx4& b) {
  const __m256d re = _mm256_fmsub_pd(a.re, b.re, _mm256_mul_pd(a.im, b.im));
  const __m256d im = _mm256_fmadd_pd(a.re, b.im, _mm256_mul_pd(a.im, b.re));
  return {re, im};
}

}  // namespace

void horner_avx2(const CoefficientTable& table, const LaneInputs& lanes,
                 std::span<cplx> out) {
  const std::size_t np = table.pos_size();
  const std::size_t nn = table.neg_size();
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const Cx4 r = load_lanes(lanes.ratio.data() + i);
    const Cx4 ri = load_lanes(lanes.inv_ratio.data() + i);
    Cx4 up{_mm256_setzero_pd(), _mm256_setzero_pd()};
    for (std::size_t k = np; k-- > 0;) {
      up = mul_add(up, r, _mm256_set1_pd(table.pos_re[k]), _mm256_set1_pd(table.pos_im[k]));
    }
    Cx4 down{_mm256_setzero_pd(), _mm256_setzero_pd()};
    for (std::size_t k = nn; k-- > 0;) {
      down = mul_add(down, ri, _mm256_set1_pd(table.neg_re[k]), _mm256_set1_pd(table.neg_im[k]));
    }
    const Cx4 down_r = mul(down, ri);
    const Cx4 sum{_mm256_add_pd(up.re, down_r.re), _mm256_add_pd(up.im, down_r.im)};
    store_lanes(out.data() + i, mul(load_lanes(lanes.base.data() + i), sum));
  }
  if (i < n) {
    const std::size_t rest = n - i;
    horner_scalar(table,
                  {lanes.base.subspan(i, rest), lanes.ratio.subspan(i, rest),
                   lanes.inv_ratio.subspan(i, rest)},
                  out.subspan(i, rest));
  }
}

}  // namespace ellcov::kernels
