#include "theta_kernels.hpp"

namespace ellcov::kernels {

void horner_scalar(const CoefficientTable& table, const LaneInputs& lanes,
                   std::span<cplx> out) {
  const std::size_t np = table.pos_size();
  const std::size_t nn = table.neg_size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const cplx r = lanes.ratio[i];
    const cplx ri = lanes.inv_ratio[i];
    cplx up(0.0, 0.0);
    for (std::size_t k = np; k-- > 0;) {
      up = up * r + cplx(table.pos_re[k], table.pos_im[k]);
    }
    cplx down(0.0, 0.0);
    for (std::size_t k = nn; k-- > 0;) {
      down = down * ri + cplx(table.neg_re[k], table.neg_im[k]);
    }
    out[i] = lanes.base[i] * (up + down * ri);
  }
}

}  // namespace ellcov::kernels
