#pragma once

#include "ppnp/core.hpp"
#include "ppnp/linear_operators.hpp"

namespace ppnp {

inline constexpr double kDefaultLogFloor = 1e-8;

/// Poisson negative log-likelihood (up to the log y! constant) given the
/// already-blurred scene Hx:  alpha 1^T Hx - y^T log(alpha Hx).
/// Pixels with y = 0 contribute no log term; other log arguments are floored.
template <typename DH, typename DY>
typename DH::Scalar data_term_blurred(const Eigen::ArrayBase<DH>& hx, const Eigen::ArrayBase<DY>& y,
                                      double alpha, double eps_log = kDefaultLogFloor) {
  using S = typename DH::Scalar;
  require_same_shape(hx, y, "data_term");
  const Grid<S> b = hx;
  const Grid<S> counts = y;
  const S a = S(alpha);
  S total = a * b.sum();
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const S yi = counts.data()[i];
    if (yi == S(0)) continue;
    total -= yi * std::log(std::max(a * b.data()[i], S(eps_log)));
  }
  return total;
}

template <typename Scalar>
Scalar data_term(const Image<Scalar>& x, const Image<Scalar>& y, const BlurKernel<Scalar>& h,
                 PhotonLevel alpha, double eps_log = kDefaultLogFloor) {
  require_finite(x.data(), "data_term");
  require_finite(y.data(), "data_term");
  require_same_shape(x.data(), y.data(), "data_term");
  if ((x.data() < Scalar(0)).any()) throw std::invalid_argument("data_term: x must be >= 0");
  return data_term_blurred(circ_convolve(x.data(), h), y.data(), alpha.value(), eps_log);
}

}  // namespace ppnp
