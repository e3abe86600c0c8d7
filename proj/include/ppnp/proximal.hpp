#pragma once

#include "ppnp/core.hpp"

namespace ppnp {

template <typename Scalar>
struct ProxResult {
  Grid<Scalar> value;
  /// Infinity norm of  -y/v + alpha + rho2 (v - vt)  over pixels with y > 0.
  Scalar stationarity_residual = Scalar(0);
};

/// Scalar Poisson proximal map: the nonnegative root of
///   rho v^2 - (rho vt - alpha) v - y = 0.
/// Uses the cancellation-free form of the quadratic formula when
/// rho vt - alpha < 0.
template <typename Scalar>
inline Scalar poisson_prox_scalar(Scalar vt, Scalar y, Scalar alpha, Scalar rho) {
  const Scalar c = rho * vt - alpha;
  if (y == Scalar(0)) return c > Scalar(0) ? c / rho : Scalar(0);
  const Scalar s = std::sqrt(c * c + Scalar(4) * rho * y);
  if (c >= Scalar(0)) return (c + s) / (Scalar(2) * rho);
  return Scalar(2) * y / (s - c);
}

/// Partial derivatives of poisson_prox_scalar, by implicit differentiation of
/// the stationarity condition.
template <typename Scalar>
struct ProxPartials {
  Scalar d_vt;
  Scalar d_rho;
};

template <typename Scalar>
inline ProxPartials<Scalar> poisson_prox_partials(Scalar v, Scalar vt, Scalar y, Scalar rho) {
  if (y == Scalar(0) && v <= Scalar(0)) return {Scalar(0), Scalar(0)};
  const Scalar curvature = y / (v * v) + rho;
  return {rho / curvature, (vt - v) / curvature};
}

template <typename DV, typename DY>
ProxResult<typename DV::Scalar> poisson_prox(const Eigen::ArrayBase<DV>& vt,
                                             const Eigen::ArrayBase<DY>& y, double alpha,
                                             double rho2) {
  using S = typename DV::Scalar;
  if (!(rho2 > 0.0)) throw std::invalid_argument("poisson_prox: rho2 must be > 0");
  if (!(alpha >= 0.0)) throw std::invalid_argument("poisson_prox: alpha must be >= 0");
  require_same_shape(vt, y, "poisson_prox");
  const Grid<S> vin = vt;
  const Grid<S> counts = y;
  if ((counts < S(0)).any()) throw std::invalid_argument("poisson_prox: y must be nonnegative");

  ProxResult<S> out;
  out.value.resize(vin.rows(), vin.cols());
  const S a = S(alpha), rho = S(rho2);
  S worst = S(0);
  for (Eigen::Index i = 0; i < vin.size(); ++i) {
    const S v = poisson_prox_scalar(vin.data()[i], counts.data()[i], a, rho);
    out.value.data()[i] = v;
    if (counts.data()[i] > S(0)) {
      const S r = -counts.data()[i] / v + a + rho * (v - vin.data()[i]);
      worst = std::max(worst, std::abs(r));
    }
  }
  out.stationarity_residual = worst;
  return out;
}

}  // namespace ppnp
