#pragma once

#include <unsupported/Eigen/FFT>

#include "ppnp/core.hpp"

namespace ppnp {

// Unnormalized forward transform; the inverse carries the 1/N factor. All
// filters in this library are ratios or products of spectra, so the
// convention does not leak into results.
namespace detail {

template <typename Scalar>
Eigen::FFT<Scalar>& fft_engine() {
  thread_local Eigen::FFT<Scalar> engine;
  return engine;
}

template <typename Scalar>
void transform_rows_cols(ComplexGrid<Scalar>& g, bool inverse) {
  using C = std::complex<Scalar>;
  auto& fft = fft_engine<Scalar>();
  Eigen::Matrix<C, Eigen::Dynamic, 1> in, out;
  in.resize(g.cols());
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    in = g.row(r).matrix().transpose();
    if (inverse)
      fft.inv(out, in);
    else
      fft.fwd(out, in);
    g.row(r) = out.transpose().array();
  }
  in.resize(g.rows());
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    in = g.col(c).matrix();
    if (inverse)
      fft.inv(out, in);
    else
      fft.fwd(out, in);
    g.col(c) = out.array();
  }
}

}  // namespace detail

template <typename Derived>
ComplexGrid<typename Derived::Scalar> fft2(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  ComplexGrid<S> g = x.template cast<std::complex<S>>();
  detail::transform_rows_cols(g, false);
  return g;
}

/// Inverse 2-D transform, keeping the real part.
template <typename Scalar>
Grid<Scalar> ifft2_real(ComplexGrid<Scalar> g) {
  detail::transform_rows_cols(g, true);
  return g.real();
}

}  // namespace ppnp
