#pragma once

#include <memory>

#include "ppnp/core.hpp"
#include "ppnp/fft.hpp"
#include "ppnp/kernel.hpp"

namespace ppnp {

/// A blur kernel bound to one image size. Holds F(h) and |F(h)|^2 and applies
/// every circulant operator the solvers need. Read-only after construction and
/// safe to share across threads.
template <typename Scalar>
class FreqPlan {
 public:
  FreqPlan(const BlurKernel<Scalar>& h, Eigen::Index rows, Eigen::Index cols)
      : rows_(rows), cols_(cols), spectrum_(h.spectrum(rows, cols)) {}

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  const ComplexGrid<Scalar>& transfer() const { return spectrum_->transfer; }
  const Grid<Scalar>& power() const { return spectrum_->power; }

  /// H x under circular boundary conditions.
  template <typename Derived>
  Grid<Scalar> convolve(const Eigen::ArrayBase<Derived>& x) const {
    check(x, "circ_convolve");
    return ifft2_real<Scalar>(fft2(x) * transfer());
  }

  /// H^T r, the exact adjoint of convolve().
  template <typename Derived>
  Grid<Scalar> correlate(const Eigen::ArrayBase<Derived>& r) const {
    check(r, "circ_correlate");
    return ifft2_real<Scalar>(fft2(r) * transfer().conjugate());
  }

  /// argmin_x  |x - x0t|^2 + ratio |Hx - x1t|^2, i.e.
  /// (I + ratio H^T H)^{-1} (x0t + ratio H^T x1t), with ratio = rho2 / rho1.
  template <typename D0, typename D1>
  Grid<Scalar> deblur_solve(const Eigen::ArrayBase<D0>& x0t, const Eigen::ArrayBase<D1>& x1t,
                            Scalar ratio) const {
    if (!(ratio > Scalar(0))) throw std::invalid_argument("deblur_solve: rho ratio must be > 0");
    check(x0t, "deblur_solve");
    check(x1t, "deblur_solve");
    ComplexGrid<Scalar> num = fft2(x0t) + ratio * transfer().conjugate() * fft2(x1t);
    return ifft2_real<Scalar>(num / (Scalar(1) + ratio * power()));
  }

  /// (I + ratio H^T H)^{-1} g. Symmetric, so it is its own adjoint.
  template <typename Derived>
  Grid<Scalar> normal_inverse(const Eigen::ArrayBase<Derived>& g, Scalar ratio) const {
    check(g, "normal_inverse");
    return ifft2_real<Scalar>(fft2(g) / (Scalar(1) + ratio * power()).template cast<std::complex<Scalar>>());
  }

  /// Unclamped regularized inverse filter
  /// (1/alpha) F^{-1}[ conj(F h) F(y) / (1/alpha + |F h|^2) ].
  template <typename Derived>
  Grid<Scalar> wiener(const Eigen::ArrayBase<Derived>& y, Scalar alpha) const {
    check(y, "wiener_init");
    const Scalar inv_alpha = Scalar(1) / alpha;
    ComplexGrid<Scalar> num = transfer().conjugate() * fft2(y);
    return inv_alpha * ifft2_real<Scalar>(num / (inv_alpha + power()));
  }

  /// Adjoint of wiener() with respect to y.
  template <typename Derived>
  Grid<Scalar> wiener_adjoint(const Eigen::ArrayBase<Derived>& g, Scalar alpha) const {
    check(g, "wiener_adjoint");
    const Scalar inv_alpha = Scalar(1) / alpha;
    ComplexGrid<Scalar> num = transfer() * fft2(g);
    return inv_alpha * ifft2_real<Scalar>(num / (inv_alpha + power()));
  }

 private:
  template <typename Derived>
  void check(const Eigen::ArrayBase<Derived>& x, const char* what) const {
    if (x.rows() != rows_ || x.cols() != cols_)
      throw DimensionMismatch(std::string(what) + ": grid " + std::to_string(x.rows()) + "x" +
                              std::to_string(x.cols()) + " does not match plan " +
                              std::to_string(rows_) + "x" + std::to_string(cols_));
  }

  Eigen::Index rows_, cols_;
  std::shared_ptr<const KernelSpectrum<Scalar>> spectrum_;
};

template <typename Derived>
FreqPlan<typename Derived::Scalar> plan_for(const BlurKernel<typename Derived::Scalar>& h,
                                            const Eigen::ArrayBase<Derived>& x) {
  return FreqPlan<typename Derived::Scalar>(h, x.rows(), x.cols());
}

template <typename Derived>
Grid<typename Derived::Scalar> circ_convolve(const Eigen::ArrayBase<Derived>& x,
                                             const BlurKernel<typename Derived::Scalar>& h) {
  return plan_for(h, x).convolve(x);
}

template <typename Derived>
Grid<typename Derived::Scalar> circ_correlate(const Eigen::ArrayBase<Derived>& r,
                                              const BlurKernel<typename Derived::Scalar>& h) {
  return plan_for(h, r).correlate(r);
}

template <typename D0, typename D1>
Grid<typename D0::Scalar> deblur_solve(const Eigen::ArrayBase<D0>& x0t,
                                       const Eigen::ArrayBase<D1>& x1t,
                                       const BlurKernel<typename D0::Scalar>& h,
                                       typename D0::Scalar rho_ratio) {
  return plan_for(h, x0t).deblur_solve(x0t, x1t, rho_ratio);
}

/// Wiener initialization without clamping; may contain negatives from noise.
template <typename Derived>
Grid<typename Derived::Scalar> wiener_init_raw(const Eigen::ArrayBase<Derived>& y,
                                               const BlurKernel<typename Derived::Scalar>& h,
                                               PhotonLevel alpha) {
  using S = typename Derived::Scalar;
  return plan_for(h, y).wiener(y, S(alpha.value()));
}

/// Wiener initialization of a photon-count image, clamped to the unit range.
template <typename Scalar>
Image<Scalar> wiener_init(const Image<Scalar>& y, const BlurKernel<Scalar>& h, PhotonLevel alpha) {
  require_valid(y, Domain::PhotonCount, "wiener_init");
  return Image<Scalar>(clamp_unit(wiener_init_raw(y.data(), h, alpha)), Domain::SceneUnit);
}

}  // namespace ppnp
