#pragma once

#include "ppnp/core.hpp"

namespace ppnp {

inline constexpr double kPsnrCap = 99.0;

/// Peak signal-to-noise ratio for unit peak. Identical inputs report kPsnrCap.
template <typename A, typename B>
double psnr(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b) {
  require_same_shape(a, b, "psnr");
  const double mse = double((a - b).square().mean());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

template <typename Scalar>
double psnr(const Image<Scalar>& a, const Image<Scalar>& b) {
  return psnr(a.data(), b.data());
}

namespace detail {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Valid-mode separable Gaussian filtering with the normalized SSIM window.
inline Grid<double> ssim_filter(const Grid<double>& x) {
  constexpr int r = kSsimWindow / 2;
  double w[kSsimWindow];
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += (w[i + r] = std::exp(-(i * i) / (2.0 * kSsimSigma * kSsimSigma)));
  for (double& v : w) v /= sum;
  const Eigen::Index rows = x.rows() - 2 * r, cols = x.cols() - 2 * r;
  Grid<double> tmp = Grid<double>::Zero(x.rows(), cols);
  for (int k = 0; k < kSsimWindow; ++k) tmp += w[k] * x.middleCols(k, cols);
  Grid<double> out = Grid<double>::Zero(rows, cols);
  for (int k = 0; k < kSsimWindow; ++k) out += w[k] * tmp.middleRows(k, rows);
  return out;
}

}  // namespace detail

/// Mean structural similarity over all fully-contained 11x11 Gaussian
/// windows (sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1).
template <typename A, typename B>
double ssim(const Eigen::ArrayBase<A>& a_in, const Eigen::ArrayBase<B>& b_in) {
  require_same_shape(a_in, b_in, "ssim");
  if (a_in.rows() < detail::kSsimWindow || a_in.cols() < detail::kSsimWindow)
    throw std::invalid_argument("ssim: image must be at least 11x11");
  const Grid<double> a = a_in.template cast<double>();
  const Grid<double> b = b_in.template cast<double>();
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const Grid<double> mu_a = detail::ssim_filter(a);
  const Grid<double> mu_b = detail::ssim_filter(b);
  const Grid<double> var_a = detail::ssim_filter(a * a) - mu_a.square();
  const Grid<double> var_b = detail::ssim_filter(b * b) - mu_b.square();
  const Grid<double> cov = detail::ssim_filter(a * b) - mu_a * mu_b;
  const Grid<double> map = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                           ((mu_a.square() + mu_b.square() + c1) * (var_a + var_b + c2));
  return map.mean();
}

template <typename Scalar>
double ssim(const Image<Scalar>& a, const Image<Scalar>& b) {
  return ssim(a.data(), b.data());
}

}  // namespace ppnp
