#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ppnp/core.hpp"
#include "ppnp/linear_operators.hpp"
#include "ppnp/random.hpp"

namespace ppnp {

/// Photon-limited observation y_j ~ Poisson(alpha (Hx)_j). Each pixel draws
/// from its own counter-based stream keyed by (seed, pixel index).
template <typename Scalar>
Image<Scalar> poisson_forward(const Image<Scalar>& x, const BlurKernel<Scalar>& h,
                              PhotonLevel alpha, std::uint64_t seed) {
  require_valid(x, Domain::SceneUnit, "poisson_forward");
  const Grid<Scalar> rate = (Scalar(alpha.value()) * circ_convolve(x.data(), h)).max(Scalar(0));
  Grid<Scalar> y(rate.rows(), rate.cols());
  for (Eigen::Index i = 0; i < rate.size(); ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    y.data()[i] = Scalar(sample_poisson(double(rate.data()[i]), rng));
  }
  return Image<Scalar>(std::move(y), Domain::PhotonCount);
}

namespace detail {
inline Eigen::Index reflect_index(Eigen::Index p, Eigen::Index n) {
  if (p < 0) return -p - 1;
  if (p >= n) return 2 * n - p - 1;
  return p;
}
}  // namespace detail

/// Doubles both dimensions by mirroring about the edges, edge samples
/// repeated at the fold: a row [a b c d] becomes [b a | a b c d | d c].
/// The original occupies offset (height/2, width/2).
template <typename Derived>
Grid<typename Derived::Scalar> reflect_pad(const Eigen::ArrayBase<Derived>& img) {
  using S = typename Derived::Scalar;
  const Eigen::Index h = img.rows(), w = img.cols();
  const Eigen::Index top = h / 2, left = w / 2;
  Grid<S> out(2 * h, 2 * w);
  for (Eigen::Index i = 0; i < 2 * h; ++i)
    for (Eigen::Index j = 0; j < 2 * w; ++j)
      out(i, j) = img.derived().coeff(detail::reflect_index(i - top, h), detail::reflect_index(j - left, w));
  return out;
}

/// Central width x height window; inverts reflect_pad exactly.
template <typename Derived>
Grid<typename Derived::Scalar> center_crop(const Eigen::ArrayBase<Derived>& img, Eigen::Index width,
                                           Eigen::Index height) {
  if (width < 1 || height < 1 || width > img.cols() || height > img.rows())
    throw std::invalid_argument("center_crop: crop " + std::to_string(width) + "x" +
                                std::to_string(height) + " does not fit image " +
                                std::to_string(img.cols()) + "x" + std::to_string(img.rows()));
  return img.block((img.rows() - height) / 2, (img.cols() - width) / 2, height, width);
}

template <typename Scalar>
Image<Scalar> reflect_pad(const Image<Scalar>& img) {
  return Image<Scalar>(reflect_pad(img.data()), img.domain());
}

template <typename Scalar>
Image<Scalar> center_crop(const Image<Scalar>& img, Eigen::Index width, Eigen::Index height) {
  return Image<Scalar>(center_crop(img.data(), width, height), img.domain());
}

inline constexpr int kDefaultBlackLevel = 2047;
inline constexpr double kDefaultGain = 71.0;
inline constexpr int kRawMaxValue = (1 << 14) - 1;

/// Single sensor plane in digital numbers.
struct RawFrame {
  Eigen::Index width = 0, height = 0;
  std::vector<std::int32_t> values;  // row-major
  int black_level = kDefaultBlackLevel;
  double gain = kDefaultGain;

  /// Number of samples outside the 14-bit range; reported, not rejected.
  std::size_t out_of_range_count() const {
    std::size_t n = 0;
    for (auto v : values) n += (v < 0 || v > kRawMaxValue) ? 1 : 0;
    return n;
  }
};

/// y = (raw - black_level) / gain, floored at zero.
Image<double> raw_to_photons(const RawFrame& raw);

inline constexpr double kDefaultAlphaBeta = 0.33;

/// Photon level heuristic: mean photons per pixel divided by beta.
PhotonLevel estimate_alpha(const Image<double>& y, double beta = kDefaultAlphaBeta);

/// Bayer components reconstructed independently.
struct ColorPlanes {
  static constexpr std::array<const char*, 4> kNames{"R", "G1", "G2", "B"};
  std::array<Image<double>, 4> planes;
};

/// Gray-world balance: scales every plane to unit mean.
ColorPlanes gray_world(const ColorPlanes& in);

}  // namespace ppnp
