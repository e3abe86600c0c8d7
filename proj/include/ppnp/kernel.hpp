#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "ppnp/core.hpp"
#include "ppnp/fft.hpp"

namespace ppnp {

/// Transfer function of a kernel embedded in a rows x cols circular grid.
template <typename Scalar>
struct KernelSpectrum {
  ComplexGrid<Scalar> transfer;  // F(h)
  Grid<Scalar> power;            // |F(h)|^2
};

/// Point-spread function: odd square grid of nonnegative taps summing to one.
///
/// The kernel center is placed at grid index (0, 0) with circular wrap when
/// embedded, so the unit impulse kernel is exactly the identity operator.
/// Spectra are computed lazily per target size and shared between copies.
template <typename Scalar>
class BlurKernel {
 public:
  static constexpr double kSumTolerance = 1e-8;

  explicit BlurKernel(Grid<Scalar> taps) : taps_(std::move(taps)), cache_(std::make_shared<Cache>()) {
    if (taps_.rows() != taps_.cols() || taps_.rows() % 2 == 0)
      throw std::invalid_argument("kernel must be square with odd size, got " +
                                  std::to_string(taps_.rows()) + "x" + std::to_string(taps_.cols()));
    if (!taps_.allFinite()) throw std::invalid_argument("kernel taps must be finite");
    if ((taps_ < Scalar(0)).any()) throw std::invalid_argument("kernel taps must be nonnegative");
    const double s = static_cast<double>(taps_.sum());
    const double tol = std::max(
        kSumTolerance, 16.0 * double(Eigen::NumTraits<Scalar>::epsilon()) * double(taps_.size()));
    if (std::abs(s - 1.0) > tol)
      throw std::invalid_argument("kernel taps must sum to 1, got " + std::to_string(s));
  }

  /// Rescales nonnegative taps to unit sum before validation.
  static BlurKernel normalized(Grid<Scalar> taps) {
    if ((taps < Scalar(0)).any()) throw std::invalid_argument("kernel taps must be nonnegative");
    const Scalar s = taps.sum();
    if (!(s > Scalar(0))) throw std::invalid_argument("kernel taps sum to zero");
    return BlurKernel(taps / s);
  }

  static BlurKernel delta() { return BlurKernel(Grid<Scalar>::Ones(1, 1)); }

  Eigen::Index size() const { return taps_.rows(); }
  Eigen::Index radius() const { return taps_.rows() / 2; }
  const Grid<Scalar>& taps() const { return taps_; }

  /// Zero-padded, center-shifted embedding into a rows x cols grid.
  Grid<Scalar> embed(Eigen::Index rows, Eigen::Index cols) const {
    if (size() > rows || size() > cols)
      throw DimensionMismatch("kernel of size " + std::to_string(size()) +
                              " is larger than the image " + std::to_string(rows) + "x" +
                              std::to_string(cols));
    Grid<Scalar> g = Grid<Scalar>::Zero(rows, cols);
    const Eigen::Index c = radius();
    for (Eigen::Index i = 0; i < size(); ++i)
      for (Eigen::Index j = 0; j < size(); ++j)
        g(((i - c) % rows + rows) % rows, ((j - c) % cols + cols) % cols) += taps_(i, j);
    return g;
  }

  std::shared_ptr<const KernelSpectrum<Scalar>> spectrum(Eigen::Index rows, Eigen::Index cols) const {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto& slot = cache_->entries[{rows, cols}];
    if (!slot) {
      auto s = std::make_shared<KernelSpectrum<Scalar>>();
      s->transfer = fft2(embed(rows, cols));
      s->power = s->transfer.abs2();
      slot = std::move(s);
    }
    return slot;
  }

 private:
  struct Cache {
    std::mutex mutex;
    std::map<std::pair<Eigen::Index, Eigen::Index>, std::shared_ptr<const KernelSpectrum<Scalar>>>
        entries;
  };

  Grid<Scalar> taps_;
  std::shared_ptr<Cache> cache_;
};

/// Sampled rotated anisotropic Gaussian, normalized to unit sum.
template <typename Scalar = double>
BlurKernel<Scalar> gaussian_kernel(Eigen::Index size, double sigma_x, double sigma_y,
                                   double theta = 0.0) {
  if (size < 1 || size % 2 == 0)
    throw std::invalid_argument("gaussian kernel size must be odd and positive");
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0))
    throw std::invalid_argument("gaussian kernel sigmas must be > 0");
  const double ct = std::cos(theta), st = std::sin(theta);
  const Eigen::Index c = size / 2;
  Grid<double> taps(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = 0; j < size; ++j) {
      const double dy = double(i - c), dx = double(j - c);
      const double u = ct * dx + st * dy;
      const double w = -st * dx + ct * dy;
      taps(i, j) = std::exp(-0.5 * (u * u / (sigma_x * sigma_x) + w * w / (sigma_y * sigma_y)));
    }
  }
  taps /= taps.sum();
  return BlurKernel<Scalar>(taps.cast<Scalar>());
}

}  // namespace ppnp
