#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ppnp/core.hpp"

namespace ppnp {

enum class DenoiserKind { Identity, GaussianSmooth, TotalVariation, Median };

/// Selects the denoiser standing in for the prior's proximal map.
struct DenoiserSpec {
  DenoiserKind kind = DenoiserKind::Identity;
  double sigma = 0.0;        // GaussianSmooth
  double weight = 0.1;       // TotalVariation
  int iterations = 50;       // TotalVariation
  double tolerance = 1e-5;   // TotalVariation
  int radius = 1;            // Median

  static DenoiserSpec identity() { return {}; }
  static DenoiserSpec gaussian(double sigma) {
    DenoiserSpec s;
    s.kind = DenoiserKind::GaussianSmooth;
    s.sigma = sigma;
    return s;
  }
  static DenoiserSpec total_variation(double weight, int iterations = 50, double tolerance = 1e-5) {
    DenoiserSpec s;
    s.kind = DenoiserKind::TotalVariation;
    s.weight = weight;
    s.iterations = iterations;
    s.tolerance = tolerance;
    return s;
  }
  static DenoiserSpec median(int radius) {
    DenoiserSpec s;
    s.kind = DenoiserKind::Median;
    s.radius = radius;
    return s;
  }

  void validate() const {
    switch (kind) {
      case DenoiserKind::Identity:
        return;
      case DenoiserKind::GaussianSmooth:
        if (!(sigma >= 0.0) || !std::isfinite(sigma))
          throw std::invalid_argument("gaussian denoiser: sigma must be >= 0");
        return;
      case DenoiserKind::TotalVariation:
        if (!(weight > 0.0)) throw std::invalid_argument("tv denoiser: weight must be > 0");
        if (iterations < 1) throw std::invalid_argument("tv denoiser: iterations must be >= 1");
        if (!(tolerance >= 0.0)) throw std::invalid_argument("tv denoiser: tolerance must be >= 0");
        return;
      case DenoiserKind::Median:
        if (radius < 0) throw std::invalid_argument("median denoiser: radius must be >= 0");
        return;
    }
    throw std::invalid_argument("unknown denoiser kind");
  }
};

/// Parses "identity", "gauss:<sigma>", "tv:<weight>[,<iters>]" or
/// "median:<radius>".
DenoiserSpec parse_denoiser(const std::string& text);
std::string describe(const DenoiserSpec& spec);

namespace detail {

/// Normalized 1-D Gaussian taps on [-R, R], R = ceil(4 sigma), and their
/// derivative with respect to sigma.
struct GaussianTaps {
  std::vector<double> taps;
  std::vector<double> dtaps;
  int radius() const { return static_cast<int>(taps.size() / 2); }
};

inline GaussianTaps gaussian_taps(double sigma) {
  GaussianTaps g;
  if (sigma <= 0.0) {
    g.taps = {1.0};
    g.dtaps = {0.0};
    return g;
  }
  const int r = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> e(2 * r + 1), de(2 * r + 1);
  double sum = 0.0, dsum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double ii = double(i) * i;
    e[i + r] = std::exp(-ii / (2.0 * sigma * sigma));
    de[i + r] = e[i + r] * ii / (sigma * sigma * sigma);
    sum += e[i + r];
    dsum += de[i + r];
  }
  g.taps.resize(e.size());
  g.dtaps.resize(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) {
    g.taps[k] = e[k] / sum;
    g.dtaps[k] = (de[k] * sum - e[k] * dsum) / (sum * sum);
  }
  return g;
}

// Circular 1-D filtering with symmetric taps along rows (axis 1) or columns (axis 0).
template <typename Scalar>
Grid<Scalar> filter_axis(const Grid<Scalar>& x, const std::vector<double>& taps, int axis) {
  const int r = static_cast<int>(taps.size() / 2);
  Grid<Scalar> out = Grid<Scalar>::Zero(x.rows(), x.cols());
  const Eigen::Index n = axis == 1 ? x.cols() : x.rows();
  for (int k = -r; k <= r; ++k) {
    const Scalar w = Scalar(taps[k + r]);
    if (w == Scalar(0)) continue;
    const Eigen::Index shift = ((k % n) + n) % n;
    if (axis == 1) {
      for (Eigen::Index j = 0; j < n; ++j) out.col(j) += w * x.col((j + shift) % n);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) out.row(i) += w * x.row((i + shift) % n);
    }
  }
  return out;
}

template <typename Scalar>
Grid<Scalar> gaussian_smooth(const Grid<Scalar>& x, const GaussianTaps& g) {
  if (g.taps.size() == 1) return x;
  return filter_axis(filter_axis(x, g.taps, 1), g.taps, 0);
}

template <typename Scalar>
Grid<Scalar> forward_diff_x(const Grid<Scalar>& u) {
  Grid<Scalar> d = Grid<Scalar>::Zero(u.rows(), u.cols());
  if (u.cols() > 1) d.leftCols(u.cols() - 1) = u.rightCols(u.cols() - 1) - u.leftCols(u.cols() - 1);
  return d;
}

template <typename Scalar>
Grid<Scalar> forward_diff_y(const Grid<Scalar>& u) {
  Grid<Scalar> d = Grid<Scalar>::Zero(u.rows(), u.cols());
  if (u.rows() > 1) d.topRows(u.rows() - 1) = u.bottomRows(u.rows() - 1) - u.topRows(u.rows() - 1);
  return d;
}

/// Discrete divergence, the negative adjoint of the forward-difference gradient.
template <typename Scalar>
Grid<Scalar> divergence(const Grid<Scalar>& px, const Grid<Scalar>& py) {
  const Eigen::Index rows = px.rows(), cols = px.cols();
  Grid<Scalar> d = Grid<Scalar>::Zero(rows, cols);
  if (cols > 1) {
    d.leftCols(cols - 1) += px.leftCols(cols - 1);
    d.rightCols(cols - 1) -= px.leftCols(cols - 1);
  }
  if (rows > 1) {
    d.topRows(rows - 1) += py.topRows(rows - 1);
    d.bottomRows(rows - 1) -= py.topRows(rows - 1);
  }
  return d;
}

/// Chambolle's dual fixed-point iteration for
///   argmin_u  1/2 |u - f|^2 + weight * TV(u)
/// with isotropic TV and Neumann boundaries.
template <typename Scalar>
Grid<Scalar> tv_denoise(const Grid<Scalar>& f, double weight, int iterations, double tol) {
  constexpr Scalar tau = Scalar(0.25);
  const Scalar lambda = Scalar(weight);
  Grid<Scalar> px = Grid<Scalar>::Zero(f.rows(), f.cols());
  Grid<Scalar> py = px;
  for (int it = 0; it < iterations; ++it) {
    const Grid<Scalar> w = divergence(px, py) - f / lambda;
    const Grid<Scalar> gx = forward_diff_x(w);
    const Grid<Scalar> gy = forward_diff_y(w);
    const Grid<Scalar> denom = Scalar(1) + tau * (gx.square() + gy.square()).sqrt();
    const Grid<Scalar> nx = (px + tau * gx) / denom;
    const Grid<Scalar> ny = (py + tau * gy) / denom;
    const Scalar change = std::max((nx - px).abs().maxCoeff(), (ny - py).abs().maxCoeff());
    px = nx;
    py = ny;
    if (change < Scalar(tol)) break;
  }
  return f - lambda * divergence(px, py);
}

template <typename Scalar>
Grid<Scalar> median_filter(const Grid<Scalar>& x, int radius) {
  if (radius == 0) return x;
  Grid<Scalar> out(x.rows(), x.cols());
  std::vector<Scalar> window;
  window.reserve((2 * radius + 1) * (2 * radius + 1));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      window.clear();
      for (int di = -radius; di <= radius; ++di)
        for (int dj = -radius; dj <= radius; ++dj)
          window.push_back(x(std::clamp<Eigen::Index>(i + di, 0, x.rows() - 1),
                             std::clamp<Eigen::Index>(j + dj, 0, x.cols() - 1)));
      auto mid = window.begin() + window.size() / 2;
      std::nth_element(window.begin(), mid, window.end());
      out(i, j) = *mid;
    }
  }
  return out;
}

}  // namespace detail

/// Isotropic total variation with forward differences, matching tv_denoise.
template <typename Scalar>
Scalar total_variation(const Grid<Scalar>& u) {
  return (detail::forward_diff_x(u).square() + detail::forward_diff_y(u).square()).sqrt().sum();
}

template <typename Derived>
Grid<typename Derived::Scalar> apply(const DenoiserSpec& spec, const Eigen::ArrayBase<Derived>& img) {
  using S = typename Derived::Scalar;
  spec.validate();
  require_finite(img, "denoiser");
  const Grid<S> x = img;
  switch (spec.kind) {
    case DenoiserKind::Identity:
      return x;
    case DenoiserKind::GaussianSmooth:
      return detail::gaussian_smooth(x, detail::gaussian_taps(spec.sigma));
    case DenoiserKind::TotalVariation:
      return detail::tv_denoise(x, spec.weight, spec.iterations, spec.tolerance);
    case DenoiserKind::Median:
      return detail::median_filter(x, spec.radius);
  }
  throw std::invalid_argument("unknown denoiser kind");
}

/// z-update of the splitting schemes: pure delegation to the denoiser.
template <typename Derived>
Grid<typename Derived::Scalar> z_prox(const Eigen::ArrayBase<Derived>& zt, const DenoiserSpec& spec) {
  return apply(spec, zt);
}

template <typename Scalar>
struct SmoothJacobian {
  Grid<Scalar> value;
  Grid<Scalar> vjp;   // D^T cotangent = D(cotangent)
  Scalar dsigma = 0;  // d/dsigma <cotangent, D(img)>
};

/// GaussianSmooth forward pass together with its vector-Jacobian product and
/// the sensitivity of <cotangent, D(img)> to sigma.
template <typename DI, typename DC>
SmoothJacobian<typename DI::Scalar> apply_with_jacobian(const DenoiserSpec& spec,
                                                        const Eigen::ArrayBase<DI>& img,
                                                        const Eigen::ArrayBase<DC>& cotangent) {
  using S = typename DI::Scalar;
  if (spec.kind != DenoiserKind::GaussianSmooth)
    throw std::invalid_argument("apply_with_jacobian: only GaussianSmooth is differentiable");
  spec.validate();
  require_same_shape(img, cotangent, "apply_with_jacobian");
  const Grid<S> x = img;
  const Grid<S> c = cotangent;
  const auto g = detail::gaussian_taps(spec.sigma);
  SmoothJacobian<S> out;
  out.value = detail::gaussian_smooth(x, g);
  out.vjp = detail::gaussian_smooth(c, g);
  if (g.taps.size() > 1) {
    const Grid<S> rows_g = detail::filter_axis(x, g.taps, 1);
    const Grid<S> rows_dg = detail::filter_axis(x, g.dtaps, 1);
    const Grid<S> dx = detail::filter_axis(rows_dg, g.taps, 0) + detail::filter_axis(rows_g, g.dtaps, 0);
    out.dsigma = (c * dx).sum();
  }
  return out;
}

}  // namespace ppnp
