#pragma once

// Independent reference implementations used as test oracles. Nothing here
// goes through the FFT path of the library.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>

#include "ppnp/core.hpp"
#include "ppnp/kernel.hpp"

namespace ppnp::testing {

inline Grid<double> random_grid(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Grid<double> g(rows, cols);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = dist(gen);
  return g;
}

inline Grid<double> random_counts(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double mean) {
  std::mt19937_64 gen(seed);
  std::poisson_distribution<int> dist(mean);
  Grid<double> g(rows, cols);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = dist(gen);
  return g;
}

/// Direct circular convolution, (Hx)(r, c) = sum_ij h(i, j) x(r - (i - c0), c - (j - c0)).
inline Grid<double> naive_convolve(const Grid<double>& x, const Grid<double>& taps) {
  const Eigen::Index rows = x.rows(), cols = x.cols(), n = taps.rows(), c0 = n / 2;
  Grid<double> out = Grid<double>::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          const Eigen::Index rr = ((r - (i - c0)) % rows + rows) % rows;
          const Eigen::Index cc = ((c - (j - c0)) % cols + cols) % cols;
          out(r, c) += taps(i, j) * x(rr, cc);
        }
  return out;
}

/// Materialized circulant H acting on row-major flattened images.
inline Eigen::MatrixXd dense_circulant(const BlurKernel<double>& h, Eigen::Index rows, Eigen::Index cols) {
  const Eigen::Index n = rows * cols;
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Grid<double> e = Grid<double>::Zero(rows, cols);
    e.data()[k] = 1.0;
    const Grid<double> col = naive_convolve(e, h.taps());
    m.col(k) = Eigen::Map<const Eigen::VectorXd>(col.data(), n);
  }
  return m;
}

inline Eigen::VectorXd flat(const Grid<double>& g) {
  return Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
}

inline Grid<double> unflat(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  Grid<double> g(rows, cols);
  Eigen::Map<Eigen::VectorXd>(g.data(), g.size()) = v;
  return g;
}

/// Golden-section minimizer of a unimodal scalar function on [a, b].
inline double golden_section(const std::function<double(double)>& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace ppnp::testing
