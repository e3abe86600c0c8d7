#pragma once

#include <cstdint>

#include "ppnp/core.hpp"
#include "ppnp/random.hpp"

namespace ppnp {

/// Deterministic piecewise-smooth test scene in [0.1, 0.9]: a tilted
/// background gradient with a few constant rectangles and disks.
inline Image<double> synthetic_scene(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  CounterRng rng(seed, 0x5ce9e);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  Grid<double> g(rows, cols);
  const double gx = uni(-0.3, 0.3), gy = uni(-0.3, 0.3), base = uni(0.35, 0.55);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      g(i, j) = base + gx * (double(j) / double(cols) - 0.5) + gy * (double(i) / double(rows) - 0.5);
  const int shapes = 3 + static_cast<int>(rng.uniform() * 4);
  for (int s = 0; s < shapes; ++s) {
    const double level = uni(0.1, 0.9);
    const double ci = uni(0, double(rows)), cj = uni(0, double(cols));
    const double ri = uni(0.1, 0.3) * double(rows), rj = uni(0.1, 0.3) * double(cols);
    const bool disk = rng.uniform() < 0.5;
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        const double di = (double(i) - ci) / ri, dj = (double(j) - cj) / rj;
        const bool inside = disk ? di * di + dj * dj <= 1.0 : std::abs(di) <= 1.0 && std::abs(dj) <= 1.0;
        if (inside) g(i, j) = level;
      }
    }
  }
  return Image<double>(g.max(0.1).min(0.9), Domain::SceneUnit);
}

}  // namespace ppnp
