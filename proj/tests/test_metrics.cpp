#include <gtest/gtest.h>

#include "ppnp/metrics.hpp"
#include "test_support.hpp"

using namespace ppnp;
using ppnp::testing::random_grid;

namespace {

Grid<double> smooth_pattern(double amp, double phase, double ripple) {
  Grid<double> g(32, 32);
  for (Eigen::Index i = 0; i < 32; ++i)
    for (Eigen::Index j = 0; j < 32; ++j)
      g(i, j) = 0.5 + amp * std::sin(0.37 * i + phase) * std::cos(0.23 * j) + ripple * std::cos(1.7 * i + 2.3 * j);
  return g;
}

}  // namespace

TEST(Psnr, Examples) {
  const Grid<double> a = random_grid(8, 8, 1, 0.0, 0.9);
  EXPECT_NEAR(psnr(a, Grid<double>(a + 0.1)), 20.0, 1e-10);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
  const Grid<double> b = random_grid(8, 8, 2);
  double sum = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) sum += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
  EXPECT_NEAR(psnr(a, b), 10 * std::log10(double(a.size()) / sum), 1e-10);
  EXPECT_THROW(psnr(a, Grid<double>(Grid<double>::Zero(8, 9))), DimensionMismatch);
}

TEST(Psnr, DecreasesWithPerturbationSize) {
  const Grid<double> a = random_grid(16, 16, 3, 0.2, 0.8);
  const Grid<double> noise = random_grid(16, 16, 4, -1, 1);
  double prev = kPsnrCap;
  for (double mag : {0.01, 0.05, 0.2}) {
    const double p = psnr(a, Grid<double>(a + mag * noise));
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Ssim, IdentityAndSymmetry) {
  const Grid<double> a = random_grid(16, 16, 1), b = random_grid(16, 16, 2);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  EXPECT_THROW(ssim(Grid<double>(Grid<double>::Zero(10, 20)), Grid<double>(Grid<double>::Zero(10, 20))),
               std::invalid_argument);
}

TEST(Ssim, InvertedCheckerboardIsNegative) {
  Grid<double> a(16, 16);
  for (Eigen::Index i = 0; i < 16; ++i)
    for (Eigen::Index j = 0; j < 16; ++j) a(i, j) = (i + j) % 2;
  EXPECT_LT(ssim(a, Grid<double>(1.0 - a)), 0.0);
}

TEST(Ssim, GoldenValue) {
  // Reference computed with scikit-image structural_similarity
  // (gaussian_weights=True, sigma=1.5, use_sample_covariance=False, data_range=1).
  const Grid<double> a = smooth_pattern(0.4, 0.0, 0.0);
  const Grid<double> b = smooth_pattern(0.35, 0.2, 0.05);
  EXPECT_NEAR(ssim(a, b), 0.909907871446711, 1e-10);
}
