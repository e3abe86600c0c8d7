#include <gtest/gtest.h>

#include "ppnp/linear_operators.hpp"
#include "test_support.hpp"

using namespace ppnp;
using namespace ppnp::testing;

TEST(Fft, RoundTrip) {
  const Grid<double> x = random_grid(12, 10, 3, -1.0, 1.0);
  const Grid<double> back = ifft2_real<double>(fft2(x));
  EXPECT_LE((back - x).abs().maxCoeff(), 1e-12 * x.abs().maxCoeff());
}

TEST(CircConvolve, DeltaIsIdentity) {
  const Grid<double> x = random_grid(8, 8, 1);
  EXPECT_LE((circ_convolve(x, BlurKernel<double>::delta()) - x).abs().maxCoeff(), 1e-12);
  EXPECT_LE((circ_correlate(x, BlurKernel<double>::delta()) - x).abs().maxCoeff(), 1e-12);
}

TEST(CircConvolve, ImpulseResponseIsCenterShiftedKernel) {
  Grid<double> taps(3, 3);
  taps << 0.0, 0.1, 0.05, 0.2, 0.3, 0.1, 0.05, 0.15, 0.05;
  const BlurKernel<double> h(taps);
  Grid<double> x = Grid<double>::Zero(6, 6);
  x(0, 0) = 1.0;
  const Grid<double> out = circ_convolve(x, h);
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) EXPECT_NEAR(out((i + 6) % 6, (j + 6) % 6), taps(i + 1, j + 1), 1e-14);
  EXPECT_NEAR(out.sum(), 1.0, 1e-12);
}

TEST(CircConvolve, MatchesNaiveSpatialLoop) {
  const auto h = BlurKernel<double>::normalized(random_grid(3, 3, 41));
  const Grid<double> x = random_grid(8, 8, 42);
  EXPECT_LE((circ_convolve(x, h) - naive_convolve(x, h.taps())).abs().maxCoeff(), 1e-12);
  EXPECT_NEAR(circ_convolve(x, h).sum(), x.sum(), 1e-8);
}

TEST(CircCorrelate, AdjointIdentity) {
  const auto h = BlurKernel<double>::normalized(random_grid(5, 5, 7));
  const Grid<double> x = random_grid(8, 8, 8, -1, 1), r = random_grid(8, 8, 9, -1, 1);
  EXPECT_LE(std::abs(inner(circ_convolve(x, h), r) - inner(x, circ_correlate(r, h))), 1e-10);
}

TEST(CircCorrelate, SymmetricKernelIsSelfAdjoint) {
  const auto h = gaussian_kernel(5, 1.2, 1.2);
  const Grid<double> x = random_grid(9, 7, 11);
  EXPECT_LE((circ_convolve(x, h) - circ_correlate(x, h)).abs().maxCoeff(), 1e-14);
}

TEST(CircConvolve, KernelLargerThanImageRejected) {
  EXPECT_THROW(circ_convolve(Grid<double>::Zero(4, 4), gaussian_kernel(7, 1.0, 1.0)), DimensionMismatch);
}

TEST(DeblurSolve, DeltaKernelAveragesInputs) {
  const Grid<double> a = random_grid(6, 6, 1), b = random_grid(6, 6, 2);
  const Grid<double> x = deblur_solve(a, b, BlurKernel<double>::delta(), 1.0);
  EXPECT_LE((x - 0.5 * (a + b)).abs().maxCoeff(), 1e-12);
}

TEST(DeblurSolve, VanishingRatioReturnsFirstInput) {
  const auto h = gaussian_kernel(3, 1.0, 1.0);
  const Grid<double> a = random_grid(6, 6, 1), b = random_grid(6, 6, 2);
  EXPECT_LE((deblur_solve(a, b, h, 1e-12) - a).abs().maxCoeff(), 1e-6);
}

TEST(DeblurSolve, MatchesDenseNormalEquations) {
  const auto h = gaussian_kernel(5, 1.1, 1.1);
  const Eigen::MatrixXd H = dense_circulant(h, 12, 12);
  const Grid<double> a = random_grid(12, 12, 5), b = random_grid(12, 12, 6);
  const double ratio = 0.73;
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(144, 144) + ratio * H.transpose() * H;
  const Eigen::VectorXd want = A.ldlt().solve(flat(a) + ratio * H.transpose() * flat(b));
  const Grid<double> got = deblur_solve(a, b, h, ratio);
  EXPECT_LE((flat(got) - want).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(DeblurSolve, StationarityResidual) {
  const auto h = gaussian_kernel(5, 1.4, 0.9, 0.3);
  const FreqPlan<double> plan(h, 10, 14);
  const Grid<double> a = random_grid(10, 14, 15), b = random_grid(10, 14, 16);
  const double rho1 = 3.0, rho2 = 11.0;
  const Grid<double> x = plan.deblur_solve(a, b, rho2 / rho1);
  const Grid<double> r = rho1 * (x - a) + rho2 * plan.correlate(plan.convolve(x) - b);
  EXPECT_LT(r.abs().maxCoeff(), 1e-8);
}

TEST(DeblurSolve, RejectsNonPositiveRatio) {
  const Grid<double> a = Grid<double>::Zero(4, 4);
  EXPECT_THROW(deblur_solve(a, a, BlurKernel<double>::delta(), 0.0), std::invalid_argument);
}

TEST(WienerInit, DeltaKernelConstantInput) {
  const Image<double> y(5, 5, Domain::PhotonCount, 5.0);
  const Image<double> x = wiener_init(y, BlurKernel<double>::delta(), PhotonLevel(10.0));
  EXPECT_EQ(x.domain(), Domain::SceneUnit);
  EXPECT_LE((x.data() - 5.0 / 11.0).abs().maxCoeff(), 1e-12);
}

TEST(WienerInit, ZeroInputGivesZero) {
  const Image<double> y(6, 6, Domain::PhotonCount, 0.0);
  EXPECT_LE(wiener_init(y, gaussian_kernel(3, 1.0, 1.0), PhotonLevel(3.0)).data().abs().maxCoeff(), 1e-15);
}

TEST(WienerInit, MatchesDenseFilter) {
  const auto h = gaussian_kernel(5, 1.0, 1.0);
  const Eigen::MatrixXd H = dense_circulant(h, 8, 8);
  const Grid<double> y = random_counts(8, 8, 3, 10.0);
  const double alpha = 20.0;
  // (1/alpha) (H^T H + I/alpha)^{-1} H^T y
  const Eigen::MatrixXd A = H.transpose() * H + Eigen::MatrixXd::Identity(64, 64) / alpha;
  const Eigen::VectorXd want = A.ldlt().solve(H.transpose() * flat(y)) / alpha;
  const Grid<double> raw = wiener_init_raw(y, h, PhotonLevel(alpha));
  EXPECT_LE((flat(raw) - want).cwiseAbs().maxCoeff(), 1e-10);
  const Grid<double> clamped = wiener_init(Image<double>(y, Domain::PhotonCount), h, PhotonLevel(alpha)).data();
  EXPECT_LE((clamped - raw.max(0.0).min(1.0)).abs().maxCoeff(), 0.0);
}

TEST(WienerAdjoint, InnerProductIdentity) {
  const FreqPlan<double> plan(BlurKernel<double>::normalized(random_grid(5, 5, 21)), 8, 8);
  const Grid<double> a = random_grid(8, 8, 22, -1, 1), b = random_grid(8, 8, 23, -1, 1);
  EXPECT_LE(std::abs(inner(plan.wiener(a, 7.0), b) - inner(a, plan.wiener_adjoint(b, 7.0))), 1e-10);
}

TEST(LinearOperators, Linearity) {
  const auto h = BlurKernel<double>::normalized(random_grid(3, 3, 31));
  const FreqPlan<double> plan(h, 8, 8);
  const Grid<double> p = random_grid(8, 8, 32, -1, 1), q = random_grid(8, 8, 33, -1, 1);
  const Grid<double> p2 = random_grid(8, 8, 34, -1, 1), q2 = random_grid(8, 8, 35, -1, 1);
  const double a = 0.7, b = -1.3;
  auto close = [](const Grid<double>& u, const Grid<double>& v) { return (u - v).abs().maxCoeff(); };
  EXPECT_LE(close(plan.convolve(a * p + b * q), a * plan.convolve(p) + b * plan.convolve(q)), 1e-10);
  EXPECT_LE(close(plan.correlate(a * p + b * q), a * plan.correlate(p) + b * plan.correlate(q)), 1e-10);
  EXPECT_LE(close(plan.deblur_solve(a * p + b * q, a * p2 + b * q2, 0.4),
                  a * plan.deblur_solve(p, p2, 0.4) + b * plan.deblur_solve(q, q2, 0.4)),
            1e-10);
  EXPECT_LE(close(plan.wiener(a * p + b * q, 9.0), a * plan.wiener(p, 9.0) + b * plan.wiener(q, 9.0)), 1e-10);
}

TEST(LinearOperators, FloatInstantiation) {
  const auto h = gaussian_kernel<float>(3, 1.0, 1.0);
  const Grid<float> x = random_grid(8, 8, 3).cast<float>();
  const Grid<float> y = circ_convolve(x, h);
  EXPECT_NEAR(y.sum(), x.sum(), 1e-4f);
}
