#include <gtest/gtest.h>

#include "ppnp/pnp3.hpp"
#include "ppnp/preprocess.hpp"
#include "ppnp/synthetic.hpp"
#include "ppnp/unrolled.hpp"
#include "test_support.hpp"

using namespace ppnp;
using ppnp::testing::random_grid;

namespace {

double max_abs(const Grid<double>& a) { return a.abs().maxCoeff(); }

// Multiscale l1 with pooling written as an explicit block-average loop.
double naive_multiscale_l1(Grid<double> a, Grid<double> b) {
  double total = 0;
  for (int level = 0; level < 3; ++level) {
    total += (a - b).abs().sum();
    Grid<double> pa(a.rows() / 2, a.cols() / 2), pb(a.rows() / 2, a.cols() / 2);
    for (Eigen::Index i = 0; i < pa.rows(); ++i)
      for (Eigen::Index j = 0; j < pa.cols(); ++j) {
        double sa = 0, sb = 0;
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj) {
            sa += a(2 * i + di, 2 * j + dj);
            sb += b(2 * i + di, 2 * j + dj);
          }
        pa(i, j) = sa / 4;
        pb(i, j) = sb / 4;
      }
    a = pa;
    b = pb;
  }
  return total;
}

struct Instance {
  Image<double> truth, y;
  BlurKernel<double> h;
  double alpha;
};

Instance seeded_instance(std::uint64_t seed, Eigen::Index n = 16, double alpha = 20.0) {
  Instance in{synthetic_scene(n, n, seed), Image<double>(n, n, Domain::PhotonCount, 0.0),
              gaussian_kernel(5, 1.0, 1.0), alpha};
  in.y = poisson_forward(in.truth, in.h, PhotonLevel(alpha), seed);
  return in;
}

}  // namespace

TEST(UnrolledForward, ZeroDepthReturnsWienerInit) {
  const auto in = seeded_instance(1);
  const auto r = unrolled_forward(in.y, in.h, PhotonLevel(in.alpha), UnrolledParams::constant(0, 1.0, 1.0));
  EXPECT_EQ(max_abs(r.output - wiener_init(in.y, in.h, PhotonLevel(in.alpha)).data()), 0.0);
  EXPECT_TRUE(r.tape.steps.empty());
}

TEST(UnrolledForward, NoiselessFixedPointPassesThrough) {
  const Grid<double> x = random_grid(8, 8, 2, 0.1, 0.9);
  const double alpha = 15.0;
  const Image<double> y(Grid<double>(alpha * x), Domain::PhotonCount);
  UnrolledParams p = UnrolledParams::constant(4, 1.0, 0.0);
  p.rho2.assign(4, 1e7);
  const auto r = unrolled_forward(y, BlurKernel<double>::delta(), PhotonLevel(alpha), p);
  EXPECT_LE(max_abs(r.output - x), 1e-6);
}

TEST(UnrolledForward, MatchesIterativeSolverWithFrozenSchedule) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const auto in = seeded_instance(seed);
    const int depth = 8;
    const double rho = 40.0, sigma = 0.8;
    SolverConfig cfg = SolverConfig::for_alpha(PhotonLevel(in.alpha));
    cfg.adaptive = false;
    cfg.delta_tol = 0.0;
    cfg.max_iters = depth;
    cfg.rho1_init = cfg.rho2_init = rho;
    cfg.denoiser = DenoiserSpec::gaussian(sigma);
    const auto report = pnp3_run(in.y, in.h, cfg);
    const auto r = unrolled_forward(in.y, in.h, PhotonLevel(in.alpha), UnrolledParams::constant(depth, rho, sigma));
    EXPECT_LE(max_abs(r.output - report.last_iterate), 1e-10);
    EXPECT_LE(max_abs(clamp_unit(r.output) - report.final.data()), 1e-10);
  }
}

TEST(UnrolledForward, DeterministicAndTapeReplays) {
  const auto in = seeded_instance(6);
  const auto p = UnrolledParams::constant(8, 30.0, 0.9);
  const auto a = unrolled_forward(in.y, in.h, PhotonLevel(in.alpha), p);
  const auto b = unrolled_forward(in.y, in.h, PhotonLevel(in.alpha), p);
  EXPECT_LE(max_abs(a.output - b.output), 1e-15);
  EXPECT_LE(verify_tape(a.tape), 1e-12);
  ASSERT_EQ(a.tape.steps.size(), 8u);
  for (const auto& s : a.tape.steps) EXPECT_GE(s.v.minCoeff(), 0.0);
}

TEST(UnrolledParamsType, ValidationAndIndexing) {
  UnrolledParams p = UnrolledParams::constant(2, 3.0, 0.5);
  EXPECT_EQ(p.parameter_count(), 6);
  p.at(3) = 7.0;
  EXPECT_EQ(p.rho2[1], 7.0);
  EXPECT_EQ(UnrolledParams::name(4, 2), "sigma[0]");
  p.sigma[1] = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = UnrolledParams::constant(2, 3.0, 0.5);
  p.rho1.pop_back();
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(MultiscaleL1, Examples) {
  const Grid<double> a = random_grid(8, 8, 1);
  EXPECT_EQ(multiscale_l1(a, a), 0.0);
  EXPECT_NEAR(multiscale_l1(Grid<double>(a + 0.1), a), 8.4, 1e-12);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Grid<double> p = random_grid(16, 12, 10 + seed), q = random_grid(16, 12, 20 + seed);
    EXPECT_NEAR(multiscale_l1(p, q), naive_multiscale_l1(p, q), 1e-12);
  }
  EXPECT_THROW(multiscale_l1<double>(Grid<double>::Zero(6, 8), Grid<double>::Zero(6, 8)), std::invalid_argument);
}

TEST(MultiscaleL1, GradientMatchesFiniteDifferences) {
  const Grid<double> xhat = random_grid(8, 8, 3);
  // Reference shifted off xhat so no pooled difference sits at a kink.
  const Grid<double> xref = xhat + random_grid(8, 8, 4, 0.05, 0.2) * Grid<double>(random_grid(8, 8, 5) - 0.5).sign();
  const Grid<double> g = multiscale_l1_grad(xhat, xref);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < xhat.size(); ++i) {
    Grid<double> p = xhat, m = xhat;
    p.data()[i] += h;
    m.data()[i] -= h;
    const double fd = (multiscale_l1(p, xref) - multiscale_l1(m, xref)) / (2 * h);
    EXPECT_NEAR(g.data()[i], fd, 1e-6);
  }
}

TEST(UnrolledBackward, ZeroCotangentGivesZeroGradients) {
  const auto in = seeded_instance(7);
  const auto p = UnrolledParams::constant(3, 20.0, 0.7);
  const auto r = unrolled_forward(in.y, in.h, PhotonLevel(in.alpha), p);
  const auto g = unrolled_backward<double>(r.tape, Grid<double>::Zero(16, 16), p);
  for (int i = 0; i < p.parameter_count(); ++i) EXPECT_EQ(g.at(i), 0.0);
  EXPECT_EQ(max_abs(g.d_y_init_path), 0.0);
}

TEST(UnrolledBackward, TwoStepScalarChainMatchesHandDerivation) {
  // h = delta, y = 0 and a constant start make every grid uniform. With
  // r = rho2/rho1 per step and c the start value:
  //   x1 = c rho1 / (rho1 + rho2)
  //   v1 = x1 - alpha/rho2,  u2 = alpha/rho2          (prox with y = 0)
  //   x2 = x1 - r' / (1 + r') * 2 alpha / rho2        (second step, r')
  // so d x2 / d rho2 (first step) = -c rho1/(rho1+rho2)^2 + r'/(1+r') * 2 alpha/rho2^2.
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> c_d(0.5, 1.0), rho_d(10.0, 20.0);
  const double alpha = 1.0;
  for (int trial = 0; trial < 3; ++trial) {
    const double c = c_d(gen);
    UnrolledParams p = UnrolledParams::constant(2, 1.0, 0.5);
    p.rho1 = {rho_d(gen), rho_d(gen)};
    p.rho2 = {rho_d(gen), rho_d(gen)};
    const FreqPlan<double> plan(BlurKernel<double>::delta(), 4, 4);
    const Grid<double> x0 = Grid<double>::Constant(4, 4, c);
    const auto r = unrolled_forward_from<double>(x0, Grid<double>::Zero(4, 4), plan, PhotonLevel(alpha), p);
    const auto g = unrolled_backward<double>(r.tape, Grid<double>::Ones(4, 4), p);

    const double rho1 = p.rho1[0], rho2 = p.rho2[0], rr = p.rho2[1] / p.rho1[1];
    const double x1 = c * rho1 / (rho1 + rho2);
    ASSERT_GT(x1, alpha / rho2);  // prox stays on its positive branch
    EXPECT_NEAR(r.output(0, 0), x1 - rr / (1 + rr) * 2 * alpha / rho2, 1e-12);
    const double want = 16 * (-c * rho1 / ((rho1 + rho2) * (rho1 + rho2)) + rr / (1 + rr) * 2 * alpha / (rho2 * rho2));
    EXPECT_NEAR(g.d_rho2[0], want, 1e-10 * std::abs(want));
    EXPECT_NEAR(g.d_rho1[0], 16 * c * rho2 / ((rho1 + rho2) * (rho1 + rho2)), 1e-10);
  }
}

TEST(UnrolledBackward, RejectsMismatchedParams) {
  const auto in = seeded_instance(9);
  const auto p = UnrolledParams::constant(2, 20.0, 0.7);
  const auto r = unrolled_forward(in.y, in.h, PhotonLevel(in.alpha), p);
  EXPECT_THROW(unrolled_backward(r.tape, r.output, UnrolledParams::constant(2, 21.0, 0.7)), std::invalid_argument);
  EXPECT_THROW(unrolled_backward(r.tape, r.output, UnrolledParams::constant(3, 20.0, 0.7)), std::invalid_argument);
}

TEST(UnrolledBackward, InitPathMatchesFiniteDifferences) {
  const auto in = seeded_instance(10, 8, 10.0);
  const auto p = UnrolledParams::constant(3, 15.0, 0.6);
  const Grid<double> xref = in.truth.data();
  const auto r = unrolled_forward(in.y, in.h, PhotonLevel(in.alpha), p);
  const auto g = unrolled_backward(r.tape, multiscale_l1_grad(r.output, xref), p);
  // Perturb x0 directly through the recorded plan.
  const double h = 1e-6;
  for (Eigen::Index i : {0, 9, 27, 63}) {
    Grid<double> xp = r.tape.x0, xm = r.tape.x0;
    xp.data()[i] += h;
    xm.data()[i] -= h;
    const double fp = multiscale_l1(unrolled_forward_from(xp, in.y.data(), r.tape.plan, PhotonLevel(in.alpha), p).output, xref);
    const double fm = multiscale_l1(unrolled_forward_from(xm, in.y.data(), r.tape.plan, PhotonLevel(in.alpha), p).output, xref);
    EXPECT_NEAR(g.d_x0.data()[i], (fp - fm) / (2 * h), 1e-5);
  }
}

TEST(GradCheck, PassesAcrossDepthsAndSeeds) {
  for (int depth : {1, 2, 8}) {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
      const auto in = seeded_instance(seed);
      const auto report =
          grad_check(in.y, in.h, PhotonLevel(in.alpha), UnrolledParams::constant(depth, 2.0, 0.7), in.truth.data());
      EXPECT_TRUE(report.passed) << "depth " << depth << " seed " << seed << " err " << report.max_rel_err;
      EXPECT_EQ(static_cast<int>(report.entries.size()), 3 * depth);
      EXPECT_LT(report.max_rel_err, 1e-4);
    }
  }
}

TEST(GradCheck, ZeroLossRegionPasses) {
  // With no photons every iterate stays at zero for any parameters, so the
  // loss against a zero reference vanishes on a whole neighbourhood.
  const Image<double> y(16, 16, Domain::PhotonCount, 0.0);
  const auto p = UnrolledParams::constant(2, 5.0, 0.6);
  const auto report = grad_check<double>(y, gaussian_kernel(5, 1.0, 1.0), PhotonLevel(20.0), p, Grid<double>::Zero(16, 16));
  EXPECT_TRUE(report.passed);
  for (const auto& e : report.entries) {
    EXPECT_EQ(e.analytic, 0.0);
    EXPECT_EQ(e.numeric, 0.0);
  }
}

TEST(GradCheck, CorruptedAdjointFails) {
  const auto in = seeded_instance(0);
  const auto report = grad_check(in.y, in.h, PhotonLevel(in.alpha), UnrolledParams::constant(8, 2.0, 0.7),
                                 in.truth.data(), BackwardOptions{true});
  EXPECT_FALSE(report.passed);
}

TEST(GradCheck, EmptyParameterTablePasses) {
  const auto in = seeded_instance(0);
  const auto report =
      grad_check(in.y, in.h, PhotonLevel(in.alpha), UnrolledParams::constant(0, 1.0, 1.0), in.truth.data());
  EXPECT_TRUE(report.passed);
  EXPECT_TRUE(report.entries.empty());
}

TEST(Trainability, GradientDescentReducesLoss) {
  const auto in = seeded_instance(5);
  UnrolledParams p = UnrolledParams::constant(8, 500.0, 0.3);
  const Grid<double> xref = in.truth.data();
  const double step = 1e-2;
  double first = 0, last = 0;
  for (int it = 0; it <= 100; ++it) {
    const auto f = unrolled_forward(in.y, in.h, PhotonLevel(in.alpha), p);
    last = multiscale_l1(f.output, xref);
    if (it == 0) first = last;
    if (it == 100) break;
    const auto g = unrolled_backward(f.tape, multiscale_l1_grad(f.output, xref), p);
    // Descent in log-parameter coordinates.
    for (int i = 0; i < p.parameter_count(); ++i) p.at(i) *= std::exp(-step * p.at(i) * g.at(i));
  }
  EXPECT_LE(last, 0.8 * first);
}
