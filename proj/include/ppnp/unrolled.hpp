#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "ppnp/denoisers.hpp"
#include "ppnp/linear_operators.hpp"
#include "ppnp/proximal.hpp"

namespace ppnp {

/// Per-iteration penalties and GaussianSmooth widths of a K-step unroll.
struct UnrolledParams {
  std::vector<double> rho1;
  std::vector<double> rho2;
  std::vector<double> sigma;

  static UnrolledParams constant(int depth, double rho, double sigma) {
    UnrolledParams p;
    p.rho1.assign(depth, rho);
    p.rho2.assign(depth, rho);
    p.sigma.assign(depth, sigma);
    return p;
  }

  int depth() const { return static_cast<int>(rho1.size()); }
  int parameter_count() const { return 3 * depth(); }

  void validate() const {
    if (rho2.size() != rho1.size() || sigma.size() != rho1.size())
      throw std::invalid_argument("unrolled params: rho1, rho2 and sigma must have equal length");
    for (std::size_t k = 0; k < rho1.size(); ++k) {
      if (!(rho1[k] > 0.0) || !(rho2[k] > 0.0))
        throw std::invalid_argument("unrolled params: rho values must be > 0");
      if (!(sigma[k] >= 0.0)) throw std::invalid_argument("unrolled params: sigma must be >= 0");
    }
  }

  // Unconstrained coordinates: every parameter is exp(theta). Index order is
  // rho1[0..K), rho2[0..K), sigma[0..K).
  double& at(int index) {
    const int k = depth();
    return index < k ? rho1[index] : index < 2 * k ? rho2[index - k] : sigma[index - 2 * k];
  }
  double at(int index) const { return const_cast<UnrolledParams*>(this)->at(index); }

  static std::string name(int index, int depth) {
    static const char* names[] = {"rho1", "rho2", "sigma"};
    return std::string(names[index / depth]) + "[" + std::to_string(index % depth) + "]";
  }
};

/// Every intermediate of one unrolled iteration.
template <typename Scalar>
struct TapeStep {
  double rho1 = 0, rho2 = 0, sigma = 0;
  Grid<Scalar> x0t, x1t, x, zt, z, hx, vt, v, u1, u2;
};

/// Recorded forward pass of the unrolled pipeline.
template <typename Scalar>
struct Tape {
  FreqPlan<Scalar> plan;
  double alpha = 0;
  Grid<Scalar> y;
  Grid<Scalar> wiener_raw;  // before clamping
  Grid<Scalar> x0;          // clamped initialization
  std::vector<TapeStep<Scalar>> steps;
  Grid<Scalar> output;
};

template <typename Scalar>
struct UnrolledResult {
  Grid<Scalar> output;
  Tape<Scalar> tape;
};

/// K iterations of the three-operator scheme with GaussianSmooth as the
/// denoiser and params[k] at iteration k, starting from the given x0.
template <typename Scalar>
UnrolledResult<Scalar> unrolled_forward_from(const Grid<Scalar>& x0, const Grid<Scalar>& y,
                                             const FreqPlan<Scalar>& plan, PhotonLevel alpha,
                                             const UnrolledParams& params) {
  params.validate();
  require_same_shape(x0, y, "unrolled_forward");
  UnrolledResult<Scalar> r{Grid<Scalar>(), Tape<Scalar>{plan, alpha.value(), y, Grid<Scalar>(), x0, {}, {}}};
  Tape<Scalar>& tape = r.tape;

  Grid<Scalar> z = x0;
  Grid<Scalar> v = y / Scalar(alpha.value());
  Grid<Scalar> u1 = Grid<Scalar>::Zero(y.rows(), y.cols());
  Grid<Scalar> u2 = u1;
  Grid<Scalar> x = x0;
  for (int k = 0; k < params.depth(); ++k) {
    TapeStep<Scalar> s;
    s.rho1 = params.rho1[k];
    s.rho2 = params.rho2[k];
    s.sigma = params.sigma[k];
    s.x0t = z - u1;
    s.x1t = v - u2;
    s.x = plan.deblur_solve(s.x0t, s.x1t, Scalar(s.rho2 / s.rho1));
    s.zt = s.x + u1;
    s.z = apply(DenoiserSpec::gaussian(s.sigma), s.zt);
    s.hx = plan.convolve(s.x);
    s.vt = s.hx + u2;
    s.v = poisson_prox(s.vt, y, alpha.value(), s.rho2).value;
    s.u1 = u1 + s.x - s.z;
    s.u2 = u2 + s.hx - s.v;
    x = s.x;
    z = s.z;
    v = s.v;
    u1 = s.u1;
    u2 = s.u2;
    tape.steps.push_back(std::move(s));
  }
  tape.output = x;
  r.output = x;
  return r;
}

/// Unrolled forward pass from the clamped Wiener initialization.
template <typename Scalar>
UnrolledResult<Scalar> unrolled_forward(const Image<Scalar>& y, const BlurKernel<Scalar>& h,
                                        PhotonLevel alpha, const UnrolledParams& params) {
  require_valid(y, Domain::PhotonCount, "unrolled_forward");
  const FreqPlan<Scalar> plan(h, y.height(), y.width());
  Grid<Scalar> raw = plan.wiener(y.data(), Scalar(alpha.value()));
  auto r = unrolled_forward_from<Scalar>(clamp_unit(raw), y.data(), plan, alpha, params);
  r.tape.wiener_raw = std::move(raw);
  return r;
}

/// Recomputes every recorded intermediate from its recorded inputs and returns
/// the largest absolute discrepancy.
template <typename Scalar>
double verify_tape(const Tape<Scalar>& tape) {
  double worst = 0.0;
  auto track = [&](const Grid<Scalar>& a, const Grid<Scalar>& b) {
    worst = std::max(worst, double((a - b).abs().maxCoeff()));
  };
  Grid<Scalar> z = tape.x0;
  Grid<Scalar> v = tape.y / Scalar(tape.alpha);
  Grid<Scalar> u1 = Grid<Scalar>::Zero(tape.y.rows(), tape.y.cols());
  Grid<Scalar> u2 = u1;
  for (const auto& s : tape.steps) {
    track(s.x0t, z - u1);
    track(s.x1t, v - u2);
    track(s.x, tape.plan.deblur_solve(s.x0t, s.x1t, Scalar(s.rho2 / s.rho1)));
    track(s.zt, s.x + u1);
    track(s.z, apply(DenoiserSpec::gaussian(s.sigma), s.zt));
    track(s.hx, tape.plan.convolve(s.x));
    track(s.vt, s.hx + u2);
    track(s.v, poisson_prox(s.vt, tape.y, tape.alpha, s.rho2).value);
    track(s.u1, u1 + s.x - s.z);
    track(s.u2, u2 + s.hx - s.v);
    z = s.z;
    v = s.v;
    u1 = s.u1;
    u2 = s.u2;
  }
  track(tape.output, tape.steps.empty() ? tape.x0 : tape.steps.back().x);
  return worst;
}

namespace detail {

template <typename Scalar>
Grid<Scalar> avg_pool2(const Grid<Scalar>& a) {
  Grid<Scalar> out(a.rows() / 2, a.cols() / 2);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(i, j) = Scalar(0.25) * (a(2 * i, 2 * j) + a(2 * i, 2 * j + 1) + a(2 * i + 1, 2 * j) +
                                  a(2 * i + 1, 2 * j + 1));
  return out;
}

template <typename Scalar>
Grid<Scalar> avg_pool2_adjoint(const Grid<Scalar>& g) {
  Grid<Scalar> out(g.rows() * 2, g.cols() * 2);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = Scalar(0.25) * g(i / 2, j / 2);
  return out;
}

template <typename Scalar>
Grid<Scalar> sign0(const Grid<Scalar>& a) {
  return a.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : v < Scalar(0) ? Scalar(-1) : Scalar(0); });
}

inline void require_multiscale_shape(Eigen::Index rows, Eigen::Index cols) {
  if (rows % 4 != 0 || cols % 4 != 0 || rows == 0 || cols == 0)
    throw std::invalid_argument("multiscale_l1: dimensions must be positive multiples of 4");
}

}  // namespace detail

inline constexpr int kLossScales = 3;

/// Sum over three scales of the l1 distance, each scale a further 2x2
/// average pooling of the previous one.
template <typename Scalar>
Scalar multiscale_l1(const Grid<Scalar>& xhat, const Grid<Scalar>& xref) {
  require_same_shape(xhat, xref, "multiscale_l1");
  detail::require_multiscale_shape(xhat.rows(), xhat.cols());
  Grid<Scalar> a = xhat, b = xref;
  Scalar total = 0;
  for (int l = 0; l < kLossScales; ++l) {
    if (l > 0) {
      a = detail::avg_pool2(a);
      b = detail::avg_pool2(b);
    }
    total += (a - b).abs().sum();
  }
  return total;
}

/// Subgradient of multiscale_l1 with respect to xhat, taking sign(0) = 0.
template <typename Scalar>
Grid<Scalar> multiscale_l1_grad(const Grid<Scalar>& xhat, const Grid<Scalar>& xref) {
  require_same_shape(xhat, xref, "multiscale_l1");
  detail::require_multiscale_shape(xhat.rows(), xhat.cols());
  std::vector<Grid<Scalar>> signs;
  Grid<Scalar> a = xhat, b = xref;
  for (int l = 0; l < kLossScales; ++l) {
    if (l > 0) {
      a = detail::avg_pool2(a);
      b = detail::avg_pool2(b);
    }
    signs.push_back(detail::sign0<Scalar>(a - b));
  }
  Grid<Scalar> g = signs.back();
  for (int l = kLossScales - 2; l >= 0; --l) g = signs[l] + detail::avg_pool2_adjoint(g);
  return g;
}

template <typename Scalar>
struct UnrolledGradients {
  std::vector<double> d_rho1, d_rho2, d_sigma;
  Grid<Scalar> d_x0;           // w.r.t. the (clamped) initialization
  Grid<Scalar> d_y_init_path;  // w.r.t. y through the Wiener initialization only

  double at(int index) const {
    const int k = static_cast<int>(d_rho1.size());
    return index < k ? d_rho1[index] : index < 2 * k ? d_rho2[index - k] : d_sigma[index - 2 * k];
  }
};

/// Test hook: deliberately breaks one adjoint term so gradient checks can be
/// shown to fail.
struct BackwardOptions {
  bool corrupt_adjoint = false;
};

/// Reverse-mode sweep over a recorded unroll. loss_grad is dL/d(output).
template <typename Scalar>
UnrolledGradients<Scalar> unrolled_backward(const Tape<Scalar>& tape, const Grid<Scalar>& loss_grad,
                                            const UnrolledParams& params,
                                            BackwardOptions options = {}) {
  params.validate();
  const int depth = params.depth();
  if (static_cast<int>(tape.steps.size()) != depth)
    throw std::invalid_argument("unrolled_backward: tape depth does not match params");
  for (int k = 0; k < depth; ++k) {
    const auto& s = tape.steps[k];
    if (s.rho1 != params.rho1[k] || s.rho2 != params.rho2[k] || s.sigma != params.sigma[k])
      throw std::invalid_argument("unrolled_backward: tape was recorded with different params");
  }
  require_same_shape(loss_grad, tape.output, "unrolled_backward");

  const auto& plan = tape.plan;
  const Eigen::Index rows = tape.y.rows(), cols = tape.y.cols();
  const Grid<Scalar> zero = Grid<Scalar>::Zero(rows, cols);

  UnrolledGradients<Scalar> g;
  g.d_rho1.assign(depth, 0.0);
  g.d_rho2.assign(depth, 0.0);
  g.d_sigma.assign(depth, 0.0);

  // Cotangents of the loop-carried state after iteration k.
  Grid<Scalar> gx = loss_grad, gz = zero, gv = zero, gu1 = zero, gu2 = zero;
  if (depth == 0) gz = gx;  // output is x0 itself

  for (int k = depth - 1; k >= 0; --k) {
    const auto& s = tape.steps[k];
    const Scalar rho1 = Scalar(s.rho1), rho2 = Scalar(s.rho2);
    const Scalar ratio = rho2 / rho1;

    // Cotangents of the previous state, accumulated below.
    Grid<Scalar> gz_prev = zero, gv_prev = zero, gu1_prev = zero, gu2_prev = zero;

    // u2 = u2_prev + Hx - v
    gu2_prev += gu2;
    Grid<Scalar> ghx = options.corrupt_adjoint ? Grid<Scalar>(-gu2) : gu2;
    gv -= gu2;
    // u1 = u1_prev + x - z
    gu1_prev += gu1;
    gx += gu1;
    gz -= gu1;

    // v = prox(vt; y, alpha, rho2)
    Grid<Scalar> gvt(rows, cols);
    double drho2 = 0.0;
    for (Eigen::Index i = 0; i < gvt.size(); ++i) {
      const auto p = poisson_prox_partials(s.v.data()[i], s.vt.data()[i], tape.y.data()[i], rho2);
      gvt.data()[i] = gv.data()[i] * p.d_vt;
      drho2 += double(gv.data()[i] * p.d_rho);
    }
    // vt = Hx + u2_prev
    ghx += gvt;
    gu2_prev += gvt;
    gx += plan.correlate(ghx);

    // z = G_sigma(zt)
    const auto smooth = apply_with_jacobian(DenoiserSpec::gaussian(s.sigma), s.zt, gz);
    g.d_sigma[k] = double(smooth.dsigma);
    // zt = x + u1_prev
    gx += smooth.vjp;
    gu1_prev += smooth.vjp;

    // x = (I + r H^T H)^{-1} (x0t + r H^T x1t)
    const Grid<Scalar> w = plan.normal_inverse(gx, ratio);
    const Grid<Scalar> gx0t = w;
    const Grid<Scalar> gx1t = ratio * plan.convolve(w);
    const Grid<Scalar> d_ratio_dir = plan.correlate(s.x1t - s.hx);
    const double d_ratio = double(inner(w, d_ratio_dir));
    g.d_rho1[k] = d_ratio * double(-rho2 / (rho1 * rho1));
    g.d_rho2[k] = drho2 + d_ratio / double(rho1);
    // x0t = z_prev - u1_prev ; x1t = v_prev - u2_prev
    gz_prev += gx0t;
    gu1_prev -= gx0t;
    gv_prev += gx1t;
    gu2_prev -= gx1t;

    gx = zero;
    gz = std::move(gz_prev);
    gv = std::move(gv_prev);
    gu1 = std::move(gu1_prev);
    gu2 = std::move(gu2_prev);
  }

  // Initial state: z0 = x0, v0 = y / alpha, u = 0.
  g.d_x0 = gz;
  if (tape.wiener_raw.size() == tape.x0.size()) {
    const Grid<Scalar> mask =
        ((tape.wiener_raw > Scalar(0)) && (tape.wiener_raw < Scalar(1))).template cast<Scalar>();
    g.d_y_init_path = plan.wiener_adjoint(mask * g.d_x0, Scalar(tape.alpha));
  } else {
    g.d_y_init_path = zero;
  }
  return g;
}

struct GradCheckEntry {
  std::string name;
  double analytic = 0;  // d loss / d log(param)
  double numeric = 0;
  double rel_err = 0;
};

struct GradCheckReport {
  double max_rel_err = 0;
  bool passed = true;
  std::vector<GradCheckEntry> entries;
};

inline constexpr double kGradCheckTolerance = 1e-3;
inline constexpr double kGradCheckStep = 1e-4;

/// |a - b| relative to the larger magnitude; differences below abs_floor count as exact.
inline double relative_error(double a, double b, double abs_floor = 1e-8) {
  const double diff = std::abs(a - b);
  if (diff <= abs_floor) return 0.0;
  return diff / std::max(std::abs(a), std::abs(b));
}

/// Compares reverse-mode gradients of multiscale_l1(unrolled output, xref)
/// with central differences in log-parameter space.
template <typename Scalar>
GradCheckReport grad_check(const Image<Scalar>& y, const BlurKernel<Scalar>& h, PhotonLevel alpha,
                           const UnrolledParams& params, const Grid<Scalar>& xref,
                           BackwardOptions options = {}, double step = kGradCheckStep,
                           double tolerance = kGradCheckTolerance) {
  const auto fwd = unrolled_forward(y, h, alpha, params);
  const Grid<Scalar> dl = multiscale_l1_grad(fwd.output, xref);
  const auto grads = unrolled_backward(fwd.tape, dl, params, options);

  auto loss_at = [&](const UnrolledParams& p) {
    return double(multiscale_l1(unrolled_forward_from(fwd.tape.x0, y.data(), fwd.tape.plan, alpha, p).output,
                                xref));
  };

  GradCheckReport report;
  for (int i = 0; i < params.parameter_count(); ++i) {
    GradCheckEntry e;
    e.name = UnrolledParams::name(i, params.depth());
    const double base = params.at(i);
    e.analytic = base * grads.at(i);
    if (base > 0.0) {
      UnrolledParams plus = params, minus = params;
      plus.at(i) = base * std::exp(step);
      minus.at(i) = base * std::exp(-step);
      e.numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * step);
    }
    e.rel_err = relative_error(e.analytic, e.numeric);
    report.max_rel_err = std::max(report.max_rel_err, e.rel_err);
    report.entries.push_back(std::move(e));
  }
  report.passed = report.max_rel_err < tolerance;
  return report;
}

}  // namespace ppnp
