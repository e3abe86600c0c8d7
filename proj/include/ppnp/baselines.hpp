#pragma once

#include "ppnp/data_term.hpp"
#include "ppnp/linear_operators.hpp"
#include "ppnp/solver_config.hpp"

namespace ppnp {

/// Richardson-Lucy deconvolution on y / alpha:
///   x_{k+1} = x_k * H^T( (y/alpha) / (H x_k) ).
/// Returns a report so the per-iteration data term can be inspected.
template <typename Scalar>
RunReport<Scalar> richardson_lucy(const Image<Scalar>& y, const BlurKernel<Scalar>& h,
                                  PhotonLevel alpha, int iters, double eps_log = kDefaultLogFloor) {
  if (iters < 0) throw std::invalid_argument("richardson_lucy: iters must be >= 0");
  require_valid(y, Domain::PhotonCount, "richardson_lucy");
  const FreqPlan<Scalar> plan(h, y.height(), y.width());
  const Scalar eps = Scalar(eps_log);
  const Grid<Scalar> target = y.data() / Scalar(alpha.value());

  Grid<Scalar> x = target.max(eps);
  RunReport<Scalar> report;
  for (int k = 0; k < iters; ++k) {
    const Grid<Scalar> hx = plan.convolve(x);
    x = x * plan.correlate(target / hx.max(eps));
    report.data_term_history.push_back(
        double(data_term_blurred(plan.convolve(x), y.data(), alpha.value(), eps_log)));
    ++report.iters_run;
  }
  report.last_iterate = x;
  report.final = Image<Scalar>(clamp_unit(x), Domain::SceneUnit);
  return report;
}

/// Anscombe variance-stabilizing transform, t = 2 sqrt(y + 3/8).
template <typename Derived>
Grid<typename Derived::Scalar> anscombe(const Eigen::ArrayBase<Derived>& y) {
  using S = typename Derived::Scalar;
  if ((y < S(0)).any()) throw std::invalid_argument("anscombe: counts must be nonnegative");
  return S(2) * (y + S(0.375)).sqrt();
}

/// Algebraic inverse of anscombe(), floored at zero.
template <typename Derived>
Grid<typename Derived::Scalar> anscombe_inverse(const Eigen::ArrayBase<Derived>& t) {
  using S = typename Derived::Scalar;
  return ((t / S(2)).square() - S(0.375)).max(S(0));
}

}  // namespace ppnp
