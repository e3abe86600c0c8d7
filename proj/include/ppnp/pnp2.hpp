#pragma once

#include <deque>
#include <limits>

#include "ppnp/data_term.hpp"
#include "ppnp/denoisers.hpp"
#include "ppnp/linear_operators.hpp"
#include "ppnp/solver_config.hpp"

namespace ppnp {

inline constexpr double kSurrogateThreshold = 1e-4;

template <typename Scalar>
struct InnerSolveResult {
  Grid<Scalar> x;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  /// Set when the line search could not find a descent step; x is then the
  /// best iterate seen.
  bool line_search_failed = false;
};

namespace detail {

/// Poisson data term with the log replaced by its second-order Taylor
/// expansion at tau wherever (Hx)_j < tau, plus a quadratic pull to xt.
/// Smooth and convex on all of R^N.
template <typename Scalar>
class SurrogateObjective {
 public:
  SurrogateObjective(const FreqPlan<Scalar>& plan, const Grid<Scalar>& y, const Grid<Scalar>& xt,
                     double alpha, double rho, double tau)
      : plan_(plan), y_(y), xt_(xt), alpha_(alpha), rho_(rho), tau_(tau) {}

  /// Returns f(x) and writes grad f(x).
  double evaluate(const Grid<Scalar>& x, Grid<Scalar>& grad) const {
    const Grid<Scalar> hx = plan_.convolve(x);
    Grid<Scalar> dphi(hx.rows(), hx.cols());
    double f = alpha_ * double(hx.sum());
    const double log_a_tau = std::log(alpha_ * tau_);
    for (Eigen::Index i = 0; i < hx.size(); ++i) {
      const double yi = double(y_.data()[i]);
      const double t = double(hx.data()[i]);
      if (yi == 0.0) {
        dphi.data()[i] = Scalar(0);
        continue;
      }
      if (t >= tau_) {
        f -= yi * std::log(alpha_ * t);
        dphi.data()[i] = Scalar(-yi / t);
      } else {
        const double d = t - tau_;
        f -= yi * (log_a_tau + d / tau_ - d * d / (2.0 * tau_ * tau_));
        dphi.data()[i] = Scalar(-yi * (1.0 / tau_ - d / (tau_ * tau_)));
      }
    }
    const Grid<Scalar> diff = x - xt_;
    f += 0.5 * rho_ * double(diff.square().sum());
    grad = plan_.correlate(dphi + Scalar(alpha_)) + Scalar(rho_) * diff;
    return f;
  }

 private:
  const FreqPlan<Scalar>& plan_;
  const Grid<Scalar>& y_;
  const Grid<Scalar>& xt_;
  double alpha_, rho_, tau_;
};

}  // namespace detail

/// Proximal step of the Poisson likelihood through the blur,
///   argmin_x  alpha 1^T Hx - y^T log(alpha Hx) + rho/2 |x - xt|^2,
/// solved with limited-memory BFGS on the near-zero quadratic surrogate.
template <typename Scalar>
InnerSolveResult<Scalar> inner_x_solve(const Grid<Scalar>& xt, const Grid<Scalar>& y,
                                       const FreqPlan<Scalar>& plan, PhotonLevel alpha, double rho,
                                       double grad_tol = 1e-5, int max_inner = 200,
                                       double tau = kSurrogateThreshold) {
  if (!(rho > 0.0)) throw std::invalid_argument("inner_x_solve: rho must be > 0");
  require_same_shape(xt, y, "inner_x_solve");
  constexpr int kMemory = 10;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 40;

  const detail::SurrogateObjective<Scalar> objective(plan, y, xt, alpha.value(), rho, tau);
  InnerSolveResult<Scalar> out;
  Grid<Scalar> x = xt, g;
  double f = objective.evaluate(x, g);
  std::deque<std::pair<Grid<Scalar>, Grid<Scalar>>> memory;  // (s, y) pairs

  for (int it = 0;; ++it) {
    out.grad_norm = double(norm2(g));
    out.iterations = it;
    if (out.grad_norm < grad_tol) {
      out.converged = true;
      break;
    }
    if (it == max_inner) break;

    // Two-loop recursion for d = -H_k g.
    Grid<Scalar> q = g;
    std::vector<double> coeffs(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      const auto& [s, yk] = memory[i];
      coeffs[i] = double(inner(s, q)) / double(inner(yk, s));
      q -= Scalar(coeffs[i]) * yk;
    }
    double scale = 1.0 / rho;
    if (!memory.empty()) {
      const auto& [s, yk] = memory.back();
      scale = double(inner(s, yk)) / double(inner(yk, yk));
    }
    q *= Scalar(scale);
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, yk] = memory[i];
      const double b = double(inner(yk, q)) / double(inner(yk, s));
      q += Scalar(coeffs[i] - b) * s;
    }
    Grid<Scalar> dir = -q;
    double slope = double(inner(g, dir));
    if (!(slope < 0.0)) {
      memory.clear();
      dir = -g / Scalar(rho);
      slope = double(inner(g, dir));
    }

    // Backtracking Armijo search; the slack term absorbs rounding in f near
    // the optimum.
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(f);
    double step = 1.0;
    bool accepted = false;
    Grid<Scalar> x_new, g_new;
    double f_new = f;
    for (int b = 0; b < kMaxBacktracks; ++b) {
      x_new = x + Scalar(step) * dir;
      f_new = objective.evaluate(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * step * slope + slack) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      out.line_search_failed = true;
      break;
    }
    Grid<Scalar> s = x_new - x;
    Grid<Scalar> yk = g_new - g;
    if (double(inner(s, yk)) > 1e-16 * double(norm2(s)) * double(norm2(yk))) {
      memory.emplace_back(std::move(s), std::move(yk));
      if (memory.size() > kMemory) memory.pop_front();
    }
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
  }
  out.x = std::move(x);
  return out;
}

/// Mean Euclidean change of (x, z, u) between two two-operator iterates.
template <typename Scalar>
double delta2(const Grid<Scalar>& x0, const Grid<Scalar>& z0, const Grid<Scalar>& u0,
              const Grid<Scalar>& x1, const Grid<Scalar>& z1, const Grid<Scalar>& u1) {
  return double(norm2(x1 - x0) + norm2(z1 - z0) + norm2(u1 - u0)) / 3.0;
}

/// Conventional two-operator PnP: likelihood proximal step through the blur
/// (inner quasi-Newton solve), denoiser step, multiplier update.
template <typename Scalar>
RunReport<Scalar> pnp2_run(const Image<Scalar>& y, const BlurKernel<Scalar>& h,
                           const SolverConfig& cfg, double grad_tol = 1e-5, int max_inner = 200) {
  cfg.validate();
  require_valid(y, Domain::PhotonCount, "pnp2_run");
  const FreqPlan<Scalar> plan(h, y.height(), y.width());
  const double alpha = cfg.alpha.value();

  Grid<Scalar> x = clamp_unit(plan.wiener(y.data(), Scalar(alpha)));
  Grid<Scalar> z = x;
  Grid<Scalar> u = Grid<Scalar>::Zero(x.rows(), x.cols());

  RunReport<Scalar> report;
  report.initial_rho = cfg.rho1_init;
  double rho = cfg.rho1_init;
  std::optional<double> prev_delta;
  for (int k = 0; k < cfg.max_iters; ++k) {
    report.rho_history.push_back(rho);
    auto inner_result = inner_x_solve<Scalar>(z - u, y.data(), plan, cfg.alpha, rho, grad_tol, max_inner);
    if (inner_result.line_search_failed) ++report.inner_failures;
    Grid<Scalar> x_new = std::move(inner_result.x);
    Grid<Scalar> z_new = z_prox(x_new + u, cfg.denoiser);
    Grid<Scalar> u_new = u + x_new - z_new;
    const double delta = delta2(x, z, u, x_new, z_new, u_new);
    x = std::move(x_new);
    z = std::move(z_new);
    u = std::move(u_new);
    report.delta_history.push_back(delta);
    report.data_term_history.push_back(
        double(data_term_blurred(plan.convolve(x), y.data(), alpha, cfg.eps_log)));
    ++report.iters_run;
    if (delta < cfg.delta_tol) {
      report.terminated_by = Termination::DeltaTol;
      break;
    }
    if (cfg.adaptive) rho = adaptive_rho(rho, delta, prev_delta, cfg);
    prev_delta = delta;
  }
  report.last_iterate = x;
  report.final = Image<Scalar>(clamp_unit(x), Domain::SceneUnit);
  return report;
}

}  // namespace ppnp
