#pragma once

#include "ppnp/data_term.hpp"
#include "ppnp/denoisers.hpp"
#include "ppnp/linear_operators.hpp"
#include "ppnp/proximal.hpp"
#include "ppnp/solver_config.hpp"

namespace ppnp {

/// Iterate of the three-operator scheme. x and z live in scene units, v in the
/// blurred-scene (Hx) domain, u1 and u2 are scaled multipliers for the
/// constraints x = z and Hx = v.
template <typename Scalar>
struct SolverState {
  Grid<Scalar> x, z, v, u1, u2;
  int iter = 0;
  std::vector<double> delta_history;

  void check_shapes() const {
    require_same_shape(x, z, "solver state");
    require_same_shape(x, v, "solver state");
    require_same_shape(x, u1, "solver state");
    require_same_shape(x, u2, "solver state");
  }
};

/// One Gauss-Seidel sweep: x (deblurring operator), z (denoiser), v (Poisson
/// proximal map), then both multiplier updates. Each update consumes the most
/// recent values.
template <typename Scalar>
SolverState<Scalar> pnp3_step(const SolverState<Scalar>& state, const Grid<Scalar>& y,
                              const FreqPlan<Scalar>& plan, const SolverConfig& cfg, double rho1,
                              double rho2) {
  if (!(rho1 > 0.0) || !(rho2 > 0.0)) throw std::invalid_argument("pnp3_step: rho must be > 0");
  state.check_shapes();
  require_same_shape(state.x, y, "pnp3_step");
  SolverState<Scalar> next;
  next.x = plan.deblur_solve(state.z - state.u1, state.v - state.u2, Scalar(rho2 / rho1));
  next.z = z_prox(next.x + state.u1, cfg.denoiser);
  const Grid<Scalar> hx = plan.convolve(next.x);
  next.v = poisson_prox(hx + state.u2, y, cfg.alpha.value(), rho2).value;
  next.u1 = state.u1 + next.x - next.z;
  next.u2 = state.u2 + hx - next.v;
  next.iter = state.iter + 1;
  next.delta_history = state.delta_history;
  return next;
}

template <typename Scalar>
SolverState<Scalar> pnp3_step(const SolverState<Scalar>& state, const Image<Scalar>& y,
                              const BlurKernel<Scalar>& h, const SolverConfig& cfg, double rho1,
                              double rho2) {
  return pnp3_step(state, y.data(), plan_for(h, y.data()), cfg, rho1, rho2);
}

/// Mean Euclidean change of the five iterates between two states.
template <typename Scalar>
double delta3(const SolverState<Scalar>& prev, const SolverState<Scalar>& next) {
  prev.check_shapes();
  next.check_shapes();
  require_same_shape(prev.x, next.x, "delta3");
  return double(norm2(next.x - prev.x) + norm2(next.z - prev.z) + norm2(next.v - prev.v) +
                norm2(next.u1 - prev.u1) + norm2(next.u2 - prev.u2)) /
         5.0;
}

/// Initial state: Wiener estimate for x and z, v from the measurements, zero
/// multipliers.
template <typename Scalar>
SolverState<Scalar> pnp3_initial_state(const Grid<Scalar>& y, const FreqPlan<Scalar>& plan,
                                       const SolverConfig& cfg) {
  SolverState<Scalar> s;
  s.x = clamp_unit(plan.wiener(y, Scalar(cfg.alpha.value())));
  s.z = s.x;
  s.v = cfg.v_init == VInit::CountsOverAlpha ? Grid<Scalar>(y / Scalar(cfg.alpha.value())) : y;
  s.u1 = Grid<Scalar>::Zero(y.rows(), y.cols());
  s.u2 = s.u1;
  return s;
}

template <typename Scalar>
RunReport<Scalar> pnp3_run(const Image<Scalar>& y, const BlurKernel<Scalar>& h,
                           const SolverConfig& cfg) {
  cfg.validate();
  require_valid(y, Domain::PhotonCount, "pnp3_run");
  const FreqPlan<Scalar> plan(h, y.height(), y.width());
  const double alpha = cfg.alpha.value();

  SolverState<Scalar> state = pnp3_initial_state(y.data(), plan, cfg);
  RunReport<Scalar> report;
  report.initial_rho = cfg.rho1_init;
  double rho1 = cfg.rho1_init, rho2 = cfg.rho2_init;
  std::optional<double> prev_delta;
  for (int k = 0; k < cfg.max_iters; ++k) {
    report.rho_history.push_back(rho1);
    SolverState<Scalar> next = pnp3_step(state, y.data(), plan, cfg, rho1, rho2);
    const double delta = delta3(state, next);
    next.delta_history.push_back(delta);
    state = std::move(next);
    report.delta_history.push_back(delta);
    report.data_term_history.push_back(
        double(data_term_blurred(plan.convolve(state.x), y.data(), alpha, cfg.eps_log)));
    ++report.iters_run;
    if (delta < cfg.delta_tol) {
      report.terminated_by = Termination::DeltaTol;
      break;
    }
    if (cfg.adaptive) {
      const double r = adaptive_rho(rho1, delta, prev_delta, cfg);
      if (r != rho1) {
        rho1 = r;
        rho2 *= cfg.gamma;
      }
    }
    prev_delta = delta;
  }
  report.last_iterate = state.x;
  report.final = Image<Scalar>(clamp_unit(state.x), Domain::SceneUnit);
  return report;
}

}  // namespace ppnp
