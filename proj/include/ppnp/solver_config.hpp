#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "ppnp/core.hpp"
#include "ppnp/denoisers.hpp"

namespace ppnp {

/// How the v (blurred-scene) variable is seeded before the first iteration.
enum class VInit {
  CountsOverAlpha,  // v0 = y / alpha, same units as Hx
  RawCounts,        // v0 = y, literal initialization in photon counts
};

/// Initial penalty for a photon level: piecewise-linear through
/// (5, 200), (10, 400), (20, 800), (40, 1000), held constant outside.
inline double default_rho_init(PhotonLevel alpha) {
  static constexpr std::array<std::pair<double, double>, 4> table{
      {{5.0, 200.0}, {10.0, 400.0}, {20.0, 800.0}, {40.0, 1000.0}}};
  const double a = alpha.value();
  if (a <= table.front().first) return table.front().second;
  if (a >= table.back().first) return table.back().second;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (a <= table[i].first) {
      const auto [a0, r0] = table[i - 1];
      const auto [a1, r1] = table[i];
      return r0 + (r1 - r0) * (a - a0) / (a1 - a0);
    }
  }
  return table.back().second;
}

struct SolverConfig {
  PhotonLevel alpha{1.0};
  double rho1_init = 200.0;
  double rho2_init = 200.0;
  bool adaptive = true;
  double gamma = 1.01;
  double decay_threshold = 0.99;
  int max_iters = 150;
  double delta_tol = 1e-2;
  int unrolled_iters = 8;
  DenoiserSpec denoiser = DenoiserSpec::identity();
  double eps_log = 1e-8;
  VInit v_init = VInit::CountsOverAlpha;

  /// Defaults for a photon level with both penalties from default_rho_init.
  static SolverConfig for_alpha(PhotonLevel alpha) {
    SolverConfig c;
    c.alpha = alpha;
    c.rho1_init = c.rho2_init = default_rho_init(alpha);
    return c;
  }

  void validate() const {
    if (!(rho1_init > 0.0) || !(rho2_init > 0.0))
      throw std::invalid_argument("solver config: initial rho values must be > 0");
    if (!(decay_threshold > 0.0 && decay_threshold < 1.0))
      throw std::invalid_argument("solver config: decay_threshold must be in (0, 1)");
    if (!(gamma >= 1.0)) throw std::invalid_argument("solver config: gamma must be >= 1");
    if (max_iters < 0) throw std::invalid_argument("solver config: max_iters must be >= 0");
    if (unrolled_iters < 0) throw std::invalid_argument("solver config: unrolled_iters must be >= 0");
    if (!(delta_tol >= 0.0)) throw std::invalid_argument("solver config: delta_tol must be >= 0");
    if (!(eps_log > 0.0)) throw std::invalid_argument("solver config: eps_log must be > 0");
    denoiser.validate();
  }
};

/// Penalty continuation: grow rho by gamma when the iterate change stalls,
/// i.e. delta_k > decay_threshold * delta_{k-1}. Without a previous sample rho
/// is returned unchanged.
inline double adaptive_rho(double rho, double delta_k, std::optional<double> delta_km1,
                           const SolverConfig& cfg) {
  if (!(rho > 0.0)) throw std::invalid_argument("adaptive_rho: rho must be > 0");
  if (!delta_km1) return rho;
  return delta_k > cfg.decay_threshold * *delta_km1 ? cfg.gamma * rho : rho;
}

enum class Termination { DeltaTol, MaxIters };

inline const char* to_string(Termination t) {
  return t == Termination::DeltaTol ? "delta_tol" : "max_iters";
}

template <typename Scalar>
struct RunReport {
  Image<Scalar> final;         // clamped to [0, 1]
  Grid<Scalar> last_iterate;   // unclamped x at exit
  int iters_run = 0;
  std::vector<double> delta_history;
  std::vector<double> data_term_history;
  std::vector<double> rho_history;  // rho1 used at each iteration
  Termination terminated_by = Termination::MaxIters;
  double initial_rho = 0.0;
  int inner_failures = 0;  // two-operator scheme only
};

}  // namespace ppnp
