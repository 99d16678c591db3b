#include "tpbc/composer.hpp"

#include <cmath>

namespace tpbc {

std::pair<double, double> scale_time(double t, double horizon) {
  if (horizon <= 0.0) throw RangeError("scale_time: horizon must be positive");
  return {t / horizon, 1.0 / horizon};
}

Trajectory compose_overlay(const Trajectory& forward_traj, const Trajectory& backward_traj,
                           double horizon, const CostSpec& cost) {
  if (forward_traj.size() != backward_traj.size() ||
      std::abs(forward_traj.step() - backward_traj.step()) > 1e-12) {
    throw GridMismatch("compose_overlay: layers disagree on the sample grid");
  }
  (void)horizon;
  const std::size_t m = forward_traj.size();
  Trajectory out;
  out.times = forward_traj.times;
  out.states.resize(m);
  out.controls.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t rk = m - 1 - k;  // time reflection of the reverse-clock layer
    out.states[k] = forward_traj.states[k] + backward_traj.states[rk];
    out.controls[k] = forward_traj.controls[k] + backward_traj.controls[rk];
  }
  accumulate_cost(out, cost);
  return out;
}

CompositionResult compose(const CompositeController& ctrl, const BoundaryProblem& problem,
                          const IntegratorConfig& cfg) {
  if (ctrl.horizon <= 0.0) throw RangeError("compose: horizon must be positive");
  CompositionResult res;
  res.forward_layer = simulate(problem.system, problem.cost, ctrl.forward.policy, problem.x0,
                               ctrl.horizon, cfg, TimeDirection::forward);
  res.backward_layer = simulate(problem.system, problem.cost, ctrl.backward.policy, problem.xT,
                                ctrl.horizon, cfg, TimeDirection::reverse);

  if (ctrl.mode == CompositionMode::overlay) {
    res.composite =
        compose_overlay(res.forward_layer, res.backward_layer, ctrl.horizon, problem.cost);
  } else {
    // additive: drive the true plant with the summed layer controls
    const std::size_t m = res.forward_layer.size();
    std::vector<ControlVec> schedule(m);
    for (std::size_t k = 0; k < m; ++k) {
      schedule[k] = res.forward_layer.controls[k] + res.backward_layer.controls[m - 1 - k];
    }
    res.composite = simulate_schedule(problem.system, problem.cost, schedule, problem.x0, cfg);
  }
  res.terminal_error = (res.composite.states.back() - problem.xT).norm();
  res.cost = res.composite.total_cost();
  return res;
}

double near_optimality_gap(double v_fwd_at_x0, double v_bwd_at_xT, double oracle_cost) {
  return std::abs(v_fwd_at_x0 + v_bwd_at_xT - oracle_cost);
}

}  // namespace tpbc
