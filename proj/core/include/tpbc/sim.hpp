#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tpbc/critic.hpp"
#include "tpbc/dynamics.hpp"

namespace tpbc {

struct IntegratorConfig {
  enum class Method { rk4 };

  double step = 1e-3;  // seconds
  Method method = Method::rk4;
  double max_state_norm = 1e3;  // divergence guard
};

enum class TimeDirection { forward, reverse };

/// Deterministic exploration/noise signal, evaluated on the simulation clock.
using NoiseFn = std::function<ControlVec(double)>;

/// Fixed-step closed-loop trajectory. Times are uniform; cost_integral holds
/// the running trapezoidal accumulation of R(x, u_policy) per sample (the
/// policy control, exploration noise excluded).
struct Trajectory {
  std::vector<double> times;
  std::vector<StateVec> states;
  std::vector<ControlVec> controls;
  std::vector<double> cost_integral;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  double step() const;
  double final_time() const { return times.empty() ? 0.0 : times.back(); }
  double total_cost() const { return cost_integral.empty() ? 0.0 : cost_integral.back(); }

  /// CSV schema: t,x1..xn,u1..um,J with 12 significant digits.
  void write_csv(std::ostream& os) const;
  void write_csv(const std::filesystem::path& path) const;
  static Trajectory read_csv(std::istream& is);
  static Trajectory read_csv(const std::filesystem::path& path);
};

/// One classical RK4 step of the closed-loop field f + g u(x). The reverse
/// direction integrates the negated field (reverse-time flow). Simulation is
/// the environment: it requires full visibility.
StateVec rk4_step(const AffineDynamics& sys, const PolicyFn& policy, const StateVec& x,
                  double h, TimeDirection direction);

/// Possibly time-varying vector field for the raw stepper below.
using TimeField = std::function<StateVec(const StateVec&, double)>;

/// One classical RK4 step of an arbitrary field; no guards.
StateVec rk4_field_step(const TimeField& field, const StateVec& x, double t, double h);

/// Closed-loop simulation for floor(duration/h)+1 samples. The stored control
/// is policy(x) + noise(t); the accumulated cost charges only policy(x) (the
/// Bellman identity is stated for the policy, so exploration noise is never
/// billed to the cost). Throws DivergenceError (with the partial trajectory
/// attached) when the state norm passes cfg.max_state_norm.
Trajectory simulate(const AffineDynamics& sys, const CostSpec& cost, const PolicyFn& policy,
                    const StateVec& x_init, double duration, const IntegratorConfig& cfg,
                    TimeDirection direction = TimeDirection::forward,
                    const NoiseFn& noise = nullptr);

/// Replay a precomputed control schedule (one sample per grid point) through
/// the plant. Used by the additive composition mode.
Trajectory simulate_schedule(const AffineDynamics& sys, const CostSpec& cost,
                             const std::vector<ControlVec>& schedule, const StateVec& x_init,
                             const IntegratorConfig& cfg);

/// Attach running cost to an existing trajectory (post-hoc quadrature).
void accumulate_cost(Trajectory& traj, const CostSpec& cost);

/// Trapezoidal integral of the running cost over [t_lo, t_hi]; endpoints may
/// fall between samples (linear interpolation of the integrand).
double window_cost(const Trajectory& traj, const CostSpec& cost, double t_lo, double t_hi);

}  // namespace tpbc
