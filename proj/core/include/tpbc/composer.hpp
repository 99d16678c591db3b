#pragma once

#include <utility>

#include "tpbc/critic.hpp"
#include "tpbc/dynamics.hpp"
#include "tpbc/sim.hpp"

namespace tpbc {

/// A learned (or oracle) state-feedback law tagged with its regulator
/// direction.
struct RegulatorPolicy {
  PolicyFn policy;
  Direction direction = Direction::forward;
};

enum class CompositionMode { overlay, additive };

/// The finite-horizon two-point boundary controller assembled from the two
/// infinite-horizon regulators.
struct CompositeController {
  RegulatorPolicy forward;
  RegulatorPolicy backward;
  double horizon = 0.0;
  CompositionMode mode = CompositionMode::overlay;
};

/// tau = t / T and epsilon = 1 / T.
std::pair<double, double> scale_time(double t, double horizon);

/// Overlay composition: the forward layer runs from x0 for T, the backward
/// layer runs in reverse time from xT for T and is reflected onto [0, T];
/// states and controls add pointwise and the composite cost is requadrated
/// post hoc. Throws GridMismatch when the two layers disagree on the step.
Trajectory compose_overlay(const Trajectory& forward_traj, const Trajectory& backward_traj,
                           double horizon, const CostSpec& cost);

struct CompositionResult {
  Trajectory composite;
  Trajectory forward_layer;
  /// Backward layer as simulated (reverse clock, starts at xT).
  Trajectory backward_layer;
  double terminal_error = 0.0;
  double cost = 0.0;
};

/// Runs both layers and composes them per ctrl.mode. In additive mode the
/// plant is integrated under the summed layer control schedule
/// u(t) = u+(x+(t)) + u-(x-(t)); each regulator is fed its own boundary
/// layer, which is the reading of "u+ + u-" that actually reaches xT (a
/// state-feedback sum destabilizes the interior even in the linear case).
CompositionResult compose(const CompositeController& ctrl, const BoundaryProblem& problem,
                          const IntegratorConfig& cfg);

/// Theorem-style optimality bracket |V+(x0) - V-(xT) - J*(T)| with the
/// backward value supplied in the reverse-time-stabilizing convention (our
/// critics store positive backward values; the horizon bracket enters them
/// negated, so the bracket reads v_fwd + v_bwd here).
double near_optimality_gap(double v_fwd_at_x0, double v_bwd_at_xT, double oracle_cost);

}  // namespace tpbc
