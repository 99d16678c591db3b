#pragma once

#include <functional>
#include <utility>

#include "tpbc/types.hpp"

namespace tpbc {

enum class Visibility { full, g_only };

/// Control-affine plant  xdot = f(x) + g(x) u.
///
/// The drift f is the part the learner must not touch: a g_only view keeps
/// the input map callable (the policy-improvement laws need g) but refuses
/// drift evaluation. Function fields must be pure; instances are immutable
/// and safe to share across threads.
class AffineDynamics {
 public:
  using DriftFn = std::function<StateVec(const StateVec&)>;
  using InputMapFn = std::function<Matrix(const StateVec&)>;

  AffineDynamics(int n, int m, DriftFn drift, InputMapFn input_map,
                 Visibility visibility = Visibility::full);

  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  Visibility visibility() const { return visibility_; }

  /// f(x). Throws VisibilityError on a g_only view.
  StateVec drift(const StateVec& x) const;

  /// g(x), an n-by-m matrix. Available in both visibility modes.
  Matrix input_map(const StateVec& x) const;

  /// Learner-facing handle on the same plant.
  AffineDynamics g_only_view() const;

 private:
  int n_;
  int m_;
  DriftFn drift_;
  InputMapFn input_map_;
  Visibility visibility_;
};

/// Running-cost specification  R(x, u) = S(x) + u'Ru.
class CostSpec {
 public:
  using StateCostFn = std::function<double(const StateVec&)>;
  using StateCostGradFn = std::function<StateVec(const StateVec&)>;

  /// control_weight must be symmetric (to 1e-12) positive definite.
  CostSpec(StateCostFn state_cost, Matrix control_weight,
           StateCostGradFn state_cost_gradient = nullptr);

  double state_cost(const StateVec& x) const { return state_cost_(x); }
  const Matrix& control_weight() const { return control_weight_; }
  const Matrix& control_weight_inverse() const { return control_weight_inv_; }

  bool has_state_cost_gradient() const { return static_cast<bool>(state_cost_grad_); }
  /// Analytic gradient of S when supplied; central differences otherwise.
  StateVec state_cost_gradient(const StateVec& x) const;

  /// S(x) + u'Ru.
  double running_cost(const StateVec& x, const ControlVec& u) const;

 private:
  StateCostFn state_cost_;
  StateCostGradFn state_cost_grad_;
  Matrix control_weight_;
  Matrix control_weight_inv_;
};

/// Two-point boundary optimal control instance: steer from x0 at t=0 to xT
/// at t=T minimizing the integral of the running cost.
struct BoundaryProblem {
  AffineDynamics system;
  CostSpec cost;
  StateVec x0;
  StateVec xT;
  double horizon = 0.0;
  /// Per-axis half-width of the box the regulators are trained (and their
  /// invariants enforced) on.
  Eigen::VectorXd domain_halfwidth;

  /// epsilon is derived, never stored, so epsilon * horizon == 1 exactly.
  double epsilon() const { return 1.0 / horizon; }
};

}  // namespace tpbc
