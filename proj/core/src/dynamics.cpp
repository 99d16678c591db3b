#include "tpbc/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace tpbc {

AffineDynamics::AffineDynamics(int n, int m, DriftFn drift, InputMapFn input_map,
                               Visibility visibility)
    : n_(n), m_(m), drift_(std::move(drift)), input_map_(std::move(input_map)),
      visibility_(visibility) {
  if (n_ <= 0 || m_ <= 0) {
    throw DimensionError("AffineDynamics: state and input dimensions must be positive");
  }
  if (!drift_ && visibility_ == Visibility::full) {
    throw DimensionError("AffineDynamics: full-visibility system needs a drift");
  }
  if (!input_map_) {
    throw DimensionError("AffineDynamics: input map is required");
  }
}

StateVec AffineDynamics::drift(const StateVec& x) const {
  if (visibility_ != Visibility::full) {
    throw VisibilityError("drift evaluation on a g_only view: the model is unknown here");
  }
  require_length("x", x, n_);
  require_finite("x", x);
  StateVec f = drift_(x);
  require_length("f(x)", f, n_);
  return f;
}

Matrix AffineDynamics::input_map(const StateVec& x) const {
  require_length("x", x, n_);
  require_finite("x", x);
  Matrix g = input_map_(x);
  if (g.rows() != n_ || g.cols() != m_) {
    throw DimensionError("input_map: wrong shape");
  }
  return g;
}

AffineDynamics AffineDynamics::g_only_view() const {
  AffineDynamics view(n_, m_, drift_, input_map_, Visibility::g_only);
  return view;
}

CostSpec::CostSpec(StateCostFn state_cost, Matrix control_weight,
                   StateCostGradFn state_cost_gradient)
    : state_cost_(std::move(state_cost)), state_cost_grad_(std::move(state_cost_gradient)),
      control_weight_(std::move(control_weight)) {
  if (!state_cost_) {
    throw DimensionError("CostSpec: state cost is required");
  }
  if (control_weight_.rows() != control_weight_.cols() || control_weight_.rows() == 0) {
    throw DimensionError("CostSpec: control weight must be square");
  }
  if ((control_weight_ - control_weight_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw DimensionError("CostSpec: control weight must be symmetric within 1e-12");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(control_weight_);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw DimensionError("CostSpec: control weight must be positive definite");
  }
  control_weight_inv_ = control_weight_.llt().solve(
      Matrix::Identity(control_weight_.rows(), control_weight_.cols()));
}

StateVec CostSpec::state_cost_gradient(const StateVec& x) const {
  if (state_cost_grad_) {
    return state_cost_grad_(x);
  }
  StateVec grad(x.size());
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = base * std::max(1.0, std::abs(x[i]));
    StateVec xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    grad[i] = (state_cost_(xp) - state_cost_(xm)) / (2.0 * step);
  }
  return grad;
}

double CostSpec::running_cost(const StateVec& x, const ControlVec& u) const {
  require_length("u", u, control_weight_.rows());
  return state_cost_(x) + u.dot(control_weight_ * u);
}

}  // namespace tpbc
