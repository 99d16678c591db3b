#pragma once

#include <complex>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "tpbc/critic.hpp"
#include "tpbc/dynamics.hpp"
#include "tpbc/sim.hpp"

namespace tpbc {

/// Quadratic value solution V(x) = x'Px (un-normalized monomial convention,
/// matching the critic module). For the backward direction P solves the
/// reverse-time pair (-A, -B) and the listed eigenvalues are those of the
/// reverse-time closed loop.
struct RiccatiSolution {
  Matrix p;
  Direction direction = Direction::forward;
  std::vector<std::complex<double>> closed_loop_eigs;
};

/// Stabilizing CARE solution by Newton-Kleinman iteration (policy iteration
/// on the linear problem). The seed gain is zero when A is already stable,
/// otherwise single-input pole placement. Throws NoStabilizingSolution.
RiccatiSolution solve_riccati(const Matrix& a, const Matrix& b, const Matrix& q,
                              const Matrix& r, Direction direction);

/// Solves a'x + x a + q = 0 for x (Kronecker vectorization; n <= 8).
Matrix lyapunov_solve(const Matrix& a, const Matrix& q);

/// Analytic value function of the scalar cubic benchmark, (V, dV/dx).
/// Forward branch stabilizes real time, backward branch reverse time; both
/// satisfy their Hamilton-Jacobi-Bellman identities pointwise.
std::pair<double, double> cubic_value(double x, Direction direction);

struct ShootingOptions {
  int max_newton = 60;
  std::vector<int> segment_ladder = {1, 4, 8, 16, 32};
  double fd_step = 1e-6;
};

struct BvpSolution {
  Trajectory trajectory;
  std::vector<Eigen::VectorXd> costates;  // lambda(t) on the same grid
  Eigen::VectorXd costate_init;
  double optimal_cost = 0.0;  // Simpson quadrature along the solved path
  bool converged = false;
  double residual = 0.0;  // terminal boundary mismatch norm
  int segments = 1;
};

/// Pontryagin two-point BVP for the problem's optimality system, solved by
/// damped-Newton shooting on the initial costate. Multiple-shooting
/// fallbacks engage automatically when single shooting fails; the node
/// guess comes from the forward/backward boundary-layer regulators of the
/// linearized problem. Throws ShootingDiverged (carrying the best residual)
/// when the whole ladder fails.
BvpSolution solve_tpbvp_shooting(const BoundaryProblem& problem, const IntegratorConfig& cfg,
                                 double tol, const ShootingOptions& opts = {});

/// Least-squares coefficients of value_fn on the basis over a uniform grid
/// of the centered box. Throws RankDeficient when the sampled regressor
/// loses rank; requires n_samples >= 10 * basis size.
Eigen::VectorXd project_value_on_basis(const std::function<double(const StateVec&)>& value_fn,
                                       const BasisSet& basis,
                                       const Eigen::VectorXd& domain_halfwidth, int n_samples);

/// Trapezoidal total of the running cost along the trajectory.
double finite_horizon_cost(const Trajectory& traj, const CostSpec& cost);

/// FD linearization of the problem at the origin: drift Jacobian, input map,
/// and the quadratic form of the state cost.
struct Linearization {
  Matrix a0;
  Matrix b0;
  Matrix q0;
};
Linearization linearize_at_origin(const BoundaryProblem& problem);

}  // namespace tpbc
