#include "tpbc/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace tpbc {

namespace {

bool spectrum_stable(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a);
  return es.eigenvalues().real().maxCoeff() < 0.0;
}

/// Single-input Ackermann placement at poles -1, -2, ..., -n.
Matrix pole_placement_gain(const Matrix& a, const Matrix& b) {
  const Eigen::Index n = a.rows();
  if (b.cols() != 1) {
    throw NoStabilizingSolution(
        "solve_riccati: stabilizing seed construction only implemented for single-input "
        "systems with unstable A");
  }
  Matrix ctrb(n, n);
  Matrix col = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.col(i) = col;
    col = a * col;
  }
  if (std::abs(ctrb.determinant()) < 1e-12) {
    throw NoStabilizingSolution("solve_riccati: pair (A, B) is not controllable");
  }
  // chi(A) for desired poles -1..-n
  Matrix chi = Matrix::Identity(n, n);
  for (Eigen::Index i = 1; i <= n; ++i) {
    chi = chi * (a + static_cast<double>(i) * Matrix::Identity(n, n));
  }
  Eigen::RowVectorXd en = Eigen::RowVectorXd::Zero(n);
  en(n - 1) = 1.0;
  Matrix k = en * ctrb.inverse() * chi;
  if (!spectrum_stable(a - b * k)) {
    throw NoStabilizingSolution("solve_riccati: pole placement failed to stabilize");
  }
  return k;
}

}  // namespace

Matrix lyapunov_solve(const Matrix& a, const Matrix& q) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n) {
    throw DimensionError("lyapunov_solve: dimension mismatch");
  }
  // vec(a' x + x a) = (I (x) a' + a' (x) I) vec(x)
  Matrix big = Matrix::Zero(n * n, n * n);
  const Matrix at = a.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // block (j, j) accumulates a'; scattered entries accumulate a'(j,i)
      for (Eigen::Index k = 0; k < n; ++k) {
        big(j * n + i, j * n + k) += at(i, k);
        big(j * n + i, k * n + i) += a(k, j);
      }
    }
  }
  Eigen::VectorXd rhs(n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) rhs(j * n + i) = -q(i, j);
  }
  Eigen::VectorXd sol = big.partialPivLu().solve(rhs);
  Matrix x(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = sol(j * n + i);
  }
  return 0.5 * (x + x.transpose().eval());
}

RiccatiSolution solve_riccati(const Matrix& a_in, const Matrix& b_in, const Matrix& q,
                              const Matrix& r, Direction direction) {
  const Eigen::Index n = a_in.rows();
  if (n > 8) throw DimensionError("solve_riccati: supported up to n = 8");
  const Matrix a = direction == Direction::forward ? a_in : Matrix(-a_in);
  const Matrix b = direction == Direction::forward ? b_in : Matrix(-b_in);
  const Matrix r_inv = r.llt().solve(Matrix::Identity(r.rows(), r.cols()));

  Matrix k = Matrix::Zero(b.cols(), n);
  if (!spectrum_stable(a)) {
    k = pole_placement_gain(a, b);
  }

  Matrix p = Matrix::Zero(n, n);
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    const Matrix a_cl = a - b * k;
    if (!spectrum_stable(a_cl)) {
      throw NoStabilizingSolution("solve_riccati: iteration lost stability");
    }
    p = lyapunov_solve(a_cl, q + k.transpose() * r * k);
    k = r_inv * b.transpose() * p;
    residual = (a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q)
                   .cwiseAbs()
                   .maxCoeff();
    if (residual <= 1e-13 * std::max(1.0, p.cwiseAbs().maxCoeff())) break;
  }
  if (!(residual <= 1e-10)) {
    throw NoStabilizingSolution("solve_riccati: Newton-Kleinman residual stayed at " +
                                std::to_string(residual));
  }

  RiccatiSolution out;
  out.p = p;
  out.direction = direction;
  Eigen::EigenSolver<Matrix> es(a - b * k);
  for (Eigen::Index i = 0; i < n; ++i) out.closed_loop_eigs.push_back(es.eigenvalues()(i));
  if (!spectrum_stable(a - b * k)) {
    throw NoStabilizingSolution("solve_riccati: returned solution is not stabilizing");
  }
  return out;
}

std::pair<double, double> cubic_value(double x, Direction direction) {
  if (std::abs(x) > 10.0) throw RangeError("cubic_value: |x| <= 10 supported");
  const double x2 = x * x;
  const double x4 = x2 * x2;
  const double s = std::sqrt(1.0 + x4);
  const double common = 0.5 * x2 * s + 0.5 * std::log(x2 + s);
  if (direction == Direction::forward) {
    return {0.5 * x4 + common, 2.0 * x * x2 + 2.0 * x * s};
  }
  return {-0.5 * x4 + common, -2.0 * x * x2 + 2.0 * x * s};
}

namespace {

struct AugmentedSystem {
  const BoundaryProblem& problem;
  Matrix r_inv;
  int n;

  explicit AugmentedSystem(const BoundaryProblem& p)
      : problem(p),
        r_inv(p.cost.control_weight_inverse()),
        n(p.system.state_dim()) {}

  ControlVec control(const StateVec& x, const Eigen::VectorXd& lambda) const {
    return -0.5 * r_inv * problem.system.input_map(x).transpose() * lambda;
  }

  /// Jacobian of x -> f(x) + g(x) u (u frozen) by central differences.
  Matrix field_jacobian(const StateVec& x, const ControlVec& u) const {
    Matrix jac(n, n);
    const double base = std::cbrt(std::numeric_limits<double>::epsilon());
    for (int j = 0; j < n; ++j) {
      const double step = base * std::max(1.0, std::abs(x[j]));
      StateVec xp = x, xm = x;
      xp[j] += step;
      xm[j] -= step;
      const StateVec fp = problem.system.drift(xp) + problem.system.input_map(xp) * u;
      const StateVec fm = problem.system.drift(xm) + problem.system.input_map(xm) * u;
      jac.col(j) = (fp - fm) / (2.0 * step);
    }
    return jac;
  }

  Eigen::VectorXd rhs(const Eigen::VectorXd& z) const {
    const StateVec x = z.head(n);
    const Eigen::VectorXd lambda = z.tail(n);
    const ControlVec u = control(x, lambda);
    Eigen::VectorXd out(2 * n);
    out.head(n) = problem.system.drift(x) + problem.system.input_map(x) * u;
    out.tail(n) = -problem.cost.state_cost_gradient(x) -
                  field_jacobian(x, u).transpose() * lambda;
    return out;
  }
};

struct FlowResult {
  Eigen::VectorXd endpoint;
  bool ok = true;
};

FlowResult flow_segment(const AugmentedSystem& aug, Eigen::VectorXd z, std::size_t steps,
                        double h) {
  TimeField field = [&aug](const StateVec& zz, double) { return aug.rhs(zz); };
  for (std::size_t k = 0; k < steps; ++k) {
    z = rk4_field_step(field, z, 0.0, h);
    if (!z.allFinite() || z.norm() > 1e7) {
      return {std::move(z), false};
    }
  }
  return {std::move(z), true};
}

/// Composite Simpson over uniform samples; 3/8 rule absorbs an odd tail.
double simpson_total(const std::vector<double>& f, double h) {
  const std::size_t m = f.size();
  if (m < 2) return 0.0;
  const std::size_t intervals = m - 1;
  double acc = 0.0;
  std::size_t even_end = intervals;
  if (intervals % 2 != 0) {
    if (intervals < 3) {
      return 0.5 * h * (f[0] + f[1]);
    }
    even_end = intervals - 3;
  }
  for (std::size_t k = 0; k + 2 <= even_end; k += 2) {
    acc += (h / 3.0) * (f[k] + 4.0 * f[k + 1] + f[k + 2]);
  }
  if (intervals % 2 != 0) {
    const std::size_t k = even_end;
    acc += (3.0 * h / 8.0) * (f[k] + 3.0 * f[k + 1] + 3.0 * f[k + 2] + f[k + 3]);
  }
  return acc;
}

}  // namespace

Linearization linearize_at_origin(const BoundaryProblem& problem) {
  const int n = problem.system.state_dim();
  const StateVec zero = StateVec::Zero(n);
  Linearization lin;
  lin.b0 = problem.system.input_map(zero);
  lin.a0 = Matrix(n, n);
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  for (int j = 0; j < n; ++j) {
    StateVec xp = zero, xm = zero;
    xp[j] += base;
    xm[j] -= base;
    lin.a0.col(j) = (problem.system.drift(xp) - problem.system.drift(xm)) / (2.0 * base);
  }
  lin.q0 = Matrix(n, n);
  const double hq = 1e-4;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      StateVec xpp = zero, xpm = zero, xmp = zero, xmm = zero;
      xpp[i] += hq;
      xpp[j] += hq;
      xpm[i] += hq;
      xpm[j] -= hq;
      xmp[i] -= hq;
      xmp[j] += hq;
      xmm[i] -= hq;
      xmm[j] -= hq;
      const double hess = (problem.cost.state_cost(xpp) - problem.cost.state_cost(xpm) -
                           problem.cost.state_cost(xmp) + problem.cost.state_cost(xmm)) /
                          (4.0 * hq * hq);
      lin.q0(i, j) = 0.5 * hess;
    }
  }
  lin.q0 = 0.5 * (lin.q0 + lin.q0.transpose().eval());
  return lin;
}

namespace {

/// Boundary-layer initial guess: forward layer from x0 under the linearized
/// forward regulator, backward layer from xT in reverse time, costate from
/// the layers' value gradients.
struct GuessPath {
  std::vector<StateVec> x;
  std::vector<Eigen::VectorXd> lambda;
};

GuessPath layer_guess(const BoundaryProblem& problem, const IntegratorConfig& cfg,
                      std::size_t total_steps) {
  const int n = problem.system.state_dim();
  const double h = cfg.step;
  GuessPath guess;
  guess.x.assign(total_steps + 1, StateVec::Zero(n));
  guess.lambda.assign(total_steps + 1, Eigen::VectorXd::Zero(n));
  try {
    const Linearization lin = linearize_at_origin(problem);
    const Matrix& r = problem.cost.control_weight();
    const RiccatiSolution fwd = solve_riccati(lin.a0, lin.b0, lin.q0, r, Direction::forward);
    const RiccatiSolution bwd = solve_riccati(lin.a0, lin.b0, lin.q0, r, Direction::backward);
    const Matrix r_inv = problem.cost.control_weight_inverse();

    PolicyFn u_fwd = [&, p = fwd.p](const StateVec& x) -> ControlVec {
      return -r_inv * problem.system.input_map(x).transpose() * (p * x);
    };
    PolicyFn u_bwd = [&, p = bwd.p](const StateVec& x) -> ControlVec {
      return r_inv * problem.system.input_map(x).transpose() * (p * x);
    };

    IntegratorConfig guard = cfg;
    guard.max_state_norm = 1e6;
    const double duration = static_cast<double>(total_steps) * h;
    Trajectory fwd_layer = simulate(problem.system, problem.cost, u_fwd, problem.x0, duration,
                                    guard, TimeDirection::forward);
    Trajectory bwd_layer = simulate(problem.system, problem.cost, u_bwd, problem.xT, duration,
                                    guard, TimeDirection::reverse);
    for (std::size_t k = 0; k <= total_steps; ++k) {
      const StateVec xf = fwd_layer.states[k];
      const StateVec xb = bwd_layer.states[total_steps - k];
      guess.x[k] = xf + xb;
      guess.lambda[k] = 2.0 * fwd.p * xf - 2.0 * bwd.p * xb;
    }
  } catch (const Error&) {
    // fall back to a straight line with zero costate
    for (std::size_t k = 0; k <= total_steps; ++k) {
      const double theta = static_cast<double>(k) / static_cast<double>(total_steps);
      guess.x[k] = (1.0 - theta) * problem.x0 + theta * problem.xT;
    }
  }
  return guess;
}

}  // namespace

BvpSolution solve_tpbvp_shooting(const BoundaryProblem& problem, const IntegratorConfig& cfg,
                                 double tol, const ShootingOptions& opts) {
  const int n = problem.system.state_dim();
  const double h = cfg.step;
  const auto total_steps = static_cast<std::size_t>(std::llround(problem.horizon / h));
  if (total_steps < 2) throw RangeError("solve_tpbvp_shooting: horizon too short for the step");
  AugmentedSystem aug(problem);
  const GuessPath guess = layer_guess(problem, cfg, total_steps);

  double best_residual = std::numeric_limits<double>::infinity();

  for (int segments : opts.segment_ladder) {
    if (segments < 1) continue;
    const int k_seg = segments;
    std::vector<std::size_t> node_idx(k_seg + 1);
    for (int i = 0; i <= k_seg; ++i) {
      node_idx[i] = static_cast<std::size_t>(
          std::llround(static_cast<double>(i) * static_cast<double>(total_steps) / k_seg));
    }

    const int dim = n + 2 * n * (k_seg - 1);
    Eigen::VectorXd theta(dim);
    theta.head(n) = guess.lambda[0];
    for (int i = 1; i < k_seg; ++i) {
      theta.segment(n + 2 * n * (i - 1), n) = guess.x[node_idx[i]];
      theta.segment(n + 2 * n * (i - 1) + n, n) = guess.lambda[node_idx[i]];
    }

    auto node_state = [&](const Eigen::VectorXd& th, int i) -> Eigen::VectorXd {
      Eigen::VectorXd z(2 * n);
      if (i == 0) {
        z.head(n) = problem.x0;
        z.tail(n) = th.head(n);
      } else {
        z = th.segment(n + 2 * n * (i - 1), 2 * n);
      }
      return z;
    };

    auto residual_fn = [&](const Eigen::VectorXd& th, bool& ok) -> Eigen::VectorXd {
      Eigen::VectorXd f(dim);
      ok = true;
      for (int i = 0; i < k_seg; ++i) {
        const std::size_t steps = node_idx[i + 1] - node_idx[i];
        FlowResult flow = flow_segment(aug, node_state(th, i), steps, h);
        if (!flow.ok) {
          ok = false;
          return Eigen::VectorXd::Constant(dim, 1e30);
        }
        if (i + 1 < k_seg) {
          // continuity defect at interior node i+1
          f.segment(2 * n * i, 2 * n) = flow.endpoint - th.segment(n + 2 * n * i, 2 * n);
        } else {
          f.tail(n) = flow.endpoint.head(n) - problem.xT;
        }
      }
      return f;
    };

    bool ok = true;
    Eigen::VectorXd f = residual_fn(theta, ok);
    double fnorm = ok ? f.norm() : std::numeric_limits<double>::infinity();

    bool converged = false;
    for (int newton = 0; newton < opts.max_newton && ok; ++newton) {
      if (f.cwiseAbs().maxCoeff() <= tol) {
        converged = true;
        break;
      }
      // FD Jacobian, column by column
      Matrix jac(dim, dim);
      for (int j = 0; j < dim; ++j) {
        const double step = opts.fd_step * std::max(1.0, std::abs(theta[j]));
        Eigen::VectorXd tp = theta, tm = theta;
        tp[j] += step;
        tm[j] -= step;
        bool okp = true, okm = true;
        const Eigen::VectorXd fp = residual_fn(tp, okp);
        const Eigen::VectorXd fm = residual_fn(tm, okm);
        if (!okp || !okm) {
          ok = false;
          break;
        }
        jac.col(j) = (fp - fm) / (2.0 * step);
      }
      if (!ok) break;

      const Eigen::VectorXd delta = jac.partialPivLu().solve(-f);
      if (!delta.allFinite()) break;

      double alpha = 1.0;
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        bool ok_trial = true;
        const Eigen::VectorXd f_trial = residual_fn(theta + alpha * delta, ok_trial);
        if (ok_trial && f_trial.norm() < (1.0 - 1e-4 * alpha) * fnorm) {
          theta += alpha * delta;
          f = f_trial;
          fnorm = f_trial.norm();
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
    }

    const double terminal_res = ok ? f.cwiseAbs().maxCoeff() : best_residual;
    best_residual = std::min(best_residual, terminal_res);

    if (converged || (ok && terminal_res <= tol)) {
      // assemble the full solution on the uniform grid
      BvpSolution sol;
      sol.segments = k_seg;
      sol.converged = true;
      sol.costate_init = theta.head(n);

      std::vector<Eigen::VectorXd> z_path;
      z_path.reserve(total_steps + 1);
      for (int i = 0; i < k_seg; ++i) {
        Eigen::VectorXd z = node_state(theta, i);
        const std::size_t steps = node_idx[i + 1] - node_idx[i];
        TimeField field = [&aug](const StateVec& zz, double) { return aug.rhs(zz); };
        if (i == 0) z_path.push_back(z);
        for (std::size_t s = 0; s < steps; ++s) {
          z = rk4_field_step(field, z, 0.0, h);
          z_path.push_back(z);
        }
      }

      Trajectory traj;
      std::vector<double> rate(z_path.size());
      sol.costates.reserve(z_path.size());
      for (std::size_t k = 0; k < z_path.size(); ++k) {
        const StateVec x = z_path[k].head(n);
        const Eigen::VectorXd lambda = z_path[k].tail(n);
        const ControlVec u = aug.control(x, lambda);
        traj.times.push_back(static_cast<double>(k) * h);
        traj.states.push_back(x);
        traj.controls.push_back(u);
        sol.costates.push_back(lambda);
        rate[k] = problem.cost.running_cost(x, u);
      }
      traj.cost_integral.assign(traj.size(), 0.0);
      for (std::size_t k = 1; k < traj.size(); ++k) {
        traj.cost_integral[k] =
            traj.cost_integral[k - 1] + 0.5 * (rate[k - 1] + rate[k]) * h;
      }
      sol.residual = (traj.states.back() - problem.xT).norm();
      sol.optimal_cost = simpson_total(rate, h);
      sol.trajectory = std::move(traj);
      return sol;
    }
  }

  throw ShootingDiverged("solve_tpbvp_shooting: Newton failed on every segment count; best "
                         "residual " + std::to_string(best_residual),
                         best_residual);
}

Eigen::VectorXd project_value_on_basis(const std::function<double(const StateVec&)>& value_fn,
                                       const BasisSet& basis,
                                       const Eigen::VectorXd& domain_halfwidth, int n_samples) {
  const int n = basis.state_dim();
  require_length("domain_halfwidth", domain_halfwidth, n);
  if (n_samples < 10 * basis.size()) {
    throw RangeError("project_value_on_basis: need at least 10 samples per basis term");
  }
  const int per_axis = std::max(
      2, static_cast<int>(std::ceil(std::pow(static_cast<double>(n_samples), 1.0 / n))));
  std::vector<StateVec> points;
  StateVec x = StateVec::Zero(n);
  std::function<void(int)> fill = [&](int axis) {
    if (axis == n) {
      points.push_back(x);
      return;
    }
    for (int i = 0; i < per_axis; ++i) {
      x[axis] = -domain_halfwidth[axis] +
                2.0 * domain_halfwidth[axis] * static_cast<double>(i) / (per_axis - 1);
      fill(axis + 1);
    }
  };
  fill(0);

  Matrix a(points.size(), basis.size());
  Eigen::VectorXd rhs(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    a.row(i) = basis.eval(points[i]).transpose();
    rhs(i) = value_fn(points[i]);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() < basis.size()) {
    throw RankDeficient("project_value_on_basis: sampled regressor matrix is rank deficient");
  }
  return qr.solve(rhs);
}

double finite_horizon_cost(const Trajectory& traj, const CostSpec& cost) {
  if (traj.size() < 2) return 0.0;
  double acc = 0.0;
  double prev = cost.running_cost(traj.states[0], traj.controls[0]);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double cur = cost.running_cost(traj.states[k], traj.controls[k]);
    acc += 0.5 * (prev + cur) * (traj.times[k] - traj.times[k - 1]);
    prev = cur;
  }
  return acc;
}

}  // namespace tpbc
