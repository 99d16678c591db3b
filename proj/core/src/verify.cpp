#include "tpbc/verify.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "tpbc/benchmarks.hpp"
#include "tpbc/composer.hpp"
#include "tpbc/config.hpp"
#include "tpbc/jacobi.hpp"
#include "tpbc/learner.hpp"
#include "tpbc/oracle.hpp"
#include "tpbc/rng.hpp"

namespace tpbc {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

struct CheckContext {
  std::uint64_t seed = 0;
  std::filesystem::path weights_dir;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

TrainResult train_bench(const Benchmark& bench, Direction direction, std::uint64_t seed,
                        std::optional<Eigen::VectorXd> init = std::nullopt) {
  return train_regulator(bench.problem, bench.basis, bench.learner, direction, seed, init);
}

/// forward + backward training the way cmd_train wires them together
std::pair<TrainResult, TrainResult> train_both(const Benchmark& bench, std::uint64_t seed) {
  TrainResult fwd = train_bench(bench, Direction::forward, phase_seed(seed, "train-fwd"));
  const Eigen::VectorXd init_b =
      backward_init_from_forward(bench.problem, bench.basis, bench.learner, fwd.weights.w);
  TrainResult bwd =
      train_bench(bench, Direction::backward, phase_seed(seed, "train-bwd"), init_b);
  return {std::move(fwd), std::move(bwd)};
}

double reverse_closed_loop_eig_max_real(const Benchmark& bench, const CriticWeights& weights) {
  // FD linearization of the reverse-time closed loop -(f + g u(x)) at 0
  PolicyFn pol =
      policy_from_weights(bench.problem.system.g_only_view(), bench.problem.cost, bench.basis,
                          weights);
  const int n = bench.problem.system.state_dim();
  Matrix jac(n, n);
  const double step = 1e-6;
  for (int j = 0; j < n; ++j) {
    StateVec xp = StateVec::Zero(n), xm = StateVec::Zero(n);
    xp[j] += step;
    xm[j] -= step;
    const StateVec fp = bench.problem.system.drift(xp) + bench.problem.system.input_map(xp) * pol(xp);
    const StateVec fm = bench.problem.system.drift(xm) + bench.problem.system.input_map(xm) * pol(xm);
    jac.col(j) = -(fp - fm) / (2.0 * step);
  }
  Eigen::EigenSolver<Matrix> es(jac);
  return es.eigenvalues().real().maxCoeff();
}

CheckResult check_circuit_forward_weight(const CheckContext& ctx) {
  CheckResult res{"circuit_forward_weight", false, "", 0.0};
  const Benchmark bench = make_benchmark("rl_circuit");
  TrainResult fwd = train_bench(bench, Direction::forward, phase_seed(ctx.seed, "train-fwd"));
  const double w = fwd.weights.w[0];
  const double target = kSqrt2 - 1.0;
  res.pass = std::abs(w - target) <= 0.05;
  res.detail = "W+ = " + fmt(w) + " vs sqrt(2)-1 = " + fmt(target) +
               " (tol 0.05, " + std::to_string(fwd.log.iterations) + " iterations)";
  return res;
}

CheckResult check_circuit_backward_weight(const CheckContext& ctx) {
  CheckResult res{"circuit_backward_weight", false, "", 0.0};
  const Benchmark bench = make_benchmark("rl_circuit");
  auto [fwd, bwd] = train_both(bench, ctx.seed);
  const double w = bwd.weights.w[0];
  const double target = 1.0 + kSqrt2;
  const double eig = reverse_closed_loop_eig_max_real(bench, bwd.weights);
  const bool mag_ok = std::abs(std::abs(w) - target) <= 0.1;
  const bool eig_ok = std::abs(eig - (-kSqrt2)) <= 0.1;
  res.pass = mag_ok && eig_ok;
  res.detail = "|W-| = " + fmt(std::abs(w)) + " vs 1+sqrt(2) = " + fmt(target) +
               " (tol 0.1); reverse closed-loop eig " + fmt(eig) + " vs -sqrt(2) (tol 0.1)";
  return res;
}

CheckResult check_cubic_forward_critic(const CheckContext& ctx) {
  CheckResult res{"cubic_forward_critic", false, "", 0.0};
  const Benchmark bench = make_benchmark("cubic");
  TrainResult fwd = train_bench(bench, Direction::forward, phase_seed(ctx.seed, "train-fwd"));

  const Eigen::VectorXd proj = project_value_on_basis(
      [](const StateVec& x) { return cubic_value(x[0], Direction::forward).first; },
      bench.basis, Eigen::VectorXd::Constant(1, 1.5), 2001);
  const double max_dev = (fwd.weights.w - proj).cwiseAbs().maxCoeff();

  std::vector<StateVec> starts;
  for (double s = -1.5; s <= 1.5 + 1e-9; s += 0.375) {
    if (std::abs(s) < 1e-12) continue;
    starts.push_back(StateVec::Constant(1, s));
  }
  const BellmanEvaluation bell = evaluate_bellman_residual(bench.problem, bench.basis,
                                                           fwd.weights, bench.learner, starts,
                                                           3.0);
  const bool proj_ok = max_dev <= 0.2;
  const bool bell_ok = bell.ratio <= 0.05;
  res.pass = proj_ok && bell_ok;
  res.detail = "w = [" + fmt(fwd.weights.w[0]) + ", " + fmt(fwd.weights.w[1]) +
               "], projection = [" + fmt(proj[0]) + ", " + fmt(proj[1]) + "], max dev " +
               fmt(max_dev) + " (tol 0.2); held-out Bellman ratio " + fmt(bell.ratio) +
               " (tol 0.05)";
  return res;
}

CheckResult check_circuit_gap_monotone(const CheckContext&) {
  CheckResult res{"circuit_gap_monotone", false, "", 0.0};
  const Benchmark bench = make_benchmark("rl_circuit");
  const Linearization lin = linearize_at_origin(bench.problem);
  const Matrix r = bench.problem.cost.control_weight();
  const RiccatiSolution pf = solve_riccati(lin.a0, lin.b0, lin.q0, r, Direction::forward);
  const RiccatiSolution pb = solve_riccati(lin.a0, lin.b0, lin.q0, r, Direction::backward);
  const double v_fwd = bench.problem.x0.dot(pf.p * bench.problem.x0);
  const double v_bwd = bench.problem.xT.dot(pb.p * bench.problem.xT);

  IntegratorConfig icfg;
  std::vector<double> gaps;
  double j_final = 0.0;
  std::ostringstream detail;
  for (double eps : {0.5, 0.2, 0.1, 0.05}) {
    BoundaryProblem prob = bench.problem;
    prob.horizon = 1.0 / eps;
    const BvpSolution sol = solve_tpbvp_shooting(prob, icfg, 1e-9);
    const double gap = near_optimality_gap(v_fwd, v_bwd, sol.optimal_cost);
    gaps.push_back(gap);
    j_final = sol.optimal_cost;
    detail << "eps=" << eps << ": gap=" << fmt(gap) << "; ";
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    if (!(gaps[i] < gaps[i - 1])) decreasing = false;
  }
  const bool small_ok = gaps.back() <= 0.02 * j_final;
  res.pass = decreasing && small_ok;
  detail << "strictly decreasing=" << (decreasing ? "yes" : "no") << ", final gap vs 2% J* ("
         << fmt(0.02 * j_final) << ")";
  res.detail = detail.str();
  return res;
}

CheckResult check_manipulator_composite(const CheckContext& ctx) {
  CheckResult res{"manipulator_composite", false, "", 0.0};
  const Benchmark bench = make_benchmark("manipulator");
  auto [fwd, bwd] = train_both(bench, ctx.seed);

  PolicyFn u_fwd = policy_from_weights(bench.problem.system.g_only_view(), bench.problem.cost,
                                       bench.basis, fwd.weights);
  PolicyFn u_bwd = policy_from_weights(bench.problem.system.g_only_view(), bench.problem.cost,
                                       bench.basis, bwd.weights);

  IntegratorConfig icfg;
  std::vector<double> quiet;
  double terminal20 = 0.0;
  std::ostringstream detail;
  for (double horizon : {5.0, 10.0, 20.0}) {
    CompositeController ctrl{{u_fwd, Direction::forward},
                             {u_bwd, Direction::backward},
                             horizon,
                             CompositionMode::overlay};
    BoundaryProblem prob = bench.problem;
    prob.horizon = horizon;
    const CompositionResult comp = compose(ctrl, prob, icfg);
    double peak = 0.0;
    for (std::size_t k = 0; k < comp.composite.size(); ++k) {
      const double t = comp.composite.times[k];
      if (t >= 0.3 * horizon && t <= 0.7 * horizon) {
        peak = std::max(peak, comp.composite.states[k].norm());
      }
    }
    quiet.push_back(peak);
    if (horizon == 20.0) terminal20 = comp.terminal_error;
    detail << "T=" << horizon << ": interior max ||x|| = " << fmt(peak) << "; ";
  }

  const BellmanEvaluation bell = evaluate_bellman_residual(
      bench.problem, bench.basis, fwd.weights, bench.learner,
      {bench.problem.x0, bench.problem.xT, StateVec::Constant(2, 0.25)}, 3.0);

  const bool quiet_ok = quiet.back() <= 0.02;
  const bool terminal_ok = terminal20 <= 0.05;
  const bool monotone_ok = quiet[0] > quiet[1] && quiet[1] > quiet[2];
  const bool bell_ok = bell.ratio <= 0.10;
  res.pass = quiet_ok && terminal_ok && monotone_ok && bell_ok;
  detail << "terminal error at T=20: " << fmt(terminal20) << " (tol 0.05); quietness decreasing="
         << (monotone_ok ? "yes" : "no") << "; forward Bellman ratio " << fmt(bell.ratio)
         << " (tol 0.10)";
  res.detail = detail.str();
  return res;
}

CheckResult check_invariant_suites(const CheckContext& ctx) {
  CheckResult res{"invariant_suites", false, "", 0.0};
  std::ostringstream detail;
  bool ok = true;

  // gradient versus central differences on every benchmark basis
  {
    double worst = 0.0;
    for (const char* name : {"rl_circuit", "cubic", "manipulator"}) {
      const Benchmark bench = make_benchmark(name);
      Rng rng(phase_seed(ctx.seed, std::string("gradcheck-") + name));
      const int n = bench.basis.state_dim();
      for (int trial = 0; trial < 100; ++trial) {
        StateVec x(n);
        for (int i = 0; i < n; ++i) {
          x[i] = rng.uniform(-bench.problem.domain_halfwidth[i],
                             bench.problem.domain_halfwidth[i]);
        }
        const Matrix analytic = bench.basis.gradient(x);
        const double fd_step = 1e-5;
        for (int j = 0; j < n; ++j) {
          StateVec xp = x, xm = x;
          xp[j] += fd_step;
          xm[j] -= fd_step;
          const Eigen::VectorXd col =
              (bench.basis.eval(xp) - bench.basis.eval(xm)) / (2.0 * fd_step);
          const double scale = std::max(1.0, analytic.col(j).cwiseAbs().maxCoeff());
          worst = std::max(worst, (analytic.col(j) - col).cwiseAbs().maxCoeff() / scale);
        }
      }
    }
    if (worst > 1e-6) ok = false;
    detail << "basis gradient FD max rel dev " << fmt(worst) << " (tol 1e-6); ";
  }

  // RK4 order on the circuit free decay
  {
    const Benchmark bench = make_benchmark("rl_circuit");
    PolicyFn zero = [](const StateVec&) { return ControlVec::Zero(1); };
    auto endpoint_error = [&](double h) {
      IntegratorConfig cfg;
      cfg.step = h;
      Trajectory traj = simulate(bench.problem.system, bench.problem.cost, zero,
                                 StateVec::Constant(1, 1.0), 1.0, cfg);
      return std::abs(traj.states.back()[0] - std::exp(-1.0));
    };
    const double e1 = endpoint_error(2e-3);
    const double e2 = endpoint_error(1e-3);
    const double ratio = e1 / e2;
    if (!(ratio > 12.0 && ratio < 20.0)) ok = false;
    detail << "RK4 halving ratio " << fmt(ratio) << " (expect ~16); ";
  }

  // Riccati residuals
  {
    double worst = 0.0;
    for (const char* name : {"rl_circuit", "manipulator"}) {
      const Benchmark bench = make_benchmark(name);
      const Matrix r = bench.problem.cost.control_weight();
      for (Direction dir : {Direction::forward, Direction::backward}) {
        const RiccatiSolution sol = solve_riccati(bench.a0, bench.b0, bench.q_form, r, dir);
        const Matrix a = dir == Direction::forward ? bench.a0 : Matrix(-bench.a0);
        const Matrix b = dir == Direction::forward ? bench.b0 : Matrix(-bench.b0);
        const Matrix r_inv = r.llt().solve(Matrix::Identity(r.rows(), r.cols()));
        const Matrix resid = a.transpose() * sol.p + sol.p * a -
                             sol.p * b * r_inv * b.transpose() * sol.p + bench.q_form;
        worst = std::max(worst, resid.cwiseAbs().maxCoeff());
      }
    }
    if (worst > 1e-10) ok = false;
    detail << "Riccati residual " << fmt(worst) << " (tol 1e-10); ";
  }

  // analytic cubic branches satisfy their HJB identities pointwise
  {
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = -2.0 + 4.0 * i / 1000.0;
      const auto [vf, df] = cubic_value(x, Direction::forward);
      const auto [vb, db] = cubic_value(x, Direction::backward);
      const double res_f = x * x - 0.25 * df * df + df * x * x * x;
      const double res_b = x * x - 0.25 * db * db - db * x * x * x;
      worst = std::max({worst, std::abs(res_f), std::abs(res_b)});
    }
    if (worst > 1e-10) ok = false;
    detail << "cubic HJB residual " << fmt(worst) << " (tol 1e-10); ";
  }

  // shooting stationarity along the returned path
  {
    const Benchmark bench = make_benchmark("rl_circuit");
    BoundaryProblem prob = bench.problem;
    prob.horizon = 20.0;
    const BvpSolution sol = solve_tpbvp_shooting(prob, IntegratorConfig{}, 1e-9);
    const Matrix r_inv = prob.cost.control_weight_inverse();
    double worst = 0.0;
    for (std::size_t k = 0; k < sol.trajectory.size(); ++k) {
      const ControlVec should =
          -0.5 * r_inv * prob.system.input_map(sol.trajectory.states[k]).transpose() *
          sol.costates[k];
      worst = std::max(worst, (sol.trajectory.controls[k] - should).norm());
    }
    if (worst > 1e-8 || !sol.converged) ok = false;
    detail << "shooting stationarity " << fmt(worst) << " (tol 1e-8); ";
  }

  // xi stays symmetric PSD through training (checkpoints carry lambda_min)
  // and fixed seeds reproduce the log bitwise
  {
    const Benchmark bench = make_benchmark("rl_circuit");
    TrainResult a = train_bench(bench, Direction::forward, phase_seed(ctx.seed, "train-fwd"));
    TrainResult b = train_bench(bench, Direction::forward, phase_seed(ctx.seed, "train-fwd"));
    double min_pe = 0.0;
    for (const auto& row : a.log.rows) min_pe = std::min(min_pe, row.pe_metric);
    if (min_pe < -1e-12) ok = false;
    std::ostringstream csv_a, csv_b;
    a.log.write_csv(csv_a);
    b.log.write_csv(csv_b);
    const bool identical = csv_a.str() == csv_b.str() && a.weights.w == b.weights.w;
    if (!identical) ok = false;
    detail << "xi lambda_min >= " << fmt(min_pe) << "; deterministic replay="
           << (identical ? "yes" : "no");
  }

  res.pass = ok;
  res.detail = detail.str();
  return res;
}

CheckResult check_pe_machinery(const CheckContext& ctx) {
  CheckResult res{"pe_machinery", false, "", 0.0};
  std::ostringstream detail;
  bool ok = true;

  for (const char* name : {"rl_circuit", "cubic", "manipulator"}) {
    const Benchmark bench = make_benchmark(name);
    TrainResult fwd = train_bench(bench, Direction::forward, phase_seed(ctx.seed, "train-fwd"));
    const double crossing = fwd.log.first_pe_at;
    if (!(crossing > 0.0 && crossing <= 5.0)) ok = false;
    detail << name << ": lambda_min crossed sigma_1 at t=" << fmt(crossing) << " s; ";
  }

  // zero exploration noise from a stabilizing init must trip the monitor
  {
    Benchmark bench = make_benchmark("rl_circuit");
    bench.learner.noise_amplitude = 0.0;
    bool raised = false;
    try {
      train_bench(bench, Direction::forward, phase_seed(ctx.seed, "train-fwd"),
                  Eigen::VectorXd::Constant(1, 0.5));
    } catch (const PEViolation&) {
      raised = true;
    }
    if (!raised) ok = false;
    detail << "zero-noise run raised PEViolation=" << (raised ? "yes" : "no");
  }

  res.pass = ok;
  res.detail = detail.str();
  return res;
}

CheckResult check_weight_files(const CheckContext& ctx) {
  CheckResult res{"weight_files_wellformed", false, "", 0.0};
  if (ctx.weights_dir.empty() || !std::filesystem::exists(ctx.weights_dir)) {
    res.pass = true;
    res.detail = "no weights directory to scan";
    return res;
  }
  std::size_t checked = 0;
  for (const auto& entry : std::filesystem::directory_iterator(ctx.weights_dir)) {
    const std::string fname = entry.path().filename().string();
    if (fname.rfind("weights_", 0) == 0 && entry.path().extension() == ".json") {
      ++checked;
      load_weights(entry.path());  // throws on corruption
    }
  }
  res.pass = true;
  res.detail = std::to_string(checked) + " weight record(s) parsed";
  return res;
}

using CheckFn = std::function<CheckResult(const CheckContext&)>;

const std::vector<std::pair<std::string, CheckFn>>& check_registry() {
  static const std::vector<std::pair<std::string, CheckFn>> registry = {
      {"circuit_forward_weight", check_circuit_forward_weight},
      {"circuit_backward_weight", check_circuit_backward_weight},
      {"cubic_forward_critic", check_cubic_forward_critic},
      {"circuit_gap_monotone", check_circuit_gap_monotone},
      {"manipulator_composite", check_manipulator_composite},
      {"invariant_suites", check_invariant_suites},
      {"pe_machinery", check_pe_machinery},
      {"weight_files_wellformed", check_weight_files},
  };
  return registry;
}

}  // namespace

std::vector<std::string> acceptance_check_names() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : check_registry()) names.push_back(name);
  return names;
}

std::vector<CheckResult> run_acceptance_checks(std::uint64_t master_seed,
                                               const std::filesystem::path& weights_dir,
                                               std::ostream* progress,
                                               const std::vector<std::string>& only) {
  CheckContext ctx{master_seed, weights_dir};
  std::vector<CheckResult> results;
  for (const auto& [name, fn] : check_registry()) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    if (progress) *progress << "running " << name << " ..." << std::endl;
    const auto start = std::chrono::steady_clock::now();
    CheckResult res;
    try {
      res = fn(ctx);
    } catch (const std::exception& e) {
      res.name = name;
      res.pass = false;
      res.detail = std::string("exception: ") + e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (progress) {
      *progress << "  " << (res.pass ? "PASS" : "FAIL") << " (" << std::setprecision(3)
                << res.seconds << " s)" << std::endl;
    }
    results.push_back(std::move(res));
  }
  return results;
}

void print_check_table(const std::vector<CheckResult>& results, std::ostream& os) {
  for (const auto& res : results) {
    os << (res.pass ? "[PASS] " : "[FAIL] ") << res.name << " (" << std::fixed
       << std::setprecision(2) << res.seconds << " s): " << res.detail << "\n";
    os.unsetf(std::ios::fixed);
  }
}

}  // namespace tpbc
