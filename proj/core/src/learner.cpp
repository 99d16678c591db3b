#include "tpbc/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tpbc/jacobi.hpp"

namespace tpbc {

namespace {

constexpr double kSnap = 1e-9;

void format_value(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  os << buf;
}

std::size_t window_steps(double window, double step) {
  const double ratio = window / step;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-6) {
    throw RangeError("window must be an integer multiple of the integration step");
  }
  return steps;
}

}  // namespace

void LearnerConfig::validate() const {
  if (window <= 0.0) throw ConfigError("learner.window must be positive");
  if (ell <= 0.0) throw ConfigError("learner.ell must be positive");
  if (gamma.size() > 0) {
    if (gamma.rows() != gamma.cols()) throw ConfigError("learner.gamma must be square");
    if ((gamma - gamma.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw ConfigError("learner.gamma must be symmetric");
    }
    if (jacobi_min_eigenvalue(gamma) <= 0.0) {
      throw ConfigError("learner.gamma must be positive definite");
    }
  } else if (gamma_scale <= 0.0) {
    throw ConfigError("learner.gamma_scale must be positive");
  }
  if (deadzone <= 0.0) throw ConfigError("learner.deadzone must be positive");
  if (pe_floor <= 0.0) throw ConfigError("learner.pe_floor must be positive");
  if (reset_period <= 0.0) throw ConfigError("learner.reset_period must be positive");
  if (convergence_eps <= 0.0) throw ConfigError("learner.convergence_eps must be positive");
  if (max_iterations <= 0) throw ConfigError("learner.max_iterations must be positive");
  if (noise_amplitude < 0.0) throw ConfigError("learner.noise_amplitude must be nonnegative");
  if (domain_exit_factor < 1.0) throw ConfigError("learner.domain_exit_factor must be >= 1");
}

WindowBuffer::WindowBuffer(double window, double step)
    : window_(window), step_(step), capacity_(window_steps(window, step) + 1) {}

void WindowBuffer::push(Sample s) {
  samples_.push_back(std::move(s));
  while (samples_.size() > capacity_) samples_.pop_front();
}

LearnerState LearnerState::zero(int basis_size, Direction direction) {
  LearnerState s;
  s.xi = Matrix::Zero(basis_size, basis_size);
  s.psi = Eigen::VectorXd::Zero(basis_size);
  s.w_hat.w = Eigen::VectorXd::Zero(basis_size);
  s.w_hat.direction = direction;
  return s;
}

Eigen::VectorXd delta_phi(const WindowBuffer& buffer, const BasisSet& basis, double t,
                          double window) {
  if (window == 0.0) return Eigen::VectorXd::Zero(basis.size());
  if (buffer.size() == 0) throw RangeError("delta_phi: empty buffer");
  const std::size_t steps = window_steps(window, buffer.step());
  if (buffer.size() < steps + 1) {
    throw RangeError("delta_phi: buffer does not cover the window yet");
  }
  const auto& newest = buffer.back();
  if (std::abs(newest.t - t) > kSnap) {
    throw RangeError("delta_phi: t must be the newest buffered time");
  }
  const auto& oldest = buffer.at(buffer.size() - 1 - steps);
  return basis.eval(newest.x) - basis.eval(oldest.x);
}

double rho(const WindowBuffer& buffer, const CostSpec& /*cost*/, double t, double window,
           Direction direction) {
  if (window == 0.0) return 0.0;
  if (buffer.size() == 0) throw RangeError("rho: empty buffer");
  const std::size_t steps = window_steps(window, buffer.step());
  if (buffer.size() < steps + 1) throw RangeError("rho: buffer does not cover the window yet");
  if (std::abs(buffer.back().t - t) > kSnap) {
    throw RangeError("rho: t must be the newest buffered time");
  }
  const std::size_t first = buffer.size() - 1 - steps;
  double acc = 0.0;
  for (std::size_t i = first; i + 1 < buffer.size(); ++i) {
    acc += 0.5 * (buffer.at(i).running_cost + buffer.at(i + 1).running_cost) * buffer.step();
  }
  return direction == Direction::forward ? acc : -acc;
}

Eigen::VectorXd noise_push_integral(const WindowBuffer& buffer) {
  if (buffer.size() < 2) throw RangeError("noise_push_integral: buffer too short");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(buffer.front().noise_push.size());
  for (std::size_t i = 0; i + 1 < buffer.size(); ++i) {
    acc += 0.5 * (buffer.at(i).noise_push + buffer.at(i + 1).noise_push) * buffer.step();
  }
  return acc;
}

void filter_step(LearnerState& state, const Eigen::VectorXd& dphi, double rho_val, double ell,
                 double h) {
  if (h <= 0.0) throw RangeError("filter_step: h must be positive");
  const double decay = std::exp(-ell * h);
  const double gain = ell > 0.0 ? (1.0 - decay) / ell : h;
  state.xi = decay * state.xi + gain * (dphi * dphi.transpose());
  state.psi = decay * state.psi + gain * (dphi * rho_val);
}

Eigen::VectorXd weight_update_direction(const LearnerState& state, const Matrix& gamma,
                                        double deadzone) {
  const Eigen::VectorXd g = state.xi * state.w_hat.w + state.psi;
  const double denom = std::max(g.norm(), deadzone);
  return -(gamma * (state.xi * g)) / denom;
}

double pe_metric(const Matrix& xi) { return jacobi_min_eigenvalue(xi); }

void TrainingLog::write_csv(std::ostream& os) const {
  const Eigen::Index n = rows.empty() ? 0 : rows.front().w.size();
  os << "iter,t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",w_" << (i + 1);
  os << ",pe_metric,g_norm,bellman_residual\n";
  for (const auto& row : rows) {
    os << row.iter << ",";
    format_value(os, row.t);
    for (Eigen::Index i = 0; i < n; ++i) {
      os << ",";
      format_value(os, row.w[i]);
    }
    os << ",";
    format_value(os, row.pe_metric);
    os << ",";
    format_value(os, row.g_norm);
    os << ",";
    format_value(os, row.bellman_residual);
    os << "\n";
  }
}

void TrainingLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error("TrainingLog::write_csv: cannot open " + path.string());
  write_csv(os);
}

namespace {

struct TrainContext {
  const BoundaryProblem& problem;
  const BasisSet& basis;
  const LearnerConfig& cfg;
  const IntegratorConfig& integrator;
  Direction direction;
};

PolicyFn make_policy(const TrainContext& ctx, const Eigen::VectorXd& w) {
  CriticWeights cw{w, ctx.direction};
  return policy_from_weights(ctx.problem.system.g_only_view(), ctx.problem.cost, ctx.basis, cw);
}

StateVec default_reset(const Eigen::VectorXd& halfwidth, Rng& rng) {
  StateVec x(halfwidth.size());
  for (Eigen::Index i = 0; i < halfwidth.size(); ++i) {
    x[i] = rng.uniform(-halfwidth[i], halfwidth[i]);
  }
  return x;
}

}  // namespace

TrainResult train_regulator(const BoundaryProblem& problem, const BasisSet& basis,
                            const LearnerConfig& cfg, Direction direction, std::uint64_t seed,
                            std::optional<Eigen::VectorXd> init_weights,
                            const IntegratorConfig& integrator) {
  cfg.validate();
  if (basis.state_dim() != problem.system.state_dim()) {
    throw DimensionError("train_regulator: basis dimension does not match the system");
  }
  if (problem.domain_halfwidth.size() != problem.system.state_dim()) {
    throw DimensionError("train_regulator: problem needs a training-domain box");
  }

  const int n_terms = basis.size();
  const int m = problem.system.input_dim();
  const double h = integrator.step;
  const double dir_sgn = direction == Direction::forward ? 1.0 : -1.0;
  const Matrix gamma =
      cfg.gamma.size() > 0 ? cfg.gamma : Matrix(cfg.gamma_scale * Matrix::Identity(n_terms, n_terms));

  Rng rng_init(phase_seed(seed, "init-weights"));
  Rng rng_reset(phase_seed(seed, "resets"));

  Eigen::VectorXd w(n_terms);
  if (init_weights) {
    require_length("init_weights", *init_weights, n_terms);
    w = *init_weights;
  } else {
    for (int i = 0; i < n_terms; ++i) w[i] = rng_init.uniform(cfg.init_lo, cfg.init_hi);
  }

  auto noise_at = [&](double t) -> ControlVec {
    if (cfg.noise_override) return cfg.noise_override(t);
    return ControlVec::Constant(m, cfg.noise_amplitude * std::sin(cfg.noise_frequency * t));
  };
  auto sample_reset = [&]() -> StateVec {
    if (cfg.reset_sampler) return cfg.reset_sampler(rng_reset);
    return default_reset(problem.domain_halfwidth, rng_reset);
  };

  LearnerState state = LearnerState::zero(n_terms, direction);
  state.w_hat.w = w;
  WindowBuffer buffer(cfg.window, h);
  auto log = std::make_shared<TrainingLog>();

  // all learner-visible quantities for one instant
  auto make_sample = [&](double t, const StateVec& x) {
    WindowBuffer::Sample s;
    s.t = t;
    s.x = x;
    const Eigen::VectorXd value_grad = basis.gradient(x).transpose() * w;
    const double sigma = direction == Direction::forward ? -1.0 : 1.0;
    s.u = sigma * 0.5 * problem.cost.control_weight_inverse() *
          problem.system.input_map(x).transpose() * value_grad;
    s.running_cost = problem.cost.running_cost(x, s.u);
    s.noise_push = basis.gradient(x) * (problem.system.input_map(x) * noise_at(t));
    return s;
  };

  StateVec x = sample_reset();
  buffer.push(make_sample(0.0, x));

  const auto steps_per_period = static_cast<std::size_t>(std::llround(cfg.reset_period / h));
  if (steps_per_period == 0) throw ConfigError("learner.reset_period shorter than the step");

  int iter = 0;
  Eigen::VectorXd w_prev = w;
  double res_abs = 0.0, rho_abs = 0.0;
  std::size_t res_count = 0;
  double pe_last_above = cfg.window;
  double pe_value = 0.0;

  const std::size_t max_steps = static_cast<std::size_t>(cfg.max_iterations) * steps_per_period;
  for (std::size_t k = 1; k <= max_steps + 1; ++k) {
    const double t_prev = static_cast<double>(k - 1) * h;
    const double t = static_cast<double>(k) * h;

    TimeField field = [&](const StateVec& z, double tau) -> StateVec {
      const Eigen::VectorXd value_grad = basis.gradient(z).transpose() * w;
      const double sigma = direction == Direction::forward ? -1.0 : 1.0;
      const ControlVec u = sigma * 0.5 * problem.cost.control_weight_inverse() *
                               problem.system.input_map(z).transpose() * value_grad +
                           noise_at(tau);
      return dir_sgn * (problem.system.drift(z) + problem.system.input_map(z) * u);
    };
    x = rk4_field_step(field, x, t_prev, h);

    if (!x.allFinite() || x.norm() > integrator.max_state_norm) {
      throw DivergenceError("train_regulator: episode diverged at t=" + std::to_string(t));
    }

    bool left_domain = false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (std::abs(x[i]) > cfg.domain_exit_factor * problem.domain_halfwidth[i]) {
        left_domain = true;
        break;
      }
    }
    if (left_domain) {
      // episode teaches nothing outside the training box; restart it
      x = sample_reset();
      buffer.clear();
      buffer.push(make_sample(t, x));
    } else {
      buffer.push(make_sample(t, x));
    }

    if (buffer.spans_window()) {
      const Eigen::VectorXd dphi_raw = delta_phi(buffer, basis, t, cfg.window);
      // Remove the exploration push int(grad phi * g * e): the Bellman
      // identity holds for the policy control, but the state moved under
      // policy + noise.
      const Eigen::VectorXd dphi_corr = dphi_raw - dir_sgn * noise_push_integral(buffer);
      const double rho_signed = rho(buffer, problem.cost, t, cfg.window, direction);
      // The reverse-time episode clock flips the sign of dphi relative to
      // the forward-time statement, which cancels the backward rho sign;
      // the filters therefore always see the forward-form pair.
      const double rho_eff = direction == Direction::forward ? rho_signed : -rho_signed;

      filter_step(state, dphi_corr, rho_eff, cfg.ell, h);
      pe_value = pe_metric(state.xi);

      res_abs += std::abs(rho_eff + w.dot(dphi_corr));
      rho_abs += std::abs(rho_eff);
      ++res_count;

      const Eigen::VectorXd g_vec = state.xi * w + state.psi;
      const Eigen::VectorXd dir_vec =
          -(gamma * (state.xi * g_vec)) / std::max(g_vec.norm(), cfg.deadzone);
      // scale the Euler step so it never overshoots the G = 0 manifold
      const Eigen::VectorXd dg = state.xi * (h * dir_vec);
      const double denom = dg.squaredNorm();
      double scale = 1.0;
      if (denom > 1e-300) {
        scale = std::clamp(-g_vec.dot(dg) / denom, 0.0, 1.0);
      }
      w += scale * h * dir_vec;
      state.w_hat.w = w;
    }

    // The excitation clock runs only while the learner actually receives
    // windows; an empty buffer (episode churn, post-reset refill) pauses it.
    if (!buffer.spans_window() || pe_value >= cfg.pe_floor) {
      if (buffer.spans_window() && log->first_pe_at < 0.0) log->first_pe_at = t;
      pe_last_above = t;
    } else if (t - pe_last_above >= cfg.reset_period) {
      log->stop_reason = "pe_violation";
      throw PEViolation("train_regulator: lambda_min(xi)=" + std::to_string(pe_value) +
                            " stayed below the floor for a full reset period",
                        log);
    }

    if (k % steps_per_period == 0) {
      ++iter;
      TrainingLogRow row;
      row.iter = iter;
      row.t = t;
      row.w = w;
      row.pe_metric = pe_value;
      row.g_norm = (state.xi * w + state.psi).norm();
      row.bellman_residual = res_count > 0 ? res_abs / std::max(rho_abs, 1e-300) : 0.0;
      log->rows.push_back(row);
      res_abs = rho_abs = 0.0;
      res_count = 0;

      const double dw = (w - w_prev).cwiseAbs().maxCoeff();
      if (iter >= cfg.min_iterations && dw < cfg.convergence_eps) {
        log->converged = true;
        log->iterations = iter;
        log->stop_reason = "converged";
        TrainResult result;
        result.weights = CriticWeights{w, direction};
        result.log = *log;
        return result;
      }
      if (iter >= cfg.max_iterations) {
        log->iterations = iter;
        log->stop_reason = "max_iterations";
        throw NonConvergence("train_regulator: no convergence within max_iterations", log);
      }
      w_prev = w;

      x = sample_reset();
      buffer.clear();
      buffer.push(make_sample(t, x));
    }
  }
  log->stop_reason = "internal";
  throw NonConvergence("train_regulator: step budget exhausted", log);
}

Eigen::VectorXd backward_init_from_forward(const BoundaryProblem& problem,
                                           const BasisSet& basis, const LearnerConfig& cfg,
                                           const Eigen::VectorXd& w_forward,
                                           const IntegratorConfig& integrator) {
  require_length("w_forward", w_forward, basis.size());
  const int n = problem.system.state_dim();

  std::vector<StateVec> starts;
  starts.push_back(0.5 * problem.domain_halfwidth);
  starts.push_back(-0.5 * problem.domain_halfwidth);
  for (int i = 0; i < n && n > 1; ++i) {
    StateVec s = StateVec::Zero(n);
    s[i] = 0.5 * problem.domain_halfwidth[i];
    starts.push_back(s);
  }

  for (double alpha : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
    const Eigen::VectorXd candidate = alpha * w_forward;
    CriticWeights cw{candidate, Direction::backward};
    PolicyFn pol = policy_from_weights(problem.system.g_only_view(), problem.cost, basis, cw);
    bool contracts = true;
    for (const auto& start : starts) {
      try {
        Trajectory probe = simulate(problem.system, problem.cost, pol, start, cfg.reset_period,
                                    integrator, TimeDirection::reverse);
        if (probe.states.back().norm() > 0.5 * start.norm()) {
          contracts = false;
        }
      } catch (const DivergenceError&) {
        contracts = false;
      }
      if (!contracts) break;
    }
    if (contracts) return candidate;
  }
  throw NonConvergence(
      "backward_init_from_forward: no scaled forward policy contracts the reverse-time system");
}

BellmanEvaluation evaluate_bellman_residual(const BoundaryProblem& problem,
                                            const BasisSet& basis, const CriticWeights& weights,
                                            const LearnerConfig& cfg,
                                            const std::vector<StateVec>& starts,
                                            double episode_length,
                                            const IntegratorConfig& integrator) {
  const double h = integrator.step;
  const std::size_t wsteps = window_steps(cfg.window, h);
  const TimeDirection dir = weights.direction == Direction::forward ? TimeDirection::forward
                                                                    : TimeDirection::reverse;
  PolicyFn pol = policy_from_weights(problem.system.g_only_view(), problem.cost, basis, weights);

  BellmanEvaluation out;
  for (const auto& start : starts) {
    Trajectory traj = simulate(problem.system, problem.cost, pol, start, episode_length,
                               integrator, dir);
    for (std::size_t k = wsteps; k < traj.size(); k += wsteps / 2 + 1) {
      const Eigen::VectorXd dphi =
          basis.eval(traj.states[k]) - basis.eval(traj.states[k - wsteps]);
      const double c = traj.cost_integral[k] - traj.cost_integral[k - wsteps];
      out.mean_abs_residual += std::abs(c + weights.w.dot(dphi));
      out.mean_abs_rho += std::abs(c);
      ++out.windows;
    }
  }
  if (out.windows > 0) {
    out.mean_abs_residual /= out.windows;
    out.mean_abs_rho /= out.windows;
    out.ratio = out.mean_abs_residual / std::max(out.mean_abs_rho, 1e-300);
  }
  return out;
}

}  // namespace tpbc
