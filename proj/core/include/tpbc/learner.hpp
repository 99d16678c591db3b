#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <vector>

#include "tpbc/critic.hpp"
#include "tpbc/rng.hpp"
#include "tpbc/sim.hpp"

namespace tpbc {

/// Tuning for the filtered policy-iteration learner. All defaults are
/// config-exposed; benchmark definitions override a few of them (basis size
/// changes what a sensible excitation floor is).
struct LearnerConfig {
  double window = 0.1;        // Bellman integration window T_w (s)
  double ell = 1.0;           // low-pass pole of the auxiliary filters
  Matrix gamma;               // learning gain; empty means gamma_scale * I
  double gamma_scale = 10.0;
  double deadzone = 1e-4;     // ||G|| saturation replacing the ideal G/||G||
  double pe_floor = 0.04;     // sigma_1: minimum acceptable lambda_min(xi)
  double noise_amplitude = 2.0;
  double noise_frequency = 1.0;  // e(t) = amplitude * sin(frequency * t)
  NoiseFn noise_override;        // replaces the sinusoid when set
  double reset_period = 2.0;     // seconds between episode resets
  std::function<StateVec(Rng&)> reset_sampler;  // default: uniform over the box
  double convergence_eps = 1e-3;  // per-checkpoint max |dW|
  int max_iterations = 200;       // checkpoint budget
  int min_iterations = 3;
  double init_lo = 0.0;  // initial weight sampling range
  double init_hi = 1.0;
  double domain_exit_factor = 1.5;  // end the episode when the state leaves
                                    // the scaled training box

  void validate() const;
};

/// Rolling store of the samples the learner is allowed to see: time, state,
/// policy control, running cost of the policy control, and the
/// noise-push regressor correction (grad phi * g * e).
class WindowBuffer {
 public:
  struct Sample {
    double t = 0.0;
    StateVec x;
    ControlVec u;
    double running_cost = 0.0;
    Eigen::VectorXd noise_push;
  };

  WindowBuffer(double window, double step);

  void clear() { samples_.clear(); }
  void push(Sample s);
  bool spans_window() const { return samples_.size() == capacity_; }
  std::size_t size() const { return samples_.size(); }
  double step() const { return step_; }
  double window() const { return window_; }
  const Sample& front() const { return samples_.front(); }
  const Sample& back() const { return samples_.back(); }
  const Sample& at(std::size_t i) const { return samples_[i]; }

 private:
  double window_;
  double step_;
  std::size_t capacity_;
  std::deque<Sample> samples_;
};

/// Auxiliary filter matrix, filter vector and current weight estimate.
struct LearnerState {
  Matrix xi;
  Eigen::VectorXd psi;
  CriticWeights w_hat;

  static LearnerState zero(int basis_size, Direction direction);
};

/// phi(x(t)) - phi(x(t - window)) on the buffer clock. RangeError until the
/// buffer covers the window; a zero window gives the zero vector.
Eigen::VectorXd delta_phi(const WindowBuffer& buffer, const BasisSet& basis, double t,
                          double window);

/// Signed window cost: +integral of the running cost for the forward
/// regulator, -integral for the backward one.
double rho(const WindowBuffer& buffer, const CostSpec& cost, double t, double window,
           Direction direction);

/// Trapezoidal integral of the stored noise-push samples over the window.
Eigen::VectorXd noise_push_integral(const WindowBuffer& buffer);

/// One exact exponential-Euler step of
///   xi'  = -ell xi  + dphi dphi',   psi' = -ell psi + dphi rho.
/// The update is a convex combination of PSD terms, so xi stays symmetric
/// positive semidefinite by construction.
void filter_step(LearnerState& state, const Eigen::VectorXd& dphi, double rho_val, double ell,
                 double h);

/// Sliding-mode adaptation direction -Gamma xi G / max(||G||, deadzone)
/// with G = xi w + psi. The caller integrates w with the filter step h.
Eigen::VectorXd weight_update_direction(const LearnerState& state, const Matrix& gamma,
                                        double deadzone);

/// lambda_min(xi) via cyclic Jacobi; the online persistent-excitation check.
double pe_metric(const Matrix& xi);

struct TrainingLogRow {
  int iter = 0;
  double t = 0.0;
  Eigen::VectorXd w;
  double pe_metric = 0.0;
  double g_norm = 0.0;
  double bellman_residual = 0.0;  // mean |rho + w'dphi| / mean |rho| over the period
};

struct TrainingLog {
  std::vector<TrainingLogRow> rows;
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
  /// Training time at which lambda_min(xi) first reached the PE floor;
  /// negative when it never did.
  double first_pe_at = -1.0;

  void write_csv(std::ostream& os) const;
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
  CriticWeights weights;
  TrainingLog log;
};

/// Model-free training of one regulator direction (Algorithm-style outer
/// loop realized as checkpoints every reset_period). The plant is simulated
/// with full visibility as the environment; the policy only ever sees the
/// g_only view. The backward regulator trains on reverse-time episodes, where
/// its target policy is stabilizing; the backward window-cost sign and the
/// reversed clock cancel, so the filters see the forward-form residual.
TrainResult train_regulator(const BoundaryProblem& problem, const BasisSet& basis,
                            const LearnerConfig& cfg, Direction direction, std::uint64_t seed,
                            std::optional<Eigen::VectorXd> init_weights = std::nullopt,
                            const IntegratorConfig& integrator = IntegratorConfig{});

/// Reverse-time-stabilizing initial weights for the backward phase: scales
/// the converged forward weights by the smallest power of two whose induced
/// backward policy contracts reverse-time probe episodes. Policy iteration
/// keeps whichever stability basin it starts in, so the backward phase must
/// start inside the reverse-time-stabilizing one.
Eigen::VectorXd backward_init_from_forward(const BoundaryProblem& problem,
                                           const BasisSet& basis, const LearnerConfig& cfg,
                                           const Eigen::VectorXd& w_forward,
                                           const IntegratorConfig& integrator = IntegratorConfig{});

struct BellmanEvaluation {
  double mean_abs_residual = 0.0;
  double mean_abs_rho = 0.0;
  double ratio = 0.0;
  int windows = 0;
};

/// Held-out Bellman check: noiseless closed-loop episodes from the given
/// starts, windows slid along each, residual rho + w'dphi per window.
BellmanEvaluation evaluate_bellman_residual(const BoundaryProblem& problem,
                                            const BasisSet& basis, const CriticWeights& weights,
                                            const LearnerConfig& cfg,
                                            const std::vector<StateVec>& starts,
                                            double episode_length,
                                            const IntegratorConfig& integrator = IntegratorConfig{});

}  // namespace tpbc
