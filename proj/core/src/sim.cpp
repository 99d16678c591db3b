#include "tpbc/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace tpbc {

namespace {

constexpr double kGridSnap = 1e-9;

void format_value(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  os << buf;
}

}  // namespace

StateVec rk4_field_step(const TimeField& field, const StateVec& x, double t, double h) {
  const StateVec k1 = field(x, t);
  const StateVec k2 = field(x + 0.5 * h * k1, t + 0.5 * h);
  const StateVec k3 = field(x + 0.5 * h * k2, t + 0.5 * h);
  const StateVec k4 = field(x + h * k3, t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double Trajectory::step() const {
  if (times.size() < 2) return 0.0;
  return times[1] - times[0];
}

void Trajectory::write_csv(std::ostream& os) const {
  const Eigen::Index n = states.empty() ? 0 : states.front().size();
  const Eigen::Index m = controls.empty() ? 0 : controls.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << (i + 1);
  for (Eigen::Index i = 0; i < m; ++i) os << ",u" << (i + 1);
  os << ",J\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    format_value(os, times[k]);
    for (Eigen::Index i = 0; i < n; ++i) {
      os << ",";
      format_value(os, states[k][i]);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      os << ",";
      format_value(os, controls[k][i]);
    }
    os << ",";
    format_value(os, cost_integral[k]);
    os << "\n";
  }
}

void Trajectory::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error("Trajectory::write_csv: cannot open " + path.string());
  write_csv(os);
}

Trajectory Trajectory::read_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw Error("Trajectory::read_csv: empty input");
  int n = 0, m = 0;
  {
    std::stringstream hs(header);
    std::string col;
    bool saw_t = false, saw_j = false;
    while (std::getline(hs, col, ',')) {
      if (col == "t") {
        saw_t = true;
      } else if (col == "J") {
        saw_j = true;
      } else if (col.size() >= 2 && col[0] == 'x') {
        ++n;
      } else if (col.size() >= 2 && col[0] == 'u') {
        ++m;
      } else {
        throw Error("Trajectory::read_csv: unexpected column '" + col + "'");
      }
    }
    if (!saw_t || !saw_j) throw Error("Trajectory::read_csv: missing t or J column");
  }
  Trajectory traj;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      row.push_back(std::stod(cell));
    }
    if (static_cast<int>(row.size()) != 1 + n + m + 1) {
      throw Error("Trajectory::read_csv: bad row width");
    }
    traj.times.push_back(row[0]);
    traj.states.push_back(Eigen::Map<const StateVec>(row.data() + 1, n));
    traj.controls.push_back(Eigen::Map<const ControlVec>(row.data() + 1 + n, m));
    traj.cost_integral.push_back(row[1 + n + m]);
  }
  return traj;
}

Trajectory Trajectory::read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("Trajectory::read_csv: cannot open " + path.string());
  return read_csv(is);
}

StateVec rk4_step(const AffineDynamics& sys, const PolicyFn& policy, const StateVec& x,
                  double h, TimeDirection direction) {
  const double sgn = direction == TimeDirection::forward ? 1.0 : -1.0;
  TimeField field = [&](const StateVec& z, double) -> StateVec {
    return sgn * (sys.drift(z) + sys.input_map(z) * policy(z));
  };
  StateVec next = rk4_field_step(field, x, 0.0, h);
  if (next.norm() > IntegratorConfig{}.max_state_norm) {
    throw DivergenceError("rk4_step: state norm exceeded the divergence guard");
  }
  return next;
}

Trajectory simulate(const AffineDynamics& sys, const CostSpec& cost, const PolicyFn& policy,
                    const StateVec& x_init, double duration, const IntegratorConfig& cfg,
                    TimeDirection direction, const NoiseFn& noise) {
  if (duration <= 0.0) throw RangeError("simulate: duration must be positive");
  if (cfg.step <= 0.0) throw RangeError("simulate: step must be positive");
  const double sgn = direction == TimeDirection::forward ? 1.0 : -1.0;
  const double h = cfg.step;
  const auto steps = static_cast<std::size_t>(std::floor(duration / h + kGridSnap));

  TimeField field = [&](const StateVec& z, double t) -> StateVec {
    ControlVec u = policy(z);
    if (noise) u += noise(t);
    return sgn * (sys.drift(z) + sys.input_map(z) * u);
  };

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.controls.reserve(steps + 1);
  traj.cost_integral.reserve(steps + 1);

  StateVec x = x_init;
  double acc = 0.0;
  double prev_rate = 0.0;
  auto record = [&](std::size_t k) {
    const double t = static_cast<double>(k) * h;
    const ControlVec u_policy = policy(x);
    ControlVec u_applied = u_policy;
    if (noise) u_applied += noise(t);
    const double rate = cost.running_cost(x, u_policy);
    if (k > 0) acc += 0.5 * (prev_rate + rate) * h;
    prev_rate = rate;
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.controls.push_back(u_applied);
    traj.cost_integral.push_back(acc);
  };
  record(0);

  for (std::size_t k = 0; k < steps; ++k) {
    x = rk4_field_step(field, x, static_cast<double>(k) * h, h);
    if (!x.allFinite() || x.norm() > cfg.max_state_norm) {
      auto partial = std::make_shared<Trajectory>(traj);
      throw DivergenceError("simulate: state norm exceeded the divergence guard at t=" +
                                std::to_string(static_cast<double>(k + 1) * h),
                            partial);
    }
    record(k + 1);
  }
  return traj;
}

Trajectory simulate_schedule(const AffineDynamics& sys, const CostSpec& cost,
                             const std::vector<ControlVec>& schedule, const StateVec& x_init,
                             const IntegratorConfig& cfg) {
  if (schedule.size() < 2) throw RangeError("simulate_schedule: need at least two samples");
  const double h = cfg.step;

  Trajectory traj;
  traj.times.reserve(schedule.size());
  traj.states.reserve(schedule.size());
  StateVec x = x_init;
  for (std::size_t k = 0; k + 1 < schedule.size(); ++k) {
    traj.times.push_back(static_cast<double>(k) * h);
    traj.states.push_back(x);
    // control interpolates linearly across the step
    const ControlVec& u0 = schedule[k];
    const ControlVec& u1 = schedule[k + 1];
    TimeField field = [&](const StateVec& z, double t) -> StateVec {
      const double theta = (t - static_cast<double>(k) * h) / h;
      const ControlVec u = (1.0 - theta) * u0 + theta * u1;
      return sys.drift(z) + sys.input_map(z) * u;
    };
    x = rk4_field_step(field, x, static_cast<double>(k) * h, h);
    if (!x.allFinite() || x.norm() > cfg.max_state_norm) {
      throw DivergenceError("simulate_schedule: divergence guard tripped");
    }
  }
  traj.times.push_back(static_cast<double>(schedule.size() - 1) * h);
  traj.states.push_back(x);
  traj.controls = schedule;
  accumulate_cost(traj, cost);
  return traj;
}

void accumulate_cost(Trajectory& traj, const CostSpec& cost) {
  traj.cost_integral.assign(traj.size(), 0.0);
  if (traj.size() < 2) return;
  double acc = 0.0;
  double prev = cost.running_cost(traj.states[0], traj.controls[0]);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double cur = cost.running_cost(traj.states[k], traj.controls[k]);
    acc += 0.5 * (prev + cur) * (traj.times[k] - traj.times[k - 1]);
    traj.cost_integral[k] = acc;
    prev = cur;
  }
}

double window_cost(const Trajectory& traj, const CostSpec& cost, double t_lo, double t_hi) {
  if (traj.size() < 2) throw RangeError("window_cost: trajectory too short");
  if (t_hi < t_lo) throw RangeError("window_cost: t_hi < t_lo");
  const double t0 = traj.times.front();
  const double t1 = traj.times.back();
  if (t_lo < t0 - kGridSnap || t_hi > t1 + kGridSnap) {
    throw RangeError("window_cost: window outside trajectory support");
  }
  if (t_hi == t_lo) return 0.0;

  const double h = traj.step();
  auto integrand = [&](std::size_t k) {
    return cost.running_cost(traj.states[k], traj.controls[k]);
  };
  // integral of the piecewise-linear integrand from t0 to t
  auto cumulative = [&](double t) {
    const double s = std::clamp((t - t0) / h, 0.0, static_cast<double>(traj.size() - 1));
    const auto k = static_cast<std::size_t>(std::floor(s));
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 <= k; ++i) {
      acc += 0.5 * (integrand(i) + integrand(i + 1)) * h;
    }
    const double theta = s - static_cast<double>(k);
    if (theta > 0.0 && k + 1 < traj.size()) {
      const double r0 = integrand(k);
      const double r1 = integrand(k + 1);
      const double r_theta = r0 + theta * (r1 - r0);
      acc += 0.5 * (r0 + r_theta) * theta * h;
    }
    return acc;
  };
  return cumulative(t_hi) - cumulative(t_lo);
}

}  // namespace tpbc
