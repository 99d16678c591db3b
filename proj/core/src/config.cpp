#include "tpbc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tpbc/rng.hpp"

namespace tpbc {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) {
      throw ConfigError("config: unknown key '" + path + key + "'");
    }
  }
}

double get_number(const json& obj, const char* key, double fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError("config: '" + path + key + "' must be a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const char* key, int fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    throw ConfigError("config: '" + path + key + "' must be an integer");
  }
  return obj[key].get<int>();
}

void apply_learner(LearnerConfig& lc, const json& obj, const std::string& path) {
  reject_unknown(obj,
                 {"window", "ell", "gamma_scale", "deadzone", "pe_floor", "noise_amplitude",
                  "noise_frequency", "reset_period", "convergence_eps", "max_iterations",
                  "min_iterations", "init_lo", "init_hi", "domain_exit_factor"},
                 path);
  lc.window = get_number(obj, "window", lc.window, path);
  lc.ell = get_number(obj, "ell", lc.ell, path);
  lc.gamma_scale = get_number(obj, "gamma_scale", lc.gamma_scale, path);
  lc.deadzone = get_number(obj, "deadzone", lc.deadzone, path);
  lc.pe_floor = get_number(obj, "pe_floor", lc.pe_floor, path);
  lc.noise_amplitude = get_number(obj, "noise_amplitude", lc.noise_amplitude, path);
  lc.noise_frequency = get_number(obj, "noise_frequency", lc.noise_frequency, path);
  lc.reset_period = get_number(obj, "reset_period", lc.reset_period, path);
  lc.convergence_eps = get_number(obj, "convergence_eps", lc.convergence_eps, path);
  lc.max_iterations = get_int(obj, "max_iterations", lc.max_iterations, path);
  lc.min_iterations = get_int(obj, "min_iterations", lc.min_iterations, path);
  lc.init_lo = get_number(obj, "init_lo", lc.init_lo, path);
  lc.init_hi = get_number(obj, "init_hi", lc.init_hi, path);
  lc.domain_exit_factor = get_number(obj, "domain_exit_factor", lc.domain_exit_factor, path);
}

ExperimentConfig build(const json& j, const std::string& origin) {
  reject_unknown(j, {"benchmark", "learner", "integrator", "composer", "seed", "output_dir"},
                 "");

  std::string bench_name = "rl_circuit";
  ParamMap params;
  if (j.contains("benchmark")) {
    const json& b = j["benchmark"];
    if (!b.is_object()) throw ConfigError("config: 'benchmark' must be an object");
    reject_unknown(b, {"name", "params"}, "benchmark.");
    if (b.contains("name")) bench_name = b["name"].get<std::string>();
    if (b.contains("params")) {
      for (const auto& [key, value] : b["params"].items()) {
        if (!value.is_number()) {
          throw ConfigError("config: 'benchmark.params." + key + "' must be a number");
        }
        params[key] = value.get<double>();
      }
    }
  }

  ExperimentConfig cfg;
  cfg.benchmark = make_benchmark(bench_name, params);

  if (j.contains("learner")) {
    apply_learner(cfg.benchmark.learner, j["learner"], "learner.");
  }

  if (j.contains("integrator")) {
    const json& integ = j["integrator"];
    reject_unknown(integ, {"step", "method", "max_state_norm"}, "integrator.");
    cfg.integrator.step = get_number(integ, "step", cfg.integrator.step, "integrator.");
    cfg.integrator.max_state_norm =
        get_number(integ, "max_state_norm", cfg.integrator.max_state_norm, "integrator.");
    if (integ.contains("method")) {
      const std::string method = integ["method"].get<std::string>();
      if (method != "rk4") throw ConfigError("config: integrator.method must be 'rk4'");
    }
    if (cfg.integrator.step <= 0.0) throw ConfigError("config: integrator.step must be positive");
  }

  if (j.contains("composer")) {
    const json& comp = j["composer"];
    reject_unknown(comp, {"mode", "epsilon_list"}, "composer.");
    if (comp.contains("mode")) {
      const std::string mode = comp["mode"].get<std::string>();
      if (mode == "overlay") {
        cfg.mode = CompositionMode::overlay;
      } else if (mode == "additive") {
        cfg.mode = CompositionMode::additive;
      } else {
        throw ConfigError("config: composer.mode must be 'overlay' or 'additive'");
      }
    }
    if (comp.contains("epsilon_list")) {
      if (!comp["epsilon_list"].is_array()) {
        throw ConfigError("config: composer.epsilon_list must be an array");
      }
      cfg.epsilon_list = comp["epsilon_list"].get<std::vector<double>>();
    }
  }
  for (double eps : cfg.epsilon_list) {
    if (!(eps > 0.0 && eps <= 1.0)) {
      throw ConfigError("config: composer.epsilon_list entries must lie in (0, 1]");
    }
  }

  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw ConfigError("config: seed must be an integer");
    }
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();

  cfg.config_hash = fnv1a(cfg.canonical_text());
  (void)origin;
  return cfg;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(const std::string& benchmark_name) {
  json j;
  j["benchmark"]["name"] = benchmark_name;
  return build(j, "<defaults>");
}

ExperimentConfig ExperimentConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buffer;
  buffer << is.rdbuf();
  return from_json_text(buffer.str(), path.string());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + origin + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: " + origin + ": top level must be an object");
  try {
    return build(j, origin);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + origin + ": " + e.what());
  }
}

std::string ExperimentConfig::canonical_text() const {
  json j;
  j["benchmark"]["name"] = benchmark.name;
  j["learner"]["window"] = benchmark.learner.window;
  j["learner"]["ell"] = benchmark.learner.ell;
  j["learner"]["gamma_scale"] = benchmark.learner.gamma_scale;
  j["learner"]["deadzone"] = benchmark.learner.deadzone;
  j["learner"]["pe_floor"] = benchmark.learner.pe_floor;
  j["learner"]["noise_amplitude"] = benchmark.learner.noise_amplitude;
  j["learner"]["noise_frequency"] = benchmark.learner.noise_frequency;
  j["learner"]["reset_period"] = benchmark.learner.reset_period;
  j["learner"]["convergence_eps"] = benchmark.learner.convergence_eps;
  j["learner"]["max_iterations"] = benchmark.learner.max_iterations;
  j["learner"]["min_iterations"] = benchmark.learner.min_iterations;
  j["learner"]["init_lo"] = benchmark.learner.init_lo;
  j["learner"]["init_hi"] = benchmark.learner.init_hi;
  j["learner"]["domain_exit_factor"] = benchmark.learner.domain_exit_factor;
  j["integrator"]["step"] = integrator.step;
  j["integrator"]["max_state_norm"] = integrator.max_state_norm;
  j["composer"]["mode"] = mode == CompositionMode::overlay ? "overlay" : "additive";
  j["composer"]["epsilon_list"] = epsilon_list;
  j["seed"] = seed;
  j["benchmark"]["horizon"] = benchmark.problem.horizon;
  j["benchmark"]["domain"] = std::vector<double>(benchmark.problem.domain_halfwidth.begin(),
                                                 benchmark.problem.domain_halfwidth.end());
  return j.dump();
}

}  // namespace tpbc
