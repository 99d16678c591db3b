#pragma once

#include <map>
#include <string>

#include "tpbc/critic.hpp"
#include "tpbc/dynamics.hpp"
#include "tpbc/learner.hpp"

namespace tpbc {

/// Fully configured benchmark: the boundary problem plus the pieces an
/// experiment needs around it (default basis, learner tuning, linearization
/// data for the model-based oracle).
struct Benchmark {
  std::string name;
  BoundaryProblem problem;
  BasisSet basis;
  LearnerConfig learner;
  Matrix a0;      // drift Jacobian at the origin
  Matrix b0;      // input map at the origin
  Matrix q_form;  // S(x) = x' q_form x for all bundled benchmarks
};

using ParamMap = std::map<std::string, double>;

/// Benchmarks: "rl_circuit" (params r, l), "cubic", "manipulator"
/// (params q11, q12, q22). All accept "r_weight" (control weight),
/// "domain" (training box half-width) and "horizon". Unknown parameter keys
/// are hard errors. Throws UnknownBenchmark for unknown names.
Benchmark make_benchmark(const std::string& name, const ParamMap& params = {});

}  // namespace tpbc
