#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tpbc/benchmarks.hpp"
#include "tpbc/composer.hpp"
#include "tpbc/sim.hpp"

namespace tpbc {

/// Everything one experiment run needs, resolved from defaults plus an
/// optional JSON config file. Unknown keys anywhere in the file are hard
/// errors; silent defaults hide typos.
struct ExperimentConfig {
  Benchmark benchmark;
  IntegratorConfig integrator;
  CompositionMode mode = CompositionMode::overlay;
  std::vector<double> epsilon_list = {0.5, 0.1, 0.05};
  std::uint64_t seed = 0x5eed5eedULL;
  std::string output_dir = "out";
  std::uint64_t config_hash = 0;

  static ExperimentConfig defaults(const std::string& benchmark_name);
  static ExperimentConfig from_json_file(const std::filesystem::path& path);
  static ExperimentConfig from_json_text(const std::string& text, const std::string& origin);

  /// Canonical serialized form; its FNV-1a hash stamps weight records.
  std::string canonical_text() const;
};

}  // namespace tpbc
