#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tpbc {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Names of all acceptance checks in execution order.
std::vector<std::string> acceptance_check_names();

/// Runs the acceptance suite (or the named subset). Each check pins its
/// tolerances in code; progress lines go to `progress` when given.
/// weights_dir, when non-empty, is additionally scanned for weight records
/// that must parse cleanly.
std::vector<CheckResult> run_acceptance_checks(std::uint64_t master_seed,
                                               const std::filesystem::path& weights_dir,
                                               std::ostream* progress,
                                               const std::vector<std::string>& only = {});

/// One pass/fail line per check.
void print_check_table(const std::vector<CheckResult>& results, std::ostream& os);

}  // namespace tpbc
