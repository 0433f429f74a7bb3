#pragma once

#include <vector>

#include "mf/config.hpp"

namespace mf {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Property suite behind the `check` subcommand: metric axioms, centering,
// mollifier mass, derivative consistency, monotonicity probes,
// worker-count determinism, variational linearity, convexity probes.
std::vector<CheckResult> run_check_suite(std::uint64_t seed);

struct ScenarioResult {
    int exit_code = 0;        // 0 ok; 1 check-suite failure
    std::string summary;      // contents of summary.txt
    std::vector<std::string> files_written;
};

// Runs one scenario and writes report.csv / summary.txt (and mode
// specific artifacts) under cfg.out_dir. Throws ConfigError on
// validation problems and SolverError on solver aborts.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

}  // namespace mf
