#pragma once

#include <cstdint>
#include <string>

#include "mf/coeffs.hpp"

namespace mf {

enum class ScenarioMode { simulate_sde, solve_bsde, optimize, mollify_report, check };

std::string to_string(ScenarioMode m);
ScenarioMode mode_from_string(const std::string& s);

// Parsed form of the scenario file: `key = value` lines grouped under
// [section] headers, '#' comments. Unknown sections or keys are errors.
struct ScenarioConfig {
    ScenarioMode mode = ScenarioMode::check;

    // [grid]
    double horizon = 1.0;
    int steps = 50;

    // [particles]
    int particles = 1000;
    std::uint64_t seed = 1;
    bool antithetic = true;

    // [problem]
    std::string kind = "lq";
    double x0 = 1.0;
    double a = 0.0, abar = 0.0, c = 1.0;
    double q = 0.0, qbar = 0.0, r = 1.0;
    double g = 1.0, gbar = 0.0;
    double sigma0 = 0.0;
    double u_lo = -2.0, u_hi = 2.0;
    double u_start = 0.0;
    AuxFunction f1 = AuxFunction::zero;
    AuxFunction h_aux = AuxFunction::zero;
    AuxFunction b1_aux = AuxFunction::zero;
    AuxFunction sigma1_aux = AuxFunction::clamped_linear;
    AuxFunction l_aux = AuxFunction::zero;

    // [solver]
    double tol_picard = 1e-8;
    double tol_law = 1e-6;
    double tol_opt = 1e-3;
    int max_picard = 50;
    int max_law = 25;
    int max_opt_iters = 50;
    int regression_degree = 3;
    double clamp_factor = 10.0;

    // [bsde]
    std::string terminal_kind = "constant";  // constant | brownian
    double terminal_value = 1.0;
    double v0 = 0.0;

    // [mollify]
    int quadrature_order = 32;
    int n_max = 256;

    // [output]
    std::string out_dir = "out";
    bool write_paths = false;
    int path_subsample = 100;

    bool operator==(const ScenarioConfig&) const = default;
};

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

// Canonical form; parse(serialize(cfg)) == cfg.
std::string serialize_config(const ScenarioConfig& cfg);

// Cross-field checks (positive tolerances, N >= 100, dt*alpha2 < 1 for
// monotone drivers, known problem kind for the mode). Throws ConfigError.
void validate_config(const ScenarioConfig& cfg);

}  // namespace mf
