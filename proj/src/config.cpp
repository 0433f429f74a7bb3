#include "mf/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mf/csv.hpp"

namespace mf {

std::string to_string(ScenarioMode m) {
    switch (m) {
        case ScenarioMode::simulate_sde: return "simulate-sde";
        case ScenarioMode::solve_bsde: return "solve-bsde";
        case ScenarioMode::optimize: return "optimize";
        case ScenarioMode::mollify_report: return "mollify-report";
        case ScenarioMode::check: return "check";
    }
    return "check";
}

ScenarioMode mode_from_string(const std::string& s) {
    if (s == "simulate-sde") return ScenarioMode::simulate_sde;
    if (s == "solve-bsde") return ScenarioMode::solve_bsde;
    if (s == "optimize") return ScenarioMode::optimize;
    if (s == "mollify-report") return ScenarioMode::mollify_report;
    if (s == "check") return ScenarioMode::check;
    throw ConfigError("unknown mode '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a real number");
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return static_cast<int>(d);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + v + "' as an integer");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + v + "' as an unsigned integer");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

AuxFunction parse_aux(const std::string& key, const std::string& v) {
    if (v == "zero") return AuxFunction::zero;
    if (v == "clamped_linear") return AuxFunction::clamped_linear;
    throw ConfigError("key '" + key + "': expected zero or clamped_linear, got '" + v + "'");
}

std::string aux_to_string(AuxFunction a) {
    return a == AuxFunction::zero ? "zero" : "clamped_linear";
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "grid" && section != "particles" && section != "problem" &&
                section != "solver" && section != "bsde" && section != "mollify" && section != "output")
                throw ConfigError("unknown section '[" + section + "]'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string qual = section.empty() ? key : section + "." + key;

        if (qual == "mode") cfg.mode = mode_from_string(value);
        else if (qual == "grid.horizon_t") cfg.horizon = parse_double(qual, value);
        else if (qual == "grid.steps") cfg.steps = parse_int(qual, value);
        else if (qual == "particles.count") cfg.particles = parse_int(qual, value);
        else if (qual == "particles.seed") cfg.seed = parse_u64(qual, value);
        else if (qual == "particles.antithetic") cfg.antithetic = parse_bool(qual, value);
        else if (qual == "problem.kind") cfg.kind = value;
        else if (qual == "problem.x0") cfg.x0 = parse_double(qual, value);
        else if (qual == "problem.a") cfg.a = parse_double(qual, value);
        else if (qual == "problem.abar") cfg.abar = parse_double(qual, value);
        else if (qual == "problem.c") cfg.c = parse_double(qual, value);
        else if (qual == "problem.q") cfg.q = parse_double(qual, value);
        else if (qual == "problem.qbar") cfg.qbar = parse_double(qual, value);
        else if (qual == "problem.r") cfg.r = parse_double(qual, value);
        else if (qual == "problem.g") cfg.g = parse_double(qual, value);
        else if (qual == "problem.gbar") cfg.gbar = parse_double(qual, value);
        else if (qual == "problem.sigma0") cfg.sigma0 = parse_double(qual, value);
        else if (qual == "problem.u_lo") cfg.u_lo = parse_double(qual, value);
        else if (qual == "problem.u_hi") cfg.u_hi = parse_double(qual, value);
        else if (qual == "problem.u_start") cfg.u_start = parse_double(qual, value);
        else if (qual == "problem.f1") cfg.f1 = parse_aux(qual, value);
        else if (qual == "problem.h_aux") cfg.h_aux = parse_aux(qual, value);
        else if (qual == "problem.b1_aux") cfg.b1_aux = parse_aux(qual, value);
        else if (qual == "problem.sigma1_aux") cfg.sigma1_aux = parse_aux(qual, value);
        else if (qual == "problem.l_aux") cfg.l_aux = parse_aux(qual, value);
        else if (qual == "solver.tol_picard") cfg.tol_picard = parse_double(qual, value);
        else if (qual == "solver.tol_law") cfg.tol_law = parse_double(qual, value);
        else if (qual == "solver.tol_opt") cfg.tol_opt = parse_double(qual, value);
        else if (qual == "solver.max_picard") cfg.max_picard = parse_int(qual, value);
        else if (qual == "solver.max_law") cfg.max_law = parse_int(qual, value);
        else if (qual == "solver.max_opt_iters") cfg.max_opt_iters = parse_int(qual, value);
        else if (qual == "solver.regression_degree") cfg.regression_degree = parse_int(qual, value);
        else if (qual == "solver.clamp_factor") cfg.clamp_factor = parse_double(qual, value);
        else if (qual == "bsde.terminal_kind") cfg.terminal_kind = value;
        else if (qual == "bsde.terminal_value") cfg.terminal_value = parse_double(qual, value);
        else if (qual == "bsde.v0") cfg.v0 = parse_double(qual, value);
        else if (qual == "mollify.quadrature_order") cfg.quadrature_order = parse_int(qual, value);
        else if (qual == "mollify.n_max") cfg.n_max = parse_int(qual, value);
        else if (qual == "output.directory") cfg.out_dir = value;
        else if (qual == "output.write_paths") cfg.write_paths = parse_bool(qual, value);
        else if (qual == "output.path_subsample") cfg.path_subsample = parse_int(qual, value);
        else throw ConfigError("unknown key '" + qual + "'");
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& cfg) {
    std::ostringstream o;
    o << "mode = " << to_string(cfg.mode) << "\n\n";
    o << "[grid]\n";
    o << "horizon_t = " << csv_double(cfg.horizon) << "\n";
    o << "steps = " << cfg.steps << "\n\n";
    o << "[particles]\n";
    o << "count = " << cfg.particles << "\n";
    o << "seed = " << cfg.seed << "\n";
    o << "antithetic = " << (cfg.antithetic ? "true" : "false") << "\n\n";
    o << "[problem]\n";
    o << "kind = " << cfg.kind << "\n";
    o << "x0 = " << csv_double(cfg.x0) << "\n";
    o << "a = " << csv_double(cfg.a) << "\n";
    o << "abar = " << csv_double(cfg.abar) << "\n";
    o << "c = " << csv_double(cfg.c) << "\n";
    o << "q = " << csv_double(cfg.q) << "\n";
    o << "qbar = " << csv_double(cfg.qbar) << "\n";
    o << "r = " << csv_double(cfg.r) << "\n";
    o << "g = " << csv_double(cfg.g) << "\n";
    o << "gbar = " << csv_double(cfg.gbar) << "\n";
    o << "sigma0 = " << csv_double(cfg.sigma0) << "\n";
    o << "u_lo = " << csv_double(cfg.u_lo) << "\n";
    o << "u_hi = " << csv_double(cfg.u_hi) << "\n";
    o << "u_start = " << csv_double(cfg.u_start) << "\n";
    o << "f1 = " << aux_to_string(cfg.f1) << "\n";
    o << "h_aux = " << aux_to_string(cfg.h_aux) << "\n";
    o << "b1_aux = " << aux_to_string(cfg.b1_aux) << "\n";
    o << "sigma1_aux = " << aux_to_string(cfg.sigma1_aux) << "\n";
    o << "l_aux = " << aux_to_string(cfg.l_aux) << "\n\n";
    o << "[solver]\n";
    o << "tol_picard = " << csv_double(cfg.tol_picard) << "\n";
    o << "tol_law = " << csv_double(cfg.tol_law) << "\n";
    o << "tol_opt = " << csv_double(cfg.tol_opt) << "\n";
    o << "max_picard = " << cfg.max_picard << "\n";
    o << "max_law = " << cfg.max_law << "\n";
    o << "max_opt_iters = " << cfg.max_opt_iters << "\n";
    o << "regression_degree = " << cfg.regression_degree << "\n";
    o << "clamp_factor = " << csv_double(cfg.clamp_factor) << "\n\n";
    o << "[bsde]\n";
    o << "terminal_kind = " << cfg.terminal_kind << "\n";
    o << "terminal_value = " << csv_double(cfg.terminal_value) << "\n";
    o << "v0 = " << csv_double(cfg.v0) << "\n\n";
    o << "[mollify]\n";
    o << "quadrature_order = " << cfg.quadrature_order << "\n";
    o << "n_max = " << cfg.n_max << "\n\n";
    o << "[output]\n";
    o << "directory = " << cfg.out_dir << "\n";
    o << "write_paths = " << (cfg.write_paths ? "true" : "false") << "\n";
    o << "path_subsample = " << cfg.path_subsample << "\n";
    return o.str();
}

void validate_config(const ScenarioConfig& cfg) {
    if (!(cfg.horizon > 0.0)) throw ConfigError("grid.horizon_t must be positive");
    if (cfg.steps < 1) throw ConfigError("grid.steps must be >= 1");
    if (cfg.particles < 100) throw ConfigError("particles.count must be >= 100");
    if (!(cfg.tol_picard > 0.0) || !(cfg.tol_law > 0.0) || !(cfg.tol_opt > 0.0))
        throw ConfigError("solver tolerances must be positive");
    if (cfg.max_picard < 1 || cfg.max_law < 1 || cfg.max_opt_iters < 0)
        throw ConfigError("solver iteration caps must be positive");
    if (cfg.regression_degree < 0 || cfg.regression_degree > 7)
        throw ConfigError("solver.regression_degree must be in [0,7]");
    if (!(cfg.clamp_factor > 0.0)) throw ConfigError("solver.clamp_factor must be positive");
    if (cfg.quadrature_order < 8) throw ConfigError("mollify.quadrature_order must be >= 8");
    if (cfg.n_max < 1) throw ConfigError("mollify.n_max must be >= 1");
    if (cfg.path_subsample < 1) throw ConfigError("output.path_subsample must be >= 1");

    const bool driver_kind = cfg.kind == "sqrt_cap" || cfg.kind == "oscillating_g" || cfg.kind == "piecewise_l";
    const bool sde_kind = cfg.kind == "sqrt_cap_sde" || cfg.kind == "oscillating_g_sde" || cfg.kind == "piecewise_l_sde";
    const bool control_kind = cfg.kind == "lq" || cfg.kind == "osc_control";

    switch (cfg.mode) {
        case ScenarioMode::simulate_sde:
            if (!sde_kind) throw ConfigError("mode simulate-sde needs problem.kind in {sqrt_cap_sde, oscillating_g_sde, piecewise_l_sde}");
            break;
        case ScenarioMode::solve_bsde: {
            if (!driver_kind) throw ConfigError("mode solve-bsde needs problem.kind in {sqrt_cap, oscillating_g, piecewise_l}");
            if (cfg.terminal_kind != "constant" && cfg.terminal_kind != "brownian")
                throw ConfigError("bsde.terminal_kind must be constant or brownian");
            const auto drv = example_driver(cfg.kind, {cfg.f1, cfg.h_aux});
            if (drv.monotone) {
                const double dt = cfg.horizon / cfg.steps;
                if (dt * drv.monotone->alpha2 >= 1.0)
                    throw ConfigError("dt*alpha2 must be < 1 for the selected monotone driver");
            }
            break;
        }
        case ScenarioMode::optimize:
            if (!control_kind) throw ConfigError("mode optimize needs problem.kind in {lq, osc_control}");
            if (!(cfg.r > 0.0)) throw ConfigError("problem.r must be positive");
            if (!(cfg.u_lo < cfg.u_hi)) throw ConfigError("problem control box is empty");
            break;
        case ScenarioMode::mollify_report:
            if (!driver_kind) throw ConfigError("mode mollify-report needs problem.kind in {sqrt_cap, oscillating_g, piecewise_l}");
            break;
        case ScenarioMode::check:
            break;
    }
}

}  // namespace mf
