#include "mf/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mf/backward.hpp"
#include "mf/csv.hpp"
#include "mf/forward.hpp"
#include "mf/mollify.hpp"
#include "mf/ref.hpp"
#include "mf/smp.hpp"

namespace mf {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& dir, const std::string& name, std::vector<std::string>& files) {
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + p.string() + "'");
    files.push_back(p.string());
    return out;
}

SdeCoefficientSpec brownian_state() {
    SdeCoefficientSpec s;
    s.name = "brownian";
    s.b = [](double, double, const EmpiricalMeasure&) { return 0.0; };
    s.sigma = [](double, double, const EmpiricalMeasure&) { return 1.0; };
    return s;
}

ControlProblemSpec control_problem_from(const ScenarioConfig& cfg) {
    if (cfg.kind == "lq") {
        LqParams p;
        p.a = cfg.a;
        p.abar = cfg.abar;
        p.c = cfg.c;
        p.q = cfg.q;
        p.qbar = cfg.qbar;
        p.r = cfg.r;
        p.g = cfg.g;
        p.gbar = cfg.gbar;
        p.sigma0 = cfg.sigma0;
        p.horizon = cfg.horizon;
        p.x0 = cfg.x0;
        p.u_lo = cfg.u_lo;
        p.u_hi = cfg.u_hi;
        return lq_problem(p);
    }
    OscControlParams p;
    p.c = cfg.c;
    p.sigma0 = cfg.sigma0;
    p.q = cfg.q;
    p.r = cfg.r;
    p.g = cfg.g;
    p.horizon = cfg.horizon;
    p.x0 = cfg.x0;
    p.u_lo = cfg.u_lo;
    p.u_hi = cfg.u_hi;
    return osc_control_problem(p);
}

ScenarioResult run_simulate_sde(const ScenarioConfig& cfg) {
    ScenarioResult res;
    const TimeGrid grid(cfg.horizon, cfg.steps);
    const NoiseBank noise(cfg.seed, cfg.particles, cfg.steps, grid.dt(), cfg.antithetic);
    const auto spec = example_sde(cfg.kind, {cfg.b1_aux, cfg.sigma1_aux, cfg.h_aux, cfg.l_aux});

    SimOptions opts;
    opts.clamp_factor = cfg.clamp_factor;
    const bool big = static_cast<long long>(cfg.particles) * (cfg.steps + 1) > 20'000'000LL;
    opts.storage = (cfg.write_paths || !big) ? ParticleEnsemble::Storage::full
                                             : ParticleEnsemble::Storage::terminal_only;
    SimDiagnostics diag;
    const auto ens = simulate_mkv(spec, cfg.x0, grid, noise, opts, &diag);

    const fs::path dir(cfg.out_dir);
    {
        auto out = open_out(dir, "report.csv", res.files_written);
        CsvWriter csv(out);
        csv.header("t_seconds,mean_state,var_state");
        for (int k = 0; k <= grid.steps; ++k)
            csv.row(grid.time(k), ens.stats()[static_cast<std::size_t>(k)].mean,
                    ens.stats()[static_cast<std::size_t>(k)].variance);
    }
    if (cfg.write_paths) {
        auto out = open_out(dir, "paths.csv", res.files_written);
        CsvWriter csv(out);
        csv.header("particle_index,t_seconds,state");
        const int stride = std::max(1, cfg.particles / cfg.path_subsample);
        for (int i = 0; i < cfg.particles; i += stride)
            for (int k = 0; k <= grid.steps; ++k) csv.row(i, grid.time(k), ens.column(k)[static_cast<std::size_t>(i)]);
    }
    {
        auto out = open_out(dir, "moments.csv", res.files_written);
        CsvWriter csv(out);
        csv.header("p,sup_moment,finite");
        for (int p : {2, 4, 8}) {
            const auto mr = moment_report(ens, p);
            csv.row(p, mr.sup_moment, mr.finite ? "true" : "false");
        }
    }
    std::ostringstream sum;
    sum << "mode = simulate-sde\nproblem = " << cfg.kind << "\n";
    sum << "final_mean = " << csv_double(ens.stats().back().mean) << "\n";
    sum << "final_var = " << csv_double(ens.stats().back().variance) << "\n";
    sum << "sup_moment_p2 = " << csv_double(moment_report(ens, 2).sup_moment) << "\n";
    sum << "sup_moment_p4 = " << csv_double(moment_report(ens, 4).sup_moment) << "\n";
    sum << "clamped_updates = " << diag.clamped_updates << "\n";
    res.summary = sum.str();
    auto out = open_out(dir, "summary.txt", res.files_written);
    out << res.summary;
    return res;
}

ScenarioResult run_solve_bsde(const ScenarioConfig& cfg) {
    ScenarioResult res;
    const TimeGrid grid(cfg.horizon, cfg.steps);
    const NoiseBank noise(cfg.seed, cfg.particles, cfg.steps, grid.dt(), cfg.antithetic);
    const auto driver = example_driver(cfg.kind, {cfg.f1, cfg.h_aux});

    const auto state = simulate_mkv(brownian_state(), 0.0, grid, noise);
    std::vector<double> terminal(static_cast<std::size_t>(cfg.particles), cfg.terminal_value);
    if (cfg.terminal_kind == "brownian") {
        const auto xT = state.column(grid.steps);
        std::copy(xT.begin(), xT.end(), terminal.begin());
    }

    BsdeOptions opts;
    opts.tol_picard = cfg.tol_picard;
    opts.tol_law = cfg.tol_law;
    opts.max_picard = cfg.max_picard;
    opts.max_law = cfg.max_law;
    opts.regression.degree = cfg.regression_degree;
    opts.v0 = cfg.v0;
    const auto sol = solve_mf_bsde(driver, terminal, grid, noise, state, opts);

    const fs::path dir(cfg.out_dir);
    {
        auto out = open_out(dir, "report.csv", res.files_written);
        CsvWriter csv(out);
        csv.header("t_seconds,mean_y,var_y,mean_z");
        for (const auto& r : sol.column_records()) csv.row(r.t, r.mean_y, r.var_y, r.mean_z);
    }
    {
        auto out = open_out(dir, "bsde_iterates.csv", res.files_written);
        CsvWriter csv(out);
        csv.header("iteration,t_seconds,mean_y,var_y,mean_z");
        for (std::size_t it = 0; it < sol.iteration_columns.size(); ++it)
            for (const auto& r : sol.iteration_columns[it])
                csv.row(static_cast<int>(it + 1), r.t, r.mean_y, r.var_y, r.mean_z);
    }
    {
        auto out = open_out(dir, "picard_residuals.csv", res.files_written);
        CsvWriter csv(out);
        csv.header("iteration,residual_weighted,residual_unweighted,y0");
        for (std::size_t it = 0; it < sol.history.size(); ++it)
            csv.row(static_cast<int>(it + 1), sol.history[it].residual_weighted,
                    sol.history[it].residual_unweighted, sol.history[it].y0);
    }
    std::ostringstream sum;
    sum << "mode = solve-bsde\nproblem = " << cfg.kind << "\n";
    sum << "y0 = " << csv_double(sol.y0()) << "\n";
    sum << "picard_iterations = " << sol.picard_iterations << "\n";
    sum << "residual_weighted = " << csv_double(sol.residual) << "\n";
    sum << "residual_unweighted = " << csv_double(sol.residual_unweighted) << "\n";
    sum << "law_sweeps_total = " << sol.law_sweeps_total << "\n";
    sum << "multiple_roots_flagged = " << (sol.multiple_roots_flagged ? "true" : "false") << "\n";
    res.summary = sum.str();
    auto out = open_out(dir, "summary.txt", res.files_written);
    out << res.summary;
    return res;
}

ScenarioResult run_optimize(const ScenarioConfig& cfg) {
    ScenarioResult res;
    const TimeGrid grid(cfg.horizon, cfg.steps);
    const auto problem = control_problem_from(cfg);

    ControlGrid u0 = ControlGrid::constant(grid, {cfg.u_start}, {cfg.u_lo}, {cfg.u_hi});
    u0.clamp();

    OptimizeOptions opts;
    opts.particles = cfg.particles;
    opts.seed = cfg.seed;
    opts.antithetic = cfg.antithetic;
    opts.max_iters = cfg.max_opt_iters;
    opts.tol = cfg.tol_opt;
    opts.regression.degree = cfg.regression_degree;
    opts.sim.clamp_factor = cfg.clamp_factor;
    const auto rep = optimize(problem, u0, grid, opts);

    const fs::path dir(cfg.out_dir);
    {
        auto out = open_out(dir, "report.csv", res.files_written);
        CsvWriter csv(out);
        csv.header("iteration,J_cost,grad_norm,residual,step_size");
        for (std::size_t i = 0; i < rep.cost_history.size(); ++i)
            csv.row(static_cast<int>(i), rep.cost_history[i], rep.grad_norm_history[i],
                    rep.residual_history[i], i < rep.step_history.size() ? rep.step_history[i] : 0.0);
    }
    {
        auto out = open_out(dir, "control.csv", res.files_written);
        CsvWriter csv(out);
        std::string hdr = "t_seconds";
        for (int j = 0; j < rep.final_control.dim; ++j) hdr += ",u_" + std::to_string(j);
        csv.header(hdr);
        for (int k = 0; k < rep.final_control.steps; ++k) {
            out << csv_double(grid.time(k));
            for (int j = 0; j < rep.final_control.dim; ++j)
                out << "," << csv_double(rep.final_control.at(k)[static_cast<std::size_t>(j)]);
            out << '\n';
        }
    }
    std::ostringstream sum;
    sum << "mode = optimize\nproblem = " << cfg.kind << "\n";
    sum << "J_cost = " << csv_double(rep.final_cost) << "\n";
    sum << "smp_residual = " << csv_double(rep.final_residual) << "\n";
    sum << "iterations = " << rep.iterations << "\n";
    sum << "converged = " << (rep.converged ? "true" : "false") << "\n";
    sum << "stop_reason = " << rep.stop_reason << "\n";
    res.summary = sum.str();
    auto out = open_out(dir, "summary.txt", res.files_written);
    out << res.summary;
    return res;
}

ScenarioResult run_mollify_report(const ScenarioConfig& cfg) {
    ScenarioResult res;
    const auto driver = example_driver(cfg.kind, {cfg.f1, cfg.h_aux});
    const auto kernel = BumpKernel::make(cfg.quadrature_order);

    // fixed probe cloud (centered) and z slice
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uy(-2.0, 2.0);
    std::vector<double> ys(64), zs(64);
    for (auto& v : ys) v = uy(rng);
    for (auto& v : zs) v = 0.5 * uy(rng);
    const auto cc = center(ys);
    const JointEmpiricalMeasure cloud(cc.centered, zs);
    const double z_fixed = 0.3;

    std::vector<std::array<double, 2>> probes;
    for (int i = 0; i <= 6; ++i)
        for (int j = 0; j <= 6; ++j)
            probes.push_back({-2.0 + 4.0 * i / 6.0, -2.0 + 4.0 * j / 6.0});

    const fs::path dir(cfg.out_dir);
    auto out = open_out(dir, "report.csv", res.files_written);
    CsvWriter csv(out);
    csv.header("n,probe_y,probe_mean,g_value,g_n_value,abs_error,lipschitz_estimate");
    double worst_last = 0.0;
    int last_n = 1;
    for (int n = 1; n <= cfg.n_max; n *= 2) {
        const auto md = make_mollified(driver, n, kernel, z_fixed);
        const double lip = lipschitz_probe(md, 0.0, probes, cloud);
        double worst = 0.0;
        for (const auto& pr : probes) {
            const double gv = md.base(0.0, pr[0], pr[1], cloud);
            const double gn = evaluate_mollified(md, 0.0, pr[0], pr[1], cloud);
            worst = std::max(worst, std::abs(gv - gn));
            csv.row(n, pr[0], pr[1], gv, gn, std::abs(gv - gn), lip);
        }
        worst_last = worst;
        last_n = n;
    }
    std::ostringstream sum;
    sum << "mode = mollify-report\nproblem = " << cfg.kind << "\n";
    sum << "n_max = " << last_n << "\n";
    sum << "sup_error_at_n_max = " << csv_double(worst_last) << "\n";
    res.summary = sum.str();
    auto so = open_out(dir, "summary.txt", res.files_written);
    so << res.summary;
    return res;
}

ScenarioResult run_check(const ScenarioConfig& cfg) {
    ScenarioResult res;
    const auto checks = run_check_suite(cfg.seed);
    std::ostringstream sum;
    sum << "mode = check\n";
    int failed = 0;
    for (const auto& c : checks) {
        sum << (c.pass ? "pass" : "FAIL") << " " << c.name;
        if (!c.detail.empty()) sum << " (" << c.detail << ")";
        sum << "\n";
        if (!c.pass) ++failed;
    }
    sum << "failed = " << failed << "\n";
    res.summary = sum.str();
    res.exit_code = failed == 0 ? 0 : 1;
    auto out = open_out(fs::path(cfg.out_dir), "summary.txt", res.files_written);
    out << res.summary;
    return res;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    validate_config(cfg);
    switch (cfg.mode) {
        case ScenarioMode::simulate_sde: return run_simulate_sde(cfg);
        case ScenarioMode::solve_bsde: return run_solve_bsde(cfg);
        case ScenarioMode::optimize: return run_optimize(cfg);
        case ScenarioMode::mollify_report: return run_mollify_report(cfg);
        case ScenarioMode::check: return run_check(cfg);
    }
    throw ConfigError("unhandled mode");
}

namespace {

std::string num(double v) { return csv_double(v); }

}  // namespace

std::vector<CheckResult> run_check_suite(std::uint64_t seed) {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(seed ^ 0xC0FFEEull);
    std::uniform_real_distribution<double> ur(-5.0, 5.0);

    // W2 metric axioms on random equal-count triples
    {
        bool ok = true;
        std::string detail;
        for (int rep = 0; rep < 200 && ok; ++rep) {
            std::vector<double> a(16), b(16), c(16);
            for (int i = 0; i < 16; ++i) {
                a[static_cast<std::size_t>(i)] = ur(rng);
                b[static_cast<std::size_t>(i)] = ur(rng);
                c[static_cast<std::size_t>(i)] = ur(rng);
            }
            const auto ma = EmpiricalMeasure::from_samples(a);
            const auto mb = EmpiricalMeasure::from_samples(b);
            const auto mc = EmpiricalMeasure::from_samples(c);
            const double dab = wasserstein2(ma, mb), dba = wasserstein2(mb, ma);
            const double dac = wasserstein2(ma, mc), dcb = wasserstein2(mc, mb);
            const double daa = wasserstein2(ma, ma);
            if (std::abs(dab - dba) > 1e-12 || daa > 1e-12 || dab > dac + dcb + 1e-12) {
                ok = false;
                detail = "triple " + std::to_string(rep);
            }
            // shift equivariance
            std::vector<double> as(a), bs(b);
            for (auto& v : as) v += 0.7;
            for (auto& v : bs) v += 0.7;
            const double dshift = wasserstein2(EmpiricalMeasure::from_samples(as), EmpiricalMeasure::from_samples(bs));
            if (std::abs(dshift - dab) > 1e-12) {
                ok = false;
                detail = "shift equivariance";
            }
        }
        out.push_back({"w2_metric_axioms", ok, detail});
    }

    // centering
    {
        bool ok = true;
        std::vector<double> v(33);
        for (auto& x : v) x = ur(rng);
        const auto c1 = center(v);
        const auto c2 = center(c1.centered);
        double s = 0.0;
        for (double x : c1.centered) s += x;
        ok = std::abs(c2.mean) < 1e-14 && std::abs(s) < 1e-12 * v.size();
        out.push_back({"center_idempotent", ok, "residual mean " + num(c2.mean)});
    }

    // mollifier mass and constant convolution
    {
        const auto k = BumpKernel::make(32);
        const double mass = k.integral();
        DriverSpec constant;
        constant.name = "constant";
        constant.f = [](double, double, double, const JointEmpiricalMeasure&) { return 3.25; };
        constant.f_tilde = [](double, double, double, double, const JointEmpiricalMeasure&) { return 3.25; };
        const auto md = make_mollified(constant, 8, k, 0.0);
        const JointEmpiricalMeasure cloud({-0.5, 0.5}, {0.0, 0.0});
        const double v = evaluate_mollified(md, 0.0, 0.3, -0.2, cloud);
        const bool ok = std::abs(mass - 1.0) < 1e-12 && std::abs(v - 3.25) < 1e-12;
        out.push_back({"mollifier_unit_mass", ok, "mass " + num(mass) + ", const conv " + num(v)});
    }

    // derivative consistency of the benchmark problems
    {
        const auto lq = lq_problem({});
        const auto r1 = verify_derivatives(lq, 40, seed + 1);
        const auto osc = osc_control_problem({});
        const auto r2 = verify_derivatives(osc, 40, seed + 2);
        out.push_back({"derivative_consistency", r1.pass && r2.pass,
                       "max rel err " + num(std::max(r1.max_rel_error, r2.max_rel_error))});
    }

    // monotonicity probes
    {
        const double m_sqrt = driver_monotonicity_probe(example_driver("sqrt_cap"), 2000, seed + 3);
        const double m_l = driver_monotonicity_probe(example_driver("piecewise_l"), 2000, seed + 4);
        const bool ok = m_sqrt <= 1e-12 && m_l <= 1.0 + 1e-9;
        out.push_back({"driver_monotonicity", ok, "sqrt_cap " + num(m_sqrt) + ", piecewise_l " + num(m_l)});
    }

    // oscillating g: continuity at breakpoints, envelope, bound
    {
        bool ok = true;
        std::string detail;
        for (int k = 1; k <= 50 && ok; ++k) {
            const double t = g_oscillating_breakpoint(k);
            const double gap = std::abs(g_oscillating(t - 1e-9) - g_oscillating(t + 1e-9));
            if (gap > 1e-6) {
                ok = false;
                detail = "jump " + num(gap) + " at breakpoint " + std::to_string(k);
            }
        }
        // the paper's lower envelope -(y/pi + 1) is informative from -pi up;
        // left of that g' vanishes identically
        for (double y = -10.0; y <= 200.0 && ok; y += 0.01) {
            const double g = g_oscillating(y);
            const double gp = g_oscillating_prime(y);
            const bool env_ok = y < -M_PI ? gp == 0.0 : gp >= -(y / M_PI + 1.0) - 1e-9;
            if (std::abs(g) > 1.0 + 1e-12 || gp > 1.0 + 1e-12 || !env_ok) {
                ok = false;
                detail = "envelope violated at y " + num(y);
            }
        }
        out.push_back({"oscillating_g_envelope", ok, detail});
    }

    // worker-count determinism of a small simulation
    {
        const int saved = max_workers();
        const TimeGrid grid(1.0, 16);
        const NoiseBank noise(seed + 5, 256, 16, grid.dt());
        const auto spec = example_sde("piecewise_l_sde");
        set_max_workers(1);
        const auto e1 = simulate_mkv(spec, -1.0, grid, noise);
        set_max_workers(2);
        const auto e2 = simulate_mkv(spec, -1.0, grid, noise);
        set_max_workers(saved);
        bool ok = true;
        for (int k = 0; k <= grid.steps && ok; ++k) {
            auto a = e1.column(k), b = e2.column(k);
            for (std::size_t i = 0; i < a.size(); ++i)
                if (a[i] != b[i]) {
                    ok = false;
                    break;
                }
        }
        const double colmean = noise.column_mean(3);
        ok = ok && colmean == 0.0;  // antithetic pairing
        out.push_back({"worker_count_determinism", ok, "antithetic column mean " + num(colmean)});
    }

    // variational linearity (exact factor-two scaling)
    {
        const TimeGrid grid(1.0, 20);
        const auto lq = lq_problem({});
        const NoiseBank noise(seed + 6, 200, 20, grid.dt());
        auto u = ControlGrid::constant(grid, {0.0}, {-2.0}, {2.0});
        auto v1 = ControlGrid::constant(grid, {1.0}, {-8.0}, {8.0});
        auto v2 = ControlGrid::constant(grid, {2.0}, {-8.0}, {8.0});
        const auto X = simulate_controlled(lq, u, grid, noise);
        const auto Z1 = simulate_variational(lq, u, v1, X, noise);
        const auto Z2 = simulate_variational(lq, u, v2, X, noise);
        bool ok = true;
        for (int k = 0; k <= grid.steps && ok; ++k) {
            auto a = Z1.column(k), b = Z2.column(k);
            for (std::size_t i = 0; i < a.size(); ++i)
                if (2.0 * a[i] != b[i]) {
                    ok = false;
                    break;
                }
        }
        out.push_back({"variational_linearity", ok, ""});
    }

    // convexity probe of the LQ benchmark
    {
        const auto rep = sufficiency_probe(lq_problem({}), 1000, seed + 7);
        out.push_back({"lq_convexity", rep.pass, "violations " +
                       std::to_string(rep.violations_hamiltonian + rep.violations_terminal)});
    }

    return out;
}

}  // namespace mf
