#include <doctest.h>

#include <cmath>

#include "mf/smp.hpp"
#include "support/oracles.hpp"

using namespace mf;

namespace {

EmpiricalMeasure unit_cloud() { return EmpiricalMeasure::from_samples({0.8, 1.0, 1.2}); }
EmpiricalMeasure centered_cloud() { return EmpiricalMeasure::from_samples({-0.2, 0.0, 0.2}); }

}  // namespace

TEST_CASE("hamiltonian values") {
    const auto lq = lq_problem({.q = 0.0, .r = 1.0, .sigma0 = 0.0});
    const double u[1] = {0.4};
    // H = u p + u^2/2 for b = u
    const double h = hamiltonian(lq, 0.0, 0.0, 0.0, centered_cloud(), unit_cloud(), u, 2.0, 0.0);
    CHECK(h == doctest::Approx(0.4 * 2.0 + 0.08));

    // p = q = 0 leaves only f
    const double h0 = hamiltonian(lq, 0.0, 1.0, 0.0, centered_cloud(), unit_cloud(), u, 0.0, 0.0);
    CHECK(h0 == doctest::Approx(lq.f(0.0, 1.0, unit_cloud(), u)));

    const double uz[1] = {0.0};
    const auto zc = EmpiricalMeasure::from_samples({0.0, 0.0});
    CHECK(hamiltonian(lq, 0.0, 0.0, 0.0, zc, zc, uz, 0.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("cost values") {
    const TimeGrid grid(1.0, 64);
    const auto lq = lq_problem({});
    const NoiseBank noise(41, 500, 64, grid.dt());

    // f == 0, h = x^2: deterministic state x0
    auto p = lq_problem({.q = 0.0, .r = 1.0, .g = 2.0});  // h = x^2
    p.f = [](double, double, const EmpiricalMeasure&, std::span<const double>) { return 0.0; };
    auto u0 = ControlGrid::constant(grid, {0.0}, {-2.0}, {2.0});
    const auto X0 = simulate_controlled(p, u0, grid, noise);
    CHECK(cost(p, X0, u0) == doctest::Approx(1.0));

    // the lq benchmark value at u = -1/2
    auto uh = ControlGrid::constant(grid, {-0.5}, {-2.0}, {2.0});
    const auto Xh = simulate_controlled(lq, uh, grid, noise);
    CHECK(cost(lq, Xh, uh) == doctest::Approx(0.25).epsilon(1e-12));

    // mean-field variant with noise: (E[X_T])^2 is exact under antithetic pairing
    const auto lqm = lq_problem({.g = 0.0, .gbar = 1.0, .sigma0 = 1.0});
    const auto Xm = simulate_controlled(lqm, uh, grid, noise);
    CHECK(cost(lqm, Xm, uh) == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("gradient values and finite-difference agreement") {
    const TimeGrid grid(1.0, 50);
    const auto lq = lq_problem({});
    const NoiseBank noise(42, 2000, 50, grid.dt());

    auto u0 = ControlGrid::constant(grid, {0.0}, {-2.0}, {2.0});
    const auto X = simulate_controlled(lq, u0, grid, noise);
    const auto adj = solve_adjoint(lq, X, u0, grid, noise);
    const auto grad = cost_gradient(lq, X, adj, u0);
    for (double gk : grad) CHECK(gk == doctest::Approx(1.0).epsilon(1e-9));  // p = X_T = 1

    // decoupled control: gradient reduces to r u
    const auto dec = lq_problem({.c = 0.0, .r = 2.0});
    auto u3 = ControlGrid::constant(grid, {0.3}, {-2.0}, {2.0});
    const auto Xd = simulate_controlled(dec, u3, grid, noise);
    const auto adjd = solve_adjoint(dec, Xd, u3, grid, noise);
    const auto gd = cost_gradient(dec, Xd, adjd, u3);
    for (double gk : gd) CHECK(gk == doctest::Approx(0.6));

    // common-noise finite difference, sigma0 = 1
    const auto lqn = lq_problem({.sigma0 = 1.0});
    auto uc = ControlGrid::constant(grid, {-0.3}, {-2.0}, {2.0});
    const auto Xn = simulate_controlled(lqn, uc, grid, noise);
    const auto adjn = solve_adjoint(lqn, Xn, uc, grid, noise);
    const auto gn = cost_gradient(lqn, Xn, adjn, uc);
    const double J0 = cost(lqn, Xn, uc);
    for (double theta : {1e-2, 1e-3}) {
        ControlGrid up = uc;
        for (auto& v : up.values) v += theta;
        const auto Xp = simulate_controlled(lqn, up, grid, noise);
        double dir = 0.0;
        for (double gk : gn) dir += gk * grid.dt();
        const double fd = (cost(lqn, Xp, up) - J0) / theta;
        CHECK(std::abs(fd - dir) / std::abs(dir) < 0.05);
    }
}

TEST_CASE("optimize solves the lq benchmark") {
    const TimeGrid grid(1.0, 50);
    const auto lq = lq_problem({});
    auto u0 = ControlGrid::constant(grid, {0.0}, {-2.0}, {2.0});
    OptimizeOptions opts;
    opts.particles = 2000;
    opts.seed = 43;
    const auto rep = optimize(lq, u0, grid, opts);
    CHECK(rep.converged);
    CHECK(std::abs(rep.final_cost - 0.25) < 0.0025);
    for (double v : rep.final_control.values) CHECK(std::abs(v + 0.5) < 0.01);
    CHECK(rep.final_residual < 1e-2);
    CHECK(rep.final_residual <= 3.0 * opts.tol);  // necessary-condition consistency
    CHECK(rep.iterations <= 50);
    CHECK(rep.residual_history.size() == rep.cost_history.size());
}

TEST_CASE("optimize with an already optimal start stops immediately") {
    const TimeGrid grid(1.0, 50);
    const auto lq = lq_problem({});
    auto ustar = ControlGrid::constant(grid, {-0.5}, {-2.0}, {2.0});
    OptimizeOptions opts;
    opts.particles = 2000;
    opts.seed = 44;
    opts.tol = 1e-6;
    const auto rep = optimize(lq, ustar, grid, opts);
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);
}

TEST_CASE("optimize respects an active box constraint") {
    const TimeGrid grid(1.0, 50);
    const auto lq = lq_problem({.u_lo = 0.0, .u_hi = 1.0});
    auto u0 = ControlGrid::constant(grid, {0.5}, {0.0}, {1.0});
    OptimizeOptions opts;
    opts.particles = 2000;
    opts.seed = 45;
    const auto rep = optimize(lq, u0, grid, opts);
    for (double v : rep.final_control.values) CHECK(v == doctest::Approx(0.0));
    CHECK(rep.final_residual <= 1e-2);  // variational inequality holds at the boundary
    CHECK(rep.final_control.inside());
}

TEST_CASE("descent certificate with fixed noise") {
    const TimeGrid grid(1.0, 30);
    const auto lq = lq_problem({.sigma0 = 1.0});
    auto u0 = ControlGrid::constant(grid, {1.0}, {-2.0}, {2.0});
    OptimizeOptions opts;
    opts.particles = 1000;
    opts.seed = 46;
    opts.fresh_noise = false;
    const auto rep = optimize(lq, u0, grid, opts);
    for (std::size_t i = 1; i < rep.cost_history.size(); ++i)
        CHECK(rep.cost_history[i] <= rep.cost_history[i - 1]);
}

TEST_CASE("shifting the running cost by a constant moves J but not the argmin") {
    const TimeGrid grid(1.0, 40);
    const auto base = lq_problem({});
    auto shifted = base;
    shifted.f = [&base](double t, double x, const EmpiricalMeasure& mu, std::span<const double> u) {
        return base.f(t, x, mu, u) + 3.0;
    };
    auto u0 = ControlGrid::constant(grid, {0.4}, {-2.0}, {2.0});
    OptimizeOptions opts;
    opts.particles = 1000;
    opts.seed = 47;
    const auto r1 = optimize(base, u0, grid, opts);
    const auto r2 = optimize(shifted, u0, grid, opts);
    CHECK(r2.final_cost - r1.final_cost == doctest::Approx(3.0).epsilon(1e-9));
    for (std::size_t i = 0; i < r1.final_control.values.size(); ++i)
        CHECK(std::abs(r1.final_control.values[i] - r2.final_control.values[i]) < 1e-6);
}

TEST_CASE("persistent cost increases beyond the noise margin abort") {
    // a purely law-dependent cost has zero per-particle spread, so the
    // noise margin vanishes and fresh-bank jitter registers as genuine
    // increases; with an essentially flat landscape the guard trips
    const TimeGrid grid(1.0, 10);
    const auto lqm = lq_problem({.c = 0.0, .r = 1e-8, .g = 0.0, .gbar = 1.0, .sigma0 = 1.0});
    auto u0 = ControlGrid::constant(grid, {0.5}, {-2.0}, {2.0});
    OptimizeOptions opts;
    opts.particles = 400;
    opts.seed = 1000000;
    opts.antithetic = false;
    opts.tol = 0.0;
    opts.max_iters = 100;
    opts.nonmonotone_limit = 3;
    const auto rep = optimize(lqm, u0, grid, opts);
    CHECK(rep.stop_reason == "non_monotone_cost");
    CHECK_FALSE(rep.converged);
    CHECK(rep.iterations < 100);
}

TEST_CASE("projection idempotence") {
    const TimeGrid grid(1.0, 10);
    auto u = ControlGrid::constant(grid, {0.0}, {-1.0}, {1.0});
    for (int k = 0; k < 10; ++k) u.at(k)[0] = -3.0 + 0.7 * k;
    u.clamp();
    auto twice = u;
    twice.clamp();
    CHECK(u.inside());
    for (std::size_t i = 0; i < u.values.size(); ++i) CHECK(u.values[i] == twice.values[i]);
}

TEST_CASE("smp residual flags a non-optimal control") {
    const TimeGrid grid(1.0, 50);
    const auto lq = lq_problem({});
    const NoiseBank noise(48, 2000, 50, grid.dt());
    auto u0 = ControlGrid::constant(grid, {0.0}, {-2.0}, {2.0});
    const auto X = simulate_controlled(lq, u0, grid, noise);
    const auto adj = solve_adjoint(lq, X, u0, grid, noise);
    const auto rep = smp_residual(lq, X, u0, adj);
    // gradient is 1, the worst vertex is u_lo = -2
    CHECK(rep.residual == doctest::Approx(2.0).epsilon(1e-6));

    // decoupled problem at u = 0: H_u = r*0 = 0
    const auto dec = lq_problem({.c = 0.0});
    const auto Xd = simulate_controlled(dec, u0, grid, noise);
    const auto adjd = solve_adjoint(dec, Xd, u0, grid, noise);
    CHECK(smp_residual(dec, Xd, u0, adjd).residual == doctest::Approx(0.0));
}

TEST_CASE("duality identity") {
    const TimeGrid grid(1.0, 64);
    const NoiseBank noise(49, 2000, 64, grid.dt());

    // trivial direction
    const auto lq = lq_problem({.sigma0 = 1.0});
    auto u = ControlGrid::constant(grid, {-0.3}, {-2.0}, {2.0});
    const auto X = simulate_controlled(lq, u, grid, noise);
    const auto adj = solve_adjoint(lq, X, u, grid, noise);
    auto v0 = ControlGrid::constant(grid, {0.0}, {-9.0}, {9.0});
    const auto d0 = duality_check(lq, X, u, adj, v0, noise);
    CHECK(d0.lhs == doctest::Approx(0.0));
    CHECK(d0.rhs == doctest::Approx(0.0));

    // lq with v = 1: both sides equal T * E[X_T] analytically (sigma0 = 0)
    const auto lq0 = lq_problem({.sigma0 = 0.0});
    const auto X0 = simulate_controlled(lq0, u, grid, noise);
    const auto adj0 = solve_adjoint(lq0, X0, u, grid, noise);
    auto v1 = ControlGrid::constant(grid, {1.0}, {-9.0}, {9.0});
    const auto d1 = duality_check(lq0, X0, u, adj0, v1, noise);
    CHECK(d1.lhs == doctest::Approx(0.7).epsilon(1e-10));  // (x0 + int u) * Z_T, Z_T = 1... times T
    CHECK(d1.abs_gap < 1e-10);

    // a y-dependent f_mu kernel exercises the O(N^2) hat machinery
    auto vc = lq_problem({.sigma0 = 0.5});
    vc.mu_kernels_constant_in_y = false;
    vc.f = [](double, double x, const EmpiricalMeasure& mu, std::span<const double> u_) {
        return 0.5 * (x * x + u_[0] * u_[0]) + 0.3 * x * mu.mean();
    };
    vc.f_x = [](double, double x, const EmpiricalMeasure& mu, std::span<const double>) {
        return x + 0.3 * mu.mean();
    };
    vc.f_u = [](double, double, const EmpiricalMeasure&, std::span<const double> u_, int) { return u_[0]; };
    vc.f_mu = [](double, double x, const EmpiricalMeasure&, std::span<const double>, double) {
        return 0.3 * x;  // d/dmu of 0.3 x E[mu]: constant in y but routed generically
    };
    const auto Xv = simulate_controlled(vc, u, grid, noise);
    const auto adjv = solve_adjoint(vc, Xv, u, grid, noise);
    const auto dv = duality_check(vc, Xv, u, adjv, v1, noise);
    CHECK(dv.abs_gap <= std::max(0.02 * std::abs(dv.rhs), 3.0 * dv.std_error) + 1e-9);
}

TEST_CASE("sufficiency probe") {
    CHECK(sufficiency_probe(lq_problem({.q = 0.5, .gbar = 0.3}), 1000, 50).pass);

    // r < 0 cannot come from lq_problem; build the concave-in-u spec directly
    auto bad = lq_problem({});
    bad.f = [](double, double, const EmpiricalMeasure&, std::span<const double> u) {
        return -0.5 * u[0] * u[0];
    };
    const auto repb = sufficiency_probe(bad, 1000, 51);
    CHECK(repb.violations_hamiltonian > 0);

    // sqrt_cap drift inside H breaks convexity near the kink
    auto sq = lq_problem({});
    sq.b0 = [](double, double x, const EmpiricalMeasure&, std::span<const double> u) {
        return -std::sqrt(std::min(std::max(x, 0.0), 1.0)) + u[0];
    };
    const auto reps = sufficiency_probe(sq, 2000, 52);
    CHECK(reps.violations_hamiltonian > 0);
}
