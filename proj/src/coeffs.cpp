#include "mf/coeffs.hpp"

#include <cmath>
#include <random>

namespace mf {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp_unit(double u) { return std::min(1.0, std::max(-1.0, u)); }

// sqrt of y^+ capped at 1
double sqrt_cap(double y) { return std::sqrt(std::min(std::max(y, 0.0), 1.0)); }

double aux2(AuxFunction kind, double a, double b) {
    return kind == AuxFunction::zero ? 0.0 : clamp_unit(a) + clamp_unit(b);
}

}  // namespace

double g_oscillating(double y) {
    if (y < 0.0) return 1.0;
    double t_even = 0.0;  // t_{2l}
    for (int l = 0;; ++l) {
        const double t_odd = t_even + kPi / (l + 1);
        if (y < t_odd) return std::cos((l + 1) * (y - t_even));
        const double t_next = t_odd + kPi;
        if (y < t_next) return std::cos(y - t_odd + kPi);
        t_even = t_next;
    }
}

double g_oscillating_prime(double y) {
    if (y < 0.0) return 0.0;
    double t_even = 0.0;
    for (int l = 0;; ++l) {
        const double t_odd = t_even + kPi / (l + 1);
        if (y < t_odd) return -(l + 1) * std::sin((l + 1) * (y - t_even));
        const double t_next = t_odd + kPi;
        if (y < t_next) return -std::sin(y - t_odd + kPi);
        t_even = t_next;
    }
}

double g_oscillating_breakpoint(int k) {
    if (k < 0) throw std::invalid_argument("g_oscillating_breakpoint: negative index");
    double t = 0.0;
    for (int i = 0; i < k; ++i) {
        const int l = i / 2;
        t += (i % 2 == 0) ? kPi / (l + 1) : kPi;
    }
    return t;
}

double l_piecewise(double y) {
    if (y <= 0.0) return 0.0;
    if (y <= 1.0) return -std::sqrt(y);
    return -std::exp(1.0 - y);
}

DriverSpec example_driver(std::string_view name, const DriverOptions& opts) {
    DriverSpec d;
    d.name = std::string(name);
    const AuxFunction f1k = opts.f1;
    const AuxFunction hk = opts.h_aux;

    auto f1 = [f1k](double z, double w) { return aux2(f1k, z, w); };
    auto haux = [hk](double y, double z) { return aux2(hk, y, z); };

    if (name == "sqrt_cap") {
        d.f = [f1, haux, f1k](double, double y, double z, const JointEmpiricalMeasure& J) {
            const double w = (f1k == AuxFunction::zero) ? 0.0 : J.mean_of(haux);
            return -sqrt_cap(y) - sqrt_cap(J.mean_first()) + f1(z, w);
        };
        d.f_tilde = [f1, haux, f1k](double, double y, double z, double m, const JointEmpiricalMeasure& J0) {
            const double w = (f1k == AuxFunction::zero) ? 0.0 : J0.mean_of_shifted(m, haux);
            return -sqrt_cap(y) - sqrt_cap(m) + f1(z, w);
        };
        d.lipschitz_in_y = false;
        d.monotone = MonotoneConstants{f1k == AuxFunction::zero ? 0.0 : 2.0, 0.0, 0.0, 0.0, 2.0};
    } else if (name == "oscillating_g") {
        d.f = [f1, haux, f1k](double, double y, double z, const JointEmpiricalMeasure& J) {
            const double w = (f1k == AuxFunction::zero) ? 0.0 : J.mean_of(haux);
            return g_oscillating(y) + g_oscillating(J.mean_first()) + f1(z, w);
        };
        d.f_tilde = [f1, haux, f1k](double, double y, double z, double m, const JointEmpiricalMeasure& J0) {
            const double w = (f1k == AuxFunction::zero) ? 0.0 : J0.mean_of_shifted(m, haux);
            return g_oscillating(y) + g_oscillating(m) + f1(z, w);
        };
        d.lipschitz_in_y = false;  // g' is unbounded below
        d.monotone = MonotoneConstants{f1k == AuxFunction::zero ? 0.0 : 2.0, 1.0, 1.0, 2.0, 4.0};
    } else if (name == "piecewise_l") {
        d.f = [](double, double y, double z, const JointEmpiricalMeasure& J) {
            return l_piecewise(y) + l_piecewise(J.mean_first()) + z + J.mean_second();
        };
        d.f_tilde = [](double, double y, double z, double m, const JointEmpiricalMeasure& J0) {
            return l_piecewise(y) + l_piecewise(m) + z + J0.mean_second();
        };
        d.lipschitz_in_y = false;
        d.monotone = MonotoneConstants{1.0, 1.0, 1.0, 0.0, 2.0};
    } else {
        throw std::invalid_argument("example_driver: unknown name '" + std::string(name) + "'");
    }
    return d;
}

SdeCoefficientSpec example_sde(std::string_view name, const SdeOptions& opts) {
    SdeCoefficientSpec s;
    s.name = std::string(name);
    const AuxFunction b1k = opts.b1, s1k = opts.sigma1, hk = opts.h_aux, lk = opts.l_aux;

    auto mean_h = [hk](const EmpiricalMeasure& law) {
        return hk == AuxFunction::zero ? 0.0 : law.mean_of(clamp_unit);
    };
    auto mean_l = [lk](const EmpiricalMeasure& law) {
        return lk == AuxFunction::zero ? 0.0 : law.mean_of(clamp_unit);
    };

    if (name == "sqrt_cap_sde") {
        s.b = [b1k, mean_h](double, double x, const EmpiricalMeasure& law) {
            return -sqrt_cap(x) - sqrt_cap(law.mean()) + aux2(b1k, x, mean_h(law));
        };
        s.sigma = [s1k, mean_l](double, double x, const EmpiricalMeasure& law) {
            return aux2(s1k, x, mean_l(law));
        };
        s.constants = SdeConstants{3.0, 1.0, 1.0, 0.0, 0.0};
    } else if (name == "oscillating_g_sde") {
        s.b = [b1k, mean_h](double, double x, const EmpiricalMeasure& law) {
            return g_oscillating(x) + g_oscillating(law.mean()) + aux2(b1k, x, mean_h(law));
        };
        s.sigma = [s1k, mean_l](double, double x, const EmpiricalMeasure& law) {
            return aux2(s1k, x, mean_l(law));
        };
        s.constants = SdeConstants{4.0, 1.0, 1.0, 1.0, 1.0};
    } else if (name == "piecewise_l_sde") {
        s.b = [](double, double x, const EmpiricalMeasure& law) {
            return l_piecewise(x) + l_piecewise(law.mean());
        };
        s.sigma = [](double, double x, const EmpiricalMeasure& law) { return x + law.mean(); };
        s.constants = SdeConstants{3.0, 2.0, 1.0, 1.0, 1.0};
    } else {
        throw std::invalid_argument("example_sde: unknown name '" + std::string(name) + "'");
    }
    return s;
}

ControlProblemSpec lq_problem(const LqParams& p) {
    if (!(p.r > 0.0)) throw std::invalid_argument("lq_problem: r must be positive");
    if (p.q < 0.0 || p.qbar < 0.0 || p.g < 0.0 || p.gbar < 0.0)
        throw std::invalid_argument("lq_problem: q, qbar, g, gbar must be non-negative");
    if (!(p.horizon > 0.0)) throw std::invalid_argument("lq_problem: horizon must be positive");
    if (!(p.u_lo < p.u_hi)) throw std::invalid_argument("lq_problem: empty control box");

    ControlProblemSpec s;
    s.control_dim = 1;
    s.u_lo = {p.u_lo};
    s.u_hi = {p.u_hi};
    s.horizon = p.horizon;
    s.x0 = p.x0;
    s.name = "lq";
    s.mu_kernels_constant_in_y = true;

    const double a = p.a, abar = p.abar, c = p.c;
    const double q = p.q, qbar = p.qbar, r = p.r;
    const double g = p.g, gbar = p.gbar, sigma0 = p.sigma0;

    s.b0 = [a, c](double, double x, const EmpiricalMeasure&, std::span<const double> u) {
        return a * x + c * u[0];
    };
    s.b1 = [abar](double, double m, const EmpiricalMeasure&) { return abar * m; };
    s.sigma = [sigma0](double, double, const EmpiricalMeasure&, std::span<const double>) { return sigma0; };
    s.f = [q, qbar, r](double, double x, const EmpiricalMeasure& mu, std::span<const double> u) {
        const double m = mu.mean();
        return 0.5 * (q * x * x + qbar * m * m + r * u[0] * u[0]);
    };
    s.h = [g, gbar](double x, const EmpiricalMeasure& mu) {
        const double m = mu.mean();
        return 0.5 * (g * x * x + gbar * m * m);
    };

    s.b0_x = [a](double, double, const EmpiricalMeasure&, std::span<const double>) { return a; };
    s.b0_u = [c](double, double, const EmpiricalMeasure&, std::span<const double>, int) { return c; };
    s.b1_m = [abar](double, double, const EmpiricalMeasure&) { return abar; };
    s.sigma_x = [](double, double, const EmpiricalMeasure&, std::span<const double>) { return 0.0; };
    s.sigma_u = [](double, double, const EmpiricalMeasure&, std::span<const double>, int) { return 0.0; };
    s.f_x = [q](double, double x, const EmpiricalMeasure&, std::span<const double>) { return q * x; };
    s.f_u = [r](double, double, const EmpiricalMeasure&, std::span<const double> u, int) { return r * u[0]; };
    s.h_x = [g](double x, const EmpiricalMeasure&) { return g * x; };

    s.b0_mu = [](double, double, const EmpiricalMeasure&, std::span<const double>, double) { return 0.0; };
    s.b1_mu = [](double, double, const EmpiricalMeasure&, double) { return 0.0; };
    s.sigma_mu = [](double, double, const EmpiricalMeasure&, std::span<const double>, double) { return 0.0; };
    s.f_mu = [qbar](double, double, const EmpiricalMeasure& mu, std::span<const double>, double) {
        return qbar * mu.mean();
    };
    s.h_mu = [gbar](double, const EmpiricalMeasure& mu, double) { return gbar * mu.mean(); };
    return s;
}

ControlProblemSpec osc_control_problem(const OscControlParams& p) {
    if (!(p.r > 0.0)) throw std::invalid_argument("osc_control_problem: r must be positive");
    if (!(p.horizon > 0.0)) throw std::invalid_argument("osc_control_problem: horizon must be positive");

    ControlProblemSpec s;
    s.control_dim = 1;
    s.u_lo = {p.u_lo};
    s.u_hi = {p.u_hi};
    s.horizon = p.horizon;
    s.x0 = p.x0;
    s.name = "osc_control";
    s.mu_kernels_constant_in_y = true;

    const double c = p.c, sigma0 = p.sigma0, q = p.q, r = p.r, g = p.g;

    s.b0 = [c](double, double x, const EmpiricalMeasure&, std::span<const double> u) {
        return g_oscillating(x) + c * u[0];
    };
    s.b1 = [](double, double m, const EmpiricalMeasure&) { return g_oscillating(m); };
    s.sigma = [sigma0](double, double, const EmpiricalMeasure&, std::span<const double>) { return sigma0; };
    s.f = [q, r](double, double x, const EmpiricalMeasure&, std::span<const double> u) {
        return 0.5 * (q * x * x + r * u[0] * u[0]);
    };
    s.h = [g](double x, const EmpiricalMeasure&) { return 0.5 * g * x * x; };

    s.b0_x = [](double, double x, const EmpiricalMeasure&, std::span<const double>) {
        return g_oscillating_prime(x);
    };
    s.b0_u = [c](double, double, const EmpiricalMeasure&, std::span<const double>, int) { return c; };
    s.b1_m = [](double, double m, const EmpiricalMeasure&) { return g_oscillating_prime(m); };
    s.sigma_x = [](double, double, const EmpiricalMeasure&, std::span<const double>) { return 0.0; };
    s.sigma_u = [](double, double, const EmpiricalMeasure&, std::span<const double>, int) { return 0.0; };
    s.f_x = [q](double, double x, const EmpiricalMeasure&, std::span<const double>) { return q * x; };
    s.f_u = [r](double, double, const EmpiricalMeasure&, std::span<const double> u, int) { return r * u[0]; };
    s.h_x = [g](double x, const EmpiricalMeasure&) { return g * x; };

    s.b0_mu = [](double, double, const EmpiricalMeasure&, std::span<const double>, double) { return 0.0; };
    s.b1_mu = [](double, double, const EmpiricalMeasure&, double) { return 0.0; };
    s.sigma_mu = [](double, double, const EmpiricalMeasure&, std::span<const double>, double) { return 0.0; };
    s.f_mu = [](double, double, const EmpiricalMeasure&, std::span<const double>, double) { return 0.0; };
    s.h_mu = [](double, const EmpiricalMeasure&, double) { return 0.0; };
    return s;
}

namespace {

struct ProbeState {
    double t, x, m;
    std::vector<double> u;
    EmpiricalMeasure full;
    EmpiricalMeasure centered;
};

ProbeState make_probe(const ControlProblemSpec& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    std::uniform_real_distribution<double> ut(0.0, p.horizon);
    std::vector<double> cloud(32);
    for (auto& v : cloud) v = ux(rng);
    auto full = EmpiricalMeasure::from_samples(cloud);
    auto cc = center(full.sorted());
    ProbeState ps{ut(rng), ux(rng), 0.75 * ux(rng), {}, std::move(full),
                  EmpiricalMeasure::from_sorted(std::move(cc.centered))};
    ps.u.resize(p.control_dim);
    for (int j = 0; j < p.control_dim; ++j) {
        const double lo = std::max(p.u_lo[j], -2.0), hi = std::min(p.u_hi[j], 2.0);
        std::uniform_real_distribution<double> uu(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo));
        ps.u[j] = uu(rng);
    }
    return ps;
}

EmpiricalMeasure shift_atom(const EmpiricalMeasure& mu, std::size_t idx, double eps) {
    std::vector<double> v(mu.sorted().begin(), mu.sorted().end());
    v[idx] += eps;
    return EmpiricalMeasure::from_samples(std::move(v));
}

}  // namespace

DerivativeCheckReport verify_derivatives(const ControlProblemSpec& p, int points, std::uint64_t seed,
                                         double rel_tol, double step) {
    if (!p.b0 || !p.b1 || !p.sigma || !p.f || !p.h || !p.b0_x || !p.b0_u || !p.b1_m || !p.sigma_x ||
        !p.sigma_u || !p.f_x || !p.f_u || !p.h_x || !p.b0_mu || !p.b1_mu || !p.sigma_mu || !p.f_mu ||
        !p.h_mu)
        throw std::invalid_argument("verify_derivatives: problem spec has missing handles");

    std::mt19937_64 rng(seed);
    DerivativeCheckReport rep;
    auto record = [&](const char* handle, double analytic, double fd) {
        const double err = std::abs(fd - analytic) / std::max(1.0, std::abs(analytic));
        if (err > rep.max_rel_error) {
            rep.max_rel_error = err;
            rep.worst_handle = handle;
        }
    };

    for (int it = 0; it < points; ++it) {
        ProbeState ps = make_probe(p, rng);
        const double t = ps.t, x = ps.x, m = ps.m;
        const auto& mu = ps.full;
        const auto& mu0 = ps.centered;
        std::span<const double> u(ps.u);
        const double hx = step * std::max(1.0, std::abs(x));

        record("b0_x", p.b0_x(t, x, mu0, u),
               (p.b0(t, x + hx, mu0, u) - p.b0(t, x - hx, mu0, u)) / (2 * hx));
        record("b1_m", p.b1_m(t, m, mu0), (p.b1(t, m + hx, mu0) - p.b1(t, m - hx, mu0)) / (2 * hx));
        record("sigma_x", p.sigma_x(t, x, mu, u),
               (p.sigma(t, x + hx, mu, u) - p.sigma(t, x - hx, mu, u)) / (2 * hx));
        record("f_x", p.f_x(t, x, mu, u), (p.f(t, x + hx, mu, u) - p.f(t, x - hx, mu, u)) / (2 * hx));
        record("h_x", p.h_x(x, mu), (p.h(x + hx, mu) - p.h(x - hx, mu)) / (2 * hx));

        for (int j = 0; j < p.control_dim; ++j) {
            std::vector<double> up(ps.u), um(ps.u);
            const double hu = step * std::max(1.0, std::abs(ps.u[j]));
            up[j] += hu;
            um[j] -= hu;
            record("b0_u", p.b0_u(t, x, mu0, u, j), (p.b0(t, x, mu0, up) - p.b0(t, x, mu0, um)) / (2 * hu));
            record("sigma_u", p.sigma_u(t, x, mu, u, j),
                   (p.sigma(t, x, mu, up) - p.sigma(t, x, mu, um)) / (2 * hu));
            record("f_u", p.f_u(t, x, mu, u, j), (p.f(t, x, mu, up) - p.f(t, x, mu, um)) / (2 * hu));
        }

        // Lions kernels: shift one atom, scale by N.
        const double n = static_cast<double>(mu.size());
        const double he = step;
        for (std::size_t idx : {std::size_t(0), mu.size() / 2, mu.size() - 1}) {
            const double y_full = mu.sorted()[idx];
            const double y_cent = mu0.sorted()[idx];
            auto mu_p = shift_atom(mu, idx, he), mu_m = shift_atom(mu, idx, -he);
            auto mu0_p = shift_atom(mu0, idx, he), mu0_m = shift_atom(mu0, idx, -he);

            record("b0_mu", p.b0_mu(t, x, mu0, u, y_cent),
                   n * (p.b0(t, x, mu0_p, u) - p.b0(t, x, mu0_m, u)) / (2 * he));
            record("b1_mu", p.b1_mu(t, m, mu0, y_cent),
                   n * (p.b1(t, m, mu0_p) - p.b1(t, m, mu0_m)) / (2 * he));
            record("sigma_mu", p.sigma_mu(t, x, mu, u, y_full),
                   n * (p.sigma(t, x, mu_p, u) - p.sigma(t, x, mu_m, u)) / (2 * he));
            record("f_mu", p.f_mu(t, x, mu, u, y_full),
                   n * (p.f(t, x, mu_p, u) - p.f(t, x, mu_m, u)) / (2 * he));
            record("h_mu", p.h_mu(x, mu, y_full), n * (p.h(x, mu_p) - p.h(x, mu_m)) / (2 * he));
        }
    }
    rep.pass = rep.max_rel_error <= rel_tol;
    return rep;
}

SdeProbeReport sde_spot_check(const SdeCoefficientSpec& s, int probes, std::uint64_t seed) {
    if (!s.b || !s.sigma) throw std::invalid_argument("sde_spot_check: missing handles");
    if (!s.constants) throw std::invalid_argument("sde_spot_check: spec declares no constants");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-4.0, 4.0);
    std::uniform_real_distribution<double> ut(0.0, 1.0);

    SdeProbeReport rep;
    for (int it = 0; it < probes; ++it) {
        std::vector<double> c1(24), c2(24);
        for (auto& v : c1) v = ux(rng);
        for (auto& v : c2) v = ux(rng);
        const auto mu1 = EmpiricalMeasure::from_samples(c1);
        const auto mu2 = EmpiricalMeasure::from_samples(c2);
        const double t = ut(rng);
        const double x1 = ux(rng), x2 = ux(rng);

        const double denom_b =
            s.constants->growth_K * (1.0 + std::abs(x1) + std::sqrt(mu1.second_moment()));
        rep.growth_ratio = std::max(rep.growth_ratio, std::abs(s.b(t, x1, mu1)) / denom_b);

        const double dist = std::abs(x1 - x2) + wasserstein2(mu1, mu2);
        if (dist > 1e-9) {
            const double dsig = std::abs(s.sigma(t, x1, mu1) - s.sigma(t, x2, mu2));
            rep.sigma_lipschitz_ratio =
                std::max(rep.sigma_lipschitz_ratio, dsig / (s.constants->sigma_lipschitz * dist));
        }
    }
    rep.pass = rep.growth_ratio <= 1.0 + 1e-9 && rep.sigma_lipschitz_ratio <= 1.0 + 1e-9;
    return rep;
}

ControlProbeReport control_problem_probe(const ControlProblemSpec& p, int probes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ControlProbeReport rep;
    for (int it = 0; it < probes; ++it) {
        ProbeState ps = make_probe(p, rng);
        const double t = ps.t, x = ps.x, m = ps.m;
        std::span<const double> u(ps.u);
        const auto& mu = ps.full;
        const auto& mu0 = ps.centered;
        const double y = mu.sorted()[static_cast<std::size_t>(it) % mu.size()];
        const double y0 = mu0.sorted()[static_cast<std::size_t>(it) % mu0.size()];

        rep.sup_b0_x = std::max(rep.sup_b0_x, p.b0_x(t, x, mu0, u));
        rep.sup_b1_m = std::max(rep.sup_b1_m, p.b1_m(t, m, mu0));
        rep.sup_abs_b0_mu = std::max(rep.sup_abs_b0_mu, std::abs(p.b0_mu(t, x, mu0, u, y0)));
        rep.sup_abs_b1_mu = std::max(rep.sup_abs_b1_mu, std::abs(p.b1_mu(t, m, mu0, y0)));
        rep.sup_abs_sigma_x = std::max(rep.sup_abs_sigma_x, std::abs(p.sigma_x(t, x, mu, u)));
        rep.sup_abs_sigma_mu = std::max(rep.sup_abs_sigma_mu, std::abs(p.sigma_mu(t, x, mu, u, y)));
        for (int j = 0; j < p.control_dim; ++j) {
            rep.sup_abs_b0_u = std::max(rep.sup_abs_b0_u, std::abs(p.b0_u(t, x, mu0, u, j)));
            rep.sup_abs_sigma_u = std::max(rep.sup_abs_sigma_u, std::abs(p.sigma_u(t, x, mu, u, j)));
            rep.sup_abs_f_u = std::max(rep.sup_abs_f_u, std::abs(p.f_u(t, x, mu, u, j)));
        }
        const double env = std::pow(1.0 + std::abs(x) + std::abs(m), 4);
        const double growth = std::max(std::max(std::abs(p.f_x(t, x, mu, u)), std::abs(p.h_x(x, mu))),
                                       std::max(std::abs(p.f_mu(t, x, mu, u, y)), std::abs(p.h_mu(x, mu, y))));
        rep.polynomial_growth_ratio = std::max(rep.polynomial_growth_ratio, growth / env);
    }
    rep.all_finite = std::isfinite(rep.sup_b0_x) && std::isfinite(rep.sup_b1_m) &&
                     std::isfinite(rep.sup_abs_b0_u + rep.sup_abs_b0_mu + rep.sup_abs_b1_mu +
                                   rep.sup_abs_sigma_x + rep.sup_abs_sigma_u + rep.sup_abs_sigma_mu +
                                   rep.sup_abs_f_u + rep.polynomial_growth_ratio);
    return rep;
}

double driver_monotonicity_probe(const DriverSpec& d, int pairs, std::uint64_t seed) {
    if (!d.f) throw std::invalid_argument("driver_monotonicity_probe: missing driver handle");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uy(-3.0, 3.0);
    std::uniform_real_distribution<double> uz(-1.0, 1.0);
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    std::vector<double> ys(64), zs(64);
    for (auto& v : ys) v = uy(rng);
    for (auto& v : zs) v = uz(rng);
    const JointEmpiricalMeasure cloud(ys, zs);

    double worst = -1e300;
    for (int it = 0; it < pairs; ++it) {
        const double t = ut(rng), z = uz(rng);
        const double y1 = uy(rng), y2 = uy(rng);
        if (std::abs(y1 - y2) < 1e-9) continue;
        const double df = d.f(t, y1, z, cloud) - d.f(t, y2, z, cloud);
        worst = std::max(worst, df * (y1 - y2) / ((y1 - y2) * (y1 - y2)));
    }
    return worst;
}

}  // namespace mf
