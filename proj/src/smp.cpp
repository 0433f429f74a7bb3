#include "mf/smp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mf {

namespace {

struct ColumnLaws {
    EmpiricalMeasure full;
    EmpiricalMeasure centered;
};

ColumnLaws column_laws(std::span<const double> col) {
    std::vector<double> buf(col.begin(), col.end());
    std::sort(buf.begin(), buf.end());
    auto full = EmpiricalMeasure::from_sorted(std::move(buf));
    std::vector<double> cen(full.sorted().begin(), full.sorted().end());
    const double m = full.mean();
    for (auto& v : cen) v -= m;
    auto centered = EmpiricalMeasure::from_sorted(std::move(cen));
    return {std::move(full), std::move(centered)};
}

}  // namespace

double hamiltonian(const ControlProblemSpec& problem, double t, double x, double mean,
                   const EmpiricalMeasure& centered, const EmpiricalMeasure& full,
                   std::span<const double> u, double p, double q) {
    const double drift = problem.b0(t, x, centered, u) + problem.b1(t, mean, centered);
    return drift * p + problem.sigma(t, x, full, u) * q + problem.f(t, x, full, u);
}

CostEstimate cost_with_error(const ControlProblemSpec& problem, const ParticleEnsemble& ensemble,
                             const ControlGrid& u) {
    if (!ensemble.stores_full()) throw std::invalid_argument("cost: ensemble must store full paths");
    const TimeGrid& grid = ensemble.grid();
    if (u.steps != grid.steps) throw std::invalid_argument("cost: control grid mismatch");
    const int n = ensemble.particles();
    const int m = grid.steps;
    const double dt = grid.dt();

    std::vector<double> per_particle(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < m; ++k) {
        const double t = grid.time(k);
        const auto uk = u.at(k);
        const auto xcol = ensemble.column(k);
        ColumnLaws laws = column_laws(xcol);
        par_for(n, [&](std::int64_t i) {
            per_particle[static_cast<std::size_t>(i)] +=
                problem.f(t, xcol[static_cast<std::size_t>(i)], laws.full, uk) * dt;
        });
    }
    {
        const auto xT = ensemble.column(m);
        ColumnLaws laws = column_laws(xT);
        par_for(n, [&](std::int64_t i) {
            per_particle[static_cast<std::size_t>(i)] += problem.h(xT[static_cast<std::size_t>(i)], laws.full);
        });
    }
    double acc[2] = {0.0, 0.0};
    det_accumulate(n, acc, [&](std::int64_t i, std::span<double> a) {
        const double v = per_particle[static_cast<std::size_t>(i)];
        a[0] += v;
        a[1] += v * v;
    });
    CostEstimate est;
    est.value = acc[0] / n;
    const double var = std::max(0.0, acc[1] / n - est.value * est.value);
    est.std_error = std::sqrt(var / n);
    return est;
}

double cost(const ControlProblemSpec& problem, const ParticleEnsemble& ensemble, const ControlGrid& u) {
    return cost_with_error(problem, ensemble, u).value;
}

std::vector<double> cost_gradient(const ControlProblemSpec& problem, const ParticleEnsemble& ensemble,
                                  const AdjointSolution& adjoint, const ControlGrid& u) {
    if (!ensemble.stores_full()) throw std::invalid_argument("cost_gradient: need full paths");
    const TimeGrid& grid = ensemble.grid();
    const int n = ensemble.particles();
    const int m = grid.steps;
    const int dim = problem.control_dim;

    std::vector<double> grad(static_cast<std::size_t>(m) * dim, 0.0);
    for (int k = 0; k < m; ++k) {
        const double t = grid.time(k);
        const auto uk = u.at(k);
        const auto xcol = ensemble.column(k);
        const auto pcol = adjoint.p.col(k);
        const auto qcol = adjoint.q.col(k);
        ColumnLaws laws = column_laws(xcol);
        std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
        det_accumulate(n, acc, [&](std::int64_t i, std::span<double> a) {
            const double x = xcol[static_cast<std::size_t>(i)];
            const double p = pcol[static_cast<std::size_t>(i)];
            const double q = qcol[static_cast<std::size_t>(i)];
            for (int j = 0; j < dim; ++j)
                a[static_cast<std::size_t>(j)] += problem.f_u(t, x, laws.full, uk, j) +
                                                  p * problem.b0_u(t, x, laws.centered, uk, j) +
                                                  q * problem.sigma_u(t, x, laws.full, uk, j);
        });
        for (int j = 0; j < dim; ++j) grad[static_cast<std::size_t>(k) * dim + j] = acc[static_cast<std::size_t>(j)] / n;
    }
    return grad;
}

namespace {

// -min(0, worst inner product of hu against the box) for a given iterate
double residual_from_gradient(const ControlGrid& u, std::span<const double> hu) {
    double worst = 0.0;
    for (int k = 0; k < u.steps; ++k) {
        const auto uk = u.at(k);
        double inner = 0.0;
        for (int j = 0; j < u.dim; ++j) {
            const double g = hu[static_cast<std::size_t>(k) * u.dim + j];
            inner += std::min(g * (u.lo[j] - uk[j]), g * (u.hi[j] - uk[j]));
        }
        worst = std::min(worst, inner);
    }
    return worst < 0.0 ? -worst : 0.0;
}

ControlGrid project_step(const ControlGrid& u, std::span<const double> grad, double eta) {
    ControlGrid out = u;
    for (std::size_t idx = 0; idx < out.values.size(); ++idx) out.values[idx] -= eta * grad[idx];
    out.clamp();
    return out;
}

double sup_norm_diff(const ControlGrid& a, const ControlGrid& b) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        best = std::max(best, std::abs(a.values[i] - b.values[i]));
    return best;
}

double inner_dt(std::span<const double> g, const ControlGrid& a, const ControlGrid& b, double dt) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) acc += g[i] * (a.values[i] - b.values[i]);
    return acc * dt;
}

}  // namespace

OptimizationReport optimize(const ControlProblemSpec& problem, const ControlGrid& u0,
                            const TimeGrid& grid, const OptimizeOptions& opts) {
    if (!u0.inside(1e-12)) throw std::invalid_argument("optimize: u0 outside the admissible box");
    if (u0.steps != grid.steps) throw std::invalid_argument("optimize: control grid mismatch");

    OptimizationReport rep;
    ControlGrid u = u0;
    double eta = opts.step0;
    int bad_streak = 0;
    double prev_cost = 0.0;
    double prev_se = 0.0;
    bool have_prev = false;

    int iter = 0;
    rep.stop_reason = "max_iterations";
    for (; iter < opts.max_iters; ++iter) {
        const NoiseBank bank(opts.seed + (opts.fresh_noise ? static_cast<std::uint64_t>(iter) : 0),
                             opts.particles, grid.steps, grid.dt(), opts.antithetic);
        const auto X = simulate_controlled(problem, u, grid, bank, opts.sim);
        const CostEstimate J = cost_with_error(problem, X, u);

        if (have_prev && J.value > prev_cost + 3.0 * (J.std_error + prev_se)) {
            if (++bad_streak >= opts.nonmonotone_limit) {
                rep.stop_reason = "non_monotone_cost";
                break;
            }
        } else {
            bad_streak = 0;
        }
        prev_cost = J.value;
        prev_se = J.std_error;
        have_prev = true;

        const auto adj = solve_adjoint(problem, X, u, grid, bank, opts.regression);
        const auto grad = cost_gradient(problem, X, adj, u);

        const ControlGrid probe = project_step(u, grad, 1.0);
        const double pgnorm = sup_norm_diff(u, probe);
        rep.cost_history.push_back(J.value);
        rep.grad_norm_history.push_back(pgnorm);
        rep.residual_history.push_back(residual_from_gradient(u, grad));

        if (pgnorm < opts.tol) {
            rep.converged = true;
            rep.stop_reason = "projected_gradient_below_tol";
            rep.step_history.push_back(0.0);
            break;
        }

        // Armijo backtracking against the same noise
        bool accepted = false;
        double trial = eta;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            ControlGrid cand = project_step(u, grad, trial);
            const double decrease = inner_dt(grad, u, cand, grid.dt());
            const auto Xc = simulate_controlled(problem, cand, grid, bank, opts.sim);
            const double Jc = cost(problem, Xc, cand);
            if (Jc <= J.value - opts.armijo_c * decrease) {
                u = std::move(cand);
                eta = std::min(trial * 2.0, opts.step0 * 16.0);
                accepted = true;
                break;
            }
            trial *= opts.step_shrink;
        }
        rep.step_history.push_back(accepted ? eta : 0.0);
        if (!accepted) {
            rep.stop_reason = "line_search_failed";
            break;
        }
    }
    rep.iterations = iter;
    rep.final_control = u;

    // fresh-noise evaluation of the final iterate
    const NoiseBank fresh(opts.seed + 900000007ull, opts.particles, grid.steps, grid.dt(), opts.antithetic);
    const auto Xf = simulate_controlled(problem, u, grid, fresh, opts.sim);
    rep.final_cost = cost(problem, Xf, u);
    const auto adjf = solve_adjoint(problem, Xf, u, grid, fresh, opts.regression);
    rep.final_residual = smp_residual(problem, Xf, u, adjf).residual;
    return rep;
}

SmpResidualReport smp_residual(const ControlProblemSpec& problem, const ParticleEnsemble& xstar,
                               const ControlGrid& ustar, const AdjointSolution& adjoint) {
    SmpResidualReport rep;
    rep.hu = cost_gradient(problem, xstar, adjoint, ustar);
    const int m = ustar.steps;
    const int dim = ustar.dim;
    rep.worst_inner = 0.0;
    for (int k = 0; k < m; ++k) {
        const auto uk = ustar.at(k);
        // min over box vertices of hu . (vertex - u_k), separable per component
        double inner = 0.0;
        for (int j = 0; j < dim; ++j) {
            const double g = rep.hu[static_cast<std::size_t>(k) * dim + j];
            inner += std::min(g * (ustar.lo[j] - uk[j]), g * (ustar.hi[j] - uk[j]));
        }
        if (inner < rep.worst_inner) {
            rep.worst_inner = inner;
            rep.worst_step = k;
        }
    }
    rep.residual = rep.worst_inner < 0.0 ? -rep.worst_inner : 0.0;
    return rep;
}

DualityReport duality_check(const ControlProblemSpec& problem, const ParticleEnsemble& xstar,
                            const ControlGrid& ustar, const AdjointSolution& adjoint,
                            const ControlGrid& v, const NoiseBank& noise) {
    const TimeGrid& grid = xstar.grid();
    const int n = xstar.particles();
    const int m = grid.steps;
    const double dt = grid.dt();
    const int dim = problem.control_dim;

    const auto Z = simulate_variational(problem, ustar, v, xstar, noise);

    // per-particle contributions of lhs - decomposable rhs
    std::vector<double> gap(static_cast<std::size_t>(n), 0.0);
    {
        const auto pT = adjoint.p.col(m);
        const auto zT = Z.column(m);
        par_for(n, [&](std::int64_t i) {
            gap[static_cast<std::size_t>(i)] = pT[static_cast<std::size_t>(i)] * zT[static_cast<std::size_t>(i)];
        });
    }
    double lhs = det_mean(gap);

    double rhs = 0.0;
    for (int k = 0; k < m; ++k) {
        const double t = grid.time(k);
        const auto uk = ustar.at(k);
        const auto vk = v.at(k);
        const auto xcol = xstar.column(k);
        const auto zcol = Z.column(k);
        const auto pcol = adjoint.p.col(k);
        const auto qcol = adjoint.q.col(k);
        ColumnLaws laws = column_laws(xcol);

        double hat_term = 0.0;  // E E-hat [f_mu(this; copy) Z-hat]
        if (problem.mu_kernels_constant_in_y) {
            double acc[1] = {0.0};
            det_accumulate(n, acc, [&](std::int64_t i, std::span<double> a) {
                a[0] += problem.f_mu(t, xcol[static_cast<std::size_t>(i)], laws.full, uk, 0.0);
            });
            hat_term = acc[0] / n * det_mean(zcol);
        } else {
            double acc[1] = {0.0};
            det_accumulate(n, acc, [&](std::int64_t i, std::span<double> a) {
                double s = 0.0;
                for (int j = 0; j < n; ++j)
                    s += problem.f_mu(t, xcol[static_cast<std::size_t>(i)], laws.full, uk,
                                      xcol[static_cast<std::size_t>(j)]) * zcol[static_cast<std::size_t>(j)];
                a[0] += s / n;
            });
            hat_term = acc[0] / n;
        }

        std::vector<double> stepterm(static_cast<std::size_t>(n));
        par_for(n, [&](std::int64_t ii) {
            const int i = static_cast<int>(ii);
            const double x = xcol[static_cast<std::size_t>(i)];
            double bu = 0.0, su = 0.0;
            for (int j = 0; j < dim; ++j) {
                bu += problem.b0_u(t, x, laws.centered, uk, j) * vk[j];
                su += problem.sigma_u(t, x, laws.full, uk, j) * vk[j];
            }
            stepterm[static_cast<std::size_t>(i)] =
                pcol[static_cast<std::size_t>(i)] * bu -
                zcol[static_cast<std::size_t>(i)] * problem.f_x(t, x, laws.full, uk) +
                qcol[static_cast<std::size_t>(i)] * su;
        });
        const double mean_step = det_mean(stepterm);
        rhs += dt * (mean_step - hat_term);
        par_for(n, [&](std::int64_t i) {
            gap[static_cast<std::size_t>(i)] -= dt * (stepterm[static_cast<std::size_t>(i)] - hat_term);
        });
    }

    DualityReport rep;
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.abs_gap = std::abs(lhs - rhs);
    rep.rel_gap = rep.abs_gap / std::max(std::abs(lhs), std::abs(rhs));
    double acc[2] = {0.0, 0.0};
    det_accumulate(n, acc, [&](std::int64_t i, std::span<double> a) {
        const double g = gap[static_cast<std::size_t>(i)];
        a[0] += g;
        a[1] += g * g;
    });
    const double meang = acc[0] / n;
    rep.std_error = std::sqrt(std::max(0.0, acc[1] / n - meang * meang) / n);
    return rep;
}

ConvexityReport sufficiency_probe(const ControlProblemSpec& problem, int segments, std::uint64_t seed) {
    if (segments < 1) throw std::invalid_argument("sufficiency_probe: need at least one segment");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-3.0, 3.0);
    std::uniform_real_distribution<double> upq(-2.0, 2.0);
    std::uniform_real_distribution<double> ut(0.0, problem.horizon);

    ConvexityReport rep;
    rep.segments = segments;
    const int dim = problem.control_dim;
    const int cloud_n = 16;

    for (int s = 0; s < segments; ++s) {
        std::vector<double> cloud(cloud_n);
        for (auto& c : cloud) c = ux(rng);
        auto full = EmpiricalMeasure::from_samples(cloud);
        auto cc = center(full.sorted());
        auto centered = EmpiricalMeasure::from_sorted(std::move(cc.centered));

        const double t = ut(rng);
        const double p = upq(rng), q = upq(rng);
        const double x1 = ux(rng), x2 = ux(rng);
        const double m1 = ux(rng), m2 = ux(rng);
        std::vector<double> u1(static_cast<std::size_t>(dim)), u2(static_cast<std::size_t>(dim)), um(static_cast<std::size_t>(dim));
        for (int j = 0; j < dim; ++j) {
            std::uniform_real_distribution<double> uu(problem.u_lo[j], problem.u_hi[j]);
            u1[static_cast<std::size_t>(j)] = uu(rng);
            u2[static_cast<std::size_t>(j)] = uu(rng);
            um[static_cast<std::size_t>(j)] = 0.5 * (u1[static_cast<std::size_t>(j)] + u2[static_cast<std::size_t>(j)]);
        }
        const double h1 = hamiltonian(problem, t, x1, m1, centered, full, u1, p, q);
        const double h2 = hamiltonian(problem, t, x2, m2, centered, full, u2, p, q);
        const double hm = hamiltonian(problem, t, 0.5 * (x1 + x2), 0.5 * (m1 + m2), centered, full, um, p, q);
        const double viol = hm - 0.5 * (h1 + h2);
        const double tol = 1e-9 * (1.0 + std::abs(h1) + std::abs(h2));
        if (viol > tol) {
            ++rep.violations_hamiltonian;
            rep.worst_violation = std::max(rep.worst_violation, viol);
        }

        // terminal cost along entrywise-interpolated clouds
        std::vector<double> c2(cloud_n);
        for (auto& c : c2) c = ux(rng);
        auto nu1 = EmpiricalMeasure::from_samples(std::move(cloud));
        auto nu2 = EmpiricalMeasure::from_samples(std::move(c2));
        std::vector<double> mid(cloud_n);
        for (int i = 0; i < cloud_n; ++i)
            mid[static_cast<std::size_t>(i)] = 0.5 * (nu1.sorted()[static_cast<std::size_t>(i)] + nu2.sorted()[static_cast<std::size_t>(i)]);
        auto num = EmpiricalMeasure::from_sorted(std::move(mid));
        const double hx1 = problem.h(x1, nu1), hx2 = problem.h(x2, nu2);
        const double hxm = problem.h(0.5 * (x1 + x2), num);
        const double violh = hxm - 0.5 * (hx1 + hx2);
        const double tolh = 1e-9 * (1.0 + std::abs(hx1) + std::abs(hx2));
        if (violh > tolh) {
            ++rep.violations_terminal;
            rep.worst_violation = std::max(rep.worst_violation, violh);
        }
    }
    rep.pass = rep.violations_hamiltonian == 0 && rep.violations_terminal == 0;
    return rep;
}

}  // namespace mf
