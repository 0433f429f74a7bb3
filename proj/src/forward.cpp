#include "mf/forward.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace mf {

namespace {

// Sorted copy of a column plus its centered version, shared per step.
struct StepLaws {
    EmpiricalMeasure full;
    EmpiricalMeasure centered;
};

StepLaws make_laws(std::span<const double> col, bool want_centered) {
    std::vector<double> buf(col.begin(), col.end());
    std::sort(buf.begin(), buf.end());
    auto full = EmpiricalMeasure::from_sorted(std::move(buf));
    if (!want_centered) return {std::move(full), EmpiricalMeasure::from_sorted({0.0})};
    std::vector<double> cen(full.sorted().begin(), full.sorted().end());
    const double m = full.mean();
    for (auto& v : cen) v -= m;
    return {std::move(full), EmpiricalMeasure::from_sorted(std::move(cen))};
}

void record_stats(ParticleEnsemble& ens, int k, std::span<const double> col) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};  // sum, sum^2, sum^4, sum^8
    det_accumulate(static_cast<std::int64_t>(col.size()), acc, [&](std::int64_t i, std::span<double> a) {
        const double x = col[static_cast<std::size_t>(i)];
        const double x2 = x * x, x4 = x2 * x2;
        a[0] += x;
        a[1] += x2;
        a[2] += x4;
        a[3] += x4 * x4;
    });
    const double n = static_cast<double>(col.size());
    ens.stats()[k].mean = acc[0] / n;
    ens.stats()[k].variance = acc[1] / n - (acc[0] / n) * (acc[0] / n);
    auto& sup = ens.sup_moments();
    sup[0] = std::max(sup[0], acc[1] / n);
    sup[1] = std::max(sup[1], acc[2] / n);
    sup[2] = std::max(sup[2], acc[3] / n);
}

void check_finite(std::span<const double> col, int step) {
    for (double v : col)
        if (!std::isfinite(v))
            throw SolverError("forward: state blew up at step " + std::to_string(step) +
                              " (non-finite value; growth assumption likely violated)");
}

double clamp_drift(double bdt, double x, double dt, double factor, std::atomic<long>& count) {
    const double limit = factor * dt * (1.0 + std::abs(x));
    if (std::abs(bdt) > limit) {
        count.fetch_add(1, std::memory_order_relaxed);
        return bdt > 0 ? limit : -limit;
    }
    return bdt;
}

}  // namespace

ParticleEnsemble simulate_mkv(const SdeCoefficientSpec& spec, double x0, const TimeGrid& grid,
                              const NoiseBank& noise, const SimOptions& opts, SimDiagnostics* diag) {
    if (!spec.b || !spec.sigma) throw std::invalid_argument("simulate_mkv: missing coefficient handles");
    if (noise.particles() < 1 || noise.steps() < grid.steps)
        throw std::invalid_argument("simulate_mkv: noise bank shape does not cover the grid");

    const int n = noise.particles();
    const int m = grid.steps;
    const double dt = grid.dt();
    ParticleEnsemble ens(n, grid, opts.storage);
    ens.provenance = "mkv:" + spec.name;

    std::vector<double> cur(n, x0), next(n);
    std::copy(cur.begin(), cur.end(), ens.column(0).begin());
    record_stats(ens, 0, cur);
    std::atomic<long> clamped{0};

    for (int k = 0; k < m; ++k) {
        const double t = grid.time(k);
        StepLaws laws = make_laws(cur, false);
        par_for(n, [&](std::int64_t i) {
            const double x = cur[static_cast<std::size_t>(i)];
            double bdt = spec.b(t, x, laws.full) * dt;
            bdt = clamp_drift(bdt, x, dt, opts.clamp_factor, clamped);
            next[static_cast<std::size_t>(i)] =
                x + bdt + spec.sigma(t, x, laws.full) * noise.dw(static_cast<int>(i), k);
        });
        check_finite(next, k);
        record_stats(ens, k + 1, next);
        if (ens.stores_full() || k + 1 == m)
            std::copy(next.begin(), next.end(), ens.column(k + 1).begin());
        cur.swap(next);
    }
    if (diag) diag->clamped_updates = clamped.load();
    return ens;
}

ParticleEnsemble simulate_controlled(const ControlProblemSpec& problem, const ControlGrid& u,
                                     const TimeGrid& grid, const NoiseBank& noise,
                                     const SimOptions& opts, SimDiagnostics* diag) {
    if (u.steps != grid.steps || u.dim != problem.control_dim)
        throw std::invalid_argument("simulate_controlled: control grid does not match");
    if (!u.inside(1e-12)) throw std::invalid_argument("simulate_controlled: control outside the box U");
    if (noise.particles() < 1 || noise.steps() < grid.steps)
        throw std::invalid_argument("simulate_controlled: noise bank shape does not cover the grid");

    const int n = noise.particles();
    const int m = grid.steps;
    const double dt = grid.dt();
    ParticleEnsemble ens(n, grid, opts.storage);
    ens.provenance = "controlled:" + problem.name;

    std::vector<double> cur(n, problem.x0), next(n);
    std::copy(cur.begin(), cur.end(), ens.column(0).begin());
    record_stats(ens, 0, cur);
    std::atomic<long> clamped{0};

    for (int k = 0; k < m; ++k) {
        const double t = grid.time(k);
        const auto uk = u.at(k);
        StepLaws laws = make_laws(cur, true);
        const double mean = laws.full.mean();
        par_for(n, [&](std::int64_t i) {
            const double x = cur[static_cast<std::size_t>(i)];
            double bdt = (problem.b0(t, x, laws.centered, uk) + problem.b1(t, mean, laws.centered)) * dt;
            bdt = clamp_drift(bdt, x, dt, opts.clamp_factor, clamped);
            next[static_cast<std::size_t>(i)] =
                x + bdt + problem.sigma(t, x, laws.full, uk) * noise.dw(static_cast<int>(i), k);
        });
        check_finite(next, k);
        record_stats(ens, k + 1, next);
        if (ens.stores_full() || k + 1 == m)
            std::copy(next.begin(), next.end(), ens.column(k + 1).begin());
        cur.swap(next);
    }
    if (diag) diag->clamped_updates = clamped.load();
    return ens;
}

ParticleEnsemble simulate_variational(const ControlProblemSpec& problem, const ControlGrid& ustar,
                                      const ControlGrid& v, const ParticleEnsemble& xstar,
                                      const NoiseBank& noise) {
    if (!xstar.stores_full())
        throw std::invalid_argument("simulate_variational: state ensemble must store full paths");
    const TimeGrid grid = xstar.grid();
    if (ustar.steps != grid.steps || v.steps != grid.steps)
        throw std::invalid_argument("simulate_variational: control grids do not match");
    const int n = xstar.particles();
    const int m = grid.steps;
    const double dt = grid.dt();

    ParticleEnsemble ens(n, grid, ParticleEnsemble::Storage::full);
    ens.provenance = "variational:" + problem.name;
    std::vector<double> zc(n, 0.0), zcen(n), xcen(n);
    record_stats(ens, 0, zc);

    for (int k = 0; k < m; ++k) {
        const double t = grid.time(k);
        const auto uk = ustar.at(k);
        const auto vk = v.at(k);
        const auto xcol = xstar.column(k);
        StepLaws laws = make_laws(xcol, true);
        const double mean = laws.full.mean();

        const double mean_z = det_mean(zc);
        for (int i = 0; i < n; ++i) {
            zcen[i] = zc[i] - mean_z;
            xcen[i] = xcol[i] - mean;
        }
        const double mean_zcen = det_mean(zcen);

        auto znext = ens.column(k + 1);
        par_for(n, [&](std::int64_t ii) {
            const int i = static_cast<int>(ii);
            const double x = xcol[i];
            double hat_drift, hat_diff;
            if (problem.mu_kernels_constant_in_y) {
                hat_drift = (problem.b0_mu(t, x, laws.centered, uk, 0.0) +
                             problem.b1_mu(t, mean, laws.centered, 0.0)) * mean_zcen;
                hat_diff = problem.sigma_mu(t, x, laws.full, uk, 0.0) * mean_z;
            } else {
                double a = 0.0, s = 0.0;
                for (int j = 0; j < n; ++j) {
                    a += (problem.b0_mu(t, x, laws.centered, uk, xcen[j]) +
                          problem.b1_mu(t, mean, laws.centered, xcen[j])) * zcen[j];
                    s += problem.sigma_mu(t, x, laws.full, uk, xcol[j]) * zc[j];
                }
                hat_drift = a / n;
                hat_diff = s / n;
            }
            double bu = 0.0, su = 0.0;
            for (int j = 0; j < problem.control_dim; ++j) {
                bu += problem.b0_u(t, x, laws.centered, uk, j) * vk[j];
                su += problem.sigma_u(t, x, laws.full, uk, j) * vk[j];
            }
            const double drift = problem.b0_x(t, x, laws.centered, uk) * zc[i] +
                                 problem.b1_m(t, mean, laws.centered) * mean_z + hat_drift + bu;
            const double diff = problem.sigma_x(t, x, laws.full, uk) * zc[i] + hat_diff + su;
            znext[i] = zc[i] + drift * dt + diff * noise.dw(i, k);
        });
        check_finite(znext, k);
        record_stats(ens, k + 1, znext);
        std::copy(znext.begin(), znext.end(), zc.begin());
    }
    // column 0 is identically zero
    return ens;
}

MomentReport moment_report(const ParticleEnsemble& ensemble, int p) {
    if (p != 2 && p != 4 && p != 8) throw std::invalid_argument("moment_report: p must be 2, 4 or 8");
    const int idx = p == 2 ? 0 : (p == 4 ? 1 : 2);
    const double v = ensemble.sup_moments()[idx];
    return {v, std::isfinite(v)};
}

}  // namespace mf
