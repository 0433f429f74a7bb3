#include "mf/ref.hpp"

#include <algorithm>
#include <cmath>

namespace mf::ref {

double sum(std::span<const double> xs) {
    double acc = 0.0;
    for (double v : xs) acc += v;
    return acc;
}

double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("ref::mean: empty input");
    return sum(xs) / static_cast<double>(xs.size());
}

namespace {

EmpiricalMeasure sorted_measure(std::span<const double> col) {
    std::vector<double> buf(col.begin(), col.end());
    std::sort(buf.begin(), buf.end());
    return EmpiricalMeasure::from_sorted(std::move(buf));
}

EmpiricalMeasure centered_measure(const EmpiricalMeasure& full) {
    std::vector<double> cen(full.sorted().begin(), full.sorted().end());
    for (auto& v : cen) v -= full.mean();
    return EmpiricalMeasure::from_sorted(std::move(cen));
}

}  // namespace

ParticleEnsemble simulate_mkv(const SdeCoefficientSpec& spec, double x0, const TimeGrid& grid,
                              const NoiseBank& noise, const SimOptions& opts) {
    const int n = noise.particles();
    const int m = grid.steps;
    const double dt = grid.dt();
    ParticleEnsemble ens(n, grid, opts.storage);
    ens.provenance = "ref_mkv:" + spec.name;

    std::vector<double> cur(static_cast<std::size_t>(n), x0), next(static_cast<std::size_t>(n));
    std::copy(cur.begin(), cur.end(), ens.column(0).begin());
    for (int k = 0; k < m; ++k) {
        const double t = grid.time(k);
        const auto law = sorted_measure(cur);
        for (int i = 0; i < n; ++i) {
            const double x = cur[static_cast<std::size_t>(i)];
            double bdt = spec.b(t, x, law) * dt;
            const double limit = opts.clamp_factor * dt * (1.0 + std::abs(x));
            if (std::abs(bdt) > limit) bdt = bdt > 0 ? limit : -limit;
            next[static_cast<std::size_t>(i)] = x + bdt + spec.sigma(t, x, law) * noise.dw(i, k);
            if (!std::isfinite(next[static_cast<std::size_t>(i)]))
                throw SolverError("ref::simulate_mkv: blow-up at step " + std::to_string(k));
        }
        if (ens.stores_full() || k + 1 == m)
            std::copy(next.begin(), next.end(), ens.column(k + 1).begin());
        cur.swap(next);
    }
    return ens;
}

ParticleEnsemble simulate_controlled(const ControlProblemSpec& problem, const ControlGrid& u,
                                     const TimeGrid& grid, const NoiseBank& noise,
                                     const SimOptions& opts) {
    const int n = noise.particles();
    const int m = grid.steps;
    const double dt = grid.dt();
    ParticleEnsemble ens(n, grid, opts.storage);
    ens.provenance = "ref_controlled:" + problem.name;

    std::vector<double> cur(static_cast<std::size_t>(n), problem.x0), next(static_cast<std::size_t>(n));
    std::copy(cur.begin(), cur.end(), ens.column(0).begin());
    for (int k = 0; k < m; ++k) {
        const double t = grid.time(k);
        const auto uk = u.at(k);
        const auto law = sorted_measure(cur);
        const auto law0 = centered_measure(law);
        const double mean = law.mean();
        for (int i = 0; i < n; ++i) {
            const double x = cur[static_cast<std::size_t>(i)];
            double bdt = (problem.b0(t, x, law0, uk) + problem.b1(t, mean, law0)) * dt;
            const double limit = opts.clamp_factor * dt * (1.0 + std::abs(x));
            if (std::abs(bdt) > limit) bdt = bdt > 0 ? limit : -limit;
            next[static_cast<std::size_t>(i)] = x + bdt + problem.sigma(t, x, law, uk) * noise.dw(i, k);
            if (!std::isfinite(next[static_cast<std::size_t>(i)]))
                throw SolverError("ref::simulate_controlled: blow-up at step " + std::to_string(k));
        }
        if (ens.stores_full() || k + 1 == m)
            std::copy(next.begin(), next.end(), ens.column(k + 1).begin());
        cur.swap(next);
    }
    return ens;
}

void interaction_sum(int n, const std::function<double(int, int)>& kernel, std::span<const double> w,
                     std::span<double> out) {
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += kernel(i, j) * w[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = acc / n;
    }
}

}  // namespace mf::ref
