#include "mf/grid.hpp"

#include <array>

namespace mf {

NoiseBank::NoiseBank(std::uint64_t seed, int particles, int steps, double dt, bool antithetic)
    : seed_(seed), particles_(particles), steps_(steps), dt_(dt), sqrt_dt_(std::sqrt(dt)),
      antithetic_(antithetic) {
    if (particles < 1 || steps < 1 || !(dt > 0.0))
        throw std::invalid_argument("NoiseBank: need particles >= 1, steps >= 1, dt > 0");
}

double NoiseBank::column_mean(int step) const {
    double acc[1] = {0.0};
    det_accumulate(particles_, acc, [&](std::int64_t i, std::span<double> a) {
        a[0] += dw(static_cast<int>(i), step);
    });
    return acc[0] / particles_;
}

ParticleEnsemble::ParticleEnsemble(int particles, const TimeGrid& grid, Storage storage)
    : particles_(particles), grid_(grid), storage_(storage),
      data_(particles, storage == Storage::full ? grid.steps + 1 : 2),
      stats_(grid.steps + 1) {
    if (particles < 1) throw std::invalid_argument("ParticleEnsemble: need at least one particle");
}

std::span<double> ParticleEnsemble::column(int k) {
    if (k < 0 || k > grid_.steps) throw std::invalid_argument("ParticleEnsemble::column: index out of range");
    if (storage_ == Storage::full) return data_.col(k);
    if (k == 0) return data_.col(0);
    if (k == grid_.steps) return data_.col(1);
    throw std::invalid_argument("ParticleEnsemble::column: interior column not stored (terminal-only mode)");
}

std::span<const double> ParticleEnsemble::column(int k) const {
    return const_cast<ParticleEnsemble*>(this)->column(k);
}

ControlGrid ControlGrid::constant(const TimeGrid& grid, std::vector<double> value,
                                  std::vector<double> lo, std::vector<double> hi) {
    if (value.empty() || value.size() != lo.size() || value.size() != hi.size())
        throw std::invalid_argument("ControlGrid::constant: inconsistent dimensions");
    ControlGrid u;
    u.steps = grid.steps;
    u.dim = static_cast<int>(value.size());
    u.lo = std::move(lo);
    u.hi = std::move(hi);
    u.values.resize(static_cast<std::size_t>(u.steps) * u.dim);
    for (int k = 0; k < u.steps; ++k)
        for (int j = 0; j < u.dim; ++j) u.values[static_cast<std::size_t>(k) * u.dim + j] = value[j];
    return u;
}

void ControlGrid::clamp() {
    for (int k = 0; k < steps; ++k) {
        auto row = at(k);
        for (int j = 0; j < dim; ++j) row[j] = std::min(hi[j], std::max(lo[j], row[j]));
    }
}

bool ControlGrid::inside(double tol) const {
    for (int k = 0; k < steps; ++k) {
        auto row = at(k);
        for (int j = 0; j < dim; ++j)
            if (row[j] < lo[j] - tol || row[j] > hi[j] + tol) return false;
    }
    return true;
}

}  // namespace mf
