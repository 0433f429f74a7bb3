#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mf/common.hpp"

namespace mf {

// Uniform grid t_0 = 0 < ... < t_M = T.
struct TimeGrid {
    double horizon = 1.0;
    int steps = 1;

    TimeGrid() = default;
    TimeGrid(double T, int M) : horizon(T), steps(M) {
        if (!(T > 0.0) || M < 1) throw std::invalid_argument("TimeGrid: need T > 0 and M >= 1");
    }
    double dt() const { return horizon / steps; }
    double time(int k) const { return k == steps ? horizon : k * dt(); }
};

// Brownian increments dW(i,k) ~ N(0, dt), computed on demand from a
// counter-based hash of (seed, particle, step). Draws are reproducible
// from the seed alone and independent of evaluation order, so the same
// bank can back common-random-number comparisons across solvers. With
// antithetic pairing on, particles 2j and 2j+1 use opposite draws and
// every column mean vanishes exactly.
class NoiseBank {
public:
    NoiseBank(std::uint64_t seed, int particles, int steps, double dt, bool antithetic = true);

    double dw(int particle, int step) const {
        const int j = antithetic_ ? (particle >> 1) : particle;
        const double sign = (antithetic_ && (particle & 1)) ? -1.0 : 1.0;
        std::uint64_t h = detail::splitmix64(seed_ ^ 0x6D96D4B1C35A97E5ull);
        h = detail::splitmix64(h ^ (static_cast<std::uint64_t>(j) + 1));
        h = detail::splitmix64(h ^ (static_cast<std::uint64_t>(step) + 1));
        const double u1 = detail::to_unit_interval(h);
        const double u2 = detail::to_unit_interval(detail::splitmix64(h ^ 0x9E3779B97F4A7C15ull));
        return sign * sqrt_dt_ * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    int particles() const { return particles_; }
    int steps() const { return steps_; }
    double dt() const { return dt_; }
    std::uint64_t seed() const { return seed_; }
    bool antithetic() const { return antithetic_; }

    // diagnostic: empirical mean of one increment column
    double column_mean(int step) const;

private:
    std::uint64_t seed_;
    int particles_, steps_;
    double dt_, sqrt_dt_;
    bool antithetic_;
};

// Dense particles-by-columns array; column k is contiguous.
class PathMatrix {
public:
    PathMatrix() = default;
    PathMatrix(int particles, int columns)
        : particles_(particles), columns_(columns),
          data_(static_cast<std::size_t>(particles) * columns, 0.0) {
        if (particles < 1 || columns < 1) throw std::invalid_argument("PathMatrix: empty shape");
    }
    int particles() const { return particles_; }
    int columns() const { return columns_; }
    std::span<double> col(int k) {
        return {data_.data() + static_cast<std::size_t>(k) * particles_, static_cast<std::size_t>(particles_)};
    }
    std::span<const double> col(int k) const {
        return {data_.data() + static_cast<std::size_t>(k) * particles_, static_cast<std::size_t>(particles_)};
    }
    double& at(int k, int i) { return data_[static_cast<std::size_t>(k) * particles_ + i]; }
    double at(int k, int i) const { return data_[static_cast<std::size_t>(k) * particles_ + i]; }
    std::span<const double> raw() const { return data_; }

private:
    int particles_ = 0, columns_ = 0;
    std::vector<double> data_;
};

struct ColumnStats {
    double mean = 0.0;
    double variance = 0.0;
};

// N particle paths on a time grid. Full storage keeps every column;
// terminal storage keeps only t_0 and t_M (large-N runs where only the
// final law matters). Column stats are tracked either way.
class ParticleEnsemble {
public:
    enum class Storage { full, terminal_only };

    ParticleEnsemble(int particles, const TimeGrid& grid, Storage storage);

    int particles() const { return particles_; }
    const TimeGrid& grid() const { return grid_; }
    Storage storage() const { return storage_; }
    bool stores_full() const { return storage_ == Storage::full; }

    std::span<double> column(int k);
    std::span<const double> column(int k) const;

    std::vector<ColumnStats>& stats() { return stats_; }
    const std::vector<ColumnStats>& stats() const { return stats_; }

    // sup over stored diagnostics of E|X|^p for p = 2,4,8
    std::array<double, 3>& sup_moments() { return sup_moments_; }
    const std::array<double, 3>& sup_moments() const { return sup_moments_; }

    std::string provenance;

private:
    int particles_;
    TimeGrid grid_;
    Storage storage_;
    PathMatrix data_;  // full: M+1 columns; terminal: 2 columns (t_0, t_M)
    std::vector<ColumnStats> stats_;
    std::array<double, 3> sup_moments_{0.0, 0.0, 0.0};
};

// Deterministic open-loop control: one value per time step per
// component, constrained to a box.
struct ControlGrid {
    int steps = 0;
    int dim = 1;
    std::vector<double> values;  // steps x dim, row-major per step
    std::vector<double> lo, hi;  // per component

    static ControlGrid constant(const TimeGrid& grid, std::vector<double> value,
                                std::vector<double> lo, std::vector<double> hi);

    std::span<const double> at(int k) const {
        return {values.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<double> at(int k) {
        return {values.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
    }
    void clamp();
    bool inside(double tol = 0.0) const;
};

}  // namespace mf
