#include <doctest.h>

#include <cmath>
#include <random>

#include "mf/forward.hpp"
#include "mf/ref.hpp"

using namespace mf;

TEST_CASE("deterministic sum is worker-count invariant and near the serial sum") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> ur(-1.0, 1.0);
    std::vector<double> xs(100000);
    for (auto& v : xs) v = ur(rng);

    const int saved = max_workers();
    set_max_workers(1);
    const double s1 = det_sum(xs);
    set_max_workers(2);
    const double s2 = det_sum(xs);
    set_max_workers(4);
    const double s4 = det_sum(xs);
    set_max_workers(saved);

    CHECK(s1 == s2);
    CHECK(s1 == s4);
    const double sref = ref::sum(xs);
    CHECK(s1 == doctest::Approx(sref).epsilon(1e-12));
}

TEST_CASE("production and reference simulators agree") {
    const TimeGrid grid(1.0, 40);
    const NoiseBank noise(62, 512, 40, grid.dt());
    const auto spec = example_sde("piecewise_l_sde");

    const auto fast = simulate_mkv(spec, -1.0, grid, noise);
    const auto slow = ref::simulate_mkv(spec, -1.0, grid, noise);
    for (int k = 0; k <= 40; ++k) {
        auto a = fast.column(k), b = slow.column(k);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }

    const auto lq = lq_problem({.sigma0 = 0.7});
    auto u = ControlGrid::constant(grid, {0.25}, {-2.0}, {2.0});
    const auto cf = simulate_controlled(lq, u, grid, noise);
    const auto cs = ref::simulate_controlled(lq, u, grid, noise);
    for (int k = 0; k <= 40; ++k) {
        auto a = cf.column(k), b = cs.column(k);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
}

TEST_CASE("ensembles are bitwise identical across worker counts") {
    const TimeGrid grid(1.0, 30);
    const NoiseBank noise(63, 1000, 30, grid.dt());
    const auto spec = example_sde("oscillating_g_sde");

    const int saved = max_workers();
    std::vector<ParticleEnsemble> runs;
    for (int w : {1, 4, 16}) {
        set_max_workers(w);
        runs.push_back(simulate_mkv(spec, 0.5, grid, noise));
    }
    set_max_workers(saved);
    for (int k = 0; k <= 30; ++k) {
        auto a = runs[0].column(k);
        for (std::size_t r = 1; r < runs.size(); ++r) {
            auto b = runs[r].column(k);
            for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
        }
    }
}

TEST_CASE("noise bank is order-free and reproducible") {
    const NoiseBank bank(64, 64, 16, 0.01);
    const double a = bank.dw(17, 3);
    const double b = bank.dw(3, 11);
    CHECK(bank.dw(17, 3) == a);
    CHECK(bank.dw(3, 11) == b);
    const NoiseBank same(64, 64, 16, 0.01);
    CHECK(same.dw(17, 3) == a);
    // antithetic pairs cancel exactly
    for (int k = 0; k < 16; ++k) CHECK(bank.dw(6, k) == -bank.dw(7, k));
    // increments are mean-zero and dt-scaled
    double acc = 0.0, acc2 = 0.0;
    const int big = 200000;
    const NoiseBank wide(65, big, 1, 0.01, false);
    for (int i = 0; i < big; ++i) {
        const double d = wide.dw(i, 0);
        acc += d;
        acc2 += d * d;
    }
    CHECK(std::abs(acc / big) < 4.0 * std::sqrt(0.01 / big));
    CHECK(acc2 / big == doctest::Approx(0.01).epsilon(0.02));
}

TEST_CASE("interaction kernel sums match the reference") {
    const int n = 300;
    std::mt19937_64 rng(66);
    std::uniform_real_distribution<double> ur(-1.0, 1.0);
    std::vector<double> x(n), w(n), out_ref(n);
    for (auto& v : x) v = ur(rng);
    for (auto& v : w) v = ur(rng);
    const auto kernel = [&](int i, int j) { return std::tanh(x[i] - x[j]); };
    ref::interaction_sum(n, kernel, w, out_ref);
    // same computation through the production per-particle pattern
    std::vector<double> out(n);
    par_for(n, [&](std::int64_t i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += kernel(static_cast<int>(i), j) * w[j];
        out[static_cast<std::size_t>(i)] = acc / n;
    });
    for (int i = 0; i < n; ++i) CHECK(out[i] == out_ref[i]);
}
