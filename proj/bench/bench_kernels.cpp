// Timing comparison between the OpenMP kernels and the serial reference
// implementations. Run: mf_bench [particles] [steps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "mf/forward.hpp"
#include "mf/ref.hpp"

using namespace mf;
using clock_type = std::chrono::steady_clock;

namespace {

double time_of(const std::function<void()>& fn) {
    const auto t0 = clock_type::now();
    fn();
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const int n = argc > 1 ? std::atoi(argv[1]) : 50000;
    const int m = argc > 2 ? std::atoi(argv[2]) : 200;
    std::printf("particles=%d steps=%d\n", n, m);

    const TimeGrid grid(1.0, m);
    const NoiseBank noise(7, n, m, grid.dt());
    const auto spec = example_sde("piecewise_l_sde");
    const auto lq = lq_problem({.sigma0 = 1.0});
    auto u = ControlGrid::constant(grid, {0.1}, {-2.0}, {2.0});

    // forward Euler-Maruyama
    double mean_par = 0.0, mean_one = 0.0, mean_ref = 0.0;
    set_max_workers(0);
    const double t_par = time_of([&] { mean_par = simulate_mkv(spec, -1.0, grid, noise).stats().back().mean; });
    set_max_workers(1);
    const double t_one = time_of([&] { mean_one = simulate_mkv(spec, -1.0, grid, noise).stats().back().mean; });
    set_max_workers(0);
    const double t_ref = time_of([&] {
        const auto ens = ref::simulate_mkv(spec, -1.0, grid, noise);
        mean_ref = ref::mean(ens.column(m));
    });
    std::printf("forward mkv       omp %.3fs | 1 worker %.3fs | serial ref %.3fs | speedup x%.2f\n",
                t_par, t_one, t_ref, t_ref / t_par);
    std::printf("                  final means %.12f / %.12f / %.12f\n", mean_par, mean_one, mean_ref);

    // controlled dynamics
    set_max_workers(0);
    const double c_par = time_of([&] { (void)simulate_controlled(lq, u, grid, noise); });
    const double c_ref = time_of([&] { (void)ref::simulate_controlled(lq, u, grid, noise); });
    std::printf("controlled lq     omp %.3fs | serial ref %.3fs | speedup x%.2f\n", c_par, c_ref,
                c_ref / c_par);

    // bare particle-update kernel at a frozen law (no sort barrier)
    {
        std::vector<double> cur(static_cast<std::size_t>(n), -1.0), next(static_cast<std::size_t>(n));
        const auto law = EmpiricalMeasure::from_samples(std::vector<double>(cur));
        const double dt = grid.dt();
        auto sweep = [&] {
            for (int k = 0; k < m; ++k) {
                par_for(n, [&](std::int64_t i) {
                    const double xv = cur[static_cast<std::size_t>(i)];
                    next[static_cast<std::size_t>(i)] = xv + spec.b(0.5, xv, law) * dt +
                                                        spec.sigma(0.5, xv, law) * noise.dw(static_cast<int>(i), k);
                });
                cur.swap(next);
            }
        };
        set_max_workers(0);
        const double k_par = time_of(sweep);
        set_max_workers(1);
        const double k_ser = time_of(sweep);
        set_max_workers(0);
        std::printf("update kernel     omp %.3fs | 1 worker %.3fs | speedup x%.2f\n", k_par, k_ser,
                    k_ser / k_par);
    }

    // O(N^2) interaction sum; both sides call through std::function
    const int ni = std::min(n, 4000);
    std::vector<double> x(ni), w(ni), out(ni);
    for (int i = 0; i < ni; ++i) {
        x[i] = 0.01 * i;
        w[i] = 1.0 / (1 + i);
    }
    const std::function<double(int, int)> kernel = [&](int i, int j) {
        return x[i] - x[j] > 0 ? x[i] - x[j] : 0.0;
    };
    const double i_par = time_of([&] {
        par_for(ni, [&](std::int64_t i) {
            double acc = 0.0;
            for (int j = 0; j < ni; ++j) acc += kernel(static_cast<int>(i), j) * w[j];
            out[static_cast<std::size_t>(i)] = acc / ni;
        });
    });
    const double i_ref = time_of([&] { ref::interaction_sum(ni, kernel, w, out); });
    std::printf("interaction N^2   omp %.3fs | serial ref %.3fs | speedup x%.2f (N=%d)\n", i_par, i_ref,
                i_ref / i_par, ni);
    return 0;
}
