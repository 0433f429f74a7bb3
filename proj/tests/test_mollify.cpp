#include <doctest.h>

#include <cmath>
#include <random>

#include "mf/mollify.hpp"

using namespace mf;

namespace {
JointEmpiricalMeasure small_cloud() { return JointEmpiricalMeasure({-0.3, 0.1, 0.2}, {0.0, 0.1, -0.1}); }
}  // namespace

TEST_CASE("bump kernel normalization and support") {
    const auto k = BumpKernel::make(32);
    CHECK(k.integral() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(k.density(1.2, 0.5) == 0.0);
    CHECK(k.density(-0.1, 0.5) == 0.0);
    CHECK(k.density(0.5, 0.5) == doctest::Approx(k.normalization() * std::exp(-8.0)));
    CHECK(k.density(0.3, 0.7) > 0.0);

    // too coarse to certify 1e-8 mass
    CHECK_THROWS_AS(BumpKernel::make(8), std::invalid_argument);
    CHECK_THROWS_AS(BumpKernel::make(7), std::invalid_argument);
}

TEST_CASE("gauss-legendre rule integrates polynomials exactly") {
    std::vector<double> x, w;
    gauss_legendre_01(12, x, w);
    double s0 = 0.0, s5 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s0 += w[i];
        s5 += w[i] * std::pow(x[i], 5);
    }
    CHECK(s0 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s5 == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("constant base convolves to itself") {
    const auto k = BumpKernel::make(32);
    DriverSpec c;
    c.f = [](double, double, double, const JointEmpiricalMeasure&) { return -2.5; };
    c.f_tilde = [](double, double, double, double, const JointEmpiricalMeasure&) { return -2.5; };
    for (int n : {1, 4, 128}) {
        const auto md = make_mollified(c, n, k, 0.0);
        CHECK(evaluate_mollified(md, 0.3, 1.7, -0.4, small_cloud()) == doctest::Approx(-2.5).epsilon(1e-13));
    }
}

TEST_CASE("linear base shifts by the marginal first moment over n") {
    const auto k = BumpKernel::make(32);
    DriverSpec lin;
    lin.f = [](double, double y, double, const JointEmpiricalMeasure&) { return y; };
    lin.f_tilde = [](double, double y, double, double, const JointEmpiricalMeasure&) { return y; };
    const double m1 = k.marginal_first_moment();
    // independent direct quadrature of the same moment
    std::vector<double> x, w;
    gauss_legendre_01(64, x, w);
    double s = 0.0, su = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double kv = (x[i] > 0 && x[i] < 1) ? std::exp(-1.0 / (x[i] * (1.0 - x[i]))) : 0.0;
        s += w[i] * kv;
        su += w[i] * x[i] * kv;
    }
    CHECK(m1 == doctest::Approx(su / s).epsilon(1e-10));
    for (int n : {2, 4, 16}) {
        const auto md = make_mollified(lin, n, k, 0.0);
        const double got = evaluate_mollified(md, 0.0, 0.8, 0.0, small_cloud());
        CHECK(got == doctest::Approx(0.8 - m1 / n).epsilon(1e-12));
    }
}

TEST_CASE("sqrt_cap convergence improves monotonically in n") {
    const auto k = BumpKernel::make(32);
    const auto drv = example_driver("sqrt_cap");
    const auto cloud = small_cloud();
    const double y = 0.25, m = 1.0;
    double prev = 1e300;
    for (int n = 2; n <= 256; n *= 2) {
        const auto md = make_mollified(drv, n, k, 0.0);
        const double err = std::abs(evaluate_mollified(md, 0.0, y, m, cloud) - md.base(0.0, y, m, cloud));
        CHECK(err <= prev + 1e-6);
        prev = err;
    }
    CHECK(prev < 0.05);  // modulus of continuity of sqrt at 1/256
}

TEST_CASE("lipschitz probe behaviors") {
    const auto k = BumpKernel::make(32);
    const auto cloud = small_cloud();

    // constant base: zero estimate
    DriverSpec c;
    c.f = [](double, double, double, const JointEmpiricalMeasure&) { return 1.0; };
    c.f_tilde = [](double, double, double, double, const JointEmpiricalMeasure&) { return 1.0; };
    std::vector<std::array<double, 2>> pts;
    for (int i = 0; i < 16; ++i) pts.push_back({-1.0 + 2.0 * i / 15.0, 1.0 - 2.0 * i / 15.0});
    CHECK(lipschitz_probe(make_mollified(c, 4, k, 0.0), 0.0, pts, cloud) == doctest::Approx(0.0));

    // globally Lipschitz base: estimate below the global constant
    DriverSpec lin;
    lin.f = [](double, double, double, const JointEmpiricalMeasure&) { return 0.0; };
    lin.f_tilde = [](double, double y, double, double m, const JointEmpiricalMeasure&) {
        return 0.7 * std::sin(y) + 0.3 * std::cos(m);
    };
    CHECK(lipschitz_probe(make_mollified(lin, 8, k, 0.0), 0.0, pts, cloud) <= 0.7 + 1e-6);

    // sqrt kink: estimate finite for fixed n but grows ~ sqrt(n)
    const auto drv = example_driver("sqrt_cap");
    auto kink_pts = [&](int n) {
        std::vector<std::array<double, 2>> p;
        for (int i = 0; i < 16; ++i) p.push_back({-2.0 / n + (4.0 / n) * i / 15.0, -1.0});
        return p;
    };
    const double l8 = lipschitz_probe(make_mollified(drv, 8, k, 0.0), 0.0, kink_pts(8), cloud);
    const double l64 = lipschitz_probe(make_mollified(drv, 64, k, 0.0), 0.0, kink_pts(64), cloud);
    const double l256 = lipschitz_probe(make_mollified(drv, 256, k, 0.0), 0.0, kink_pts(256), cloud);
    CHECK(std::isfinite(l64));
    CHECK(l64 > l8);
    CHECK(l256 > l64);

    // too few probe points
    std::vector<std::array<double, 2>> few(5, {0.0, 0.0});
    CHECK_THROWS_AS(lipschitz_probe(make_mollified(c, 2, k, 0.0), 0.0, few, cloud), std::invalid_argument);
}

TEST_CASE("growth constant is uniform across n") {
    const auto k = BumpKernel::make(32);
    const auto cloud = small_cloud();
    for (const char* name : {"sqrt_cap", "oscillating_g", "piecewise_l"}) {
        const auto drv = example_driver(name);
        double cmin = 1e300, cmax = 0.0;
        for (int n = 1; n <= 256; n *= 2) {
            const auto md = make_mollified(drv, n, k, 0.3);
            double c = 0.0;
            for (int i = 0; i <= 8; ++i) {
                for (int j = 0; j <= 8; ++j) {
                    const double y = -3.0 + 6.0 * i / 8.0, m = -3.0 + 6.0 * j / 8.0;
                    const double den = 1.0 + std::abs(y) + std::abs(m) +
                                       std::sqrt(cloud.second_moment_first()) +
                                       std::sqrt(cloud.second_moment_second());
                    c = std::max(c, std::abs(evaluate_mollified(md, 0.0, y, m, cloud)) / den);
                }
            }
            cmin = std::min(cmin, c);
            cmax = std::max(cmax, c);
        }
        CHECK(cmax / cmin <= 2.0);
    }
}

TEST_CASE("monotonicity in expectation is preserved under smoothing") {
    // E[(g^n(Y1) - g^n(Y2))(Y1 - Y2)] <= C E[|Y1 - Y2|^2] with C stable in n
    const auto k = BumpKernel::make(32);
    const auto drv = example_driver("sqrt_cap");
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss(0.2, 0.8);
    const int n_cloud = 64;
    std::vector<double> y1(n_cloud), y2(n_cloud), zs(n_cloud, 0.0);
    for (int i = 0; i < n_cloud; ++i) {
        y1[i] = gauss(rng);
        y2[i] = gauss(rng);
    }
    const auto c1 = center(y1);
    const auto c2 = center(y2);
    const JointEmpiricalMeasure j1(c1.centered, zs), j2(c2.centered, zs);

    // the inequality is one-sided: the minimal admissible constant is
    // the positive part of the measured ratio, and it must not drift
    // with n
    double cworst = -1e300, bworst = 0.0, bbest = 1e300;
    for (int n = 1; n <= 256; n *= 4) {
        const auto md = make_mollified(drv, n, k, 0.0);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n_cloud; ++i) {
            const double g1 = evaluate_mollified(md, 0.0, y1[i], c1.mean, j1);
            const double g2 = evaluate_mollified(md, 0.0, y2[i], c2.mean, j2);
            num += (g1 - g2) * (y1[i] - y2[i]);
            den += (y1[i] - y2[i]) * (y1[i] - y2[i]);
        }
        const double bound = std::max(0.0, num / den);
        cworst = std::max(cworst, num / den);
        bworst = std::max(bworst, bound);
        bbest = std::min(bbest, bound);
    }
    // sqrt_cap is decreasing, so the admissible constant is zero for
    // every n
    CHECK(cworst <= 1e-2);
    CHECK(bworst - bbest <= 0.1 * (1.0 + bworst));
}

TEST_CASE("mollified driver spec needs the centered form") {
    DriverSpec bare;
    bare.f = [](double, double, double, const JointEmpiricalMeasure&) { return 0.0; };
    CHECK_THROWS_AS(mollified_driver_spec(bare, 4, BumpKernel::make(32)), std::invalid_argument);
    CHECK_THROWS_AS(make_mollified(bare, 4, BumpKernel::make(32), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_mollified(example_driver("sqrt_cap"), 0, BumpKernel::make(32), 0.0),
                    std::invalid_argument);
}
