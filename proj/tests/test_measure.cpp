#include <doctest.h>

#include <random>
#include <sstream>

#include "mf/measure.hpp"
#include "support/oracles.hpp"

using namespace mf;

TEST_CASE("empirical measure moments") {
    const auto m = EmpiricalMeasure::from_samples({1.0, 0.0});
    CHECK(m.mean() == doctest::Approx(0.5));

    const auto dirac = EmpiricalMeasure::from_samples({3.0, 3.0, 3.0, 3.0});
    CHECK(dirac.mean() == doctest::Approx(3.0));
    CHECK(dirac.variance() == doctest::Approx(0.0));

    const auto q = EmpiricalMeasure::from_samples({0.0, 1.0, 2.0, 3.0});
    CHECK(q.second_moment() == doctest::Approx(3.5));  // 14/4 by direct sum
}

TEST_CASE("empirical measure rejects bad input") {
    CHECK_THROWS_AS(EmpiricalMeasure::from_samples({}), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalMeasure::from_samples({1.0, std::nan("")}), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalMeasure::from_sorted({2.0, 1.0}), std::invalid_argument);
}

TEST_CASE("wasserstein2 basics") {
    const auto a = EmpiricalMeasure::from_samples({0.0, 1.0});
    CHECK(wasserstein2(a, a) == doctest::Approx(0.0));

    const auto d0 = EmpiricalMeasure::from_samples({0.0, 0.0});
    const auto d1 = EmpiricalMeasure::from_samples({1.0, 1.0});
    CHECK(wasserstein2(d0, d1) == doctest::Approx(1.0));

    const auto p = EmpiricalMeasure::from_samples({0.0, 2.0});
    const auto q = EmpiricalMeasure::from_samples({1.0, 3.0});
    CHECK(wasserstein2(p, q) == doctest::Approx(1.0));
    CHECK(oracles::w2_bruteforce(p.sorted(), q.sorted()) == doctest::Approx(1.0));

    const auto r = EmpiricalMeasure::from_samples({0.0, 1.0, 2.0});
    CHECK_THROWS_AS(wasserstein2(a, r), std::invalid_argument);
}

TEST_CASE("sorted coupling matches brute force for small clouds") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> ur(-4.0, 4.0);
    std::uniform_int_distribution<int> un(1, 8);
    for (int rep = 0; rep < 60; ++rep) {
        const int n = un(rng);
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = ur(rng);
        for (auto& v : b) v = ur(rng);
        const auto ma = EmpiricalMeasure::from_samples(a);
        const auto mb = EmpiricalMeasure::from_samples(b);
        const double fast = wasserstein2(ma, mb);
        const double slow = oracles::w2_bruteforce(ma.sorted(), mb.sorted());
        CHECK(std::abs(fast - slow) < 1e-12);
    }
}

TEST_CASE("w2 metric and shift equivariance") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ur(-5.0, 5.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> a(12), b(12), c(12);
        for (int i = 0; i < 12; ++i) {
            a[i] = ur(rng);
            b[i] = ur(rng);
            c[i] = ur(rng);
        }
        const auto ma = EmpiricalMeasure::from_samples(a);
        const auto mb = EmpiricalMeasure::from_samples(b);
        const auto mc = EmpiricalMeasure::from_samples(c);
        CHECK(wasserstein2(ma, mb) == doctest::Approx(wasserstein2(mb, ma)));
        CHECK(wasserstein2(ma, mb) <= wasserstein2(ma, mc) + wasserstein2(mc, mb) + 1e-12);

        std::vector<double> as(a), bs(b);
        for (auto& v : as) v += 2.5;
        for (auto& v : bs) v += 2.5;
        const double shifted = wasserstein2(EmpiricalMeasure::from_samples(as), EmpiricalMeasure::from_samples(bs));
        CHECK(std::abs(shifted - wasserstein2(ma, mb)) < 1e-12);
    }
}

TEST_CASE("center examples and idempotence") {
    const auto r1 = center(std::vector<double>{1.0, 3.0});
    CHECK(r1.mean == doctest::Approx(2.0));
    CHECK(r1.centered[0] == doctest::Approx(-1.0));
    CHECK(r1.centered[1] == doctest::Approx(1.0));

    const auto r2 = center(std::vector<double>{7.5});
    CHECK(r2.mean == doctest::Approx(7.5));
    CHECK(r2.centered[0] == doctest::Approx(0.0));

    const auto r3 = center(std::vector<double>{0.0, 1.0, 2.0, 3.0});
    CHECK(r3.mean == doctest::Approx(1.5));
    CHECK(r3.centered[0] == doctest::Approx(-1.5));
    CHECK(r3.centered[3] == doctest::Approx(1.5));

    const auto again = center(r3.centered);
    CHECK(std::abs(again.mean) < 1e-14);
}

TEST_CASE("csv emission") {
    const auto m = EmpiricalMeasure::from_samples({2.0, 1.0});
    std::ostringstream out;
    m.write_csv(out);
    CHECK(out.str() == "index,value\n0,1\n1,2\n");
}

TEST_CASE("joint cloud caches moments and centered copy") {
    const JointEmpiricalMeasure j({1.0, 3.0}, {2.0, -2.0});
    CHECK(j.mean_first() == doctest::Approx(2.0));
    CHECK(j.mean_second() == doctest::Approx(0.0));
    CHECK(j.first_centered()[0] == doctest::Approx(-1.0));
    CHECK(j.second_moment_second() == doctest::Approx(4.0));
    CHECK(j.mean_of([](double a, double b) { return a * b; }) == doctest::Approx(-2.0));
    CHECK_THROWS_AS(JointEmpiricalMeasure({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(JointEmpiricalMeasure({1.0}, {1.0, 2.0}), std::invalid_argument);
}
