#include <doctest.h>

#include <cmath>
#include <random>

#include "corpusdrift/stats.hpp"
#include "oracles.hpp"

using namespace corpusdrift;

TEST_CASE("welch_t on the hand-worked fixture") {
    std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8};
    auto r = stats::welch_t(a, b);
    // Exact values: t = -sqrt(3), df = 75/17.
    CHECK(r.t_stat == doctest::Approx(-std::sqrt(3.0)).epsilon(1e-12));
    CHECK(r.df == doctest::Approx(75.0 / 17.0).epsilon(1e-12));
    // Cross-checked against an independent statistical implementation.
    CHECK(r.p_two_sided == doctest::Approx(0.15158050484530383).epsilon(1e-9));
}

TEST_CASE("welch_t degenerate and error cases") {
    std::vector<double> same{1, 2, 3};
    auto r = stats::welch_t(same, same);
    CHECK(r.t_stat == 0.0);
    CHECK(r.p_two_sided == 1.0);

    std::vector<double> z1{0, 0}, z2{0, 0}, ones{1, 1};
    auto rz = stats::welch_t(z1, z2);
    CHECK(rz.p_two_sided == 1.0);
    auto rd = stats::welch_t(z1, ones);
    CHECK(rd.p_two_sided == 0.0);
    CHECK(std::isinf(rd.t_stat));

    std::vector<double> tiny{1};
    CHECK_THROWS_AS(stats::welch_t(tiny, same), std::invalid_argument);
}

TEST_CASE("welch_t antisymmetry and scale invariance on random samples") {
    auto rng = oracles::make_rng(41);
    std::uniform_real_distribution<double> value(-3.0, 3.0);
    std::uniform_int_distribution<int> size(2, 40);
    for (int iter = 0; iter < 300; ++iter) {
        std::vector<double> a(size(rng)), b(size(rng));
        for (auto& v : a) v = value(rng);
        for (auto& v : b) v = value(rng);
        auto ab = stats::welch_t(a, b);
        auto ba = stats::welch_t(b, a);
        CHECK(ab.t_stat == doctest::Approx(-ba.t_stat).epsilon(1e-12));
        CHECK(ab.p_two_sided == doctest::Approx(ba.p_two_sided).epsilon(1e-12));

        double c = 3.25;
        std::vector<double> ac = a, bc = b;
        for (auto& v : ac) v *= c;
        for (auto& v : bc) v *= c;
        auto scaled = stats::welch_t(ac, bc);
        CHECK(scaled.t_stat == doctest::Approx(ab.t_stat).epsilon(1e-12));
        CHECK(scaled.df == doctest::Approx(ab.df).epsilon(1e-12));
        CHECK(scaled.p_two_sided == doctest::Approx(ab.p_two_sided).epsilon(1e-12));
    }
}

TEST_CASE("summary-based welch equals the span-based overload") {
    auto rng = oracles::make_rng(42);
    std::uniform_real_distribution<double> value(0.0, 1.0);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<double> a(12), b(7);
        for (auto& v : a) v = value(rng);
        for (auto& v : b) v = value(rng);
        auto direct = stats::welch_t(a, b);
        auto summarized = stats::welch_t(stats::summarize(a), stats::summarize(b));
        CHECK(direct.t_stat == summarized.t_stat);
        CHECK(direct.p_two_sided == summarized.p_two_sided);
    }
}

TEST_CASE("student_t_sf basics") {
    CHECK(stats::student_t_sf(0.0, 1.0) == 0.5);
    CHECK(stats::student_t_sf(0.0, 123.4) == 0.5);
    // Verified against a numerical integration of the t density.
    CHECK(stats::student_t_sf(2.0, 10.0) == doctest::Approx(0.036694017385370196).epsilon(1e-9));
    CHECK_THROWS_AS(stats::student_t_sf(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(stats::student_t_sf(1.0, -2.0), std::invalid_argument);
}

TEST_CASE("student_t_sf matches quadrature of the density") {
    for (double df : {1.0, 2.0, 3.4, 5.0, 12.3, 50.0}) {
        for (double t : {-4.0, -1.5, -0.3, 0.2, 0.9, 2.5, 6.0}) {
            double expected = oracles::t_sf_by_quadrature(t, df);
            CHECK(stats::student_t_sf(t, df) == doctest::Approx(expected).epsilon(1e-8));
        }
    }
}

TEST_CASE("student_t_sf is monotone decreasing and symmetric") {
    for (double df : {0.7, 2.0, 9.0, 31.0}) {
        double prev = 1.0;
        for (double t = -8.0; t <= 8.0; t += 0.25) {
            double sf = stats::student_t_sf(t, df);
            CHECK(sf <= prev + 1e-15);
            prev = sf;
            CHECK(sf + stats::student_t_sf(-t, df) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("incomplete beta symmetry point and bounds") {
    for (double a : {0.5, 1.0, 2.5, 7.0, 40.0}) {
        CHECK(stats::regularized_incomplete_beta(0.5, a, a) ==
              doctest::Approx(0.5).epsilon(1e-12));
    }
    CHECK(stats::regularized_incomplete_beta(0.0, 2.0, 3.0) == 0.0);
    CHECK(stats::regularized_incomplete_beta(1.0, 2.0, 3.0) == 1.0);
    CHECK_THROWS_AS(stats::regularized_incomplete_beta(0.5, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(stats::regularized_incomplete_beta(1.5, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("incomplete beta matches direct integration on a grid") {
    for (double a : {1.0, 1.5, 2.0, 5.0, 10.0}) {
        for (double b : {1.0, 1.5, 2.0, 5.0, 10.0}) {
            for (double x : {0.1, 0.3, 0.5, 0.7, 0.9}) {
                double expected = oracles::ibeta_by_quadrature(x, a, b);
                CHECK(stats::regularized_incomplete_beta(x, a, b) ==
                      doctest::Approx(expected).epsilon(1e-10));
            }
        }
    }
}
