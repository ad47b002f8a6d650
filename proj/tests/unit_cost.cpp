#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "sot/cost.hpp"
#include "support.hpp"

using namespace sot;
using test_support::tangent_basis;

TEST_CASE("log kernel cost values") {
    auto k = log_kernel();
    UnitVector x({1.0, 0.0, 0.0});

    CHECK(cost(k, x, UnitVector({0.0, 1.0, 0.0})) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(cost(k, x, antipode(x)) == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
    CHECK(cost(k, x, x) == kInf);
    CHECK(cost(power_kernel(2.0), x, x) == kInf);
}

TEST_CASE("log cost equals -log(1 - x.y) away from the diagonal") {
    auto k = log_kernel();
    Rng rng(3);
    for (int rep = 0; rep < 2000; ++rep) {
        UnitVector x = rng.sphere_point(2), y = rng.sphere_point(2);
        if (chord(x, y) < 0.05) continue;
        CHECK(cost(k, x, y) == doctest::Approx(-std::log(1.0 - dot(x, y))).epsilon(1e-12));
    }
}

TEST_CASE("cost is exactly symmetric") {
    Rng rng(5);
    auto k = power_kernel(1.5);
    for (int rep = 0; rep < 1000; ++rep) {
        UnitVector x = rng.sphere_point(2), y = rng.sphere_point(2);
        CHECK(cost(k, x, y) == cost(k, y, x));
    }
}

TEST_CASE("tangential_gradient matches the worked example") {
    auto k = log_kernel();
    UnitVector x({1.0, 0.0, 0.0}), y({0.0, 1.0, 0.0});
    auto a = tangential_gradient(k, x, y);
    CHECK(a.vec[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(a.vec[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(a.vec[2] == doctest::Approx(0.0).epsilon(1e-15));

    auto at_antipode = tangential_gradient(k, x, antipode(x));
    CHECK(at_antipode.norm() < 1e-14);

    CHECK_THROWS_AS(tangential_gradient(k, x, x), std::domain_error);
}

TEST_CASE("tangential_gradient agrees with geodesic finite differences") {
    Rng rng(17);
    for (const auto& k : {log_kernel(), power_kernel(1.0)}) {
        for (int rep = 0; rep < 500; ++rep) {
            UnitVector x = rng.sphere_point(2), y = rng.sphere_point(2);
            if (chord(x, y) < 0.2 || chord(x, y) > 1.95) continue;
            auto grad = tangential_gradient(k, x, y);
            for (const auto& e : tangent_basis(x)) {
                double fd = test_support::geodesic_cost_derivative(k, x, e, y, 1e-6);
                double an = dot(grad.vec, e);
                CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
            }
        }
    }
}

TEST_CASE("g closed forms for the log kernel") {
    auto k = log_kernel();
    CHECK(g_value(k, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g_value(k, 0.5) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(g_inverse(k, 3.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(g_inverse(k, 0.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(g_inverse(k, -1.0), std::domain_error);
    CHECK_THROWS_AS(g_value(k, 0.0), std::domain_error);
    CHECK_THROWS_AS(g_value(k, 2.5), std::domain_error);
}

TEST_CASE("g round trip by bisection for both kernels") {
    Rng rng(23);
    for (const auto& k : {log_kernel(), power_kernel(0.7), power_kernel(2.0)}) {
        for (int rep = 0; rep < 100; ++rep) {
            double t = rng.uniform(1e-3, 2.0);
            double r = g_value(k, t);
            CHECK(std::abs(g_inverse(k, r) - t) < 1e-10);
        }
    }
}

TEST_CASE("inverse gradient map hits the worked example") {
    auto k = log_kernel();
    UnitVector x({1.0, 0.0, 0.0});
    TangentVector a(x, {0.0, 1.0, 0.0});
    UnitVector y = inverse_map_M(k, a);
    CHECK(chord(y, UnitVector({0.0, 1.0, 0.0})) < 1e-12);

    CHECK_THROWS_AS(inverse_map_M(k, TangentVector(x, {0.0, 0.0, 0.0})), std::domain_error);
}

TEST_CASE("gradient and inverse map round trip") {
    Rng rng(29);
    for (const auto& k : {log_kernel(), power_kernel(1.0)}) {
        int done = 0;
        while (done < 10000) {
            UnitVector x = rng.sphere_point(2), y = rng.sphere_point(2);
            double d = chord(x, y);
            if (d < 0.1 || d > 1.9999) continue;
            auto a = tangential_gradient(k, x, y);
            UnitVector back = inverse_map_M(k, a);
            CHECK(chord(back, y) < 1e-10);
            ++done;
        }
    }
}

TEST_CASE("inverse map produces unit vectors before renormalization") {
    Rng rng(31);
    auto k = log_kernel();
    for (int rep = 0; rep < 1000; ++rep) {
        UnitVector x = rng.sphere_point(2), y = rng.sphere_point(2);
        if (chord(x, y) < 0.1) continue;
        auto a = tangential_gradient(k, x, y);
        double t = g_inverse(k, a.squared_norm());
        Vec raw(x.ambient_dim());
        for (std::size_t i = 0; i < raw.size(); ++i)
            raw[i] = (1.0 - t) * x[i] - a.vec[i] / k.l_prime(t);
        CHECK(std::abs(norm(raw) - 1.0) < 1e-10);
    }
}

TEST_CASE("admissibility report: log kernel is strictly decreasing") {
    auto rep = admissibility_report(log_kernel());
    CHECK(rep.g_monotone);
    CHECK(rep.direction == -1);
    CHECK(rep.failures.empty());
    CHECK(rep.domain_lo == doctest::Approx(0.0));
    CHECK(rep.domain_hi == doctest::Approx(g_value(log_kernel(), 5e-4)));
}

TEST_CASE("admissibility report: power kernels stay monotone") {
    for (double q : {0.3, 1.0, 3.0}) {
        auto rep = admissibility_report(power_kernel(q));
        CHECK(rep.g_monotone);
        CHECK(rep.direction == -1);
    }
}

TEST_CASE("admissibility report flags an oscillating profile") {
    // l'(t) = -1/t - 0.45 sin(8t) stays negative on (0,2] but makes g wiggle.
    CostKernel wiggly{
        "wiggly",
        [](double t) { return -std::log(t) + 0.05625 * std::cos(8.0 * t); },
        [](double t) { return -1.0 / t - 0.45 * std::sin(8.0 * t); },
        [](double t) { return 1.0 / (t * t) - 3.6 * std::cos(8.0 * t); },
    };
    auto rep = admissibility_report(wiggly);
    CHECK_FALSE(rep.g_monotone);
    CHECK_FALSE(rep.failures.empty());
}

TEST_CASE("kernel parsing") {
    CHECK(parse_kernel("log").name == "log");
    CHECK(parse_kernel("power:1.5").l(1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(parse_kernel("power:-1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel("power:abc"), std::invalid_argument);
    CHECK_THROWS_AS(parse_kernel("gauss"), std::invalid_argument);
}
