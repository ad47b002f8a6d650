#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <numbers>
#include <stdexcept>

#include "sot/cost.hpp"
#include "sot/errors.hpp"
#include "sot/reflector.hpp"
#include "support.hpp"

using namespace sot;

namespace {

ReflectorSpec antipodal_pair(double p0, double p1) {
    ReflectorSpec spec;
    spec.directions = {UnitVector({0.0, 0.0, 1.0}), UnitVector({0.0, 0.0, -1.0})};
    spec.focal_params = {p0, p1};
    return spec;
}

ReflectorSpec tetrahedral(double p = 1.0) {
    ReflectorSpec spec;
    double s = 1.0 / std::sqrt(3.0);
    spec.directions = {UnitVector({s, s, s}), UnitVector({s, -s, -s}), UnitVector({-s, s, -s}),
                       UnitVector({-s, -s, s})};
    spec.focal_params.assign(4, p);
    return spec;
}

}  // namespace

TEST_CASE("envelope of a single paraboloid") {
    ReflectorSpec spec;
    spec.directions = {UnitVector({0.0, 0.0, 1.0})};
    spec.focal_params = {0.7};
    Rng rng(171);
    for (int rep = 0; rep < 200; ++rep) {
        UnitVector x = rng.sphere_point(2);
        if (chord(x, spec.directions[0]) < 1e-3) continue;
        auto ev = envelope_radius(spec, x);
        CHECK(ev.rho == doctest::Approx(0.7 / (1.0 - x.z())).epsilon(1e-13));
        REQUIRE(ev.argmin.size() == 1);
        CHECK(ev.argmin[0] == 0);
    }
}

TEST_CASE("envelope minimum property and bisector ties") {
    auto spec = antipodal_pair(1.0, 1.0);
    Rng rng(181);
    for (int rep = 0; rep < 500; ++rep) {
        UnitVector x = rng.sphere_point(2);
        auto ev = envelope_radius(spec, x);
        for (std::size_t i = 0; i < spec.size(); ++i) {
            double denom = 1.0 - dot(x, spec.directions[i]);
            if (denom > 0.0) CHECK(ev.rho <= spec.focal_params[i] / denom + 1e-12);
        }
    }
    // Equator point: both paraboloids support.
    auto tie = reflector_map(spec, UnitVector({1.0, 0.0, 0.0}));
    CHECK(tie.size() == 2);
    // Off equator: unique.
    auto north_side = reflector_map(spec, UnitVector({1.0, 0.0, 0.5}));
    REQUIRE(north_side.size() == 1);
    // The cell of direction y is the region away from y.
    CHECK(north_side[0] == 1);
}

TEST_CASE("energy masses: single direction collects everything") {
    ReflectorSpec spec;
    spec.directions = {UnitVector({0.0, 0.0, 1.0})};
    spec.focal_params = {1.0};
    auto grid = make_grid(GridKind::fibonacci, 2000, 0, 2);
    std::vector<double> intensity(grid.size(), 1.0 / (4.0 * std::numbers::pi));
    auto cd = energy_masses(spec, grid, intensity);
    CHECK(cd.masses[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cd.total() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("energy masses: antipodal symmetry splits in half") {
    auto spec = antipodal_pair(1.0, 1.0);
    auto grid = make_grid(GridKind::fibonacci, 100000, 0, 2);
    std::vector<double> intensity(grid.size(), 1.0 / (4.0 * std::numbers::pi));
    auto cd = energy_masses(spec, grid, intensity);
    CHECK(std::abs(cd.masses[0] - 0.5) < 1e-3);
    CHECK(std::abs(cd.masses[1] - 0.5) < 1e-3);
    CHECK(cd.total() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("energy masses: tetrahedral symmetry gives quarters") {
    auto spec = tetrahedral();
    auto grid = make_grid(GridKind::fibonacci, 100000, 0, 2);
    std::vector<double> intensity(grid.size(), 1.0 / (4.0 * std::numbers::pi));
    auto cd = energy_masses(spec, grid, intensity);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(cd.masses[i] - 0.25) < 1e-3);
}

TEST_CASE("cells, map and masses are scale equivariant") {
    auto spec = tetrahedral(0.8);
    ReflectorSpec scaled = spec;
    for (double& p : scaled.focal_params) p *= 37.5;
    auto grid = make_grid(GridKind::fibonacci, 5000, 0, 2);
    std::vector<double> intensity(grid.size(), 1.0);
    auto a = energy_masses(spec, grid, intensity);
    auto b = energy_masses(scaled, grid, intensity);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.masses[i] == b.masses[i]);
        CHECK(a.cells[i] == b.cells[i]);
    }
}

TEST_CASE("weak solve: one target is immediate") {
    DiscreteMeasure targets({UnitVector({0.0, 0.0, 1.0})}, {1.0});
    auto grid = make_grid(GridKind::fibonacci, 500, 0, 2);
    std::vector<double> intensity(grid.size(), 1.0);
    auto spec = solve_weak_reflector(targets, grid, intensity);
    CHECK(spec.focal_params[0] == doctest::Approx(1.0));
}

TEST_CASE("weak solve: antipodal halves keep equal focal parameters") {
    UnitVector n({0.0, 0.0, 1.0});
    DiscreteMeasure targets({n, antipode(n)}, {0.5, 0.5});
    auto grid = make_grid(GridKind::fibonacci, 20000, 0, 2);
    std::vector<double> intensity(grid.size(), 1.0);
    auto spec = solve_weak_reflector(targets, grid, intensity);
    CHECK(std::abs(spec.focal_params[0] / spec.focal_params[1] - 1.0) <= 1e-9);
}

TEST_CASE("weak solve: 3:1 antipodal split lands on the closed-form latitude") {
    // Cell boundary between antipodal directions with ratio p1/p0 = r sits
    // at x.y0 = (r - 1) / (r + 1); for masses (3/4, 1/4) of a uniform
    // source the boundary is the latitude x.y0 = 1/2.
    UnitVector n({0.0, 0.0, 1.0});
    DiscreteMeasure targets({n, antipode(n)}, {0.75, 0.25});
    auto grid = make_grid(GridKind::fibonacci, 100000, 0, 2);
    std::vector<double> intensity(grid.size(), 1.0);
    WeakSolveOptions opt;
    opt.tol = 2e-4;
    auto spec = solve_weak_reflector(targets, grid, intensity, opt);
    double ratio = spec.focal_params[1] / spec.focal_params[0];
    double boundary = (ratio - 1.0) / (ratio + 1.0);
    CHECK(std::abs(boundary - 0.5) < 1e-3);

    auto cd = energy_masses(spec, grid, intensity);
    double total = cd.total();
    CHECK(std::abs(cd.masses[0] / total - 0.75) < 2e-4 * 0.75 + 1e-12);
}

TEST_CASE("weak solve handles asymmetric targets and skewed masses") {
    auto grid = make_grid(GridKind::fibonacci, 20000, 0, 2);
    std::vector<double> intensity(grid.size(), 1.0);
    Rng rng(555);
    int converged = 0;
    for (int rep = 0; rep < 6; ++rep) {
        std::size_t nt = 2 + rng.index(7);
        std::vector<UnitVector> dirs;
        std::vector<double> masses;
        double total = 0.0;
        for (std::size_t j = 0; j < nt; ++j) {
            dirs.push_back(rng.sphere_point(2));
            masses.push_back(0.05 + rng.uniform());
            total += masses.back();
        }
        for (double& w : masses) w /= total;
        DiscreteMeasure targets(dirs, masses);
        if (targets.size() != nt) continue;
        WeakSolveOptions opt;
        opt.tol = 2e-3;
        auto spec = solve_weak_reflector(targets, grid, intensity, opt);
        auto nu = targets.normalized();
        auto cd = energy_masses(spec, grid,
                                std::vector<double>(grid.size(), 1.0 / grid.total_weight()));
        for (std::size_t j = 0; j < nt; ++j)
            CHECK(std::abs(cd.masses[j] - nu.weight(j)) <= opt.tol * nu.weight(j) + 1e-12);
        ++converged;
    }
    CHECK(converged >= 5);
}

TEST_CASE("weak solve throws with residuals when the tolerance is unreachable") {
    UnitVector n({0.0, 0.0, 1.0});
    // Thirds cannot be hit exactly by prefix sums of equal node energies,
    // so a tolerance below the quantization floor cannot converge.
    DiscreteMeasure targets({n, antipode(n)}, {2.0 / 3.0, 1.0 / 3.0});
    auto grid = make_grid(GridKind::fibonacci, 5000, 0, 2);
    std::vector<double> intensity(grid.size(), 1.0);
    WeakSolveOptions opt;
    opt.max_iterations = 200;
    opt.tol = 1e-13;
    try {
        solve_weak_reflector(targets, grid, intensity, opt);
        FAIL("expected NonConvergenceError");
    } catch (const NonConvergenceError& e) {
        CHECK(e.residuals.size() == 2);
    }

    // A one-iteration budget cannot reach a modest tolerance either.
    WeakSolveOptions tiny;
    tiny.max_iterations = 1;
    tiny.tol = 1e-6;
    CHECK_THROWS_AS(solve_weak_reflector(targets, grid, intensity, tiny),
                    NonConvergenceError);
}

TEST_CASE("weak solve on the circle matches the closed-form arc boundary") {
    // Uniform source on S^1, antipodal targets with masses (3/4, 1/4): the
    // cell of the heavy target is {cos th <= t*} with measure
    // 1 - acos(t*)/pi, so t* = cos(pi/4) and p1/p0 = (1+t*)/(1-t*).
    UnitVector e0({1.0, 0.0});
    DiscreteMeasure targets({e0, antipode(e0)}, {0.75, 0.25});
    auto grid = make_grid(GridKind::fibonacci, 40000, 0, 1);
    std::vector<double> intensity(grid.size(), 1.0);
    WeakSolveOptions opt;
    opt.tol = 1e-4;
    auto spec = solve_weak_reflector(targets, grid, intensity, opt);
    double ratio = spec.focal_params[1] / spec.focal_params[0];
    double t_star = (ratio - 1.0) / (ratio + 1.0);
    CHECK(std::abs(t_star - std::sqrt(0.5)) < 1e-3);
}

TEST_CASE("snell reflection: examples, involution, angle preservation") {
    UnitVector z({0.0, 0.0, 1.0});
    auto down = snell_reflect(z, z);
    CHECK(chord(down, antipode(z)) < 1e-15);

    UnitVector x({1.0, 0.0, 0.0});
    auto grazing = snell_reflect(x, z);
    CHECK(chord(grazing, x) < 1e-15);

    Rng rng(191);
    for (int rep = 0; rep < 1000; ++rep) {
        UnitVector v = rng.sphere_point(2), n = rng.sphere_point(2);
        auto r = snell_reflect(v, n);
        CHECK(std::abs(norm(r.coords()) - 1.0) < 1e-14);
        auto back = snell_reflect(r, n);
        CHECK(chord(back, v) < 1e-14);
        // Incident and reflected make equal angles with the normal plane.
        CHECK(std::abs(dot(v, n) + dot(r, n)) < 1e-14);
    }
}

TEST_CASE("ray tracing a single paraboloid is exact") {
    ReflectorSpec spec;
    spec.directions = {UnitVector({0.2, -0.3, 0.9})};
    spec.focal_params = {1.3};
    Rng rng(201);
    auto sample = test_support::random_points(rng, 1000, 2);
    auto rep = ray_trace_verify(spec, sample);
    CHECK(rep.traced + rep.ties_skipped == sample.size());
    CHECK(rep.traced > 900);
    CHECK(rep.max_deviation <= 1e-12);
}

TEST_CASE("ray tracing a solved reflector sends rays to cell targets") {
    auto spec = tetrahedral();
    Rng rng(211);
    auto sample = test_support::random_points(rng, 2000, 2);
    auto rep = ray_trace_verify(spec, sample);
    CHECK(rep.max_deviation <= 1e-8);
    CHECK(rep.traced > 1900);
}

TEST_CASE("quasipotential: constant focal function gives the sphere") {
    double rho0 = 1.7;
    auto constant = [&](const UnitVector&) { return 2.0 * rho0; };
    Rng rng(221);
    for (int rep = 0; rep < 100; ++rep) {
        UnitVector y = rng.sphere_point(2);
        Vec r = quasipotential_position(constant, y);
        CHECK(std::abs(norm(r) - rho0) < 1e-12);
        // r(y) = -rho0 y: the surface touches the sphere antipodal to y.
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(r[i] == doctest::Approx(-rho0 * y[i]).epsilon(1e-12));
    }
}

TEST_CASE("quasipotential of an interpolated reflector stays inside the envelope") {
    auto spec = tetrahedral(1.0);
    // Perturb the focal parameters so the envelope is not a sphere.
    spec.focal_params = {1.0, 0.95, 1.05, 0.9};
    auto focal = interpolate_focal(spec);

    // The smooth family interpolates the discrete one, so its envelope is
    // contained in the discrete envelope and touches it at the target
    // directions, where the interpolant is exact with vanishing gradient.
    for (std::size_t i = 0; i < spec.size(); ++i) {
        Vec r = quasipotential_position(focal, spec.directions[i]);
        UnitVector dir(r);
        double rho = envelope_radius(spec, dir).rho;
        CHECK(std::abs(norm(r) - rho) <= 1e-3 * rho);
    }
    Rng rng(231);
    for (int rep = 0; rep < 200; ++rep) {
        UnitVector y = rng.sphere_point(2);
        Vec r = quasipotential_position(focal, y);
        double rr = norm(r);
        auto ev = envelope_radius(spec, UnitVector(r));
        CHECK(rr <= ev.rho * (1.0 + 1e-6));
        CHECK(rr >= ev.rho * 0.4);
    }
}

TEST_CASE("reflector surface export scales mesh vertices onto the envelope") {
    auto spec = antipodal_pair(1.0, 1.0);
    auto mesh = make_sphere_mesh(12, 16);
    auto surf = reflector_surface(spec, mesh);
    REQUIRE(surf.vertices.size() == mesh.vertices.size());
    CHECK(surf.faces.size() == mesh.faces.size());
    for (std::size_t i = 0; i < surf.vertices.size(); ++i) {
        double rho = envelope_radius(spec, mesh.vertices[i]).rho;
        CHECK(norm(surf.vertices[i]) == doctest::Approx(rho).epsilon(1e-12));
    }
}

TEST_CASE("envelope and focal function form a dual pair for the log cost") {
    // u(x) = log rho(x) and v_j = -log p_j satisfy u(x) + v_j <= c(x, y_j)
    // everywhere, with equality exactly on the cell of direction j.
    auto k = log_kernel();
    auto spec = tetrahedral();
    spec.focal_params = {1.0, 0.9, 1.1, 0.85};
    Rng rng(241);
    for (int rep = 0; rep < 2000; ++rep) {
        UnitVector x = rng.sphere_point(2);
        auto ev = envelope_radius(spec, x);
        double u = std::log(ev.rho);
        for (std::size_t j = 0; j < spec.size(); ++j) {
            double c = cost(k, x, spec.directions[j]);
            double v = -std::log(spec.focal_params[j]);
            CHECK(u + v <= c + 1e-9);
            bool in_cell =
                std::find(ev.argmin.begin(), ev.argmin.end(), j) != ev.argmin.end();
            if (in_cell) CHECK(std::abs(u + v - c) <= 1e-9);
        }
    }
}

TEST_CASE("reflector spec validation") {
    ReflectorSpec bad;
    bad.directions = {UnitVector({0.0, 0.0, 1.0})};
    bad.focal_params = {-1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.focal_params = {1.0, 2.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
