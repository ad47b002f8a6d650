#pragma once

// Shared helpers for the test suites: deterministic random instances and
// small closed-form constructions.

#include <cmath>
#include <numbers>
#include <vector>

#include "sot/cost.hpp"
#include "sot/geometry.hpp"

namespace test_support {

inline sot::UnitVector circle_point(double degrees) {
    double rad = degrees * std::numbers::pi / 180.0;
    return sot::UnitVector({std::cos(rad), std::sin(rad)});
}

inline std::vector<sot::UnitVector> random_points(sot::Rng& rng, std::size_t n, std::size_t dim) {
    std::vector<sot::UnitVector> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(rng.sphere_point(dim));
    return pts;
}

/// Uniform-mass measure on n random atoms.
inline sot::DiscreteMeasure random_uniform_measure(sot::Rng& rng, std::size_t n, std::size_t dim) {
    return sot::DiscreteMeasure(random_points(rng, n, dim), std::vector<double>(n, 1.0 / double(n)));
}

/// Random masses summing to one.
inline sot::DiscreteMeasure random_weighted_measure(sot::Rng& rng, std::size_t n,
                                                    std::size_t dim) {
    std::vector<double> w(n);
    double s = 0.0;
    for (double& x : w) {
        x = 0.05 + rng.uniform();
        s += x;
    }
    for (double& x : w) x /= s;
    return sot::DiscreteMeasure(random_points(rng, n, dim), w);
}

/// Central finite difference of t -> c(gamma(t), y) along the geodesic
/// through x with unit tangent e, at t = 0.
inline double geodesic_cost_derivative(const sot::CostKernel& k, const sot::UnitVector& x,
                                       const sot::Vec& e, const sot::UnitVector& y, double h) {
    auto at = [&](double t) {
        sot::Vec p(x.ambient_dim());
        for (std::size_t i = 0; i < p.size(); ++i)
            p[i] = std::cos(t) * x[i] + std::sin(t) * e[i];
        return sot::cost(k, sot::UnitVector(p), y);
    };
    return (at(h) - at(-h)) / (2.0 * h);
}

/// Orthonormal tangent basis at x.
inline std::vector<sot::Vec> tangent_basis(const sot::UnitVector& x) {
    std::vector<sot::Vec> basis;
    std::size_t ad = x.ambient_dim();
    for (std::size_t axis = 0; axis < ad && basis.size() + 1 < ad; ++axis) {
        sot::Vec e(ad, 0.0);
        e[axis] = 1.0;
        double along = sot::dot(e, x.coords());
        for (std::size_t i = 0; i < ad; ++i) e[i] -= along * x[i];
        for (const auto& b : basis) {
            double c = sot::dot(e, b);
            for (std::size_t i = 0; i < ad; ++i) e[i] -= c * b[i];
        }
        double nn = sot::norm(e);
        if (nn < 1e-8) continue;
        for (double& c : e) c /= nn;
        basis.push_back(std::move(e));
    }
    return basis;
}

}  // namespace test_support
