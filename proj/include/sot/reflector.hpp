#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "sot/geometry.hpp"

namespace sot {

/// Far-field reflector as an envelope of confocal paraboloids of
/// revolution: direction y_i with focal parameter p_i > 0 contributes the
/// radial graph rho_i(x) = p_i / (1 - x . y_i), and the reflector surface
/// is r(x) = rho(x) x with rho(x) = min_i rho_i(x). A point z lies on
/// paraboloid i exactly when |z| - z . y_i = p_i, which is the form used
/// for normals and ray checks.
struct ReflectorSpec {
    std::vector<UnitVector> directions;
    std::vector<double> focal_params;

    std::size_t size() const { return directions.size(); }
    void validate() const;
};

struct EnvelopeEval {
    double rho = 0.0;
    std::vector<std::size_t> argmin;  // all indices within relative tie_tol
};

EnvelopeEval envelope_radius(const ReflectorSpec& R, const UnitVector& x, double tie_tol = 1e-9);

/// Directions of the supporting paraboloids at rho(x) x; multivalued on
/// cell boundaries.
std::vector<std::size_t> reflector_map(const ReflectorSpec& R, const UnitVector& x,
                                       double tie_tol = 1e-9);

/// Visibility cells of the quadrature nodes and the energy collected per
/// direction. Nodes whose envelope minimum is tied split their energy
/// equally among the tied cells, so the masses always sum to the total
/// source energy.
struct CellDecomposition {
    std::vector<std::vector<std::size_t>> cells;
    std::vector<double> masses;

    double total() const;
};

CellDecomposition energy_masses(const ReflectorSpec& R, const QuadratureGrid& grid,
                                const std::vector<double>& intensity, double tie_tol = 1e-9);

struct WeakSolveOptions {
    double tol = 1e-3;           // relative energy residual per direction
    int max_iterations = 2000;
    double eta = 0.5;            // damping of the multiplicative update
    double cap = 0.5;            // residual clamp per step
    int oscillation_limit = 20;  // sign flips before coordinate bisection
    double tie_tol = 1e-9;
};

/// Focal parameters making each cell collect its prescribed share of the
/// source energy: |G_i - nu_i| <= tol * nu_i. Focal parameters of
/// deficient cells shrink (a smaller paraboloid catches more rays) under
/// a damped multiplicative update, with per-coordinate bisection once a
/// coordinate starts oscillating. The result is normalized to max p = 1;
/// the cells are invariant under that scaling. Throws NonConvergenceError
/// with the last residuals when the iteration budget runs out.
ReflectorSpec solve_weak_reflector(const DiscreteMeasure& targets, const QuadratureGrid& grid,
                                   const std::vector<double>& intensity,
                                   const WeakSolveOptions& opt = {});

/// Reflection law: y = x - 2 (x . n) n for unit normal n.
UnitVector snell_reflect(const UnitVector& x, const UnitVector& n);

struct RayTraceReport {
    double max_deviation = 0.0;
    std::size_t traced = 0;
    std::size_t ties_skipped = 0;
};

/// Traces sample directions onto the envelope and reflects them off the
/// supporting paraboloid (normal along x - y_i, from the level set
/// |z| - z . y_i = p_i). The reflected direction must reproduce the cell
/// direction; the report carries the worst deviation.
RayTraceReport ray_trace_verify(const ReflectorSpec& R, const std::vector<UnitVector>& sample,
                                double tie_tol = 1e-9);

/// Surface position from a smooth focal function p on the directions:
///   r(y) = -grad p(y) - (p(y) - rho(y)) y,  rho = (p^2 + |grad p|^2) / (2p),
/// with the tangential gradient taken by central differences along
/// geodesics (step in radians). |r(y)| equals rho(y) up to stencil error.
Vec quasipotential_position(const std::function<double(const UnitVector&)>& focal,
                            const UnitVector& y, double step = 1e-5);

/// Smooth interpolant of the discrete focal parameters over the sphere
/// (inverse-squared-chord weights), bridging a solved reflector to the
/// quasipotential formula.
std::function<double(const UnitVector&)> interpolate_focal(const ReflectorSpec& R);

/// Triangulated surface in ambient coordinates.
struct SurfaceMesh {
    std::vector<Vec> vertices;
    std::vector<std::array<std::size_t, 3>> faces;
};

/// Scales the vertices of a unit-sphere mesh onto the envelope: v -> rho(v) v.
SurfaceMesh reflector_surface(const ReflectorSpec& R, const TriangleMesh& sphere);

}  // namespace sot
