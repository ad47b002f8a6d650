#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sot {

// Ambient vector in R^{d+1}. Dimension is dynamic so the same code serves
// the circle (d=1), the 2-sphere (d=2) and anything higher.
using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);
double norm(const Vec& a);
Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scale(double s, const Vec& a);

/// Point on the unit sphere S^d embedded in R^{d+1}.
///
/// Coordinates are kept in the ambient embedding (never spherical angles)
/// so there are no pole singularities. The constructor renormalizes, which
/// keeps |coords| = 1 to within 1e-12 and makes equality on canonicalized
/// coordinates meaningful.
class UnitVector {
public:
    explicit UnitVector(Vec coords);

    const Vec& coords() const { return coords_; }
    double operator[](std::size_t i) const { return coords_[i]; }
    std::size_t ambient_dim() const { return coords_.size(); }
    /// Sphere dimension d (ambient dimension minus one).
    std::size_t dim() const { return coords_.size() - 1; }
    /// Last coordinate, the slab axis.
    double z() const { return coords_.back(); }

    friend bool operator==(const UnitVector& a, const UnitVector& b) {
        return a.coords_ == b.coords_;
    }
    friend bool operator!=(const UnitVector& a, const UnitVector& b) { return !(a == b); }

private:
    Vec coords_;
};

double dot(const UnitVector& a, const UnitVector& b);
/// Euclidean chord length |a - b|.
double chord(const UnitVector& a, const UnitVector& b);
UnitVector antipode(const UnitVector& a);

/// Vector tangent to S^d at a base point: vec . base = 0 within 1e-12.
struct TangentVector {
    TangentVector(UnitVector base_point, Vec tangent);

    UnitVector base;
    Vec vec;

    double norm() const;
    double squared_norm() const;
};

/// Orthogonal projection of y onto the tangent space at x, based at x:
/// y_par = y - (x.y) x. For unit y this satisfies |y_par|^2 + (x.y)^2 = 1.
TangentVector tangential_project(const UnitVector& y, const UnitVector& x);

/// Weighted point cloud on S^d. Duplicate points (chord distance <= 1e-12)
/// are merged by adding their weights, so supports are canonical.
class DiscreteMeasure {
public:
    DiscreteMeasure(std::vector<UnitVector> points, std::vector<double> weights,
                    bool probability = false);

    std::size_t size() const { return points_.size(); }
    const UnitVector& point(std::size_t i) const { return points_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<UnitVector>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t dim() const { return points_.front().dim(); }
    double total_mass() const;
    bool is_probability() const { return probability_; }

    /// Copy with weights rescaled to total mass one and the flag set.
    DiscreteMeasure normalized() const;

private:
    std::vector<UnitVector> points_;
    std::vector<double> weights_;
    bool probability_ = false;
};

/// Total weight of atoms whose last coordinate lies in [a, b].
double slab_mass(const DiscreteMeasure& m, double a, double b);

/// Surface area of S^d: 2 pi^{(d+1)/2} / Gamma((d+1)/2).
double sphere_area(std::size_t d);

/// Quadrature nodes with positive weights approximating the area measure.
/// Built-in generators use equal weights |S^d| / n, so the weights sum to
/// the sphere area exactly.
struct QuadratureGrid {
    std::vector<UnitVector> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
    std::size_t dim() const { return nodes.front().dim(); }
    double total_weight() const;
};

enum class GridKind { fibonacci, random_uniform };

/// Deterministic for fixed (kind, n, seed). The fibonacci kind requires
/// d = 2 (a golden-angle spiral); for d = 1 it degrades to equispaced
/// angles on the circle. random_uniform supports d in {1, 2}.
QuadratureGrid make_grid(GridKind kind, std::size_t n, std::uint64_t seed, std::size_t dim = 2);

GridKind parse_grid_kind(const std::string& name);

/// Deterministic random source. Wraps mt19937_64 with explicit transforms
/// (the standard distributions are not bit-stable across implementations).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();                     // [0, 1)
    double uniform(double a, double b);   // [a, b)
    double gaussian();                    // Box-Muller
    std::size_t index(std::size_t n);     // uniform over {0, ..., n-1}
    UnitVector sphere_point(std::size_t dim);

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Closed triangulated surface over S^2 (latitude-longitude layout,
/// shared pole vertices). Used for surface export.
struct TriangleMesh {
    std::vector<UnitVector> vertices;
    std::vector<std::array<std::size_t, 3>> faces;
};

TriangleMesh make_sphere_mesh(std::size_t n_lat, std::size_t n_lon);

}  // namespace sot
