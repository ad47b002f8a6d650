#include "sot/geometry.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace sot {

namespace {
constexpr double kMergeTol = 1e-12;
}  // namespace

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Vec add(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Vec sub(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vec scale(double s, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

UnitVector::UnitVector(Vec coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2)
        throw std::invalid_argument("UnitVector: need ambient dimension >= 2 (sphere dim >= 1)");
    double n = 0.0;
    for (double c : coords_) {
        if (!std::isfinite(c)) throw std::invalid_argument("UnitVector: non-finite coordinate");
        n += c * c;
    }
    n = std::sqrt(n);
    if (n < 1e-14) throw std::invalid_argument("UnitVector: zero vector has no direction");
    // Idempotent canonicalization: coordinates that are already unit to a
    // few ulps are kept bit for bit, so rebuilding a point from its own
    // coordinates is the identity.
    if (std::abs(n - 1.0) > 8.0 * std::numeric_limits<double>::epsilon())
        for (double& c : coords_) c /= n;
}

double dot(const UnitVector& a, const UnitVector& b) { return dot(a.coords(), b.coords()); }

double chord(const UnitVector& a, const UnitVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.ambient_dim(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

UnitVector antipode(const UnitVector& a) { return UnitVector(scale(-1.0, a.coords())); }

TangentVector::TangentVector(UnitVector base_point, Vec tangent)
    : base(std::move(base_point)), vec(std::move(tangent)) {
    if (vec.size() != base.ambient_dim())
        throw std::invalid_argument("TangentVector: dimension mismatch");
    double along = dot(vec, base.coords());
    double scale_ref = std::max(1.0, sot::norm(vec));
    if (std::abs(along) > 1e-9 * scale_ref)
        throw std::invalid_argument("TangentVector: vector is not tangent to the base point");
    // Remove the residual normal component so vec . base = 0 to rounding.
    if (along != 0.0)
        for (std::size_t i = 0; i < vec.size(); ++i) vec[i] -= along * base[i];
}

double TangentVector::norm() const { return sot::norm(vec); }
double TangentVector::squared_norm() const { return dot(vec, vec); }

TangentVector tangential_project(const UnitVector& y, const UnitVector& x) {
    if (y.ambient_dim() != x.ambient_dim())
        throw std::invalid_argument("tangential_project: dimension mismatch");
    double c = dot(x, y);
    Vec v(x.ambient_dim());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = y[i] - c * x[i];
    return TangentVector(x, std::move(v));
}

DiscreteMeasure::DiscreteMeasure(std::vector<UnitVector> points, std::vector<double> weights,
                                 bool probability)
    : probability_(probability) {
    if (points.empty()) throw std::invalid_argument("DiscreteMeasure: no atoms");
    if (points.size() != weights.size())
        throw std::invalid_argument("DiscreteMeasure: points/weights size mismatch");
    std::size_t ad = points.front().ambient_dim();
    for (const auto& p : points)
        if (p.ambient_dim() != ad) throw std::invalid_argument("DiscreteMeasure: mixed dimensions");
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw std::invalid_argument("DiscreteMeasure: weights must be finite and nonnegative");
    }

    // Merge duplicates (chord distance <= merge tolerance) into the first
    // occurrence, preserving the caller's atom order. Duplicate groups are
    // found on a coordinate-sorted view so the scan stays near-linear.
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return points[a].coords() < points[b].coords();
    });
    std::vector<std::size_t> owner(points.size());
    std::iota(owner.begin(), owner.end(), 0);
    std::size_t group_start = 0;
    for (std::size_t t = 1; t <= order.size(); ++t) {
        bool boundary = (t == order.size()) ||
                        chord(points[order[t - 1]], points[order[t]]) > kMergeTol;
        if (!boundary) continue;
        std::size_t rep = order[group_start];
        for (std::size_t s = group_start; s < t; ++s) rep = std::min(rep, order[s]);
        for (std::size_t s = group_start; s < t; ++s) owner[order[s]] = rep;
        group_start = t;
    }
    std::vector<double> merged(points.size(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) merged[owner[i]] += weights[i];
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (owner[i] != i) continue;
        points_.push_back(points[i]);
        weights_.push_back(merged[i]);
    }

    if (probability_) {
        double total = total_mass();
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("DiscreteMeasure: probability weights must sum to 1");
    }
}

double DiscreteMeasure::total_mass() const {
    return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

DiscreteMeasure DiscreteMeasure::normalized() const {
    double total = total_mass();
    if (total <= 0.0) throw std::invalid_argument("DiscreteMeasure: cannot normalize zero mass");
    std::vector<double> w(weights_);
    for (double& x : w) x /= total;
    // Compensate the rounding of the division so the sum is 1 to 1e-16.
    double s = std::accumulate(w.begin(), w.end(), 0.0);
    if (s != 1.0) {
        std::size_t imax = std::distance(w.begin(), std::max_element(w.begin(), w.end()));
        w[imax] += 1.0 - s;
    }
    return DiscreteMeasure(points_, w, true);
}

double slab_mass(const DiscreteMeasure& m, double a, double b) {
    if (!(a <= b) || a < -1.0 || b > 1.0)
        throw std::invalid_argument("slab_mass: need -1 <= a <= b <= 1");
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        double z = m.point(i).z();
        if (z >= a && z <= b) s += m.weight(i);
    }
    return s;
}

double sphere_area(std::size_t d) {
    double k = (double(d) + 1.0) / 2.0;
    return 2.0 * std::pow(std::numbers::pi, k) / std::tgamma(k);
}

double QuadratureGrid::total_weight() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

GridKind parse_grid_kind(const std::string& name) {
    if (name == "fibonacci") return GridKind::fibonacci;
    if (name == "random_uniform") return GridKind::random_uniform;
    throw std::invalid_argument("unknown grid kind: " + name);
}

QuadratureGrid make_grid(GridKind kind, std::size_t n, std::uint64_t seed, std::size_t dim) {
    if (n < 4) throw std::invalid_argument("make_grid: need n >= 4");
    if (dim != 1 && dim != 2)
        throw std::invalid_argument("make_grid: built-in grids support dim 1 and 2 only");

    QuadratureGrid grid;
    grid.nodes.reserve(n);
    grid.weights.assign(n, sphere_area(dim) / double(n));

    if (kind == GridKind::fibonacci) {
        if (dim == 1) {
            // Equispaced angles on the circle.
            for (std::size_t i = 0; i < n; ++i) {
                double th = 2.0 * std::numbers::pi * (double(i) + 0.5) / double(n);
                grid.nodes.push_back(UnitVector({std::cos(th), std::sin(th)}));
            }
        } else {
            // Golden-angle spiral with uniform z strips.
            const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
            for (std::size_t i = 0; i < n; ++i) {
                double z = 1.0 - (2.0 * double(i) + 1.0) / double(n);
                double r = std::sqrt(std::max(0.0, 1.0 - z * z));
                double th = golden * double(i);
                grid.nodes.push_back(UnitVector({r * std::cos(th), r * std::sin(th), z}));
            }
        }
    } else {
        Rng rng(seed);
        for (std::size_t i = 0; i < n; ++i) grid.nodes.push_back(rng.sphere_point(dim));
    }
    return grid;
}

double Rng::uniform() {
    // 53 random bits into [0, 1).
    return double(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

double Rng::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: empty range");
    return std::size_t(uniform() * double(n)) % n;
}

UnitVector Rng::sphere_point(std::size_t dim) {
    Vec v(dim + 1);
    while (true) {
        for (double& c : v) c = gaussian();
        if (norm(v) > 1e-8) break;
    }
    return UnitVector(v);
}

TriangleMesh make_sphere_mesh(std::size_t n_lat, std::size_t n_lon) {
    if (n_lat < 2 || n_lon < 3) throw std::invalid_argument("make_sphere_mesh: grid too coarse");
    TriangleMesh mesh;
    // Vertices: north pole, (n_lat - 1) latitude rings of n_lon points, south pole.
    mesh.vertices.push_back(UnitVector({0.0, 0.0, 1.0}));
    for (std::size_t i = 1; i < n_lat; ++i) {
        double theta = std::numbers::pi * double(i) / double(n_lat);
        double z = std::cos(theta), r = std::sin(theta);
        for (std::size_t j = 0; j < n_lon; ++j) {
            double phi = 2.0 * std::numbers::pi * double(j) / double(n_lon);
            mesh.vertices.push_back(UnitVector({r * std::cos(phi), r * std::sin(phi), z}));
        }
    }
    mesh.vertices.push_back(UnitVector({0.0, 0.0, -1.0}));

    auto ring = [&](std::size_t i, std::size_t j) { return 1 + (i - 1) * n_lon + (j % n_lon); };
    const std::size_t south = mesh.vertices.size() - 1;
    for (std::size_t j = 0; j < n_lon; ++j)
        mesh.faces.push_back({0, ring(1, j), ring(1, j + 1)});
    for (std::size_t i = 1; i + 1 < n_lat; ++i) {
        for (std::size_t j = 0; j < n_lon; ++j) {
            std::size_t a = ring(i, j), b = ring(i, j + 1);
            std::size_t c = ring(i + 1, j), d = ring(i + 1, j + 1);
            mesh.faces.push_back({a, c, d});
            mesh.faces.push_back({a, d, b});
        }
    }
    for (std::size_t j = 0; j < n_lon; ++j)
        mesh.faces.push_back({south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)});
    return mesh;
}

}  // namespace sot
