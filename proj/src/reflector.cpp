#include "sot/reflector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sot/cost.hpp"
#include "sot/errors.hpp"

namespace sot {

void ReflectorSpec::validate() const {
    if (directions.empty()) throw std::invalid_argument("ReflectorSpec: no directions");
    if (directions.size() != focal_params.size())
        throw std::invalid_argument("ReflectorSpec: directions/focal_params size mismatch");
    for (double p : focal_params)
        if (!(p > 0.0) || !std::isfinite(p))
            throw std::invalid_argument("ReflectorSpec: focal parameters must be positive");
    std::size_t ad = directions.front().ambient_dim();
    for (const auto& y : directions)
        if (y.ambient_dim() != ad) throw std::invalid_argument("ReflectorSpec: mixed dimensions");
}

EnvelopeEval envelope_radius(const ReflectorSpec& R, const UnitVector& x, double tie_tol) {
    EnvelopeEval out;
    out.rho = kInf;
    std::vector<double> radii(R.size(), kInf);
    for (std::size_t i = 0; i < R.size(); ++i) {
        double denom = 1.0 - dot(x, R.directions[i]);
        if (denom <= 0.0) continue;  // the paraboloid is open toward its own axis
        radii[i] = R.focal_params[i] / denom;
        out.rho = std::min(out.rho, radii[i]);
    }
    if (out.rho < kInf) {
        double cutoff = out.rho * (1.0 + tie_tol);
        for (std::size_t i = 0; i < R.size(); ++i)
            if (radii[i] <= cutoff) out.argmin.push_back(i);
    }
    return out;
}

std::vector<std::size_t> reflector_map(const ReflectorSpec& R, const UnitVector& x,
                                       double tie_tol) {
    return envelope_radius(R, x, tie_tol).argmin;
}

double CellDecomposition::total() const {
    return std::accumulate(masses.begin(), masses.end(), 0.0);
}

CellDecomposition energy_masses(const ReflectorSpec& R, const QuadratureGrid& grid,
                                const std::vector<double>& intensity, double tie_tol) {
    R.validate();
    if (intensity.size() != grid.size())
        throw std::invalid_argument("energy_masses: intensity size mismatch");
    for (double v : intensity)
        if (!(v >= 0.0)) throw std::invalid_argument("energy_masses: intensity must be >= 0");

    CellDecomposition out;
    out.cells.assign(R.size(), {});
    out.masses.assign(R.size(), 0.0);
    for (std::size_t node = 0; node < grid.size(); ++node) {
        double energy = intensity[node] * grid.weights[node];
        if (energy == 0.0) continue;
        auto hit = envelope_radius(R, grid.nodes[node], tie_tol);
        if (hit.argmin.empty()) continue;  // only possible for a degenerate spec
        double share = energy / double(hit.argmin.size());
        for (std::size_t i : hit.argmin) {
            out.cells[i].push_back(node);
            out.masses[i] += share;
        }
    }
    return out;
}

namespace {

// The energy in cell j is a step function of p_j when the other focal
// parameters are held fixed: node x belongs to cell j exactly when
// p_j <= (1 - x.y_j) * min_{k != j} rho_k(x). Sorting those thresholds
// solves a single coordinate exactly in one pass.
struct CoordinateSolver {
    const QuadratureGrid& grid;
    const std::vector<double>& energy;       // intensity * weight per node
    std::vector<std::vector<double>> denom;  // 1 - x.y_j per node, direction

    CoordinateSolver(const ReflectorSpec& spec, const QuadratureGrid& g,
                     const std::vector<double>& node_energy)
        : grid(g), energy(node_energy) {
        denom.assign(spec.size(), std::vector<double>(g.size()));
        for (std::size_t j = 0; j < spec.size(); ++j)
            for (std::size_t node = 0; node < g.size(); ++node)
                denom[j][node] = 1.0 - dot(g.nodes[node], spec.directions[j]);
    }

    // Sets p_j so that cell j collects as close to `target` as the node
    // quantization allows.
    void solve(ReflectorSpec& spec, std::size_t j, double target) const {
        std::vector<std::pair<double, double>> thresholds;  // (limit, energy)
        thresholds.reserve(grid.size());
        double unconditional = 0.0;  // nodes no other paraboloid covers
        for (std::size_t node = 0; node < grid.size(); ++node) {
            if (energy[node] == 0.0) continue;
            double others = kInf;
            for (std::size_t k = 0; k < spec.size(); ++k) {
                if (k == j || denom[k][node] <= 0.0) continue;
                others = std::min(others, spec.focal_params[k] / denom[k][node]);
            }
            if (denom[j][node] <= 0.0) continue;  // node sits on the axis of j
            if (others == kInf) {
                unconditional += energy[node];
                continue;
            }
            thresholds.emplace_back(others * denom[j][node], energy[node]);
        }
        std::sort(thresholds.begin(), thresholds.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });

        // Walk the thresholds from the largest down; the cell mass grows as
        // p_j drops below each one. Stop at the prefix closest to target.
        double best_gap = std::abs(unconditional - target);
        std::size_t best_cut = 0;
        double acc = unconditional;
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            acc += thresholds[t].second;
            double gap = std::abs(acc - target);
            if (gap < best_gap) {
                best_gap = gap;
                best_cut = t + 1;
            }
        }
        double p;
        if (thresholds.empty()) {
            p = spec.focal_params[j];
        } else if (best_cut == 0) {
            p = thresholds.front().first * 2.0;  // above every threshold: empty cell
        } else if (best_cut == thresholds.size()) {
            p = thresholds.back().first * 0.5;  // below every threshold: full cell
        } else {
            p = 0.5 * (thresholds[best_cut - 1].first + thresholds[best_cut].first);
        }
        if (p > 0.0 && std::isfinite(p)) spec.focal_params[j] = p;
    }
};

}  // namespace

ReflectorSpec solve_weak_reflector(const DiscreteMeasure& targets, const QuadratureGrid& grid,
                                   const std::vector<double>& intensity,
                                   const WeakSolveOptions& opt) {
    const std::size_t n = targets.size();
    if (intensity.size() != grid.size())
        throw std::invalid_argument("solve_weak_reflector: intensity size mismatch");

    // Normalize the source energy and the target weights to unit total.
    double source_energy = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) source_energy += intensity[i] * grid.weights[i];
    if (!(source_energy > 0.0))
        throw std::invalid_argument("solve_weak_reflector: zero source energy");
    std::vector<double> scaled(intensity);
    for (double& v : scaled) v /= source_energy;
    DiscreteMeasure nu = targets.normalized();
    for (std::size_t j = 0; j < n; ++j)
        if (!(nu.weight(j) > 0.0))
            throw std::invalid_argument("solve_weak_reflector: every target needs positive mass");

    ReflectorSpec spec;
    spec.directions = nu.points();
    spec.focal_params.assign(n, 1.0);
    spec.validate();

    auto normalize = [&spec] {
        double pmax = *std::max_element(spec.focal_params.begin(), spec.focal_params.end());
        for (double& p : spec.focal_params) p /= pmax;
    };

    std::vector<double> residual(n, 0.0);
    auto residuals = [&](double& worst) {
        CellDecomposition cd = energy_masses(spec, grid, scaled, opt.tie_tol);
        worst = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            residual[j] = (cd.masses[j] - nu.weight(j)) / nu.weight(j);
            worst = std::max(worst, std::abs(residual[j]));
        }
    };

    // Damped multiplicative stage: cheap, and already the fixed point for
    // symmetric inputs. A stall or oscillation hands over to exact
    // coordinate solves.
    std::vector<int> last_sign(n, 0), flips(n, 0);
    double best_worst = kInf;
    int since_improvement = 0;
    int max_flips = 0;
    int spent = 0;
    const int multiplicative_budget =
        std::min(opt.max_iterations, std::max(opt.max_iterations / 4, 32));
    for (; spent < multiplicative_budget; ++spent) {
        double worst = 0.0;
        residuals(worst);
        if (worst <= opt.tol) {
            normalize();
            return spec;
        }
        if (worst < 0.95 * best_worst) {
            best_worst = worst;
            since_improvement = 0;
        } else if (++since_improvement > 25) {
            break;  // stalled
        }
        if (max_flips > opt.oscillation_limit) break;

        for (std::size_t j = 0; j < n; ++j) {
            double r = residual[j];
            int s = (r > 0.0) ? 1 : (r < 0.0 ? -1 : 0);
            if (s != 0 && last_sign[j] != 0 && s != last_sign[j])
                max_flips = std::max(max_flips, ++flips[j]);
            if (s != 0) last_sign[j] = s;
            double step = opt.eta * std::min(std::abs(r), opt.cap);
            // Surplus cells grow their focal parameter (smaller cell).
            spec.focal_params[j] *= (s > 0) ? (1.0 + step) : (1.0 - step);
        }
        normalize();
    }

    // Coordinate stage: sweep the directions, each time placing p_j exactly
    // at the level where its cell carries the prescribed energy given the
    // other paraboloids. Progress bottoms out at the node quantization, so
    // a run of non-improving sweeps ends the search at the best state seen.
    std::vector<double> node_energy(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) node_energy[i] = scaled[i] * grid.weights[i];
    CoordinateSolver coord(spec, grid, node_energy);
    std::vector<double> best_params = spec.focal_params;
    double best_seen = kInf;
    int flat_sweeps = 0;
    for (; spent < opt.max_iterations && flat_sweeps <= 8; ++spent) {
        double worst = 0.0;
        residuals(worst);
        if (worst < 0.999 * best_seen) {
            best_seen = worst;
            best_params = spec.focal_params;
            flat_sweeps = 0;
        } else {
            ++flat_sweeps;
        }
        if (worst <= opt.tol) {
            normalize();
            return spec;
        }
        for (std::size_t j = 0; j < n; ++j) coord.solve(spec, j, nu.weight(j));
        normalize();
    }
    spec.focal_params = best_params;
    double worst = 0.0;
    residuals(worst);
    if (worst <= opt.tol) {
        normalize();
        return spec;
    }
    throw NonConvergenceError("solve_weak_reflector: iteration budget exhausted", residual);
}

UnitVector snell_reflect(const UnitVector& x, const UnitVector& n) {
    double xn = dot(x, n);
    Vec y(x.ambient_dim());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] - 2.0 * xn * n[i];
    return UnitVector(std::move(y));
}

RayTraceReport ray_trace_verify(const ReflectorSpec& R, const std::vector<UnitVector>& sample,
                                double tie_tol) {
    R.validate();
    RayTraceReport rep;
    for (const auto& x : sample) {
        auto hit = envelope_radius(R, x, tie_tol);
        if (hit.argmin.size() != 1) {
            ++rep.ties_skipped;
            continue;
        }
        const UnitVector& y = R.directions[hit.argmin.front()];
        // Outward normal of the supporting paraboloid {z : |z| - z.y = p}
        // at z = rho x is parallel to x - y.
        Vec nvec = sub(x.coords(), y.coords());
        if (norm(nvec) < 1e-14) {
            ++rep.ties_skipped;  // ray aimed straight down the axis
            continue;
        }
        UnitVector normal{nvec};
        UnitVector reflected = snell_reflect(x, normal);
        rep.max_deviation = std::max(rep.max_deviation, chord(reflected, y));
        ++rep.traced;
    }
    return rep;
}

Vec quasipotential_position(const std::function<double(const UnitVector&)>& focal,
                            const UnitVector& y, double step) {
    if (!(step > 0.0 && step < 0.1))
        throw std::invalid_argument("quasipotential_position: bad step");
    const std::size_t ad = y.ambient_dim();

    // Orthonormal tangent basis at y by Gram-Schmidt over coordinate axes.
    std::vector<Vec> basis;
    for (std::size_t axis = 0; axis < ad && basis.size() < ad - 1; ++axis) {
        Vec e(ad, 0.0);
        e[axis] = 1.0;
        double along = dot(e, y.coords());
        for (std::size_t i = 0; i < ad; ++i) e[i] -= along * y[i];
        for (const auto& b : basis) {
            double c = dot(e, b);
            for (std::size_t i = 0; i < ad; ++i) e[i] -= c * b[i];
        }
        double nn = norm(e);
        if (nn < 1e-8) continue;
        for (double& c : e) c /= nn;
        basis.push_back(std::move(e));
    }
    if (basis.size() != ad - 1)
        throw std::invalid_argument("quasipotential_position: degenerate stencil");

    double p = focal(y);
    if (!(p > 0.0)) throw std::invalid_argument("quasipotential_position: focal must be positive");

    // Central differences along the geodesics cos(t) y + sin(t) e.
    Vec grad(ad, 0.0);
    const double c = std::cos(step), s = std::sin(step);
    for (const auto& e : basis) {
        Vec plus(ad), minus(ad);
        for (std::size_t i = 0; i < ad; ++i) {
            plus[i] = c * y[i] + s * e[i];
            minus[i] = c * y[i] - s * e[i];
        }
        double d = (focal(UnitVector(plus)) - focal(UnitVector(minus))) / (2.0 * step);
        for (std::size_t i = 0; i < ad; ++i) grad[i] += d * e[i];
    }

    double rho = (p * p + dot(grad, grad)) / (2.0 * p);
    Vec r(ad);
    for (std::size_t i = 0; i < ad; ++i) r[i] = -grad[i] - (p - rho) * y[i];
    return r;
}

std::function<double(const UnitVector&)> interpolate_focal(const ReflectorSpec& R) {
    R.validate();
    auto directions = R.directions;
    auto params = R.focal_params;
    return [directions, params](const UnitVector& y) {
        double wsum = 0.0, psum = 0.0;
        for (std::size_t i = 0; i < directions.size(); ++i) {
            double d2 = 2.0 * std::max(0.0, 1.0 - dot(y, directions[i]));  // squared chord
            if (d2 < 1e-24) return params[i];
            double w = 1.0 / d2;
            wsum += w;
            psum += w * params[i];
        }
        return psum / wsum;
    };
}

SurfaceMesh reflector_surface(const ReflectorSpec& R, const TriangleMesh& sphere) {
    R.validate();
    SurfaceMesh out;
    out.faces = sphere.faces;
    out.vertices.reserve(sphere.vertices.size());
    for (const auto& v : sphere.vertices) {
        auto hit = envelope_radius(R, v);
        if (!(hit.rho < kInf))
            throw std::invalid_argument("reflector_surface: envelope unbounded at a vertex");
        out.vertices.push_back(scale(hit.rho, v.coords()));
    }
    return out;
}

}  // namespace sot
