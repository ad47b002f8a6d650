#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "sot/cost.hpp"
#include "sot/geometry.hpp"
#include "sot/potential.hpp"

namespace sot {

/// Optimal map evaluated over a point set. At points where the potential
/// has a unique active anchor the map is T x = M(grad psi(x), x), which by
/// the inverse-gradient identity lands exactly on that anchor; points with
/// tied anchors (or a gradient outside the invertible range) are flagged
/// and excluded from the statistics.
struct RecoveredMap {
    std::vector<UnitVector> points;
    std::vector<UnitVector> images;        // valid where differentiable[i]
    std::vector<std::size_t> argmin_index;
    std::vector<char> differentiable;
    std::vector<std::size_t> flagged;      // indices into points
    double delta = 0.0;                    // min |T x - x| over valid points
};

/// psi(x) = min_j c(x, y_j) - v_j from dual values on the target atoms.
PotentialFn potential_from_duals(const CostKernel& k, const std::vector<UnitVector>& targets,
                                 const std::vector<double>& v);

/// Tangential gradient of psi at x via its active anchor. The second
/// member is false when the argmin is tied within tie_tol (relative), in
/// which case the gradient is taken from the first minimizer and should
/// not be trusted.
std::pair<TangentVector, bool> potential_gradient(const PotentialFn& psi, const UnitVector& x,
                                                  double tie_tol = 1e-9);

RecoveredMap recover_map(const PotentialFn& psi, const std::vector<UnitVector>& X,
                         double tie_tol = 1e-9);

/// The inverse transport map from the c-transform, by the same formula.
RecoveredMap inverse_map(const PotentialFn& psi_c, const std::vector<UnitVector>& Y,
                         double tie_tol = 1e-9);

struct PushforwardReport {
    double max_deviation = 0.0;   // per target-atom mass mismatch
    double unmatched_mass = 0.0;  // image mass landing on no target atom
    double excluded_mass = 0.0;   // mass at flagged evaluation points
    bool pass = false;
};

/// Bins the images of the source atoms onto the target atoms (nearest
/// within 1e-8) and compares the collected masses with the target weights.
/// The map must have been evaluated on the source atoms in order.
PushforwardReport verify_pushforward(const RecoveredMap& T, const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu, double tol);

}  // namespace sot
