#pragma once

#include "sot/cost.hpp"
#include "sot/geometry.hpp"

namespace sot {

/// Exhaustive minimum of the coupling cost over permutation matchings.
/// Requires equal atom counts and uniform weights on both sides (the
/// extreme points of the coupling polytope are then exactly the
/// permutations). Assignments through the diagonal are infinite and
/// skipped; if nothing finite remains this throws NoFinitePlanError.
double brute_force_permutation_cost(const CostKernel& k, const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu);

/// Exhaustive minimum over the basic solutions (spanning-tree flows) of
/// the transportation polytope, for arbitrary weights. Exponential in the
/// instance size; refuses instances beyond a few atoms per side.
double brute_force_vertex_cost(const CostKernel& k, const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu);

}  // namespace sot
