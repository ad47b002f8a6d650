#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "sot/cost.hpp"
#include "sot/geometry.hpp"

namespace sot {

/// Sparse coupling of two discrete measures. Row sums reproduce the source
/// weights and column sums the target weights to 1e-10, and no entry pairs
/// an atom with itself (such pairs have infinite cost).
class TransportPlan {
public:
    struct Entry {
        std::size_t i, j;
        double mass;
    };

    TransportPlan(DiscreteMeasure source, DiscreteMeasure target, std::vector<Entry> pairs);

    const DiscreteMeasure& source() const { return source_; }
    const DiscreteMeasure& target() const { return target_; }
    const std::vector<Entry>& pairs() const { return pairs_; }

    double total_cost(const CostKernel& k) const;
    /// Minimum chord |x_i - y_j| over support pairs.
    double min_separation() const;
    std::vector<std::pair<UnitVector, UnitVector>> support_pairs() const;

private:
    DiscreteMeasure source_;
    DiscreteMeasure target_;
    std::vector<Entry> pairs_;
};

/// Kantorovich dual variables: u per source atom, v per target atom, with
/// u_i + v_j <= c(x_i, y_j) and equality on the support of an optimal plan.
struct DualPotentials {
    std::vector<double> u, v;
};

struct SolveResult {
    TransportPlan plan;
    DualPotentials duals;
    double total_cost;
};

/// Exact discrete Kantorovich solve by primal network simplex on the
/// bipartite graph with diagonal (infinite-cost) arcs removed. Masses are
/// scaled to integers internally, so flows are exact; anti-cycling falls
/// back to Bland's rule after a degenerate stall. Throws InfeasibleError
/// on mass imbalance beyond 1e-10 and NoFinitePlanError when every
/// coupling is forced through the diagonal.
SolveResult solve_kantorovich(const CostKernel& k, const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu);

/// Cost of the map sending atom i to atom T[i]. The map must push the
/// source onto the target within 1e-10 (checked), and its cost is never
/// below the Kantorovich optimum.
double monge_cost(const CostKernel& k, const std::vector<std::size_t>& T,
                  const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct MonotonicityReport {
    bool monotone = true;
    std::vector<std::size_t> violating_tuple;   // indices into the pair set
    std::vector<std::size_t> violating_perm;    // permutation applied to targets
    double deficit = 0.0;                       // identity sum minus permuted sum
    std::uint64_t tuples_checked = 0;
    bool sampled = false;
};

/// Checks sum c(x_i, y_i) <= sum c(x_i, y_sigma(i)) over tuples from S of
/// size up to max_n (capped at 5) and all permutations sigma. Exhaustive
/// when the tuple count is small, otherwise a fixed-seed random sample of
/// tuples. Permuted sums containing +inf count as satisfied.
MonotonicityReport check_cyclical_monotonicity(
    const CostKernel& k, const std::vector<std::pair<UnitVector, UnitVector>>& S, int max_n,
    double tol = 1e-9, std::uint64_t seed = 20u);

struct SeparatedPlan {
    TransportPlan plan;
    double epsilon;  // min |x - y| over the support
};

/// Feasible coupling whose support stays off the diagonal, built by slab
/// splitting along the last coordinate: cut at a level where the upper
/// source mass equals the lower target mass (atoms split fractionally),
/// then couple each half through a product of its quantile halves. Throws
/// NoFinitePlanError when shared atoms make separation impossible
/// (for example identical Dirac measures).
SeparatedPlan separated_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

}  // namespace sot
