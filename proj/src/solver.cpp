#include "sot/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "sot/errors.hpp"

namespace sot {

namespace {

constexpr double kMarginalTol = 1e-10;
constexpr double kDualTol = 1e-9;

// ----------------------------------------------------------------------
// Integer mass scaling. Weights that are decimals with at most 12 digits
// are scaled by the exact power of ten; anything else is quantized at
// 1e15 units per unit mass (well below every stated tolerance). Both
// sides are then nudged toward their common midpoint so the integer
// totals agree exactly.
// ----------------------------------------------------------------------

struct ScaledMasses {
    std::vector<std::int64_t> row, col;
    double unit = 1.0;  // mass represented by one flow unit
};

bool decimal_scale_fits(const std::vector<double>& w, double scale) {
    for (double x : w) {
        double units = x * scale;
        if (units > 4.5e18) return false;
        if (std::abs(std::round(units) / scale - x) > 1e-14) return false;
    }
    return true;
}

void spread_adjustment(std::vector<std::int64_t>& units, std::int64_t delta) {
    if (delta == 0) return;
    // Largest atoms absorb the rounding mismatch, one unit step at a time
    // so no atom moves by more than its fair share of the imbalance.
    std::vector<std::size_t> order(units.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return units[a] > units[b]; });
    std::int64_t step = delta > 0 ? 1 : -1;
    std::size_t k = 0;
    while (delta != 0) {
        std::size_t i = order[k % order.size()];
        if (units[i] + step >= 0) {
            units[i] += step;
            delta -= step;
        }
        ++k;
        if (k > order.size() * std::size_t(std::abs(delta) + 2) + 64)
            throw std::logic_error("mass scaling: cannot balance integer totals");
    }
}

ScaledMasses scale_masses(const std::vector<double>& mu, const std::vector<double>& nu) {
    ScaledMasses out;
    double scale = 0.0;
    for (int s = 0; s <= 12; ++s) {
        double cand = std::pow(10.0, s);
        if (decimal_scale_fits(mu, cand) && decimal_scale_fits(nu, cand)) {
            scale = cand;
            break;
        }
    }
    if (scale == 0.0) scale = 1e15;

    out.unit = 1.0 / scale;
    out.row.resize(mu.size());
    out.col.resize(nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) out.row[i] = std::llround(mu[i] * scale);
    for (std::size_t j = 0; j < nu.size(); ++j) out.col[j] = std::llround(nu[j] * scale);

    std::int64_t row_total = std::accumulate(out.row.begin(), out.row.end(), std::int64_t(0));
    std::int64_t col_total = std::accumulate(out.col.begin(), out.col.end(), std::int64_t(0));
    std::int64_t target = row_total + (col_total - row_total) / 2;
    spread_adjustment(out.row, target - row_total);
    spread_adjustment(out.col, target - col_total);
    return out;
}

// ----------------------------------------------------------------------
// Primal network simplex on the bipartite transport graph plus a root
// node. Artificial arcs row -> root and root -> col form the initial
// spanning tree. Phase 1 minimizes artificial flow with costs 0/1 (exact
// integer reduced costs), phase 2 runs the real costs with artificial
// arcs priced at zero and barred from entering. Flows are int64, so the
// ratio test is exact; a degenerate stall switches the entering rule to
// Bland's least-index selection, which cannot cycle.
// ----------------------------------------------------------------------

class TransportSimplex {
public:
    TransportSimplex(std::size_t m, std::size_t n, std::vector<std::int32_t> arc_row,
                     std::vector<std::int32_t> arc_col, std::vector<double> arc_cost,
                     const std::vector<std::int64_t>& row_units,
                     const std::vector<std::int64_t>& col_units)
        : m_(m),
          n_(n),
          num_nodes_(m + n + 1),
          root_(std::int32_t(m + n)),
          arc_row_(std::move(arc_row)),
          arc_col_(std::move(arc_col)),
          arc_cost_(std::move(arc_cost)),
          num_real_(arc_row_.size()) {
        parent_.assign(num_nodes_, -1);
        pred_arc_.assign(num_nodes_, -1);
        pred_up_.assign(num_nodes_, 0);
        flow_.assign(num_nodes_, 0);
        depth_.assign(num_nodes_, 0);
        pi_.assign(num_nodes_, 0.0);
        children_.assign(num_nodes_, {});

        for (std::int32_t u = 0; u < std::int32_t(m_ + n_); ++u) {
            parent_[u] = root_;
            pred_arc_[u] = std::int64_t(num_real_) + u;
            pred_up_[u] = u < std::int32_t(m_) ? 1 : 0;  // rows point at the root
            flow_[u] = u < std::int32_t(m_) ? row_units[u] : col_units[u - m_];
            depth_[u] = 1;
            children_[root_].push_back(u);
        }
    }

    void run() {
        phase_ = 1;
        recompute_potentials();
        optimize(/*allow_artificial=*/true, /*eps=*/0.5);

        std::int64_t artificial = 0;
        for (std::int32_t u = 0; u < std::int32_t(m_ + n_); ++u)
            if (pred_arc_[u] >= std::int64_t(num_real_) && parent_[u] == root_)
                artificial += flow_[u];
        // Artificial flow can also sit on arcs whose child end is the root.
        if (parent_[root_] != -1 && pred_arc_[root_] >= std::int64_t(num_real_))
            artificial += flow_[root_];
        if (artificial > 0)
            throw NoFinitePlanError("no finite-cost coupling exists for these marginals");

        phase_ = 2;
        bland_ = false;
        degenerate_streak_ = 0;
        next_scan_ = 0;
        recompute_potentials();
        // Fixed entering threshold: large enough to ignore the rounding of
        // potentials (bounded by (m+n) * max|c| * 2^-53, under 3e-10 for
        // anything this solver is pointed at), small enough that the final
        // duals certify feasibility at the 1e-9 contract.
        optimize(/*allow_artificial=*/false, /*eps=*/4e-10);
    }

    std::vector<std::tuple<std::size_t, std::size_t, std::int64_t>> support() const {
        std::vector<std::tuple<std::size_t, std::size_t, std::int64_t>> out;
        for (std::int32_t v = 0; v < std::int32_t(num_nodes_); ++v) {
            std::int64_t a = pred_arc_[v];
            if (a >= 0 && a < std::int64_t(num_real_) && flow_[v] > 0)
                out.emplace_back(std::size_t(arc_row_[a]), std::size_t(arc_col_[a]), flow_[v]);
        }
        return out;
    }

    std::pair<std::vector<double>, std::vector<double>> duals() const {
        std::vector<double> u(m_), v(n_);
        for (std::size_t i = 0; i < m_; ++i) u[i] = pi_[i];
        for (std::size_t j = 0; j < n_; ++j) v[j] = -pi_[m_ + j];
        return {u, v};
    }

private:
    double arc_phase_cost(std::int64_t a) const {
        if (phase_ == 1) return a < std::int64_t(num_real_) ? 0.0 : 1.0;
        return a < std::int64_t(num_real_) ? arc_cost_[a] : 0.0;
    }

    std::int32_t arc_tail(std::int64_t a) const {
        if (a < std::int64_t(num_real_)) return arc_row_[a];
        std::int32_t u = std::int32_t(a - std::int64_t(num_real_));
        return u < std::int32_t(m_) ? u : root_;
    }

    std::int32_t arc_head(std::int64_t a) const {
        if (a < std::int64_t(num_real_)) return std::int32_t(m_) + arc_col_[a];
        std::int32_t u = std::int32_t(a - std::int64_t(num_real_));
        return u < std::int32_t(m_) ? root_ : u;
    }

    double reduced_cost(std::int64_t a) const {
        return arc_phase_cost(a) - pi_[arc_tail(a)] + pi_[arc_head(a)];
    }

    void recompute_potentials() {
        pi_[root_] = 0.0;
        depth_[root_] = 0;
        // Iterative DFS from the root.
        std::vector<std::int32_t> stack = {root_};
        while (!stack.empty()) {
            std::int32_t v = stack.back();
            stack.pop_back();
            for (std::int32_t w : children_[v]) {
                double c = arc_phase_cost(pred_arc_[w]);
                pi_[w] = pred_up_[w] ? c + pi_[v] : pi_[v] - c;
                depth_[w] = depth_[v] + 1;
                stack.push_back(w);
            }
        }
    }

    std::int64_t find_entering(bool allow_artificial, double eps) {
        std::int64_t total = allow_artificial ? std::int64_t(num_real_ + m_ + n_)
                                              : std::int64_t(num_real_);
        if (bland_) {
            for (std::int64_t a = 0; a < total; ++a) {
                if (pred_arc_[arc_is_tree_child(a)] == a) continue;
                if (reduced_cost(a) < -eps) return a;
            }
            return -1;
        }
        // Block search: scan fixed-size windows from a rotating start and
        // take the most negative candidate in the first window that has one.
        std::int64_t block = std::max<std::int64_t>(64, total / 64);
        std::int64_t scanned = 0;
        std::int64_t best = -1;
        double best_r = -eps;
        std::int64_t a = next_scan_ % total;
        while (scanned < total) {
            double r = reduced_cost(a);
            if (r < best_r && pred_arc_[arc_is_tree_child(a)] != a) {
                best_r = r;
                best = a;
            }
            ++a;
            if (a == total) a = 0;
            ++scanned;
            if (scanned % block == 0 && best >= 0) break;
        }
        next_scan_ = a;
        return best;
    }

    // The node whose pred slot the arc would occupy if it were in the tree:
    // checking pred at both endpoints tells whether the arc is basic.
    std::int32_t arc_is_tree_child(std::int64_t a) const {
        std::int32_t t = arc_tail(a), h = arc_head(a);
        if (pred_arc_[t] == a) return t;
        if (pred_arc_[h] == a) return h;
        return t;  // arbitrary: pred_arc_[t] != a, so caller sees "not basic"
    }

    void pivot(std::int64_t a_in) {
        const std::int32_t u = arc_tail(a_in), w = arc_head(a_in);
        const double r_in = reduced_cost(a_in);

        // Ratio test along the two tree paths to the least common ancestor.
        // Pushing along u -> w: arcs on u's side lose flow when oriented
        // child -> parent, arcs on w's side lose flow when oriented
        // parent -> child.
        std::int64_t theta = std::numeric_limits<std::int64_t>::max();
        std::int32_t leave = -1;  // node whose pred arc leaves the basis
        bool leave_on_u_side = false;

        auto consider = [&](std::int32_t v, bool u_side) {
            bool losing = u_side ? pred_up_[v] : !pred_up_[v];
            if (!losing) return;
            if (flow_[v] < theta ||
                (flow_[v] == theta && leave >= 0 && pred_arc_[v] < pred_arc_[leave])) {
                theta = flow_[v];
                leave = v;
                leave_on_u_side = u_side;
            }
        };

        std::int32_t x = u, y = w;
        while (x != y) {
            if (depth_[x] >= depth_[y]) {
                consider(x, true);
                x = parent_[x];
            } else {
                consider(y, false);
                y = parent_[y];
            }
        }
        if (leave < 0) throw std::logic_error("network simplex: unbounded pivot");

        if (theta > 0) {
            for (std::int32_t v = u; v != x; v = parent_[v]) flow_[v] += pred_up_[v] ? -theta : theta;
            for (std::int32_t v = w; v != x; v = parent_[v]) flow_[v] += pred_up_[v] ? theta : -theta;
            degenerate_streak_ = 0;
        } else if (++degenerate_streak_ > stall_limit()) {
            bland_ = true;
        }

        // Re-hang the cut subtree at the entering arc.
        std::int32_t q = leave_on_u_side ? u : w;
        std::int32_t q_out = leave_on_u_side ? w : u;

        // Reverse the chain q -> ... -> leave.
        std::vector<std::int32_t> chain;
        for (std::int32_t v = q;; v = parent_[v]) {
            chain.push_back(v);
            if (v == leave) break;
        }
        std::int32_t old_parent_of_leave = parent_[leave];
        detach_child(old_parent_of_leave, leave);
        for (std::size_t t = chain.size(); t-- > 1;) {
            std::int32_t hi = chain[t], lo = chain[t - 1];
            detach_child(hi, lo);
        }
        std::int64_t carry_arc = pred_arc_[q];
        std::uint8_t carry_up = pred_up_[q];
        std::int64_t carry_flow = flow_[q];
        for (std::size_t t = 1; t < chain.size(); ++t) {
            std::int32_t v = chain[t];
            std::int64_t next_arc = pred_arc_[v];
            std::uint8_t next_up = pred_up_[v];
            std::int64_t next_flow = flow_[v];
            parent_[v] = chain[t - 1];
            pred_arc_[v] = carry_arc;
            pred_up_[v] = carry_up ? 0 : 1;
            flow_[v] = carry_flow;
            children_[chain[t - 1]].push_back(v);
            carry_arc = next_arc;
            carry_up = next_up;
            carry_flow = next_flow;
        }
        parent_[q] = q_out;
        pred_arc_[q] = a_in;
        pred_up_[q] = (q == u) ? 1 : 0;
        flow_[q] = theta;
        children_[q_out].push_back(q);

        // Potentials in the re-hung subtree shift by the entering arc's
        // reduced cost; depths are recomputed on the way.
        double delta = (q == u) ? r_in : -r_in;
        std::vector<std::int32_t> stack = {q};
        depth_[q] = depth_[q_out] + 1;
        pi_[q] += delta;
        while (!stack.empty()) {
            std::int32_t v = stack.back();
            stack.pop_back();
            for (std::int32_t cnode : children_[v]) {
                depth_[cnode] = depth_[v] + 1;
                pi_[cnode] += delta;
                stack.push_back(cnode);
            }
        }
    }

    void detach_child(std::int32_t par, std::int32_t child) {
        auto& list = children_[par];
        auto it = std::find(list.begin(), list.end(), child);
        if (it == list.end()) throw std::logic_error("network simplex: broken tree");
        *it = list.back();
        list.pop_back();
    }

    std::int64_t stall_limit() const { return 256 + 8 * std::int64_t(num_nodes_); }

    void optimize(bool allow_artificial, double eps) {
        const std::int64_t max_pivots =
            64 + 256 * std::int64_t(num_nodes_) * std::int64_t(num_nodes_);
        for (std::int64_t it = 0; it < max_pivots; ++it) {
            // The incremental subtree shifts accumulate rounding, so refresh
            // the potentials periodically, and never accept termination
            // against drifted values: rebuild and rescan first.
            if ((it & 0xfff) == 0xfff) recompute_potentials();
            std::int64_t a = find_entering(allow_artificial, eps);
            if (a < 0) {
                recompute_potentials();
                a = find_entering(allow_artificial, eps);
                if (a < 0) return;
            }
            pivot(a);
        }
        throw std::logic_error("network simplex: pivot budget exhausted");
    }

    std::size_t m_, n_, num_nodes_;
    std::int32_t root_;
    std::vector<std::int32_t> arc_row_, arc_col_;
    std::vector<double> arc_cost_;
    std::size_t num_real_;
    int phase_ = 1;

    std::vector<std::int32_t> parent_;
    std::vector<std::int64_t> pred_arc_;
    std::vector<std::uint8_t> pred_up_;
    std::vector<std::int64_t> flow_;
    std::vector<std::int32_t> depth_;
    std::vector<double> pi_;
    std::vector<std::vector<std::int32_t>> children_;

    bool bland_ = false;
    std::int64_t degenerate_streak_ = 0;
    std::int64_t next_scan_ = 0;
};

}  // namespace

namespace {

// ----------------------------------------------------------------------
// Dual polishing. Tree duals are tight on every basic arc, including
// degenerate zero-flow ones, which creates spurious argmin ties when the
// potentials drive map recovery. Optimal duals form a polytope: contract
// the support components (where tightness is mandatory), read the
// off-support slacks as difference constraints between component shifts,
// and move to the midpoint of the two extreme solutions. Slack becomes
// strictly positive wherever any optimal dual allows it.
// ----------------------------------------------------------------------

struct ComponentShifts {
    std::vector<int> comp;  // per node: rows 0..m-1, cols m..m+n-1
    int count = 0;
};

ComponentShifts support_components(std::size_t m, std::size_t n,
                                   const std::vector<TransportPlan::Entry>& pairs) {
    std::vector<int> parent(m + n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& e : pairs) parent[find(int(e.i))] = find(int(m + e.j));
    ComponentShifts out;
    out.comp.resize(m + n);
    std::map<int, int> relabel;
    for (std::size_t v = 0; v < m + n; ++v) {
        int r = find(int(v));
        auto [it, fresh] = relabel.try_emplace(r, out.count);
        if (fresh) ++out.count;
        out.comp[v] = it->second;
    }
    return out;
}

void polish_duals(const CostKernel& k, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                  const std::vector<TransportPlan::Entry>& pairs, DualPotentials& duals) {
    const std::size_t m = mu.size(), n = nu.size();
    auto comps = support_components(m, n, pairs);
    if (comps.count <= 1) return;

    // Raising component a by delta_a (u up, v down together preserves the
    // support tightness) is feasible while delta_a - delta_b stays at most
    // the tightest off-support slack from rows of a to columns of b.
    std::map<std::pair<int, int>, double> W;
    std::vector<std::vector<char>> in_support(m, std::vector<char>(n, 0));
    for (const auto& e : pairs) in_support[e.i][e.j] = 1;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (in_support[i][j]) continue;
            int a = comps.comp[i], b = comps.comp[m + j];
            if (a == b) continue;
            double c = cost(k, mu.point(i), nu.point(j));
            if (c == kInf) continue;
            double slack = std::max(0.0, c - duals.u[i] - duals.v[j]);
            auto key = std::make_pair(a, b);
            auto it = W.find(key);
            if (it == W.end()) W.emplace(key, slack);
            else it->second = std::min(it->second, slack);
        }
    }
    if (W.empty()) return;

    std::vector<std::vector<std::pair<int, double>>> upper(comps.count), lower(comps.count);
    for (const auto& [ab, w] : W) {
        upper[ab.first].emplace_back(ab.second, w);   // delta_a <= delta_b + w
        lower[ab.second].emplace_back(ab.first, w);   // delta_b >= delta_a - w
    }

    // Gauss-Seidel centering: move each shift to the middle of its current
    // feasible interval. Every single-coordinate move stays feasible, and a
    // few sweeps leave every adjustable slack strictly positive.
    std::vector<double> delta(comps.count, 0.0);
    for (int sweep = 0; sweep < 16; ++sweep) {
        double moved = 0.0;
        for (int a = 0; a < comps.count; ++a) {
            double ub = kInf, lb = -kInf;
            for (const auto& [b, w] : upper[a]) ub = std::min(ub, delta[b] + w);
            for (const auto& [b, w] : lower[a]) lb = std::max(lb, delta[b] - w);
            double next = delta[a];
            if (ub < kInf && lb > -kInf) next = 0.5 * (lb + ub);
            else if (ub < kInf) next = ub - 1.0;
            else if (lb > -kInf) next = lb + 1.0;
            moved = std::max(moved, std::abs(next - delta[a]));
            delta[a] = next;
        }
        if (moved < 1e-12) break;
    }

    for (std::size_t i = 0; i < m; ++i) duals.u[i] += delta[comps.comp[i]];
    for (std::size_t j = 0; j < n; ++j) duals.v[j] -= delta[comps.comp[m + j]];
}

}  // namespace

TransportPlan::TransportPlan(DiscreteMeasure source, DiscreteMeasure target,
                             std::vector<Entry> pairs)
    : source_(std::move(source)), target_(std::move(target)), pairs_(std::move(pairs)) {
    std::vector<double> row(source_.size(), 0.0), col(target_.size(), 0.0);
    for (const auto& e : pairs_) {
        if (e.i >= source_.size() || e.j >= target_.size())
            throw std::invalid_argument("TransportPlan: index out of range");
        if (!(e.mass > 0.0)) throw std::invalid_argument("TransportPlan: nonpositive mass");
        if (source_.point(e.i) == target_.point(e.j))
            throw std::invalid_argument("TransportPlan: diagonal pair carries mass");
        row[e.i] += e.mass;
        col[e.j] += e.mass;
    }
    for (std::size_t i = 0; i < row.size(); ++i)
        if (std::abs(row[i] - source_.weight(i)) > kMarginalTol)
            throw std::invalid_argument("TransportPlan: source marginal violated");
    for (std::size_t j = 0; j < col.size(); ++j)
        if (std::abs(col[j] - target_.weight(j)) > kMarginalTol)
            throw std::invalid_argument("TransportPlan: target marginal violated");
}

double TransportPlan::total_cost(const CostKernel& k) const {
    double s = 0.0;
    for (const auto& e : pairs_) s += e.mass * cost(k, source_.point(e.i), target_.point(e.j));
    return s;
}

double TransportPlan::min_separation() const {
    double s = kInf;
    for (const auto& e : pairs_) s = std::min(s, chord(source_.point(e.i), target_.point(e.j)));
    return pairs_.empty() ? 0.0 : s;
}

std::vector<std::pair<UnitVector, UnitVector>> TransportPlan::support_pairs() const {
    std::vector<std::pair<UnitVector, UnitVector>> out;
    out.reserve(pairs_.size());
    for (const auto& e : pairs_) out.emplace_back(source_.point(e.i), target_.point(e.j));
    return out;
}

SolveResult solve_kantorovich(const CostKernel& k, const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu) {
    if (mu.dim() != nu.dim()) throw std::invalid_argument("solve_kantorovich: dimension mismatch");
    if (std::abs(mu.total_mass() - nu.total_mass()) > kMarginalTol)
        throw InfeasibleError("solve_kantorovich: total masses do not balance");

    const std::size_t m = mu.size(), n = nu.size();

    // Diagonal cells form a partial matching (atoms are merged within each
    // measure), so a Hall-type check settles finite-cost feasibility: a
    // shared atom is an obstruction exactly when its two masses exceed the
    // total.
    ScaledMasses units = scale_masses(mu.weights(), nu.weights());
    std::int64_t total_units =
        std::accumulate(units.row.begin(), units.row.end(), std::int64_t(0));

    std::map<Vec, std::size_t> target_index;
    for (std::size_t j = 0; j < n; ++j) target_index[nu.point(j).coords()] = j;
    std::vector<std::int64_t> diagonal_col(m, -1);
    for (std::size_t i = 0; i < m; ++i) {
        auto it = target_index.find(mu.point(i).coords());
        if (it == target_index.end()) continue;
        diagonal_col[i] = std::int64_t(it->second);
        if (units.row[i] + units.col[it->second] > total_units)
            throw NoFinitePlanError(
                "solve_kantorovich: a shared atom exceeds the separable budget");
    }

    std::vector<std::int32_t> arc_row, arc_col;
    std::vector<double> arc_cost;
    arc_row.reserve(m * n);
    arc_col.reserve(m * n);
    arc_cost.reserve(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (diagonal_col[i] == std::int64_t(j)) continue;
            arc_row.push_back(std::int32_t(i));
            arc_col.push_back(std::int32_t(j));
            arc_cost.push_back(cost(k, mu.point(i), nu.point(j)));
        }
    }

    TransportSimplex simplex(m, n, std::move(arc_row), std::move(arc_col), std::move(arc_cost),
                             units.row, units.col);
    simplex.run();

    std::vector<TransportPlan::Entry> entries;
    for (const auto& [i, j, f] : simplex.support())
        entries.push_back({i, j, double(f) * units.unit});
    TransportPlan plan(mu, nu, std::move(entries));

    auto [du, dv] = simplex.duals();
    DualPotentials duals{std::move(du), std::move(dv)};
    polish_duals(k, mu, nu, plan.pairs(), duals);

    // Optimality certificate: dual feasibility everywhere off the diagonal
    // and complementary slackness on the support.
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double c = cost(k, mu.point(i), nu.point(j));
            if (c == kInf) continue;
            if (duals.u[i] + duals.v[j] > c + kDualTol)
                throw std::logic_error("solve_kantorovich: dual feasibility lost");
        }
    }
    for (const auto& e : plan.pairs()) {
        double c = cost(k, mu.point(e.i), nu.point(e.j));
        if (std::abs(duals.u[e.i] + duals.v[e.j] - c) > kDualTol)
            throw std::logic_error("solve_kantorovich: complementary slackness lost");
    }

    double total = plan.total_cost(k);
    return SolveResult{std::move(plan), std::move(duals), total};
}

double monge_cost(const CostKernel& k, const std::vector<std::size_t>& T,
                  const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (T.size() != mu.size()) throw std::invalid_argument("monge_cost: map size mismatch");
    std::vector<double> pushed(nu.size(), 0.0);
    for (std::size_t i = 0; i < T.size(); ++i) {
        if (T[i] >= nu.size()) throw std::invalid_argument("monge_cost: target index out of range");
        pushed[T[i]] += mu.weight(i);
    }
    for (std::size_t j = 0; j < nu.size(); ++j)
        if (std::abs(pushed[j] - nu.weight(j)) > kMarginalTol)
            throw std::invalid_argument("monge_cost: map does not push source onto target");
    double s = 0.0;
    for (std::size_t i = 0; i < T.size(); ++i)
        s += mu.weight(i) * cost(k, mu.point(i), nu.point(T[i]));
    return s;
}

namespace {

// Enumerates k-combinations of {0..n-1}; calls fn for each.
template <typename Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        fn(idx);
        std::size_t i = k;
        while (i-- > 0) {
            if (idx[i] != i + n - k) {
                ++idx[i];
                for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
                break;
            }
            if (i == 0) return;
        }
    }
}

double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (std::size_t i = 0; i < k; ++i) r = r * double(n - i) / double(i + 1);
    return r;
}

}  // namespace

MonotonicityReport check_cyclical_monotonicity(
    const CostKernel& k, const std::vector<std::pair<UnitVector, UnitVector>>& S, int max_n,
    double tol, std::uint64_t seed) {
    MonotonicityReport rep;
    const std::size_t N = S.size();
    if (N == 0) return rep;

    std::vector<double> own(N);
    for (std::size_t i = 0; i < N; ++i) {
        own[i] = cost(k, S[i].first, S[i].second);
        if (!std::isfinite(own[i]))
            throw std::invalid_argument("check_cyclical_monotonicity: diagonal pair in set");
    }

    max_n = std::min(max_n, 5);
    const std::uint64_t exhaustive_budget = 200000;
    const std::uint64_t sample_draws = 20000;
    Rng rng(seed);

    auto test_tuple = [&](const std::vector<std::size_t>& tuple) -> bool {
        ++rep.tuples_checked;
        const std::size_t kk = tuple.size();
        double identity_sum = 0.0;
        for (std::size_t t : tuple) identity_sum += own[t];
        std::vector<std::size_t> perm(kk);
        std::iota(perm.begin(), perm.end(), 0);
        while (std::next_permutation(perm.begin(), perm.end())) {
            double permuted = 0.0;
            bool infinite = false;
            for (std::size_t a = 0; a < kk; ++a) {
                double c = cost(k, S[tuple[a]].first, S[tuple[perm[a]]].second);
                if (c == kInf) {
                    infinite = true;
                    break;
                }
                permuted += c;
            }
            if (infinite) continue;  // an infinite reassignment never undercuts
            if (identity_sum - permuted > tol) {
                rep.monotone = false;
                rep.violating_tuple = tuple;
                rep.violating_perm = perm;
                rep.deficit = identity_sum - permuted;
                return false;
            }
        }
        return true;
    };

    for (int kk = 2; kk <= max_n && std::size_t(kk) <= N; ++kk) {
        if (binomial(N, kk) <= double(exhaustive_budget)) {
            bool keep_going = true;
            for_each_combination(N, std::size_t(kk), [&](const std::vector<std::size_t>& idx) {
                if (keep_going && !test_tuple(idx)) keep_going = false;
            });
            if (!keep_going) return rep;
        } else {
            rep.sampled = true;
            for (std::uint64_t draw = 0; draw < sample_draws; ++draw) {
                std::vector<std::size_t> tuple;
                while (tuple.size() < std::size_t(kk)) {
                    std::size_t cand = rng.index(N);
                    if (std::find(tuple.begin(), tuple.end(), cand) == tuple.end())
                        tuple.push_back(cand);
                }
                std::sort(tuple.begin(), tuple.end());
                if (!test_tuple(tuple)) return rep;
            }
        }
    }
    return rep;
}

// ----------------------------------------------------------------------
// Separated plan by slab splitting.
// ----------------------------------------------------------------------

namespace {

struct WeightedAtom {
    std::size_t index;  // into the original measure
    double z;           // signed slab coordinate
    double mass;
};

using AtomList = std::vector<WeightedAtom>;

double list_mass(const AtomList& a) {
    double s = 0.0;
    for (const auto& x : a) s += x.mass;
    return s;
}

// Splits off `target` mass from the bottom (smallest z first), cutting the
// crossing atom fractionally.
std::pair<AtomList, AtomList> split_bottom(AtomList atoms, double target) {
    std::sort(atoms.begin(), atoms.end(), [](const WeightedAtom& a, const WeightedAtom& b) {
        return a.z < b.z || (a.z == b.z && a.index < b.index);
    });
    AtomList low, high;
    double acc = 0.0;
    for (auto& a : atoms) {
        if (acc >= target) {
            high.push_back(a);
            continue;
        }
        if (acc + a.mass <= target) {
            low.push_back(a);
            acc += a.mass;
        } else {
            double take = target - acc;
            if (take > 0.0) low.push_back({a.index, a.z, take});
            double rest = a.mass - take;
            if (rest > 0.0) high.push_back({a.index, a.z, rest});
            acc = target;
        }
    }
    return {std::move(low), std::move(high)};
}

// Product coupling of two equal-mass halves split at their mass midpoints:
// bottom of the source pairs with bottom of the target and top with top,
// which keeps every pair strictly across the gap between the slabs.
void product_half_coupling(const AtomList& src, const AtomList& dst,
                           std::map<std::pair<std::size_t, std::size_t>, double>& pairs) {
    double total = list_mass(src);
    if (total <= 0.0) return;
    auto [src_lo, src_hi] = split_bottom(src, total / 2.0);
    auto [dst_lo, dst_hi] = split_bottom(dst, total / 2.0);
    auto product = [&](const AtomList& a, const AtomList& b) {
        double half = list_mass(a);
        if (half <= 0.0) return;
        for (const auto& xa : a)
            for (const auto& xb : b)
                pairs[{xa.index, xb.index}] += xa.mass * xb.mass / half;
    };
    product(src_lo, dst_lo);
    product(src_hi, dst_hi);
}

}  // namespace

SeparatedPlan separated_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.dim() != nu.dim()) throw std::invalid_argument("separated_plan: dimension mismatch");
    double total = mu.total_mass();
    if (std::abs(total - nu.total_mass()) > kMarginalTol)
        throw InfeasibleError("separated_plan: total masses do not balance");
    if (total <= 0.0) throw std::invalid_argument("separated_plan: zero total mass");

    AtomList mu_atoms, nu_atoms;
    for (std::size_t i = 0; i < mu.size(); ++i)
        mu_atoms.push_back({i, mu.point(i).z(), mu.weight(i)});
    for (std::size_t j = 0; j < nu.size(); ++j)
        nu_atoms.push_back({j, nu.point(j).z(), nu.weight(j)});

    // Find a cut level where the source mass above it equals the target
    // mass below it (atoms at the cut split fractionally). Sweeping the
    // candidate levels, the quantity mu[z >= c] - nu[z < c] decreases from
    // +total to -total, so the two attainable-mass intervals at some level
    // intersect.
    std::vector<double> levels;
    for (const auto& a : mu_atoms) levels.push_back(a.z);
    for (const auto& a : nu_atoms) levels.push_back(a.z);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    double m_shared = -1.0;
    for (double z : levels) {
        double mu_above = 0.0, mu_at = 0.0, nu_below = 0.0, nu_at = 0.0;
        for (const auto& a : mu_atoms) {
            if (a.z > z) mu_above += a.mass;
            else if (a.z == z) mu_at += a.mass;
        }
        for (const auto& a : nu_atoms) {
            if (a.z < z) nu_below += a.mass;
            else if (a.z == z) nu_at += a.mass;
        }
        double lo = std::max(mu_above, nu_below);
        double hi = std::min(mu_above + mu_at, nu_below + nu_at);
        if (lo <= hi) {
            m_shared = lo;  // smallest admissible crossing mass
            break;
        }
    }
    if (m_shared < 0.0)
        throw std::logic_error("separated_plan: no admissible cut level found");

    // Split both measures at the cut into lower and upper parts carrying
    // masses (total - m) and m on the source side, m and (total - m) on
    // the target side.
    auto mu_split = split_bottom(mu_atoms, total - m_shared);   // lower, upper
    auto nu_split = split_bottom(nu_atoms, m_shared);           // lower, upper

    std::map<std::pair<std::size_t, std::size_t>, double> pair_mass;
    // Upper source couples with lower target (both sides flipped so the
    // halving logic sees source below target), lower source with upper
    // target in the standard orientation.
    auto flip = [](AtomList l) {
        for (auto& a : l) a.z = -a.z;
        return l;
    };
    {
        std::map<std::pair<std::size_t, std::size_t>, double> flipped_pairs;
        product_half_coupling(flip(mu_split.second), flip(nu_split.first), flipped_pairs);
        for (const auto& [ij, mass] : flipped_pairs) pair_mass[ij] += mass;
    }
    product_half_coupling(mu_split.first, nu_split.second, pair_mass);

    std::vector<TransportPlan::Entry> entries;
    double eps = kInf;
    for (const auto& [ij, mass] : pair_mass) {
        if (mass <= 0.0) continue;
        if (mu.point(ij.first) == nu.point(ij.second))
            throw NoFinitePlanError(
                "separated_plan: shared atom mass cannot be separated from the diagonal");
        entries.push_back({ij.first, ij.second, mass});
        eps = std::min(eps, chord(mu.point(ij.first), nu.point(ij.second)));
    }
    TransportPlan plan(mu, nu, std::move(entries));
    return SeparatedPlan{std::move(plan), eps};
}

}  // namespace sot
