#include "sot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sot/errors.hpp"

namespace sot {

double brute_force_permutation_cost(const CostKernel& k, const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu) {
    const std::size_t n = mu.size();
    if (nu.size() != n)
        throw std::invalid_argument("permutation oracle: needs equal atom counts");
    if (n > 9) throw std::invalid_argument("permutation oracle: instance too large");
    double w = mu.total_mass() / double(n);
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(mu.weight(i) - w) > 1e-12 || std::abs(nu.weight(i) - w) > 1e-12)
            throw std::invalid_argument("permutation oracle: needs uniform weights");

    std::vector<std::vector<double>> c(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i][j] = cost(k, mu.point(i), nu.point(j));

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = kInf;
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n && s < kInf; ++i) s += c[i][perm[i]];
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (best == kInf)
        throw NoFinitePlanError("permutation oracle: all matchings have infinite cost");
    return best * w;
}

namespace {

// Solves the flow on a given spanning tree of basic cells by repeated leaf
// elimination. Returns false when some flow would have to be negative.
bool tree_flows(std::size_t m, std::size_t n, const std::vector<std::pair<int, int>>& cells,
                const std::vector<double>& mu_w, const std::vector<double>& nu_w,
                std::vector<double>& flows) {
    const std::size_t nodes = m + n;
    std::vector<double> balance(nodes);
    for (std::size_t i = 0; i < m; ++i) balance[i] = mu_w[i];
    for (std::size_t j = 0; j < n; ++j) balance[m + j] = -nu_w[j];

    std::vector<int> degree(nodes, 0);
    std::vector<std::vector<std::size_t>> incident(nodes);
    for (std::size_t a = 0; a < cells.size(); ++a) {
        std::size_t u = std::size_t(cells[a].first);
        std::size_t v = m + std::size_t(cells[a].second);
        ++degree[u];
        ++degree[v];
        incident[u].push_back(a);
        incident[v].push_back(a);
    }

    flows.assign(cells.size(), 0.0);
    std::vector<char> cell_done(cells.size(), 0);
    std::vector<std::size_t> leaves;
    for (std::size_t v = 0; v < nodes; ++v)
        if (degree[v] == 1) leaves.push_back(v);

    std::size_t processed = 0;
    while (!leaves.empty()) {
        std::size_t v = leaves.back();
        leaves.pop_back();
        if (degree[v] != 1) continue;
        std::size_t arc = std::size_t(-1);
        for (std::size_t a : incident[v])
            if (!cell_done[a]) arc = a;
        if (arc == std::size_t(-1)) break;
        std::size_t u = std::size_t(cells[arc].first);
        std::size_t w = m + std::size_t(cells[arc].second);
        std::size_t other = (u == v) ? w : u;
        // Flow runs row -> col; a row leaf pushes its balance, a col leaf pulls.
        double f = (v < m) ? balance[v] : -balance[v];
        if (f < -1e-12) return false;
        flows[arc] = f;
        balance[other] += balance[v];
        balance[v] = 0.0;
        cell_done[arc] = 1;
        --degree[v];
        if (--degree[other] == 1) leaves.push_back(other);
        ++processed;
    }
    return processed == cells.size();
}

}  // namespace

double brute_force_vertex_cost(const CostKernel& k, const DiscreteMeasure& mu,
                               const DiscreteMeasure& nu) {
    const std::size_t m = mu.size(), n = nu.size();
    if (std::abs(mu.total_mass() - nu.total_mass()) > 1e-10)
        throw InfeasibleError("vertex oracle: total masses do not balance");

    std::vector<std::pair<int, int>> allowed;
    std::vector<double> costs;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double c = cost(k, mu.point(i), nu.point(j));
            if (c == kInf) continue;
            allowed.emplace_back(int(i), int(j));
            costs.push_back(c);
        }
    }
    const std::size_t basis_size = m + n - 1;
    if (allowed.size() < basis_size)
        throw NoFinitePlanError("vertex oracle: not enough finite cells");

    double combos = 1.0;
    for (std::size_t i = 0; i < basis_size; ++i)
        combos *= double(allowed.size() - i) / double(i + 1);
    if (combos > 6e6) throw std::invalid_argument("vertex oracle: instance too large");

    double best = kInf;
    std::vector<std::size_t> pick(basis_size);
    std::iota(pick.begin(), pick.end(), 0);
    std::vector<double> flows;
    while (true) {
        // Union-find spanning check before solving flows.
        std::vector<int> parent(m + n);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        bool acyclic = true;
        for (std::size_t t : pick) {
            int a = find(allowed[t].first), b = find(int(m) + allowed[t].second);
            if (a == b) {
                acyclic = false;
                break;
            }
            parent[a] = b;
        }
        if (acyclic) {
            std::vector<std::pair<int, int>> cells;
            for (std::size_t t : pick) cells.push_back(allowed[t]);
            if (tree_flows(m, n, cells, mu.weights(), nu.weights(), flows)) {
                double s = 0.0;
                for (std::size_t t = 0; t < cells.size(); ++t)
                    s += flows[t] * costs[pick[t]];
                best = std::min(best, s);
            }
        }
        // Next combination.
        std::size_t i = basis_size;
        bool done = true;
        while (i-- > 0) {
            if (pick[i] != i + allowed.size() - basis_size) {
                ++pick[i];
                for (std::size_t j = i + 1; j < basis_size; ++j) pick[j] = pick[j - 1] + 1;
                done = false;
                break;
            }
        }
        if (done) break;
    }
    if (best == kInf)
        throw NoFinitePlanError("vertex oracle: no feasible basic solution found");
    return best;
}

}  // namespace sot
