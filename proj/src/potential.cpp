#include "sot/potential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sot/errors.hpp"
#include "sot/solver.hpp"

namespace sot {

PotentialFn::PotentialFn(CostKernel kernel, std::vector<UnitVector> anchors,
                         std::vector<double> lambdas)
    : kernel_(std::move(kernel)), anchors_(std::move(anchors)), lambdas_(std::move(lambdas)) {
    if (anchors_.empty()) throw std::invalid_argument("PotentialFn: empty anchor set");
    if (anchors_.size() != lambdas_.size())
        throw std::invalid_argument("PotentialFn: anchors/lambdas size mismatch");
    for (double l : lambdas_)
        if (!std::isfinite(l)) throw std::invalid_argument("PotentialFn: lambdas must be finite");
}

double PotentialFn::operator()(const UnitVector& x) const {
    double best = kInf;
    for (std::size_t j = 0; j < anchors_.size(); ++j) {
        double v = cost(kernel_, x, anchors_[j]) + lambdas_[j];
        if (v < best) best = v;
    }
    return best;
}

PotentialFn::Argmin PotentialFn::argmin(const UnitVector& x, double tie_tol) const {
    Argmin out;
    double best = kInf, second = kInf;
    std::size_t best_j = anchors_.size();
    for (std::size_t j = 0; j < anchors_.size(); ++j) {
        double v = cost(kernel_, x, anchors_[j]) + lambdas_[j];
        if (v < best) {
            second = best;
            best = v;
            best_j = j;
        } else if (v < second) {
            second = v;
        }
    }
    out.index = best_j;
    out.value = best;
    out.gap = second - best;
    out.unique = best < kInf && best_j < anchors_.size() &&
                 (second == kInf || out.gap > tie_tol * std::max(1.0, std::abs(best)));
    return out;
}

PotentialFn c_transform(const PotentialFn& psi, const std::vector<UnitVector>& X) {
    std::vector<UnitVector> anchors;
    std::vector<double> lambdas;
    anchors.reserve(X.size());
    for (const auto& x : X) {
        double v = psi(x);
        if (std::isfinite(v)) {
            anchors.push_back(x);
            lambdas.push_back(-v);
        }
    }
    if (anchors.empty())
        throw std::invalid_argument("c_transform: potential is infinite on the whole set");
    return PotentialFn(psi.kernel(), std::move(anchors), std::move(lambdas));
}

SuperdiffResult superdifferential(const PotentialFn& psi, const std::vector<UnitVector>& X,
                                  const std::vector<UnitVector>& Y, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("superdifferential: need tol > 0");
    PotentialFn psi_c = c_transform(psi, X);

    SuperdiffResult out;
    out.min_separation = kInf;
    std::vector<double> psi_x(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) psi_x[i] = psi(X[i]);

    for (std::size_t j = 0; j < Y.size(); ++j) {
        double pc = psi_c(Y[j]);
        if (!std::isfinite(pc)) continue;
        for (std::size_t i = 0; i < X.size(); ++i) {
            if (!std::isfinite(psi_x[i])) continue;
            double c_ij = cost(psi.kernel(), X[i], Y[j]);
            if (!std::isfinite(c_ij)) continue;
            if (std::abs(psi_x[i] + pc - c_ij) <= tol) {
                out.pairs.emplace_back(i, j);
                out.min_separation = std::min(out.min_separation, chord(X[i], Y[j]));
            }
        }
    }
    if (out.pairs.empty()) out.min_separation = 0.0;
    return out;
}

PotentialFn chain_potential(const CostKernel& k,
                            const std::vector<std::pair<UnitVector, UnitVector>>& S,
                            std::size_t base) {
    const std::size_t n = S.size();
    if (n == 0) throw std::invalid_argument("chain_potential: empty pair set");
    if (base >= n) throw std::invalid_argument("chain_potential: base index out of range");
    std::vector<double> own_cost(n);
    for (std::size_t i = 0; i < n; ++i) {
        own_cost[i] = cost(k, S[i].first, S[i].second);
        if (!std::isfinite(own_cost[i]))
            throw std::invalid_argument("chain_potential: pair set touches the diagonal");
    }

    // Quick screen over small tuples; the negative-cycle scan below covers
    // violations of every length.
    auto screen = check_cyclical_monotonicity(k, S, 3);
    if (!screen.monotone)
        throw MonotonicityError("chain_potential: pair set is not cyclically monotone");

    // Bellman-Ford from the base pair over w(i -> j) = c(x_j, y_i) - c(x_i, y_i).
    std::vector<std::vector<double>> w(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            w[i][j] = cost(k, S[j].first, S[i].second) - own_cost[i];

    std::vector<double> dist(n, kInf);
    dist[base] = 0.0;
    for (std::size_t round = 0; round + 1 < n; ++round) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(dist[i])) continue;
            for (std::size_t j = 0; j < n; ++j) {
                double cand = dist[i] + w[i][j];
                if (cand < dist[j]) {
                    dist[j] = cand;
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(dist[i])) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (dist[i] + w[i][j] < dist[j] - 1e-12)
                throw MonotonicityError(
                    "chain_potential: negative chain cycle, pair set is not cyclically monotone");
        }
    }

    std::vector<UnitVector> anchors;
    std::vector<double> lambdas;
    anchors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(dist[i])) continue;  // unreachable pairs cannot support anchors
        double lambda = dist[i] - own_cost[i];
        // Each anchor value at the base point is a closed-chain sum, which
        // monotonicity keeps nonnegative; clamping to that bound (at most
        // one ulp) makes the minimum at the base point exactly zero instead
        // of rounding a hair below it.
        double c_base = cost(k, S[base].first, S[i].second);
        if (std::isfinite(c_base)) lambda = std::max(lambda, -c_base);
        anchors.push_back(S[i].second);
        lambdas.push_back(lambda);
    }
    return PotentialFn(k, std::move(anchors), std::move(lambdas));
}

}  // namespace sot
