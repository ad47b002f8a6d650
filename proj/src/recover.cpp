#include "sot/recover.hpp"

#include <cmath>
#include <stdexcept>

namespace sot {

PotentialFn potential_from_duals(const CostKernel& k, const std::vector<UnitVector>& targets,
                                 const std::vector<double>& v) {
    if (targets.size() != v.size())
        throw std::invalid_argument("potential_from_duals: size mismatch");
    std::vector<double> lambdas(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (!std::isfinite(v[j]))
            throw std::invalid_argument("potential_from_duals: dual values must be finite");
        lambdas[j] = -v[j];
    }
    return PotentialFn(k, targets, std::move(lambdas));
}

std::pair<TangentVector, bool> potential_gradient(const PotentialFn& psi, const UnitVector& x,
                                                  double tie_tol) {
    auto am = psi.argmin(x, tie_tol);
    if (!std::isfinite(am.value))
        return {TangentVector(x, Vec(x.ambient_dim(), 0.0)), false};
    TangentVector grad = tangential_gradient(psi.kernel(), x, psi.anchors()[am.index]);
    return {std::move(grad), am.unique};
}

RecoveredMap recover_map(const PotentialFn& psi, const std::vector<UnitVector>& X,
                         double tie_tol) {
    RecoveredMap out;
    out.points = X;
    out.images.reserve(X.size());
    out.argmin_index.resize(X.size(), 0);
    out.differentiable.assign(X.size(), 0);
    out.delta = kInf;

    for (std::size_t i = 0; i < X.size(); ++i) {
        auto am = psi.argmin(X[i], tie_tol);
        out.argmin_index[i] = am.index;
        bool ok = am.unique && std::isfinite(am.value);
        UnitVector image = X[i];
        if (ok) {
            try {
                TangentVector grad = tangential_gradient(psi.kernel(), X[i], psi.anchors()[am.index]);
                image = inverse_map_M(psi.kernel(), grad);
            } catch (const std::domain_error&) {
                ok = false;  // gradient at the edge of the invertible range
            }
        }
        out.images.push_back(image);
        out.differentiable[i] = ok ? 1 : 0;
        if (ok) out.delta = std::min(out.delta, chord(image, X[i]));
        else out.flagged.push_back(i);
    }
    if (out.delta == kInf) out.delta = 0.0;
    return out;
}

RecoveredMap inverse_map(const PotentialFn& psi_c, const std::vector<UnitVector>& Y,
                         double tie_tol) {
    return recover_map(psi_c, Y, tie_tol);
}

PushforwardReport verify_pushforward(const RecoveredMap& T, const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu, double tol) {
    if (T.points.size() != mu.size())
        throw std::invalid_argument("verify_pushforward: map must be evaluated on the source atoms");
    PushforwardReport rep;
    std::vector<double> collected(nu.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!T.differentiable[i]) {
            rep.excluded_mass += mu.weight(i);
            continue;
        }
        // Nearest target atom within 1e-8 takes the mass.
        double best = kInf;
        std::size_t best_j = nu.size();
        for (std::size_t j = 0; j < nu.size(); ++j) {
            double d = chord(T.images[i], nu.point(j));
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        if (best_j < nu.size() && best <= 1e-8) collected[best_j] += mu.weight(i);
        else rep.unmatched_mass += mu.weight(i);
    }
    for (std::size_t j = 0; j < nu.size(); ++j) {
        double expected = nu.weight(j);
        rep.max_deviation = std::max(rep.max_deviation, std::abs(collected[j] - expected));
    }
    rep.pass = rep.max_deviation <= tol + rep.excluded_mass && rep.unmatched_mass <= tol;
    return rep;
}

}  // namespace sot
