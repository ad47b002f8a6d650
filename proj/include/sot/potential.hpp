#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "sot/cost.hpp"
#include "sot/geometry.hpp"

namespace sot {

/// c-concave potential: an infimum of cost translates,
///   psi(x) = min_j c(x, y_j) + lambda_j
/// over a finite anchor set {(y_j, lambda_j)} with finite lambda_j.
/// Functions of this form are fixed points of the double c-transform.
class PotentialFn {
public:
    PotentialFn(CostKernel kernel, std::vector<UnitVector> anchors, std::vector<double> lambdas);

    double operator()(const UnitVector& x) const;

    struct Argmin {
        std::size_t index = 0;
        double value = 0.0;
        bool unique = false;
        double gap = 0.0;  // second best minus best
    };
    /// Active anchor at x. Unique means the runner-up is more than
    /// tie_tol * max(1, |best|) away.
    Argmin argmin(const UnitVector& x, double tie_tol = 1e-9) const;

    const std::vector<UnitVector>& anchors() const { return anchors_; }
    const std::vector<double>& lambdas() const { return lambdas_; }
    const CostKernel& kernel() const { return kernel_; }
    std::size_t size() const { return anchors_.size(); }

private:
    CostKernel kernel_;
    std::vector<UnitVector> anchors_;
    std::vector<double> lambdas_;
};

/// c-transform over a finite evaluation set:
///   psi^c(y) = min_{x in X} c(x, y) - psi(x),
/// returned in anchor form (anchors at the x with lambda = -psi(x)).
/// Points where psi is infinite are dropped; if none remain the transform
/// is undefined (argument error).
PotentialFn c_transform(const PotentialFn& psi, const std::vector<UnitVector>& X);

/// Pairs (x_i, y_j) from X x Y where psi(x) + psi^c(y) = c(x,y) within tol,
/// with psi^c taken over X. Also reports the minimum chord |x - y| over the
/// returned pairs, which stays bounded away from zero for potentials built
/// from off-diagonal data.
struct SuperdiffResult {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double min_separation = 0.0;
};
SuperdiffResult superdifferential(const PotentialFn& psi, const std::vector<UnitVector>& X,
                                  const std::vector<UnitVector>& Y, double tol);

/// Chain potential supported by a cyclically monotone pair set S:
///   psi(x) = min_i [ D(base, i) + c(x, y_i) - c(x_i, y_i) ],
/// where D is the shortest-path distance over the |S|-node graph with edge
/// weight w(i -> j) = c(x_j, y_i) - c(x_i, y_i). Then psi(x_base) = 0 and
/// every pair of S lies in the c-superdifferential of psi. A negative cycle
/// in the graph certifies that S is not cyclically monotone.
PotentialFn chain_potential(const CostKernel& k,
                            const std::vector<std::pair<UnitVector, UnitVector>>& S,
                            std::size_t base = 0);

}  // namespace sot
