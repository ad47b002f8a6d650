#pragma once

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sot/geometry.hpp"

namespace sot {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Radial cost profile for c(x,y) = l(|x-y|^2 / 2) on the sphere.
///
/// Admissible profiles satisfy |l'(t)| > 0 on (0,2] and l(t) -> +inf as
/// t -> 0+, and make g(t) = t (2-t) l'(t)^2 monotone on (0,2]. Under those
/// conditions the tangential gradient a = -l'(t) (y - (x.y)x) determines y
/// from (a, x): since |a|^2 = g(1 - x.y), the point recovers as
///
///   y = [1 - g^{-1}(|a|^2)] x - a / l'(g^{-1}(|a|^2)).
///
/// The built-in profiles are the logarithmic one, l(t) = -log t (the
/// far-field reflector cost, where c(x,y) = -log(1 - x.y)), and the power
/// family l(t) = t^{-q} with q > 0.
struct CostKernel {
    std::string name;
    std::function<double(double)> l;
    std::function<double(double)> l_prime;
    std::function<double(double)> l_second;
};

CostKernel log_kernel();
CostKernel power_kernel(double q);
/// Accepts "log" or "power:q" with q > 0.
CostKernel parse_kernel(const std::string& spec);

/// c(x,y) = l(|x-y|^2 / 2), with c = +inf exactly on the diagonal
/// (canonicalized coordinates comparing equal). Symmetric by construction.
/// NaN from the profile is a hard error.
double cost(const CostKernel& k, const UnitVector& x, const UnitVector& y);

/// Tangential gradient of x -> c(x,y) at x: a = -l'(|x-y|^2/2) (y - (x.y)x).
/// Undefined on the diagonal (domain error).
TangentVector tangential_gradient(const CostKernel& k, const UnitVector& x, const UnitVector& y);

/// g(t) = t (2-t) l'(t)^2 and its derivative.
double g_value(const CostKernel& k, double t);
double g_derivative(const CostKernel& k, double t);

/// Inverse of g on (0, 2] by bisection (closed form for the log profile,
/// where g(t) = (2-t)/t so g^{-1}(r) = 2/(1+r)). Values outside the range
/// of g are a domain error; values within 1e-9 relative of the range
/// boundary are clamped, never extrapolated.
double g_inverse(const CostKernel& k, double r);

/// Explicit inverse of the tangential gradient: the unique y on the sphere
/// with grad_x c(x,y) = a, for tangent a != 0 with |a|^2 in the range of g.
UnitVector inverse_map_M(const CostKernel& k, const TangentVector& a);

/// Monotonicity report for g on (0, 2], with the induced closed interval
/// of admissible |a|^2 values g[delta/2, 2].
struct AdmissibilityReport {
    bool g_monotone = false;
    int direction = 0;  // +1 increasing, -1 decreasing
    double domain_lo = 0.0;
    double domain_hi = 0.0;
    std::vector<std::pair<double, std::string>> failures;
};

AdmissibilityReport admissibility_report(const CostKernel& k, double delta = 1e-3,
                                         std::size_t samples = 2000);

}  // namespace sot
