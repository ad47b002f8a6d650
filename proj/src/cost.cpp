#include "sot/cost.hpp"

#include <cmath>
#include <stdexcept>

namespace sot {

namespace {

double checked(double v, const char* what) {
    if (std::isnan(v)) throw std::domain_error(std::string("NaN in ") + what);
    return v;
}

double half_squared_chord(const UnitVector& x, const UnitVector& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.ambient_dim(); ++i) {
        double d = x[i] - y[i];
        s += d * d;
    }
    return 0.5 * s;
}

}  // namespace

CostKernel log_kernel() {
    return CostKernel{
        "log",
        [](double t) { return -std::log(t); },
        [](double t) { return -1.0 / t; },
        [](double t) { return 1.0 / (t * t); },
    };
}

CostKernel power_kernel(double q) {
    if (!(q > 0.0)) throw std::invalid_argument("power_kernel: need q > 0");
    return CostKernel{
        "power:" + std::to_string(q),
        [q](double t) { return std::pow(t, -q); },
        [q](double t) { return -q * std::pow(t, -q - 1.0); },
        [q](double t) { return q * (q + 1.0) * std::pow(t, -q - 2.0); },
    };
}

CostKernel parse_kernel(const std::string& spec) {
    if (spec == "log") return log_kernel();
    if (spec.rfind("power:", 0) == 0) {
        double q = 0.0;
        try {
            q = std::stod(spec.substr(6));
        } catch (const std::exception&) {
            throw std::invalid_argument("parse_kernel: bad power exponent in '" + spec + "'");
        }
        return power_kernel(q);
    }
    throw std::invalid_argument("parse_kernel: unknown kernel '" + spec + "'");
}

double cost(const CostKernel& k, const UnitVector& x, const UnitVector& y) {
    if (x.ambient_dim() != y.ambient_dim())
        throw std::invalid_argument("cost: dimension mismatch");
    if (x == y) return kInf;
    double t = half_squared_chord(x, y);
    if (t <= 0.0) return kInf;
    return checked(k.l(t), "cost profile");
}

TangentVector tangential_gradient(const CostKernel& k, const UnitVector& x, const UnitVector& y) {
    if (x == y) throw std::domain_error("tangential_gradient: undefined on the diagonal");
    double t = half_squared_chord(x, y);
    double lp = checked(k.l_prime(t), "cost profile derivative");
    TangentVector proj = tangential_project(y, x);
    return TangentVector(x, scale(-lp, proj.vec));
}

double g_value(const CostKernel& k, double t) {
    if (!(t > 0.0 && t <= 2.0)) throw std::domain_error("g_value: t must lie in (0, 2]");
    double lp = k.l_prime(t);
    return checked(t * (2.0 - t) * lp * lp, "g");
}

double g_derivative(const CostKernel& k, double t) {
    if (!(t > 0.0 && t <= 2.0)) throw std::domain_error("g_derivative: t must lie in (0, 2]");
    double lp = k.l_prime(t);
    double ls = k.l_second(t);
    return checked((2.0 - 2.0 * t) * lp * lp + 2.0 * t * (2.0 - t) * lp * ls, "g'");
}

namespace {

// Direction of monotonicity probed at a few interior points. The profile
// contract guarantees a monotone g; this only picks the sign.
int probe_direction(const CostKernel& k) {
    double a = g_value(k, 0.5), b = g_value(k, 1.9999);
    return (b > a) ? 1 : -1;
}

}  // namespace

double g_inverse(const CostKernel& k, double r) {
    if (std::isnan(r)) throw std::domain_error("g_inverse: NaN");
    if (k.name == "log") {
        // g(t) = (2-t)/t, inverted exactly.
        if (r < 0.0) {
            if (r > -1e-9) r = 0.0;
            else throw std::domain_error("g_inverse: value below range of g");
        }
        return 2.0 / (1.0 + r);
    }

    int dir = probe_direction(k);
    double g_at_2 = g_value(k, 2.0);  // always 0: the factor (2-t) vanishes
    double lo = 0.0, hi = 0.0;
    if (dir < 0) {
        // g decreasing: range is [g(2), sup_{t->0+} g).
        if (r < g_at_2) {
            if (r > g_at_2 - 1e-9 * std::max(1.0, std::abs(g_at_2))) return 2.0;
            throw std::domain_error("g_inverse: value below range of g");
        }
        hi = 2.0;
        lo = 2.0;
        while (lo > 1e-300 && g_value(k, lo) < r) lo *= 0.5;
        if (g_value(k, lo) < r) throw std::domain_error("g_inverse: value above range of g");
        // Invariant: g(lo) >= r >= g(hi).
        for (int i = 0; i < 200 && (hi - lo) > 1e-14; ++i) {
            double mid = 0.5 * (lo + hi);
            if (g_value(k, mid) >= r) lo = mid;
            else hi = mid;
        }
    } else {
        // g increasing: range is (inf_{t->0+} g, g(2)].
        if (r > g_at_2) {
            if (r < g_at_2 + 1e-9 * std::max(1.0, std::abs(g_at_2))) return 2.0;
            throw std::domain_error("g_inverse: value above range of g");
        }
        hi = 2.0;
        lo = 2.0;
        while (lo > 1e-300 && g_value(k, lo) > r) lo *= 0.5;
        if (g_value(k, lo) > r) throw std::domain_error("g_inverse: value below range of g");
        for (int i = 0; i < 200 && (hi - lo) > 1e-14; ++i) {
            double mid = 0.5 * (lo + hi);
            if (g_value(k, mid) <= r) lo = mid;
            else hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

UnitVector inverse_map_M(const CostKernel& k, const TangentVector& a) {
    double r = a.squared_norm();
    if (r <= 0.0) throw std::domain_error("inverse_map_M: zero tangent vector");
    double t = g_inverse(k, r);
    double lp = k.l_prime(t);
    if (lp == 0.0 || !std::isfinite(lp))
        throw std::domain_error("inverse_map_M: profile derivative degenerate");
    const Vec& x = a.base.coords();
    Vec y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = (1.0 - t) * x[i] - a.vec[i] / lp;
    return UnitVector(std::move(y));
}

AdmissibilityReport admissibility_report(const CostKernel& k, double delta, std::size_t samples) {
    if (!(delta > 0.0 && delta < 4.0))
        throw std::invalid_argument("admissibility_report: need 0 < delta < 4");
    if (samples < 8) throw std::invalid_argument("admissibility_report: too few samples");

    AdmissibilityReport rep;

    // |l'| > 0 sampled on (0, 2].
    for (std::size_t i = 0; i < samples; ++i) {
        double t = 2.0 * (double(i) + 0.5) / double(samples);
        if (std::abs(k.l_prime(t)) == 0.0)
            rep.failures.emplace_back(t, "l' vanishes");
    }
    // l(t) -> +inf as t -> 0+, checked on a decreasing sequence: the values
    // must keep climbing and gain a nontrivial amount overall.
    double first = k.l(0.5);
    double prev = first;
    for (double t = 0.125; t > 1e-9; t *= 0.25) {
        double v = k.l(t);
        if (!(v > prev) && !(v == kInf))
            rep.failures.emplace_back(t, "l does not grow toward 0");
        prev = v;
    }
    if (prev != kInf && !(prev > first + 1.0))
        rep.failures.emplace_back(1e-9, "l(t) stays bounded as t -> 0+");

    // Monotonicity of g by sampled finite differences and by the sign of g'.
    int sign_seen = 0;
    bool monotone = true;
    double t_prev = delta / 2.0;
    double g_prev = g_value(k, t_prev);
    for (std::size_t i = 1; i <= samples; ++i) {
        double t = delta / 2.0 + (2.0 - delta / 2.0) * double(i) / double(samples);
        double g = g_value(k, t);
        double diff = g - g_prev;
        int s = (diff > 0.0) ? 1 : (diff < 0.0 ? -1 : 0);
        if (s != 0) {
            if (sign_seen == 0) sign_seen = s;
            else if (s != sign_seen) {
                monotone = false;
                rep.failures.emplace_back(t, "g changes direction (finite difference)");
            }
        }
        double gd = g_derivative(k, 0.5 * (t_prev + t));
        if (sign_seen != 0 && gd * double(sign_seen) < 0.0 && std::abs(gd) > 1e-12)
            rep.failures.emplace_back(t, "g' has opposite sign");
        t_prev = t;
        g_prev = g;
    }
    rep.g_monotone = monotone && sign_seen != 0;
    rep.direction = sign_seen;

    if (rep.g_monotone) {
        double a = g_value(k, delta / 2.0);
        double b = g_value(k, 2.0);
        rep.domain_lo = std::min(a, b);
        rep.domain_hi = std::max(a, b);
    }
    return rep;
}

}  // namespace sot
