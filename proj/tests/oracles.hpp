#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

// Independent reference computations shared by the unit and acceptance tests.
namespace fracinv::oracle {

/// a_j = Γ(j+d) / (Γ(d) Γ(j+1)) through 80-bit log-Γ with the sign of Γ(d).
inline long double gamma_ratio(double d, std::size_t j) {
    const long double jd = static_cast<long double>(j);
    const long double lg = std::lgamma(jd + d) - std::lgamma(static_cast<long double>(d)) -
                           std::lgamma(jd + 1.0L);
    return (d < 0.0 ? -1.0L : 1.0L) * std::exp(lg);
}

/// A(d) from midpoint sums over decade panels of ∫_0^∞ [(1+s)^d − s^d]² ds, with the
/// leading small-s expansion on [0, 1e-12] and the d² s^{2d−2} tail beyond 1e6.
inline double const_a_midpoint(double d) {
    const long double ld = d;
    auto f = [ld](long double s) {
        const long double diff = std::pow(1.0L + s, ld) - std::pow(s, ld);
        return diff * diff;
    };
    const long double lo = 1e-12L, hi = 1e6L;
    long double total = std::pow(lo, 2 * ld + 1) / (2 * ld + 1) -
                        2 * std::pow(lo, ld + 1) / (ld + 1) + lo;
    for (long double a = lo; a < hi; a *= 10.0L) {
        const long double b = a * 10.0L;
        const int steps = 20000;
        const long double h = (b - a) / steps;
        long double panel = 0.0L;
        for (int i = 0; i < steps; ++i) panel += f(a + (i + 0.5L) * h);
        total += panel * h;
    }
    total += ld * ld * std::pow(hi, 2 * ld - 1) / (1 - 2 * ld);
    return static_cast<double>(std::sqrt(1.0L / (2 * ld + 1) + total));
}

/// A(d)² = Γ(1+d)² / (Γ(2d+2) cos πd).
inline double const_a_closed_form(double d) {
    const double lg = 2.0 * std::lgamma(1.0 + d) - std::lgamma(2.0 * d + 2.0);
    return std::sqrt(std::exp(lg) / std::cos(std::numbers::pi * d));
}

}  // namespace fracinv::oracle
