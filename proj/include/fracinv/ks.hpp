#pragma once

#include <functional>
#include <span>

namespace fracinv {

/// sup_x |F_a(x) − F_b(x)| between two empirical CDFs; inputs need not be sorted.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// sup_x |F_n(x) − F(x)| for a continuous reference CDF.
double ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov tail P(sqrt(n_eff) D > observed) with the small-sample
/// correction λ = (√n + 0.12 + 0.11/√n) D. For two samples n_eff = n m / (n + m).
double ks_pvalue(double distance, double n_eff);

double standard_normal_cdf(double x);

}  // namespace fracinv
