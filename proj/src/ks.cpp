#include "fracinv/ks.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fracinv/errors.hpp"

namespace fracinv {

double ks_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw EmptyInputError("ks_distance: empty sample");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const auto nx = static_cast<double>(x.size());
    const auto ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    // step both ECDFs past every copy of the next smallest value, then compare
    while (i < x.size() || j < y.size()) {
        const double v = j == y.size() || (i < x.size() && x[i] <= y[j]) ? x[i] : y[j];
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return best;
}

double ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw EmptyInputError("ks_distance: empty sample");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const auto n = static_cast<double>(x.size());
    double best = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        best = std::max({best, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return best;
}

double ks_pvalue(double distance, double n_eff) {
    if (!(n_eff > 0.0)) throw DomainError("ks_pvalue: effective sample size must be > 0");
    const double root = std::sqrt(n_eff);
    const double lambda = (root + 0.12 + 0.11 / root) * distance;
    if (lambda < 0.2) return 1.0;
    // Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace fracinv
