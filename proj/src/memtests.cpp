#include "fracinv/memtests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "fft.hpp"
#include "fracinv/errors.hpp"
#include "fracinv/fbm.hpp"

namespace fracinv {

namespace {

// Centred about x_0 first, so a common shift of exactly representable data cancels exactly.
std::vector<double> deviations(std::span<const double> x) {
    const double pivot = x.front();
    std::vector<double> dev(x.size());
    std::transform(x.begin(), x.end(), dev.begin(), [pivot](double v) { return v - pivot; });
    const double mean = std::accumulate(dev.begin(), dev.end(), 0.0) / static_cast<double>(x.size());
    for (double& v : dev) v -= mean;
    return dev;
}

// w² that is zero up to rounding of the mean.
bool degenerate(std::span<const double> x, double w2) {
    if (!(w2 > 0.0)) return true;
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * scale;
    return w2 <= floor * floor;
}

void require_series(std::span<const double> x, const char* where) {
    if (x.empty()) throw EmptyInputError(std::string(where) + ": empty series");
    if (x.size() < 2) throw DomainError(std::string(where) + ": need at least 2 observations");
}

double checked_w2(std::span<const double> x, std::size_t l, const char* where) {
    const double w2 = bartlett_lrv(x, l).w2;
    if (degenerate(x, w2)) {
        throw DegenerateVarianceError(std::string(where) +
                                      ": degenerate variance (long-run variance estimate is 0)");
    }
    return w2;
}

}  // namespace

LrvEstimate bartlett_lrv(std::span<const double> x, std::size_t l, LrvMethod method) {
    require_series(x, "bartlett_lrv");
    const std::size_t n = x.size();
    if (l >= n) {
        throw DomainError("bartlett_lrv: bandwidth l = " + std::to_string(l) +
                          " must be smaller than n = " + std::to_string(n));
    }
    const auto dev = deviations(x);
    const bool fast =
        method == LrvMethod::Fft || (method == LrvMethod::Auto && n >= kFastLrvThreshold);
    std::vector<double> acf;
    if (fast) {
        acf = detail::fft_autocorrelation(dev, l);
    } else {
        acf.assign(l + 1, 0.0);
        for (std::size_t j = 0; j <= l; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i + j < n; ++i) acc += dev[i] * dev[i + j];
            acf[j] = acc;
        }
    }
    const auto nd = static_cast<double>(n);
    double w2 = acf[0] / nd;
    for (std::size_t j = 1; j <= l; ++j) {
        const double weight = 1.0 - static_cast<double>(j) / static_cast<double>(l + 1);
        w2 += 2.0 * weight * acf[j] / nd;
    }
    return {std::max(w2, 0.0), l, n};
}

std::size_t default_bandwidth(std::size_t n, double rate) {
    if (n < 2) throw DomainError("default_bandwidth: n must be >= 2");
    if (!(rate > 0.0 && rate < 1.0)) throw DomainError("default_bandwidth: rate must lie in (0, 1)");
    // exact integer floor of n^rate, guarded against pow rounding
    auto l = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), rate)));
    const auto exceeds = [&](std::size_t v) {
        return std::log(static_cast<double>(v)) > rate * std::log(static_cast<double>(n)) + 1e-12;
    };
    while (l > 1 && exceeds(l)) --l;
    while (!exceeds(l + 1)) ++l;
    return std::clamp<std::size_t>(l, 1, n - 1);
}

double rs_statistic(std::span<const double> x, std::size_t l) {
    require_series(x, "rs_statistic");
    const double w2 = checked_w2(x, l, "rs_statistic");
    const auto dev = deviations(x);
    double s = 0.0, hi = -std::numeric_limits<double>::infinity(),
           lo = std::numeric_limits<double>::infinity();
    for (double v : dev) {
        s += v;
        hi = std::max(hi, s);
        lo = std::min(lo, s);
    }
    return (hi - lo) / std::sqrt(w2);
}

double kpss_statistic(std::span<const double> x, std::size_t l) {
    require_series(x, "kpss_statistic");
    const double w2 = checked_w2(x, l, "kpss_statistic");
    const auto dev = deviations(x);
    double s = 0.0, sq = 0.0;
    for (double v : dev) {
        s += v;
        sq += s * s;
    }
    const auto nd = static_cast<double>(x.size());
    return sq / (w2 * nd * nd);
}

std::string to_string(Statistic s) { return s == Statistic::RS ? "rs" : "kpss"; }

Statistic statistic_from_string(const std::string& s) {
    if (s == "rs" || s == "RS") return Statistic::RS;
    if (s == "kpss" || s == "KPSS") return Statistic::KPSS;
    throw DomainError("unknown statistic '" + s + "' (valid: rs, kpss)");
}

double normalize_statistic(Statistic stat, double value, std::size_t n, std::size_t l, double d) {
    if (n == 0) throw DomainError("normalize_statistic: n must be >= 1");
    if (l == 0 && d != 0.0) throw DomainError("normalize_statistic: l = 0 requires d = 0");
    if (d == 0.0) return stat == Statistic::RS ? value / std::sqrt(static_cast<double>(n)) : value;
    const double log_l = std::log(static_cast<double>(l));
    const double log_n = std::log(static_cast<double>(n));
    if (stat == Statistic::RS) return value * std::exp(d * log_l - (d + 0.5) * log_n);
    return value * std::exp(2.0 * d * (log_l - log_n));
}

TestReport long_memory_test(std::span<const double> x, Statistic stat, const TestOptions& opts) {
    require_series(x, "long_memory_test");
    TestReport report;
    report.statistic = stat;
    report.n = x.size();
    report.l = opts.l ? *opts.l : default_bandwidth(x.size(), opts.bandwidth_rate);
    report.d_assumed = opts.d_null;
    report.raw_value =
        stat == Statistic::RS ? rs_statistic(x, report.l) : kpss_statistic(x, report.l);
    report.normalized_value =
        normalize_statistic(stat, report.raw_value, report.n, report.l, opts.d_null);
    const Functional functional =
        stat == Statistic::RS ? Functional::RangeOfBridge : Functional::IntSqBridge;
    const auto table = load_or_build_table(opts.table_dir, functional, ProcessKind::TypeI,
                                           opts.d_null, opts.table_m, opts.table_reps,
                                           opts.table_seed, opts.build_missing, opts.threads);
    report.table_id = table.id();
    report.p_value = pvalue_from_table(table, report.normalized_value);
    if (opts.innovation) {
        report.moment_compat = check_moment_compat(InnovationModel(*opts.innovation), opts.d_null,
                                                   MomentContext::MemoryTest);
    }
    return report;
}

nlohmann::json to_json(const MomentCompatibility& compat) {
    return {{"d", compat.d},
            {"q_required", compat.q_required},
            {"q_declared", std::isfinite(compat.q_declared) ? nlohmann::json(compat.q_declared)
                                                             : nlohmann::json("inf")},
            {"ok", compat.ok}};
}

nlohmann::json to_json(const TestReport& report) {
    nlohmann::json j = {{"format_version", 1},
                        {"statistic", to_string(report.statistic)},
                        {"raw_value", report.raw_value},
                        {"d_assumed", report.d_assumed},
                        {"normalized_value", report.normalized_value},
                        {"l", report.l},
                        {"n", report.n},
                        {"p_value", report.p_value},
                        {"table_id", report.table_id}};
    j["moment_compat"] = report.moment_compat ? to_json(*report.moment_compat) : nullptr;
    return j;
}

}  // namespace fracinv
