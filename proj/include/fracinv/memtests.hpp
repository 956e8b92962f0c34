#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "fracinv/innovations.hpp"

namespace fracinv {

/// Bartlett-kernel long-run variance w²_{n,l}.
struct LrvEstimate {
    double w2 = 0.0;
    std::size_t l = 0;
    std::size_t n = 0;
};

enum class LrvMethod { Auto, Direct, Fft };

/// Below this length Auto sums autocovariances directly.
inline constexpr std::size_t kFastLrvThreshold = 2048;

/// w² = γ̂_0 + 2 sum_{j=1}^{l} (1 − j/(l+1)) γ̂_j, with 1/n autocovariances.
LrvEstimate bartlett_lrv(std::span<const double> x, std::size_t l,
                         LrvMethod method = LrvMethod::Auto);

/// max(1, floor(n^rate)); rate = 1/3 by default.
std::size_t default_bandwidth(std::size_t n, double rate = 1.0 / 3.0);

/// Modified R/S: range of the centred partial sums divided by w_{n,l}.
double rs_statistic(std::span<const double> x, std::size_t l);

/// KPSS: (w² n²)^{-1} times the sum of squared centred partial sums.
double kpss_statistic(std::span<const double> x, std::size_t l);

enum class Statistic { RS, KPSS };
std::string to_string(Statistic s);
Statistic statistic_from_string(const std::string& s);

/// RS: value l^d n^{-(d+1/2)}; KPSS: value l^{2d} n^{-2d}.
double normalize_statistic(Statistic stat, double value, std::size_t n, std::size_t l, double d);

struct TestReport {
    Statistic statistic = Statistic::KPSS;
    double raw_value = 0.0;
    double d_assumed = 0.0;
    double normalized_value = 0.0;
    std::size_t l = 0;
    std::size_t n = 0;
    double p_value = 1.0;
    std::string table_id;
    std::optional<MomentCompatibility> moment_compat;
};

struct TestOptions {
    std::optional<std::size_t> l;  ///< fixed bandwidth; default_bandwidth(n, rate) otherwise
    double bandwidth_rate = 1.0 / 3.0;
    double d_null = 0.0;
    std::filesystem::path table_dir = "tables";
    bool build_missing = false;
    std::size_t table_m = 1024;
    std::size_t table_reps = 100'000;
    std::uint64_t table_seed = 20'060'101;
    std::size_t threads = 1;
    /// When supplied, the report carries the MemoryTest moment-compatibility flag.
    std::optional<InnovationSpec> innovation;
};

/// Statistic, its normalization at d_null and a right-tail Monte Carlo p-value
/// from the matching Type I table (RangeOfBridge for RS, IntSqBridge for KPSS).
TestReport long_memory_test(std::span<const double> x, Statistic stat, const TestOptions& opts);

nlohmann::json to_json(const TestReport& report);
nlohmann::json to_json(const MomentCompatibility& compat);

}  // namespace fracinv
