#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracinv/fbm.hpp"
#include "fracinv/fracops.hpp"
#include "fracinv/innovations.hpp"
#include "fracinv/memtests.hpp"

namespace fracinv {

enum class Experiment {
    InvariancePrinciple,
    LrvScaling,
    StatConvergence,
    CorollaryScaling,
    MomentBoundaryDemo
};
std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

/// Named tolerances; every verdict cites one of these keys.
struct Tolerances {
    double terminal_var = 0.10;     ///< tol.terminal_var: |Var − 1|
    double ks_alpha = 0.01;         ///< tol.ks_alpha: one-sample KS p-value floor (0 disables)
    double ks_floor_factor = 0.0;   ///< tol.ks_floor_factor: KS ≤ factor · noise floor (0 disables)
    double lrv_median = 0.20;       ///< tol.lrv_median: |median / κ₁² − 1|
    double kpss_mean = 0.15;        ///< tol.kpss_mean: |mean K / E∫B̃² − 1|
    double slope_level = 0.10;      ///< tol.slope_level: slope of median |X̃_n|
    double slope_sum = 0.15;        ///< tol.slope_sum: slope of median |Σ X̃_j|
    double slope_sumsq = 0.15;      ///< tol.slope_sumsq: slope of median Σ X̃_j²
};

/// Flat `key = value` file; `#` starts a comment. Keys are documented in the README.
struct ExperimentConfig {
    Experiment experiment = Experiment::InvariancePrinciple;
    InnovationSpec innovation;
    double d = 0.0;
    int p = 0;
    ProcessKind kind = ProcessKind::TypeI;
    double trunc_rel = 0.1;
    std::size_t trunc_cap = kDefaultTruncationCap;
    std::vector<std::size_t> n_list;
    std::size_t reps = 0;
    std::uint64_t seed = 1;
    double bandwidth_rate = 1.0 / 3.0;
    std::optional<std::size_t> bandwidth_l;
    std::vector<Functional> functionals{Functional::TerminalValue, Functional::RangeOfBridge,
                                        Functional::SupOfBridge, Functional::IntSqBridge};
    std::vector<Statistic> stats{Statistic::RS, Statistic::KPSS};
    std::filesystem::path tables_dir = "tables";
    std::size_t tables_m = 1024;
    std::size_t tables_reps = 100'000;
    std::uint64_t tables_seed = 20'060'101;
    std::filesystem::path out_dir = "out";
    std::size_t threads = 0;  ///< 0: hardware concurrency
    Tolerances tol;
    std::optional<std::size_t> check_n;  ///< n of the level checks; largest n otherwise
    bool demo_log_ell = true;            ///< ℓ(n) = 1/log n, else ℓ ≡ 1

    /// Every key as read, for the report echo.
    std::map<std::string, std::string> raw;
};

/// Parses and validates; throws ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// `key = value` lines into a map; duplicate keys are an error.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Innovation from model keys with the `model.` prefix removed
/// (`variant`, `sigma`, `nu`, ..., `inner.variant` for arma).
InnovationSpec innovation_from_params(const std::map<std::string, std::string>& params);

nlohmann::json to_json(const InnovationSpec& spec);

}  // namespace fracinv
