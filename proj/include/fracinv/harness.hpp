#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fracinv/config.hpp"

namespace fracinv {

/// One pass/fail check. `tolerance_key` names the config key (or rule family)
/// the tolerance came from.
struct Verdict {
    std::string name;
    std::optional<std::size_t> n;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    std::string tolerance_key;
    std::string rule;
    bool passed = false;
};

/// One row of replications.csv.
struct ReplicationRow {
    std::size_t n = 0;
    std::size_t replication = 0;
    std::string metric;
    double value = 0.0;
};

struct NSummary {
    std::size_t n = 0;
    std::vector<std::pair<std::string, double>> metrics;
};

struct McReport {
    Experiment experiment = Experiment::InvariancePrinciple;
    nlohmann::json body;  ///< everything except verdicts and summaries
    std::vector<NSummary> per_n;
    std::vector<Verdict> verdicts;
    std::vector<ReplicationRow> rows;

    bool passed() const;
    /// Complete report; identical for identical configs whatever the thread count.
    nlohmann::json to_json() const;
    double metric(std::size_t n, const std::string& name) const;
};

/// Overrides applied on top of the config (CLI flags).
struct RunOptions {
    std::optional<std::size_t> threads;
    std::optional<std::filesystem::path> tables_dir;
};

std::size_t effective_threads(const ExperimentConfig& cfg, const RunOptions& opts = {});

McReport run_invariance(const ExperimentConfig& cfg, const RunOptions& opts = {});
McReport run_lrv_scaling(const ExperimentConfig& cfg, const RunOptions& opts = {});
McReport run_stat_convergence(const ExperimentConfig& cfg, const RunOptions& opts = {});
McReport run_corollary_scaling(const ExperimentConfig& cfg, const RunOptions& opts = {});
McReport run_moment_boundary_demo(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Dispatches on cfg.experiment.
McReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// report.json, summary.csv (one column per metric) and replications.csv
/// (n, replication, metric, value). Timing goes to run_meta.json.
void write_report(const McReport& report, const std::filesystem::path& out_dir,
                  double wall_seconds, std::size_t threads);

/// 95th percentile of the KS distance between two size-`size` resamples of `reference`.
double ks_noise_floor(std::span<const double> reference, std::size_t size, std::uint64_t seed,
                      std::size_t trials = 200);

/// Least-squares slope of y on x with its standard error.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;
};
SlopeFit fit_slope(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> values);

/// σ_n of the moment-boundary example: A(d) n^{d+1/2} ℓ(n) / |d|, with the
/// d = 0 limit A(0) n^{1/2} ℓ(n).
double boundary_sigma(double d, std::size_t n, bool log_ell);

}  // namespace fracinv
