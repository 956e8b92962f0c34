#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracinv/fracops.hpp"
#include "fracinv/rng.hpp"

namespace fracinv {

/// A(d) = {1/(2d+1) + ∫_0^∞ [(1+s)^d − s^d]² ds}^{1/2}, −1/2 < d < 1/2.
double const_A(double d);

/// κ_1(d) = A(d) ‖ζ_0‖ / Γ(d+1).
double kappa1(double d, double zeta_norm);

/// κ_2(d) = ‖ζ_0‖ (2d+1)^{-1/2} / Γ(d+1).
double kappa2(double d, double zeta_norm);

/// E ∫_0^1 B̃_d(t)² dt for the Type I bridge, H = d + 1/2.
double mean_int_sq_bridge(double d);

/// Path on the grid t_k = k/m, k = 0..m; values[0] == 0.
struct FbmPath {
    ProcessKind kind = ProcessKind::TypeI;
    double d = 0.0;
    std::vector<double> values;

    std::size_t grid() const noexcept { return values.empty() ? 0 : values.size() - 1; }
};

enum class FbmMethod { Auto, Cholesky };

/// Type I fBm (Hurst d + 1/2, Var B_d(1) = 1) by circulant embedding of
/// fractional Gaussian noise; falls back to dense Cholesky if the embedding
/// has a negative eigenvalue (or when asked to).
class Type1FbmSampler {
public:
    Type1FbmSampler(double d, std::size_t m, FbmMethod method = FbmMethod::Auto);
    ~Type1FbmSampler();
    Type1FbmSampler(Type1FbmSampler&&) noexcept;
    Type1FbmSampler& operator=(Type1FbmSampler&&) noexcept;

    FbmPath sample(Rng& rng) const;
    bool uses_cholesky() const noexcept;
    double d() const noexcept { return d_; }
    std::size_t grid() const noexcept { return m_; }

private:
    struct Impl;
    double d_;
    std::size_t m_;
    std::unique_ptr<Impl> impl_;
};

/// Type II fBm W_d(t) = (2d+1)^{1/2} ∫_0^t (t−s)^d dB(s) with exact per-cell
/// kernel variances, so Var W_d(t_k) = t_k^{2d+1} on the grid.
class Type2FbmSampler {
public:
    Type2FbmSampler(double d, std::size_t m);

    FbmPath sample(Rng& rng) const;
    double d() const noexcept { return d_; }
    std::size_t grid() const noexcept { return m_; }

private:
    double d_;
    std::size_t m_;
    std::vector<double> weights_;  // weights_[r-1] for lag r = 1..m
};

/// m must be a power of two.
FbmPath simulate_type1(double d, std::size_t m, std::uint64_t seed);
/// d > −1/2, m ≥ 2.
FbmPath simulate_type2(double d, std::size_t m, std::uint64_t seed);

/// B̃(t) = B(t) − t B(1).
FbmPath to_bridge(const FbmPath& path);

struct PathFunctionals {
    double range = 0.0;          ///< sup B̃ − inf B̃
    double sup = 0.0;            ///< sup B̃
    double int_sq_bridge = 0.0;  ///< ∫ B̃², trapezoid rule
    double terminal = 0.0;       ///< raw value at t = 1
};

/// Functionals of a path given on an equally spaced grid over [0, 1].
PathFunctionals path_functionals(std::span<const double> values);
inline PathFunctionals path_functionals(const FbmPath& path) {
    return path_functionals(path.values);
}

enum class Functional { RangeOfBridge, SupOfBridge, IntSqBridge, TerminalValue };

std::string to_string(Functional f);
Functional functional_from_string(const std::string& s);
std::string to_string(ProcessKind k);
ProcessKind kind_from_string(const std::string& s);

double select(const PathFunctionals& f, Functional which);

/// Sorted Monte Carlo sample of one functional of an fBm bridge/path.
struct QuantileTable {
    Functional functional = Functional::IntSqBridge;
    ProcessKind kind = ProcessKind::TypeI;
    double d = 0.0;
    std::size_t m = 1024;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    std::vector<double> samples;

    /// Content-derived identifier, also the file stem.
    std::string id() const;
    double mean() const;
    double quantile(double p) const;
};

inline constexpr int kTableFormatVersion = 1;

/// Deterministic given all arguments; reps ≥ 1000. Replications are spread
/// over `threads` workers with per-replication derived seeds.
QuantileTable build_quantile_table(Functional functional, ProcessKind kind, double d,
                                   std::size_t m, std::size_t reps, std::uint64_t seed,
                                   std::size_t threads = 1);

/// Tables for several functionals sharing the same simulated paths.
std::vector<QuantileTable> build_quantile_tables(std::span<const Functional> functionals,
                                                 ProcessKind kind, double d, std::size_t m,
                                                 std::size_t reps, std::uint64_t seed,
                                                 std::size_t threads = 1);

void write_table(const QuantileTable& table, const std::filesystem::path& path);
QuantileTable read_table(const std::filesystem::path& path);

/// Writes `<dir>/<id>.qtab` and returns the path.
std::filesystem::path save_table(const QuantileTable& table, const std::filesystem::path& dir);

/// Table in `dir` for (functional, kind, d, m); the one with the most reps
/// wins, ties broken by file name.
std::optional<std::filesystem::path> find_table(const std::filesystem::path& dir,
                                                Functional functional, ProcessKind kind, double d,
                                                std::size_t m);

/// Loads the matching table, building and saving it first if allowed.
QuantileTable load_or_build_table(const std::filesystem::path& dir, Functional functional,
                                  ProcessKind kind, double d, std::size_t m, std::size_t reps,
                                  std::uint64_t seed, bool build_missing, std::size_t threads = 1);

/// Right-tail p = (1 + #{sample ≥ observed}) / (reps + 1).
double pvalue_from_table(const QuantileTable& table, double observed);

}  // namespace fracinv
