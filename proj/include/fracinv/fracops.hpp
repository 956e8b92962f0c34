#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fracinv/innovations.hpp"

namespace fracinv {

enum class ProcessKind { TypeI, TypeII };

/// Fractional order p + d and the process type. −1/2 < d < 1/2, p ≥ 0.
class FracSpec {
public:
    FracSpec(double d, int p, ProcessKind kind);

    double d() const noexcept { return d_; }
    int p() const noexcept { return p_; }
    ProcessKind kind() const noexcept { return kind_; }

private:
    double d_;
    int p_;
    ProcessKind kind_;
};

/// Coefficients a_j of (1 − B)^{−d} = sum_j a_j B^j.
struct CoeffSeq {
    double d = 0.0;
    std::vector<double> values;
};

/// a_0 = 1, a_j = a_{j-1} (j − 1 + d) / j, for j < m. Requires −1 < d < 1, m ≥ 1.
CoeffSeq frac_coeffs(double d, std::size_t m);

/// A_k = a_0 + ... + a_k.
std::vector<double> partial_sums(const CoeffSeq& coeffs);

enum class ConvolutionMethod { Auto, Direct, Fft };

/// Below this length Auto convolves directly.
inline constexpr std::size_t kFastConvolutionThreshold = 512;

/// Type II integration Y_t = sum_{i<t} a_i u_{t-i} (Y_0 = 0); exact, no truncation.
std::vector<double> integrate_type2(std::span<const double> u, double d,
                                    ConvolutionMethod method = ConvolutionMethod::Auto);

/// Applies (1 − B)^d to x with zero pre-sample; inverse of integrate_type2.
std::vector<double> fractional_difference(std::span<const double> x, double d,
                                          ConvolutionMethod method = ConvolutionMethod::Auto);

inline constexpr std::size_t kDefaultTruncationCap = 10'000'000;

/// Smallest M ≥ 0 with sigma_u * (sum_{j>M} a_j²)^{1/2} ≤ eps_tail.
/// Throws TruncationInfeasibleError when M would exceed `cap`.
std::size_t type1_truncation(double d, double sigma_u, double eps_tail,
                             std::size_t cap = kDefaultTruncationCap);

/// Stationary filter X_t = sum_{j=0}^{M+t-1} a_j u_{t-j}, t = 1..n, evaluated
/// from M + n innovations (u_{1-M}..u_n). Coefficient spectra are precomputed
/// so one instance can serve many replications.
class Type1Filter {
public:
    Type1Filter(double d, std::size_t n, std::size_t truncation);
    ~Type1Filter();
    Type1Filter(Type1Filter&&) noexcept;
    Type1Filter& operator=(Type1Filter&&) noexcept;

    double d() const noexcept { return d_; }
    std::size_t length() const noexcept { return n_; }
    std::size_t truncation() const noexcept { return truncation_; }
    std::size_t input_length() const noexcept { return truncation_ + n_; }

    std::vector<double> apply(std::span<const double> u) const;

private:
    struct Blocks;
    double d_;
    std::size_t n_;
    std::size_t truncation_;
    std::unique_ptr<Blocks> blocks_;
};

/// Reference O(n (M + n)) evaluation of the same filter.
std::vector<double> type1_filter_direct(std::span<const double> u, double d, std::size_t n);

struct Type1Result {
    std::vector<double> values;
    std::size_t truncation = 0;
};

/// Type I I(d) path X_1..X_n driven by `model`, with the pre-sample length
/// chosen from eps_tail (see type1_truncation, sigma_u = sd of u).
Type1Result integrate_type1(const InnovationModel& model, double d, std::size_t n,
                            double eps_tail, std::uint64_t seed,
                            std::size_t cap = kDefaultTruncationCap);
Type1Result integrate_type1(const InnovationSpec& spec, double d, std::size_t n,
                            double eps_tail, std::uint64_t seed,
                            std::size_t cap = kDefaultTruncationCap);

/// p successive cumulative sums.
std::vector<double> cumulative_sum(std::span<const double> x, int times = 1);

/// (1 − B)^{p+d} Ỹ_t = u_t 1(t ≥ 1): Type II integration then p cumulative sums.
/// spec.kind() must be TypeII (a finite u has no infinite past).
std::vector<double> integrate_higher(std::span<const double> u, const FracSpec& spec);

/// (1 − B)^{p+d} X̃_t = u_t (Type I) or u_t 1(t ≥ 1) (Type II), driven by `model`.
Type1Result integrate_higher(const InnovationModel& model, const FracSpec& spec, std::size_t n,
                             double eps_tail, std::uint64_t seed,
                             std::size_t cap = kDefaultTruncationCap);

}  // namespace fracinv
