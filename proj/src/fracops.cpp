#include "fracinv/fracops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fft.hpp"
#include "fracinv/errors.hpp"

namespace fracinv {

namespace {

void require_stationary_d(double d, const char* where) {
    if (!(d > -0.5 && d < 0.5)) {
        throw DomainError(std::string(where) + ": d must lie in (-1/2, 1/2), got " +
                          std::to_string(d));
    }
}

std::vector<double> causal_filter(std::span<const double> x, const std::vector<double>& coeffs,
                                  ConvolutionMethod method) {
    const bool fast = method == ConvolutionMethod::Fft ||
                      (method == ConvolutionMethod::Auto && x.size() >= kFastConvolutionThreshold);
    return fast ? detail::fft_convolve(coeffs, x, x.size())
                : detail::direct_convolve(coeffs, x, x.size());
}

}  // namespace

FracSpec::FracSpec(double d, int p, ProcessKind kind) : d_(d), p_(p), kind_(kind) {
    require_stationary_d(d, "FracSpec");
    if (p < 0) throw DomainError("FracSpec: p must be a nonnegative integer");
}

CoeffSeq frac_coeffs(double d, std::size_t m) {
    if (m == 0) throw EmptyInputError("frac_coeffs: requested zero coefficients");
    if (!(d > -1.0 && d < 1.0)) {
        throw DomainError("frac_coeffs: d must lie in (-1, 1), got " + std::to_string(d));
    }
    CoeffSeq out{d, std::vector<double>(m)};
    out.values[0] = 1.0;
    for (std::size_t j = 1; j < m; ++j) {
        const auto jd = static_cast<double>(j);
        out.values[j] = out.values[j - 1] * (jd - 1.0 + d) / jd;
    }
    return out;
}

std::vector<double> partial_sums(const CoeffSeq& coeffs) {
    if (coeffs.values.empty()) throw EmptyInputError("partial_sums: empty coefficient sequence");
    std::vector<double> out(coeffs.values.size());
    std::partial_sum(coeffs.values.begin(), coeffs.values.end(), out.begin());
    return out;
}

std::vector<double> integrate_type2(std::span<const double> u, double d, ConvolutionMethod method) {
    if (u.empty()) throw EmptyInputError("integrate_type2: empty series");
    require_stationary_d(d, "integrate_type2");
    if (d == 0.0) return {u.begin(), u.end()};
    return causal_filter(u, frac_coeffs(d, u.size()).values, method);
}

std::vector<double> fractional_difference(std::span<const double> x, double d,
                                          ConvolutionMethod method) {
    if (x.empty()) throw EmptyInputError("fractional_difference: empty series");
    require_stationary_d(d, "fractional_difference");
    if (d == 0.0) return {x.begin(), x.end()};
    return causal_filter(x, frac_coeffs(-d, x.size()).values, method);
}

std::size_t type1_truncation(double d, double sigma_u, double eps_tail, std::size_t cap) {
    require_stationary_d(d, "type1_truncation");
    if (!(eps_tail > 0.0)) throw DomainError("type1_truncation: eps_tail must be > 0");
    if (d == 0.0 || sigma_u == 0.0) return 0;
    // sum_{j>=0} a_j² = Γ(1−2d) / Γ(1−d)²; the tail is that total minus a running sum.
    const long double total =
        std::exp(std::lgamma(1.0L - 2.0L * d) - 2.0L * std::lgamma(1.0L - d));
    const long double target = static_cast<long double>(eps_tail) / sigma_u;
    const long double target_sq = target * target;
    long double a = 1.0L;
    long double partial = 1.0L;
    for (std::size_t m = 0;; ++m) {
        if (total - partial <= target_sq) return m;
        if (m >= cap) {
            throw TruncationInfeasibleError(
                "integrate_type1: tail tolerance " + std::to_string(eps_tail) +
                " needs a pre-sample longer than the cap of " + std::to_string(cap) +
                " coefficients (d = " + std::to_string(d) + ")");
        }
        const auto j = static_cast<long double>(m + 1);
        a *= (j - 1.0L + d) / j;
        partial += a * a;
    }
}

// Output block q of the filter is split by input block: input block i (counted
// back from the end, length n) meets the coefficient window a_{(i-1)n .. (i+1)n-1}.
// A circular convolution of length 2n leaves outputs n..2n-1 alias-free, so all
// block products are accumulated in the frequency domain and inverted once.
struct Type1Filter::Blocks {
    std::shared_ptr<const detail::RealFft> fft;
    std::vector<detail::ComplexBuffer> spectra;
};

Type1Filter::Type1Filter(double d, std::size_t n, std::size_t truncation)
    : d_(d), n_(n), truncation_(truncation), blocks_(std::make_unique<Blocks>()) {
    require_stationary_d(d, "Type1Filter");
    if (n == 0) throw EmptyInputError("Type1Filter: n must be >= 1");
    const std::size_t total = truncation + n;
    const std::size_t block_count = (total + n - 1) / n;
    const auto coeffs = frac_coeffs(d, total).values;
    blocks_->fft = detail::real_fft(2 * n);
    detail::RealBuffer window(2 * n);
    blocks_->spectra.reserve(block_count);
    for (std::size_t i = 0; i < block_count; ++i) {
        for (std::size_t k = 0; k < 2 * n; ++k) {
            // lag (i − 1) n + k; negative lags and lags beyond the input are zero
            const std::ptrdiff_t lag =
                (static_cast<std::ptrdiff_t>(i) - 1) * static_cast<std::ptrdiff_t>(n) +
                static_cast<std::ptrdiff_t>(k);
            window[k] = (lag >= 0 && static_cast<std::size_t>(lag) < total)
                            ? coeffs[static_cast<std::size_t>(lag)]
                            : 0.0;
        }
        detail::ComplexBuffer spec(blocks_->fft->spectrum_size());
        blocks_->fft->forward(window.data(), spec.data());
        blocks_->spectra.push_back(std::move(spec));
    }
}

Type1Filter::~Type1Filter() = default;
Type1Filter::Type1Filter(Type1Filter&&) noexcept = default;
Type1Filter& Type1Filter::operator=(Type1Filter&&) noexcept = default;

std::vector<double> Type1Filter::apply(std::span<const double> u) const {
    if (u.size() != input_length()) {
        throw DomainError("Type1Filter::apply: expected " + std::to_string(input_length()) +
                          " innovations, got " + std::to_string(u.size()));
    }
    if (d_ == 0.0) return {u.end() - static_cast<std::ptrdiff_t>(n_), u.end()};
    const auto& fft = *blocks_->fft;
    const std::size_t total = input_length();
    detail::RealBuffer block(2 * n_, 0.0);
    detail::ComplexBuffer spec(fft.spectrum_size());
    detail::ComplexBuffer acc(fft.spectrum_size(), std::complex<double>{});
    for (std::size_t i = 0; i < blocks_->spectra.size(); ++i) {
        const std::size_t end = total - i * n_;
        const std::size_t begin = end > n_ ? end - n_ : 0;
        const std::size_t pad = n_ - (end - begin);
        std::fill(block.begin(), block.end(), 0.0);
        std::copy(u.begin() + static_cast<std::ptrdiff_t>(begin),
                  u.begin() + static_cast<std::ptrdiff_t>(end),
                  block.begin() + static_cast<std::ptrdiff_t>(pad));
        fft.forward(block.data(), spec.data());
        const auto& coef = blocks_->spectra[i];
        for (std::size_t k = 0; k < spec.size(); ++k) acc[k] += spec[k] * coef[k];
    }
    fft.inverse(acc.data(), block.data());
    const double scale = 1.0 / static_cast<double>(2 * n_);
    std::vector<double> out(n_);
    for (std::size_t q = 0; q < n_; ++q) out[q] = block[n_ + q] * scale;
    return out;
}

std::vector<double> type1_filter_direct(std::span<const double> u, double d, std::size_t n) {
    if (n == 0 || u.size() < n) throw DomainError("type1_filter_direct: need u.size() >= n >= 1");
    const auto coeffs = frac_coeffs(d, u.size()).values;
    const std::size_t offset = u.size() - n;
    std::vector<double> out(n);
    for (std::size_t q = 0; q < n; ++q) {
        const std::size_t k = offset + q;
        long double acc = 0.0L;
        for (std::size_t j = 0; j <= k; ++j) acc += coeffs[j] * u[k - j];
        out[q] = static_cast<double>(acc);
    }
    return out;
}

Type1Result integrate_type1(const InnovationModel& model, double d, std::size_t n,
                            double eps_tail, std::uint64_t seed, std::size_t cap) {
    require_stationary_d(d, "integrate_type1");
    if (n == 0) throw EmptyInputError("integrate_type1: n must be >= 1");
    const std::size_t m = type1_truncation(d, std::sqrt(model.variance()), eps_tail, cap);
    const auto u = model.generate(m + n, seed);
    if (d == 0.0) return {std::vector<double>(u.end() - static_cast<std::ptrdiff_t>(n), u.end()), m};
    return {Type1Filter(d, n, m).apply(u), m};
}

Type1Result integrate_type1(const InnovationSpec& spec, double d, std::size_t n, double eps_tail,
                            std::uint64_t seed, std::size_t cap) {
    return integrate_type1(InnovationModel(spec), d, n, eps_tail, seed, cap);
}

std::vector<double> cumulative_sum(std::span<const double> x, int times) {
    std::vector<double> out(x.begin(), x.end());
    for (int r = 0; r < times; ++r) std::partial_sum(out.begin(), out.end(), out.begin());
    return out;
}

std::vector<double> integrate_higher(std::span<const double> u, const FracSpec& spec) {
    if (spec.kind() != ProcessKind::TypeII) {
        throw DomainError("integrate_higher: a finite innovation series defines a Type II process; "
                          "use the model overload for Type I");
    }
    return cumulative_sum(integrate_type2(u, spec.d()), spec.p());
}

Type1Result integrate_higher(const InnovationModel& model, const FracSpec& spec, std::size_t n,
                             double eps_tail, std::uint64_t seed, std::size_t cap) {
    Type1Result base;
    if (spec.kind() == ProcessKind::TypeI) {
        base = integrate_type1(model, spec.d(), n, eps_tail, seed, cap);
    } else {
        base.values = integrate_type2(model.generate(n, seed), spec.d());
    }
    base.values = cumulative_sum(base.values, spec.p());
    return base;
}

}  // namespace fracinv
