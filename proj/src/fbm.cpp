#include "fracinv/fbm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/random/normal_distribution.hpp>

#include "fft.hpp"
#include "fracinv/errors.hpp"

namespace fracinv {

namespace {

void require_open_half(double d, const char* where) {
    if (!(d > -0.5 && d < 0.5)) {
        throw DomainError(std::string(where) + ": d must lie in (-1/2, 1/2), got " +
                          std::to_string(d));
    }
}

bool is_pow2(std::size_t m) { return m >= 2 && (m & (m - 1)) == 0; }

// Autocovariance of unit-variance fractional Gaussian noise.
double fgn_autocov(std::size_t k, double hurst) {
    const double two_h = 2.0 * hurst;
    const auto kd = static_cast<double>(k);
    if (k == 0) return 1.0;
    return 0.5 * (std::pow(kd + 1.0, two_h) - 2.0 * std::pow(kd, two_h) +
                  std::pow(kd - 1.0, two_h));
}

}  // namespace

double const_A(double d) {
    require_open_half(d, "const_A");
    if (d == 0.0) return 1.0;
    boost::math::quadrature::tanh_sinh<double> rule(15);
    // ∫_0^1 [(1+s)^d − s^d]² ds; for d < 0 the s^{2d} singularity is integrated exactly.
    auto head = [d](double s) {
        if (s <= 0.0) return d < 0.0 ? 0.0 : 1.0;
        const double diff = std::pow(1.0 + s, d) - std::pow(s, d);
        return d < 0.0 ? diff * diff - std::pow(s, 2.0 * d) : diff * diff;
    };
    // s = 1/v maps [1, ∞) to (0, 1]: v^{−2d−2} [(1+v)^d − 1]² ~ d² v^{−2d}; that term is exact.
    auto tail = [d](double v) {
        if (v <= 0.0) return 0.0;
        const double h = std::expm1(d * std::log1p(v)) / v;
        return std::pow(v, -2.0 * d) * (h - d) * (h + d);
    };
    const double head_exact = d < 0.0 ? 1.0 / (2.0 * d + 1.0) : 0.0;
    const double integral = rule.integrate(head, 0.0, 1.0, 1e-14) + head_exact +
                            rule.integrate(tail, 0.0, 1.0, 1e-14) + d * d / (1.0 - 2.0 * d);
    return std::sqrt(1.0 / (2.0 * d + 1.0) + integral);
}

double kappa1(double d, double zeta_norm) {
    if (!(zeta_norm > 0.0)) throw DomainError("kappa1: zeta_norm must be > 0");
    return const_A(d) * zeta_norm / std::tgamma(d + 1.0);
}

double kappa2(double d, double zeta_norm) {
    if (!(zeta_norm > 0.0)) throw DomainError("kappa2: zeta_norm must be > 0");
    if (!(d > -0.5)) throw DomainError("kappa2: d must be > -1/2");
    return zeta_norm / std::sqrt(2.0 * d + 1.0) / std::tgamma(d + 1.0);
}

double mean_int_sq_bridge(double d) {
    // ∫_0^1 Var B̃(t) dt with Var B̃(t) = t^{2H} − t(t^{2H} + 1 − (1−t)^{2H}) + t².
    const double h = d + 0.5;
    return 1.0 / ((2.0 * h + 1.0) * (h + 1.0)) - 1.0 / 6.0;
}

struct Type1FbmSampler::Impl {
    std::shared_ptr<const detail::RealFft> fft;
    std::vector<double> sqrt_eig;  // m + 1 values
    Eigen::MatrixXd chol;          // used when non-empty
    double scale = 1.0;            // m^{-H}
};

Type1FbmSampler::Type1FbmSampler(double d, std::size_t m, FbmMethod method)
    : d_(d), m_(m), impl_(std::make_unique<Impl>()) {
    require_open_half(d, "simulate_type1");
    if (!is_pow2(m)) {
        throw DomainError("simulate_type1: grid size m must be a power of two >= 2, got " +
                          std::to_string(m));
    }
    const double hurst = d + 0.5;
    impl_->scale = std::pow(static_cast<double>(m), -hurst);

    bool fallback = method == FbmMethod::Cholesky;
    if (!fallback) {
        const std::size_t size = 2 * m;
        impl_->fft = detail::real_fft(size);
        detail::RealBuffer row(size, 0.0);
        for (std::size_t k = 0; k <= m; ++k) row[k] = fgn_autocov(k, hurst);
        for (std::size_t k = 1; k < m; ++k) row[size - k] = row[k];
        detail::ComplexBuffer eig(impl_->fft->spectrum_size());
        impl_->fft->forward(row.data(), eig.data());
        double max_eig = 0.0;
        for (const auto& z : eig) max_eig = std::max(max_eig, z.real());
        impl_->sqrt_eig.resize(m + 1);
        for (std::size_t k = 0; k <= m; ++k) {
            const double lambda = eig[k].real();
            if (lambda < -1e-10 * max_eig) {
                fallback = true;
                std::clog << "warning: circulant embedding for d = " << d << ", m = " << m
                          << " has a negative eigenvalue (" << lambda
                          << "); falling back to dense Cholesky\n";
                break;
            }
            impl_->sqrt_eig[k] = std::sqrt(std::max(lambda, 0.0));
        }
    }
    if (fallback) {
        const auto mi = static_cast<Eigen::Index>(m);
        Eigen::MatrixXd cov(mi, mi);
        for (Eigen::Index i = 0; i < mi; ++i) {
            for (Eigen::Index j = 0; j < mi; ++j) {
                cov(i, j) = fgn_autocov(static_cast<std::size_t>(std::abs(i - j)), hurst);
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw DomainError("simulate_type1: fGn covariance is not positive definite");
        }
        impl_->chol = llt.matrixL();
        impl_->sqrt_eig.clear();
    }
}

Type1FbmSampler::~Type1FbmSampler() = default;
Type1FbmSampler::Type1FbmSampler(Type1FbmSampler&&) noexcept = default;
Type1FbmSampler& Type1FbmSampler::operator=(Type1FbmSampler&&) noexcept = default;

bool Type1FbmSampler::uses_cholesky() const noexcept { return impl_->chol.size() > 0; }

FbmPath Type1FbmSampler::sample(Rng& rng) const {
    boost::random::normal_distribution<double> normal;
    std::vector<double> noise(m_);
    if (uses_cholesky()) {
        Eigen::VectorXd z(static_cast<Eigen::Index>(m_));
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
        const Eigen::VectorXd x = impl_->chol.triangularView<Eigen::Lower>() * z;
        for (std::size_t i = 0; i < m_; ++i) noise[i] = x(static_cast<Eigen::Index>(i));
    } else {
        const std::size_t size = 2 * m_;
        detail::ComplexBuffer spec(m_ + 1);
        spec[0] = impl_->sqrt_eig[0] * normal(rng);
        for (std::size_t k = 1; k < m_; ++k) {
            const double a = normal(rng);
            const double b = normal(rng);
            spec[k] = impl_->sqrt_eig[k] * std::sqrt(0.5) * std::complex<double>(a, b);
        }
        spec[m_] = impl_->sqrt_eig[m_] * normal(rng);
        detail::RealBuffer out(size);
        impl_->fft->inverse(spec.data(), out.data());
        const double norm = 1.0 / std::sqrt(static_cast<double>(size));
        for (std::size_t i = 0; i < m_; ++i) noise[i] = out[i] * norm;
    }
    FbmPath path{ProcessKind::TypeI, d_, std::vector<double>(m_ + 1, 0.0)};
    double acc = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
        acc += noise[i];
        path.values[i + 1] = acc * impl_->scale;
    }
    return path;
}

Type2FbmSampler::Type2FbmSampler(double d, std::size_t m) : d_(d), m_(m) {
    if (!(d > -0.5)) throw DomainError("simulate_type2: d must be > -1/2");
    if (m < 2) throw DomainError("simulate_type2: grid size m must be >= 2");
    // (2d+1) ∫_{t_j}^{t_{j+1}} (t_k − s)^{2d} ds = h^{2d+1} [r^{2d+1} − (r−1)^{2d+1}], r = k − j.
    const double e = 2.0 * d + 1.0;
    const double h = 1.0 / static_cast<double>(m);
    weights_.resize(m);
    for (std::size_t r = 1; r <= m; ++r) {
        const auto rd = static_cast<double>(r);
        weights_[r - 1] = std::pow(h, 0.5 * e) * std::sqrt(std::pow(rd, e) - std::pow(rd - 1.0, e));
    }
}

FbmPath Type2FbmSampler::sample(Rng& rng) const {
    boost::random::normal_distribution<double> normal;
    std::vector<double> z(m_);
    for (auto& v : z) v = normal(rng);
    const auto conv = m_ < 64 ? detail::direct_convolve(weights_, z, m_)
                              : detail::fft_convolve(weights_, z, m_);
    FbmPath path{ProcessKind::TypeII, d_, std::vector<double>(m_ + 1, 0.0)};
    std::copy(conv.begin(), conv.end(), path.values.begin() + 1);
    return path;
}

FbmPath simulate_type1(double d, std::size_t m, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return Type1FbmSampler(d, m).sample(rng);
}

FbmPath simulate_type2(double d, std::size_t m, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return Type2FbmSampler(d, m).sample(rng);
}

FbmPath to_bridge(const FbmPath& path) {
    FbmPath out = path;
    const std::size_t m = path.grid();
    if (m == 0) return out;
    const double end = path.values.back();
    for (std::size_t k = 0; k <= m; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(m);
        out.values[k] = path.values[k] - t * end;
    }
    out.values[m] = 0.0;
    return out;
}

PathFunctionals path_functionals(std::span<const double> values) {
    PathFunctionals f;
    if (values.size() < 2) return f;
    const std::size_t m = values.size() - 1;
    const double end = values.back();
    const double h = 1.0 / static_cast<double>(m);
    double lo = 0.0, hi = 0.0, sq = 0.0;
    for (std::size_t k = 1; k < m; ++k) {
        const double b = values[k] - static_cast<double>(k) * h * end;
        lo = std::min(lo, b);
        hi = std::max(hi, b);
        sq += b * b;
    }
    // bridge endpoints: values[0] − 0 and end − end
    const double b0 = values[0];
    lo = std::min(lo, b0);
    hi = std::max(hi, b0);
    sq += 0.5 * b0 * b0;
    f.range = hi - lo;
    f.sup = hi;
    f.int_sq_bridge = h * sq;
    f.terminal = end;
    return f;
}

}  // namespace fracinv
