#include "fft.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fracinv::detail {

namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
    if (size < 2 || size % 2 != 0) throw std::invalid_argument("RealFft size must be even");
    RealBuffer real(size_);
    ComplexBuffer spec(spectrum_size());
    std::lock_guard lock(planner_mutex());
    const int n = static_cast<int>(size_);
    forward_ = fftw_plan_dft_r2c_1d(n, real.data(), as_fftw(spec.data()), FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, as_fftw(spec.data()), real.data(), FFTW_ESTIMATE);
    if (!forward_ || !inverse_) throw std::runtime_error("FFTW planning failed");
}

RealFft::~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
}

void RealFft::forward(const double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(forward_, const_cast<double*>(in), as_fftw(out));
}

void RealFft::inverse(std::complex<double>* in, double* out) const {
    fftw_execute_dft_c2r(inverse_, as_fftw(in), out);
}

std::shared_ptr<const RealFft> real_fft(std::size_t size) {
    static std::mutex cache_mutex;
    static std::map<std::size_t, std::shared_ptr<const RealFft>> cache;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[size];
    if (!slot) slot = std::make_shared<const RealFft>(size);
    return slot;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b,
                                 std::size_t n_out) {
    std::vector<double> out(n_out, 0.0);
    if (a.empty() || b.empty() || n_out == 0) return out;
    const std::size_t la = std::min(a.size(), n_out);
    const std::size_t lb = std::min(b.size(), n_out);
    const std::size_t size = std::max<std::size_t>(2, next_pow2(la + lb - 1));
    const auto plan = real_fft(size);

    RealBuffer ra(size, 0.0), rb(size, 0.0);
    std::copy_n(a.begin(), la, ra.begin());
    std::copy_n(b.begin(), lb, rb.begin());
    ComplexBuffer fa(plan->spectrum_size()), fb(plan->spectrum_size());
    plan->forward(ra.data(), fa.data());
    plan->forward(rb.data(), fb.data());
    for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
    plan->inverse(fa.data(), ra.data());
    const double scale = 1.0 / static_cast<double>(size);
    const std::size_t valid = std::min(n_out, la + lb - 1);
    for (std::size_t k = 0; k < valid; ++k) out[k] = ra[k] * scale;
    return out;
}

std::vector<double> direct_convolve(std::span<const double> a, std::span<const double> b,
                                    std::size_t n_out) {
    std::vector<double> out(n_out, 0.0);
    if (a.empty() || b.empty()) return out;
    for (std::size_t k = 0; k < n_out; ++k) {
        const std::size_t i_max = std::min(k, a.size() - 1);
        const std::size_t i_min = k >= b.size() ? k - b.size() + 1 : 0;
        double acc = 0.0;
        for (std::size_t i = i_min; i <= i_max; ++i) acc += a[i] * b[k - i];
        out[k] = acc;
    }
    return out;
}

std::vector<double> fft_autocorrelation(std::span<const double> x, std::size_t max_lag) {
    const std::size_t n = x.size();
    const std::size_t size = std::max<std::size_t>(2, next_pow2(2 * n));
    const auto plan = real_fft(size);
    RealBuffer buf(size, 0.0);
    std::copy(x.begin(), x.end(), buf.begin());
    ComplexBuffer spec(plan->spectrum_size());
    plan->forward(buf.data(), spec.data());
    for (auto& z : spec) z = std::norm(z);
    plan->inverse(spec.data(), buf.data());
    const double scale = 1.0 / static_cast<double>(size);
    std::vector<double> out(max_lag + 1);
    for (std::size_t j = 0; j <= max_lag; ++j) out[j] = buf[j] * scale;
    return out;
}

}  // namespace fracinv::detail
