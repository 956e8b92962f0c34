#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <fftw3.h>

namespace fracinv::detail {

template <class T>
struct FftwAllocator {
    using value_type = T;
    FftwAllocator() = default;
    template <class U>
    FftwAllocator(const FftwAllocator<U>&) noexcept {}
    T* allocate(std::size_t n) {
        if (auto* p = static_cast<T*>(fftw_malloc(n * sizeof(T)))) return p;
        throw std::bad_alloc{};
    }
    void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }
    template <class U>
    bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

using RealBuffer = std::vector<double, FftwAllocator<double>>;
using ComplexBuffer = std::vector<std::complex<double>, FftwAllocator<std::complex<double>>>;

/// Real-to-complex / complex-to-real plan pair of one length. Execution is
/// thread-safe; buffers must come from FftwAllocator.
class RealFft {
public:
    explicit RealFft(std::size_t size);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const noexcept { return size_; }
    std::size_t spectrum_size() const noexcept { return size_ / 2 + 1; }

    // in: size() reals (preserved); out: spectrum_size() values.
    void forward(const double* in, std::complex<double>* out) const;
    // in: spectrum_size() values (destroyed); out: size() reals, unnormalized.
    void inverse(std::complex<double>* in, double* out) const;

private:
    std::size_t size_;
    fftw_plan forward_{};
    fftw_plan inverse_{};
};

/// Shared cached plan for `size` (size must be even).
std::shared_ptr<const RealFft> real_fft(std::size_t size);

std::size_t next_pow2(std::size_t n);

/// First n_out terms of the linear convolution of a and b, by FFT.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b,
                                 std::size_t n_out);

/// Same, by direct summation.
std::vector<double> direct_convolve(std::span<const double> a, std::span<const double> b,
                                    std::size_t n_out);

/// sum_{i} x[i] x[i+j] for j = 0..max_lag, by FFT.
std::vector<double> fft_autocorrelation(std::span<const double> x, std::size_t max_lag);

}  // namespace fracinv::detail
