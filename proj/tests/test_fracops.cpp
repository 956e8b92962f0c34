#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <doctest.h>

#include "fracinv/errors.hpp"
#include "fracinv/fracops.hpp"
#include "fracinv/innovations.hpp"
#include "fracinv/series_io.hpp"
#include "oracles.hpp"

using namespace fracinv;

namespace {

const std::vector<double> kDGrid{-0.45, -0.3, -0.1, 0.1, 0.25, 0.4};

std::vector<double> random_series(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> u(n);
    for (auto& v : u) v = normal(rng);
    return u;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max(scale, std::abs(b[i]));
        diff = std::max(diff, std::abs(a[i] - b[i]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

void check_vector(const std::vector<double>& got, const std::vector<double>& want,
                  double tol = 1e-12) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(tol));
}

}  // namespace

TEST_CASE("frac_coeffs hand values") {
    check_vector(frac_coeffs(0.0, 4).values, {1, 0, 0, 0});
    check_vector(frac_coeffs(0.4, 4).values, {1, 0.4, 0.28, 0.224});
    check_vector(frac_coeffs(-0.3, 3).values, {1, -0.3, -0.105});
}

TEST_CASE("frac_coeffs errors") {
    CHECK_THROWS_AS((void)frac_coeffs(0.2, 0), EmptyInputError);
    CHECK_THROWS_AS((void)frac_coeffs(1.0, 3), DomainError);
    CHECK_THROWS_AS((void)frac_coeffs(-1.2, 3), DomainError);
    CHECK_NOTHROW((void)frac_coeffs(0.7, 3));
}

TEST_CASE("frac_coeffs agree with the log-gamma formula") {
    for (double d : kDGrid) {
        const auto a = frac_coeffs(d, 10'001).values;
        for (std::size_t j = 1; j < a.size(); ++j) {
            const long double want = oracle::gamma_ratio(d, j);
            REQUIRE(std::abs((a[j] - want) / want) < 1e-12);
        }
    }
}

TEST_CASE("frac_coeffs sign pattern and monotone magnitude") {
    for (double d : kDGrid) {
        const auto a = frac_coeffs(d, 2000).values;
        CHECK(a[0] == 1.0);
        for (std::size_t j = 1; j < a.size(); ++j) {
            if (d > 0.0) REQUIRE(a[j] >= 0.0);
            else REQUIRE(a[j] <= 0.0);
            if (j > 1) REQUIRE(std::abs(a[j]) <= std::abs(a[j - 1]));
        }
    }
}

TEST_CASE("frac_coeffs asymptotics") {
    for (double d : kDGrid) {
        const std::size_t j = 100'000;
        const double aj = frac_coeffs(d, j + 1).values[j];
        CHECK(aj * std::tgamma(d) * std::pow(static_cast<double>(j), 1.0 - d) ==
              doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("partial_sums hand values") {
    check_vector(partial_sums(frac_coeffs(0.0, 4)), {1, 1, 1, 1});
    check_vector(partial_sums(frac_coeffs(0.4, 3)), {1, 1.4, 1.68});
    check_vector(partial_sums(frac_coeffs(-0.3, 3)), {1, 0.7, 0.595});
    CHECK_THROWS_AS((void)partial_sums(CoeffSeq{}), EmptyInputError);
}

TEST_CASE("integrate_type2 hand values") {
    const std::vector<double> impulse{1, 0, 0}, ones{1, 1, 1};
    check_vector(integrate_type2(impulse, 0.4), {1, 0.4, 0.28});
    check_vector(integrate_type2(ones, 0.4), {1, 1.4, 1.68});
    const auto u = random_series(50, 3);
    CHECK(integrate_type2(u, 0.0) == u);
    CHECK_THROWS_AS((void)integrate_type2(std::vector<double>{}, 0.2), EmptyInputError);
    CHECK_THROWS_AS((void)integrate_type2(ones, 0.5), DomainError);
}

TEST_CASE("fractional_difference hand values") {
    const std::vector<double> x{1, 0.4, 0.28};
    const auto y = fractional_difference(x, 0.4);
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(y[1]) < 1e-12);
    CHECK(std::abs(y[2]) < 1e-12);
    check_vector(frac_coeffs(-0.4, 3).values, {1, -0.4, -0.12});
    const auto u = random_series(20, 4);
    CHECK(fractional_difference(u, 0.0) == u);
    CHECK_THROWS_AS((void)fractional_difference(std::vector<double>{}, 0.1), EmptyInputError);
}

TEST_CASE("round trip fractional_difference of integrate_type2") {
    for (std::size_t n : {1u, 2u, 10u, 1000u}) {
        for (double d : kDGrid) {
            const auto u = random_series(n, static_cast<unsigned>(n * 31 + 7));
            const auto back = fractional_difference(integrate_type2(u, d), d);
            REQUIRE(max_rel_diff(back, u) < 1e-10);
        }
    }
}

TEST_CASE("integrate_type2 is linear") {
    const auto u = random_series(700, 11);
    const auto v = random_series(700, 12);
    const double alpha = 1.7, beta = -0.6;
    std::vector<double> mix(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) mix[i] = alpha * u[i] + beta * v[i];
    for (double d : kDGrid) {
        const auto iu = integrate_type2(u, d);
        const auto iv = integrate_type2(v, d);
        const auto im = integrate_type2(mix, d);
        std::vector<double> comb(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) comb[i] = alpha * iu[i] + beta * iv[i];
        REQUIRE(max_rel_diff(im, comb) < 1e-12);
    }
}

TEST_CASE("direct and FFT convolution agree") {
    for (std::size_t n : {64u, 1000u, 4096u}) {
        const auto u = random_series(n, static_cast<unsigned>(n));
        for (double d : kDGrid) {
            const auto direct = integrate_type2(u, d, ConvolutionMethod::Direct);
            const auto fast = integrate_type2(u, d, ConvolutionMethod::Fft);
            REQUIRE(max_rel_diff(fast, direct) < 1e-10);
            const auto inv_direct = fractional_difference(u, d, ConvolutionMethod::Direct);
            const auto inv_fast = fractional_difference(u, d, ConvolutionMethod::Fft);
            REQUIRE(max_rel_diff(inv_fast, inv_direct) < 1e-10);
        }
    }
}

TEST_CASE("Type I block filter matches the direct sum") {
    for (double d : {-0.3, 0.25, 0.45}) {
        for (std::size_t m : {0u, 5u, 64u, 300u}) {
            const std::size_t n = 64;
            const auto u = random_series(m + n, static_cast<unsigned>(m + 1));
            const Type1Filter filter(d, n, m);
            REQUIRE(filter.input_length() == m + n);
            REQUIRE(max_rel_diff(filter.apply(u), type1_filter_direct(u, d, n)) < 1e-10);
        }
    }
    const Type1Filter filter(0.2, 8, 4);
    CHECK_THROWS_AS((void)filter.apply(random_series(11, 1)), DomainError);
}

TEST_CASE("integrate_type1 with d = 0 returns the innovations") {
    InnovationSpec spec;
    const auto res = integrate_type1(spec, 0.0, 100, 1e-3, 42);
    CHECK(res.truncation == 0);
    CHECK(res.values == gen(spec, 100, 42));
}

TEST_CASE("type1_truncation is the smallest feasible M") {
    const double d = 0.25, eps = 1e-2;
    const std::size_t m = type1_truncation(d, 1.0, eps);
    // Oracle: brute-force Σ a_j² up to J plus the integral of a_j² ~ j^{2d−2}/Γ(d)² beyond J.
    const std::size_t big_j = 20'000'000;
    REQUIRE(m < big_j);
    long double a = 1.0L, sum_all = 1.0L, sum_to_m = 0.0L, sum_to_m_minus = 0.0L;
    if (m == 0) sum_to_m = 1.0L;
    for (std::size_t j = 1; j <= big_j; ++j) {
        a *= (static_cast<long double>(j) - 1.0L + d) / static_cast<long double>(j);
        sum_all += a * a;
        if (j == m - 1) sum_to_m_minus = sum_all;
        if (j == m) sum_to_m = sum_all;
    }
    const long double g = std::tgamma(static_cast<long double>(d));
    sum_all += std::pow(static_cast<long double>(big_j) + 0.5L, 2.0L * d - 1.0L) /
               ((1.0L - 2.0L * d) * g * g);
    const long double target = static_cast<long double>(eps) * eps;
    CHECK(sum_all - sum_to_m <= target);
    CHECK(sum_all - sum_to_m_minus > target);
    CHECK(m > 2'000'000);
}

TEST_CASE("type1_truncation infeasible above the cap") {
    CHECK_THROWS_AS((void)type1_truncation(0.25, 1.0, 1e-3), TruncationInfeasibleError);
    CHECK_THROWS_AS((void)type1_truncation(0.45, 1.0, 1e-8, 10'000'000),
                    TruncationInfeasibleError);
    CHECK(type1_truncation(0.0, 1.0, 1e-8) == 0);
    CHECK_THROWS_AS((void)type1_truncation(0.2, 1.0, 0.0), DomainError);
}

TEST_CASE("integrate_higher") {
    const std::vector<double> ones{1, 1, 1}, impulse{1, 0, 0};
    check_vector(integrate_higher(ones, FracSpec(0.0, 1, ProcessKind::TypeII)), {1, 2, 3});
    check_vector(integrate_higher(impulse, FracSpec(0.4, 1, ProcessKind::TypeII)),
                 {1, 1.4, 1.68});
    const auto u = random_series(100, 9);
    CHECK(integrate_higher(u, FracSpec(0.3, 0, ProcessKind::TypeII)) == integrate_type2(u, 0.3));

    InnovationModel model{InnovationSpec{}};
    const auto base = integrate_type1(model, 0.2, 64, 0.05, 5);
    const auto higher = integrate_higher(model, FracSpec(0.2, 0, ProcessKind::TypeI), 64, 0.05, 5);
    CHECK(higher.values == base.values);
    CHECK(higher.truncation == base.truncation);
    const auto twice = integrate_higher(model, FracSpec(0.2, 2, ProcessKind::TypeI), 64, 0.05, 5);
    CHECK(twice.values == cumulative_sum(base.values, 2));
}

TEST_CASE("FracSpec validation") {
    CHECK_THROWS_AS(FracSpec(0.5, 0, ProcessKind::TypeI), DomainError);
    CHECK_THROWS_AS(FracSpec(-0.5, 0, ProcessKind::TypeI), DomainError);
    CHECK_THROWS_AS(FracSpec(0.1, -1, ProcessKind::TypeI), DomainError);
    CHECK_NOTHROW(FracSpec(0.0, 3, ProcessKind::TypeII));
}

TEST_CASE("series I/O round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "fracinv_test_series";
    std::filesystem::create_directories(dir);
    const auto u = random_series(257, 77);
    for (auto name : {"s.csv", "s.bin"}) {
        const auto path = dir / name;
        write_series(path, u);
        CHECK(read_series(path) == u);
    }
    {
        std::ofstream bad(dir / "bad.bin", std::ios::binary);
        bad << "short";
    }
    CHECK_THROWS_AS((void)read_series(dir / "bad.bin"), FormatError);
    {
        std::ofstream bad(dir / "bad.csv");
        bad << "value\n1.0\nabc\n";
    }
    CHECK_THROWS_AS((void)read_series(dir / "bad.csv"), FormatError);
    std::filesystem::remove_all(dir);
}
