#include <cmath>
#include <memory>
#include <vector>

#include <doctest.h>

#include "fracinv/errors.hpp"
#include "fracinv/innovations.hpp"
#include "fracinv/memtests.hpp"

using namespace fracinv;

namespace {

double sample_mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_var(const std::vector<double>& x) {
    const double m = sample_mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

InnovationSpec garch() { return {model::Garch11{0.1, 0.1, 0.8, {}}, {}, {}}; }

}  // namespace

TEST_CASE("iid Gaussian variance") {
    const std::size_t n = 100'000;
    const auto u = gen(InnovationSpec{}, n, 1);
    CHECK(std::abs(sample_var(u) - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("GARCH(1,1) unconditional variance") {
    const auto u = gen(garch(), 1'000'000, 2);
    CHECK(sample_var(u) == doctest::Approx(1.0).epsilon(0.05));
    for (double v : u) REQUIRE(std::isfinite(v));
    const InnovationModel m(garch());
    CHECK(m.variance() == doctest::Approx(1.0));
    CHECK(m.zeta_norm() == doctest::Approx(1.0));
    CHECK(m.burn_in() == 1000);
}

TEST_CASE("MA(1) lag-one autocovariance") {
    const std::size_t n = 1'000'000, batches = 1000, len = n / batches;
    const auto u = gen({model::LinearMA{{1.0, 0.5}, {}}, {}, {}}, n + 1, 3);
    // Batch means of u_t u_{t−1} give a standard error that respects their serial correlation.
    std::vector<double> means(batches, 0.0);
    for (std::size_t i = 0; i < n; ++i) means[i / len] += u[i + 1] * u[i] / len;
    const double g1 = sample_mean(means);
    const double se = std::sqrt(sample_var(means) / static_cast<double>(batches - 1));
    CHECK(std::abs(g1 - 0.5) < 3.0 * se);
}

TEST_CASE("invariant violations are rejected") {
    CHECK_THROWS_AS(InnovationModel({model::Garch11{0.1, 0.5, 0.5, {}}, {}, {}}), DomainError);
    CHECK_THROWS_AS(InnovationModel({model::Garch11{0.0, 0.1, 0.8, {}}, {}, {}}), DomainError);
    CHECK_THROWS_AS(InnovationModel({model::Garch11{0.1, -0.1, 0.8, {}}, {}, {}}), DomainError);
    CHECK_THROWS_AS(InnovationModel({model::ThresholdAr{1.0, 0.2, {}}, {}, {}}), DomainError);
    CHECK_THROWS_AS(InnovationModel({model::Bilinear{0.9, 0.9, {}}, {}, {}}), DomainError);
    CHECK_THROWS_AS(InnovationModel({model::LinearMA{{}, {}}, {}, {}}), DomainError);
    CHECK_THROWS_AS(InnovationModel({model::HeavyTailEta{}, {}, {}}), DomainError);
    CHECK_THROWS_AS(InnovationModel({model::IidStudentT{2.0, 1.0}, {}, {}}), DomainError);
    CHECK_THROWS_AS(InnovationModel({model::IidGaussian{1.0}, 1.5, {}}), DomainError);
    auto inner = std::make_shared<const InnovationSpec>();
    CHECK_THROWS_AS(InnovationModel({model::ArmaFilter{{1.1}, {1.0}, inner}, {}, {}}),
                    DomainError);
    CHECK_THROWS_AS((void)gen(InnovationSpec{}, 0, 1), EmptyInputError);
}

TEST_CASE("recursive models are centred") {
    const std::vector<InnovationSpec> specs{
        {model::Bilinear{0.3, 0.4, {}}, {}, {}},
        {model::ThresholdAr{0.6, -0.2, {}}, {}, {}},
        {model::IidStudentT{5.0, 1.0}, {}, {}},
    };
    for (const auto& spec : specs) {
        const InnovationModel m(spec);
        const auto u = m.generate(200'000, 17);
        // The standard error of a dependent mean is ‖ζ_0‖ / √n.
        CHECK(std::abs(sample_mean(u)) < 4.0 * m.zeta_norm() / std::sqrt(200'000.0));
    }
    const InnovationModel bil({model::Bilinear{0.3, 0.4, {}}, {}, {}});
    CHECK(bil.mean_source() == EstimateSource::Analytic);
    CHECK(bil.mean_shift() == doctest::Approx(0.4 / 0.7));
}

TEST_CASE("generation is reproducible") {
    for (const InnovationSpec& spec :
         {InnovationSpec{}, garch(), InnovationSpec{model::Bilinear{0.3, 0.4, {}}, {}, {}}}) {
        const InnovationModel m(spec);
        CHECK(m.generate(5000, 99) == m.generate(5000, 99));
        CHECK(m.generate(5000, 99) != m.generate(5000, 100));
        CHECK(gen(spec, 100, 7) == m.generate(100, 7));
    }
}

TEST_CASE("moment compatibility") {
    auto c = check_moment_compat(2.0, 0.25, MomentContext::InvariancePrinciple);
    CHECK(c.ok);
    CHECK(c.q_required == 2.0);
    c = check_moment_compat(2.0, -0.25, MomentContext::InvariancePrinciple);
    CHECK_FALSE(c.ok);
    CHECK(c.q_required == doctest::Approx(4.0));
    c = check_moment_compat(2.0, 0.1, MomentContext::MemoryTest);
    CHECK_FALSE(c.ok);
    CHECK(c.q_required == 2.0);
    c = check_moment_compat(4.5, -0.25, MomentContext::MemoryTest);
    CHECK(c.ok);
    const InnovationModel t5({model::IidStudentT{5.0, 1.0}, {}, {}});
    CHECK_FALSE(check_moment_compat(t5, -0.4, MomentContext::InvariancePrinciple).ok);
    CHECK(check_moment_compat(InnovationModel(InnovationSpec{}), -0.4,
                              MomentContext::MemoryTest).ok);
}

TEST_CASE("coupled dependence of iid and MA models") {
    const auto iid = coupled_dependence(InnovationSpec{}, 5, 2.0, 200, 1);
    REQUIRE(iid.delta.size() == 6);
    CHECK(iid.delta[0] > 0.0);
    for (std::size_t k = 1; k < iid.delta.size(); ++k) CHECK(iid.delta[k] == 0.0);

    const std::vector<double> b{1.0, 0.5, 0.25};
    const auto ma = coupled_dependence({model::LinearMA{b, {}}, {}, {}}, 5, 2.0, 4000, 2);
    for (std::size_t k = 0; k < ma.delta.size(); ++k) {
        const double want = k < b.size() ? b[k] * std::sqrt(2.0) : 0.0;
        if (want == 0.0) CHECK(ma.delta[k] == 0.0);
        else CHECK(std::abs(ma.delta[k] - want) < 4.0 * ma.std_error[k]);
    }
    CHECK_THROWS_AS((void)coupled_dependence(InnovationSpec{}, 5, 2.0, 10, 1), DomainError);
}

TEST_CASE("coupled dependence of GARCH decays geometrically") {
    const auto curve = coupled_dependence(garch(), 20, 2.0, 2000, 3);
    CHECK(curve.delta[0] > 0.0);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 1; k <= 20; ++k) {
        REQUIRE(curve.delta[k] > 0.0);
        const double x = static_cast<double>(k), y = std::log(curve.delta[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (20 * sxy - sx * sy) / (20 * sxx - sx * sx);
    CHECK(slope < 0.0);
    for (double v : curve.delta) CHECK(v >= 0.0);
}

TEST_CASE("coupled dependence flags q above the declared moment") {
    const auto curve = coupled_dependence({model::IidStudentT{3.0, 1.0}, {}, {}}, 2, 4.0, 100, 1);
    CHECK(curve.q_exceeds_moment);
    CHECK_FALSE(coupled_dependence(InnovationSpec{}, 2, 4.0, 100, 1).q_exceeds_moment);
}

TEST_CASE("long-run variance of innovations") {
    const std::size_t n = 1'000'000;
    const std::size_t l = default_bandwidth(n);
    CHECK(l == 100);
    CHECK(lrv_innovations(gen(InnovationSpec{}, n, 5), l) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(lrv_innovations(gen({model::LinearMA{{1.0, 0.5}, {}}, {}, {}}, n, 6), l) ==
          doctest::Approx(2.25).epsilon(0.05));
    CHECK(lrv_innovations(gen(garch(), n, 7), l) == doctest::Approx(1.0).epsilon(0.07));
    CHECK_THROWS_AS((void)lrv_innovations(std::vector<double>{1.0, 2.0}, 2), DomainError);
}

TEST_CASE("ARMA filter over GARCH long-run variance") {
    const auto inner = std::make_shared<const InnovationSpec>(garch());
    const InnovationSpec spec{model::ArmaFilter{{0.5}, {1.0, 0.3}, inner}, {}, {}};
    const std::size_t n = 1'000'000;
    const double psi_sum = 1.3 / 0.5;
    const double est = lrv_innovations(gen(spec, n, 8), default_bandwidth(n));
    CHECK(est == doctest::Approx(psi_sum * psi_sum * 1.0).epsilon(0.10));
    CHECK(InnovationModel(spec).zeta_norm() == doctest::Approx(psi_sum));
}

TEST_CASE("heavy-tail eta") {
    const double q0 = 4.0, v0 = std::exp(2.0);
    const std::size_t n = 1'000'000;
    const auto eta = gen_heavy_tail_eta(q0, v0, n, 11);
    double s = 0.0, ss = 0.0;
    for (double v : eta) {
        s += v;
        ss += v * v;
    }
    const double mean = s / n;
    const double sd = std::sqrt(ss / n - mean * mean);
    CHECK(std::abs(mean) < 4.0 * sd / std::sqrt(static_cast<double>(n)));

    const HeavyTailSampler sampler(q0, v0);
    const double g = 10.0 * v0;
    const double lg = std::log(g);
    const double want = sampler.tail_constant() / (g * lg * lg);
    CHECK(sampler.survival(g) == doctest::Approx(want).epsilon(1e-12));
    std::size_t hits = 0;
    for (double v : eta) hits += std::pow(std::abs(v), q0) >= g ? 1 : 0;
    const double emp = static_cast<double>(hits) / n;
    CHECK(std::abs(emp - want) < 3.0 * std::sqrt(want * (1.0 - want) / n));
    CHECK(gen_heavy_tail_eta(q0, v0, 100, 3) == gen_heavy_tail_eta(q0, v0, 100, 3));

    CHECK_THROWS_AS(HeavyTailSampler(0.0, v0), DomainError);
    CHECK_THROWS_AS(HeavyTailSampler(4.0, 2.0), DomainError);
}
