#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fracinv/rng.hpp"

namespace fracinv {

/// Distribution of the driving noise ε_t, always standardized to mean 0, variance 1.
struct EpsDist {
    enum class Kind { Gaussian, StudentT };
    Kind kind = Kind::Gaussian;
    double nu = 0.0;  ///< degrees of freedom for StudentT (> 2)

    static EpsDist gaussian() { return {}; }
    static EpsDist student_t(double nu) { return {Kind::StudentT, nu}; }
};

struct InnovationSpec;

namespace model {

struct IidGaussian {
    double sigma = 1.0;
};

/// u_t = scale * t_nu (not standardized).
struct IidStudentT {
    double nu = 5.0;
    double scale = 1.0;
};

/// u_t = sum_k b_k ε_{t-k}, k = 0..K.
struct LinearMA {
    std::vector<double> b;
    EpsDist eps;
};

/// u_t = σ_t ε_t, σ_t² = ω + α u_{t-1}² + β σ_{t-1}².
struct Garch11 {
    double omega = 0.1;
    double alpha = 0.1;
    double beta = 0.8;
    EpsDist eps;
};

/// u_t = (a + b ε_{t-1}) u_{t-1} + ε_t, centred by its mean b/(1-a).
struct Bilinear {
    double a = 0.0;
    double b = 0.0;
    EpsDist eps;
};

/// u_t = a⁺ max(u_{t-1}, 0) + a⁻ min(u_{t-1}, 0) + ε_t, centred by an estimated mean.
struct ThresholdAr {
    double a_pos = 0.0;
    double a_neg = 0.0;
    EpsDist eps;
};

/// v_t = sum_i ar_i v_{t-i} + sum_j ma_j w_{t-j} with w the inner innovation;
/// ma holds the full weight list (ma[0] multiplies w_t).
struct ArmaFilter {
    std::vector<double> ar;
    std::vector<double> ma;
    std::shared_ptr<const InnovationSpec> inner;
};

/// iid symmetric draws with P(|η|^q0 ≥ g) = c g^{-1} (log g)^{-2} for g ≥ v0.
/// Only valid in the moment-boundary demonstration.
struct HeavyTailEta {
    double q0 = 4.0;
    double v0 = 7.38905609893065;  // e²
};

/// Debug model: u_t = 1 for all t (not centred).
struct ConstantOne {};

}  // namespace model

using ModelVariant =
    std::variant<model::IidGaussian, model::IidStudentT, model::LinearMA, model::Garch11,
                 model::Bilinear, model::ThresholdAr, model::ArmaFilter, model::HeavyTailEta,
                 model::ConstantOne>;

struct InnovationSpec {
    ModelVariant model = model::IidGaussian{};
    /// Declared finite moment order q (u ∈ L^q); model default when empty.
    std::optional<double> q_moment;
    /// Warm-up draws discarded before u_1; model default when empty.
    std::optional<std::size_t> burn_in;
};

/// Short kebab-case name of the variant ("iid-gauss", "garch11", ...).
std::string variant_name(const ModelVariant& m);

enum class EstimateSource { None, Analytic, Calibrated };
std::string to_string(EstimateSource s);

/// Validated, ready-to-sample innovation model. Construction checks the
/// variant's invariants and, where no closed form exists, runs a fixed-seed
/// calibration of length 10^6 for the mean, variance and ‖ζ_0‖².
class InnovationModel {
public:
    explicit InnovationModel(InnovationSpec spec);
    ~InnovationModel();
    InnovationModel(InnovationModel&&) noexcept;
    InnovationModel& operator=(InnovationModel&&) noexcept;

    const InnovationSpec& spec() const noexcept { return spec_; }

    /// u_1..u_n; bit-identical for identical (spec, n, seed).
    std::vector<double> generate(std::size_t n, std::uint64_t seed) const;

    double q_moment() const noexcept { return q_moment_; }
    std::size_t burn_in() const noexcept { return burn_in_; }

    /// Subtracted from the raw recursion so that E u_t = 0.
    double mean_shift() const noexcept { return mean_shift_; }
    EstimateSource mean_source() const noexcept { return mean_source_; }

    double variance() const noexcept { return variance_; }
    EstimateSource variance_source() const noexcept { return variance_source_; }

    /// ‖ζ_0‖ = (2π f_u(0))^{1/2}.
    double zeta_norm() const noexcept { return zeta_norm_; }
    EstimateSource zeta_source() const noexcept { return zeta_source_; }

    class Kernel;

    /// Internal recursion; exposed for the coupling estimator.
    const Kernel& kernel() const noexcept { return *kernel_; }

private:
    InnovationSpec spec_;
    std::unique_ptr<Kernel> kernel_;
    double q_moment_ = 2.0;
    std::size_t burn_in_ = 0;
    double mean_shift_ = 0.0;
    EstimateSource mean_source_ = EstimateSource::None;
    double variance_ = 1.0;
    EstimateSource variance_source_ = EstimateSource::Analytic;
    double zeta_norm_ = 1.0;
    EstimateSource zeta_source_ = EstimateSource::Analytic;
};

/// Convenience wrapper: InnovationModel(spec).generate(n, seed).
std::vector<double> gen(const InnovationSpec& spec, std::size_t n, std::uint64_t seed);

enum class MomentContext { InvariancePrinciple, MemoryTest };

struct MomentCompatibility {
    double d = 0.0;
    double q_required = 2.0;
    double q_declared = 2.0;
    bool ok = false;
};

/// Moment order needed by the invariance principles (q > 2/(2d+1) for d < 0,
/// q = 2 for d ≥ 0) or by the memory tests (q > max(2, 2/(2d+1))).
MomentCompatibility check_moment_compat(double q_declared, double d, MomentContext context);
MomentCompatibility check_moment_compat(const InnovationModel& model, double d,
                                        MomentContext context);

struct DependenceCurve {
    std::vector<double> delta;      ///< Δ_q(k), k = 0..k_max
    std::vector<double> std_error;  ///< delta-method standard errors
    double q = 2.0;
    std::size_t reps = 0;
    bool q_exceeds_moment = false;
};

/// Coupled-output dependence Δ_q(k) = ‖u_k − u_k*‖_q where u_k* re-runs the
/// recursion with ε_0 replaced by an independent copy. Upper proxy for the
/// predictive dependence measure δ_q(k).
DependenceCurve coupled_dependence(const InnovationSpec& spec, std::size_t k_max, double q,
                                   std::size_t reps, std::uint64_t seed);

/// Bartlett estimate of ‖ζ_0‖² = 2π f_u(0).
double lrv_innovations(std::span<const double> u, std::size_t l);

/// Sampler for the heavy-tailed η of the moment-boundary example.
class HeavyTailSampler {
public:
    HeavyTailSampler(double q0, double v0);

    double draw(Rng& rng) const;
    /// P(|η|^q0 ≥ g).
    double survival(double g) const;

    double q0() const noexcept { return q0_; }
    double v0() const noexcept { return v0_; }
    double tail_constant() const noexcept { return c_; }
    double tail_mass() const noexcept { return p_; }

private:
    double q0_;
    double v0_;
    double c_;
    double p_;  // P(|η|^q0 ≥ v0)
};

std::vector<double> gen_heavy_tail_eta(double q0, double v0, std::size_t n, std::uint64_t seed);

}  // namespace fracinv
