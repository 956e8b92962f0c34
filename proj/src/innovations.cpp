#include "fracinv/innovations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "fracinv/errors.hpp"
#include "fracinv/memtests.hpp"

namespace fracinv {

namespace {

constexpr std::uint64_t kCalibrationSeed = 0x5eedca1b0000001ULL;
constexpr std::size_t kCalibrationLength = 1'000'000;
constexpr double kInf = std::numeric_limits<double>::infinity();

double draw_standard(const EpsDist& dist, Rng& rng) {
    if (dist.kind == EpsDist::Kind::Gaussian) {
        return boost::random::normal_distribution<double>{}(rng);
    }
    const double t = boost::random::student_t_distribution<double>{dist.nu}(rng);
    return t * std::sqrt((dist.nu - 2.0) / dist.nu);
}

void validate_eps(const EpsDist& dist, const char* where) {
    if (dist.kind == EpsDist::Kind::StudentT && !(dist.nu > 2.0)) {
        throw DomainError(std::string(where) + ": Student-t noise needs nu > 2 (unit variance)");
    }
}

double eps_moment_limit(const EpsDist& dist) {
    return dist.kind == EpsDist::Kind::Gaussian ? kInf : dist.nu * (1.0 - 1e-9);
}

}  // namespace

class InnovationModel::Kernel {
public:
    virtual ~Kernel() = default;
    virtual std::size_t state_size() const { return 0; }
    virtual void reset(std::span<double> state) const { std::fill(state.begin(), state.end(), 0.0); }
    /// Raw (uncentred) u_t given the new noise value.
    virtual double step(std::span<double> state, double eps) const = 0;
    virtual double draw_eps(Rng& rng) const = 0;
    /// Minimum warm-up so that the state holds genuine past noise.
    virtual std::size_t memory() const { return 0; }
    /// out[i] = step(state, draw_eps(rng)) − shift, in order.
    virtual void run(std::span<double> out, std::span<double> state, Rng& rng, double shift) const {
        for (auto& x : out) x = step(state, draw_eps(rng)) - shift;
    }
};

namespace {

using Kernel = InnovationModel::Kernel;

class GaussianKernel final : public Kernel {
public:
    explicit GaussianKernel(double sigma) : sigma_(sigma) {}
    double step(std::span<double>, double eps) const override { return sigma_ * eps; }
    double draw_eps(Rng& rng) const override {
        return boost::random::normal_distribution<double>{}(rng);
    }
    void run(std::span<double> out, std::span<double>, Rng& rng, double shift) const override {
        boost::random::normal_distribution<double> normal;
        for (auto& x : out) x = sigma_ * normal(rng) - shift;
    }

private:
    double sigma_;
};

class StudentKernel final : public Kernel {
public:
    StudentKernel(double nu, double scale) : nu_(nu), scale_(scale) {}
    double step(std::span<double>, double eps) const override { return scale_ * eps; }
    double draw_eps(Rng& rng) const override {
        return boost::random::student_t_distribution<double>{nu_}(rng);
    }

private:
    double nu_;
    double scale_;
};

class MaKernel final : public Kernel {
public:
    explicit MaKernel(const model::LinearMA& m) : b_(m.b), eps_(m.eps) {}
    std::size_t state_size() const override { return b_.size() - 1; }
    std::size_t memory() const override { return b_.size() - 1; }
    // state[k-1] = ε_{t-k}
    double step(std::span<double> s, double eps) const override {
        double u = b_[0] * eps;
        for (std::size_t k = 1; k < b_.size(); ++k) u += b_[k] * s[k - 1];
        for (std::size_t k = s.size(); k > 1; --k) s[k - 1] = s[k - 2];
        if (!s.empty()) s[0] = eps;
        return u;
    }
    double draw_eps(Rng& rng) const override { return draw_standard(eps_, rng); }

private:
    std::vector<double> b_;
    EpsDist eps_;
};

class GarchKernel final : public Kernel {
public:
    explicit GarchKernel(const model::Garch11& m) : m_(m) {}
    std::size_t state_size() const override { return 2; }
    void reset(std::span<double> s) const override {
        s[0] = m_.omega / (1.0 - m_.alpha - m_.beta);
        s[1] = 0.0;
    }
    // state = {σ²_{t-1}, u_{t-1}}
    double step(std::span<double> s, double eps) const override {
        const double sigma2 = m_.omega + m_.alpha * s[1] * s[1] + m_.beta * s[0];
        const double u = std::sqrt(sigma2) * eps;
        s[0] = sigma2;
        s[1] = u;
        return u;
    }
    double draw_eps(Rng& rng) const override { return draw_standard(m_.eps, rng); }

private:
    model::Garch11 m_;
};

class BilinearKernel final : public Kernel {
public:
    explicit BilinearKernel(const model::Bilinear& m) : m_(m) {}
    std::size_t state_size() const override { return 2; }
    // state = {u_{t-1}, ε_{t-1}}
    double step(std::span<double> s, double eps) const override {
        const double u = (m_.a + m_.b * s[1]) * s[0] + eps;
        s[0] = u;
        s[1] = eps;
        return u;
    }
    double draw_eps(Rng& rng) const override { return draw_standard(m_.eps, rng); }

private:
    model::Bilinear m_;
};

class ThresholdKernel final : public Kernel {
public:
    explicit ThresholdKernel(const model::ThresholdAr& m) : m_(m) {}
    std::size_t state_size() const override { return 1; }
    double step(std::span<double> s, double eps) const override {
        const double prev = s[0];
        const double u = m_.a_pos * std::max(prev, 0.0) + m_.a_neg * std::min(prev, 0.0) + eps;
        s[0] = u;
        return u;
    }
    double draw_eps(Rng& rng) const override { return draw_standard(m_.eps, rng); }

private:
    model::ThresholdAr m_;
};

class ConstantKernel final : public Kernel {
public:
    double step(std::span<double>, double) const override { return 1.0; }
    double draw_eps(Rng&) const override { return 0.0; }
};

class ArmaKernel final : public Kernel {
public:
    ArmaKernel(std::vector<double> ar, std::vector<double> ma, InnovationModel inner)
        : ar_(std::move(ar)), ma_(std::move(ma)), inner_(std::move(inner)) {
        inner_size_ = inner_.kernel().state_size();
    }
    std::size_t state_size() const override { return inner_size_ + (ma_.size() - 1) + ar_.size(); }
    std::size_t memory() const override {
        return std::max(inner_.burn_in(), inner_.kernel().memory()) +
               std::max(ma_.size() - 1, ar_.size());
    }
    void reset(std::span<double> s) const override {
        std::fill(s.begin(), s.end(), 0.0);
        inner_.kernel().reset(s.first(inner_size_));
    }
    // state = inner | w_{t-1..t-q} | v_{t-1..t-p}
    double step(std::span<double> s, double eps) const override {
        const double w = inner_.kernel().step(s.first(inner_size_), eps) - inner_.mean_shift();
        auto w_hist = s.subspan(inner_size_, ma_.size() - 1);
        auto v_hist = s.subspan(inner_size_ + ma_.size() - 1, ar_.size());
        double v = ma_[0] * w;
        for (std::size_t j = 1; j < ma_.size(); ++j) v += ma_[j] * w_hist[j - 1];
        for (std::size_t i = 0; i < ar_.size(); ++i) v += ar_[i] * v_hist[i];
        for (std::size_t k = w_hist.size(); k > 1; --k) w_hist[k - 1] = w_hist[k - 2];
        if (!w_hist.empty()) w_hist[0] = w;
        for (std::size_t k = v_hist.size(); k > 1; --k) v_hist[k - 1] = v_hist[k - 2];
        if (!v_hist.empty()) v_hist[0] = v;
        return v;
    }
    double draw_eps(Rng& rng) const override { return inner_.kernel().draw_eps(rng); }

private:
    std::vector<double> ar_;
    std::vector<double> ma_;
    InnovationModel inner_;
    std::size_t inner_size_ = 0;
};

bool ar_is_stationary(const std::vector<double>& ar) {
    if (ar.empty()) return true;
    const auto p = static_cast<Eigen::Index>(ar.size());
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = ar[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    const Eigen::VectorXcd eig = companion.eigenvalues();
    return eig.cwiseAbs().maxCoeff() < 1.0;
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// E log|a + b ε| by fixed-seed Monte Carlo.
double mean_log_contraction(const model::Bilinear& m) {
    Rng rng = make_rng(0xb111eaULL);
    constexpr std::size_t draws = 200'000;
    double acc = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        acc += std::log(std::abs(m.a + m.b * draw_standard(m.eps, rng)));
    }
    return acc / static_cast<double>(draws);
}

double garch_default_q(const model::Garch11& m) {
    // Fourth moment exists iff E(α ε² + β)² < 1.
    const double kurt = m.eps.kind == EpsDist::Kind::Gaussian
                            ? 3.0
                            : (m.eps.nu > 4.0 ? 3.0 * (m.eps.nu - 2.0) / (m.eps.nu - 4.0) : kInf);
    const double m4 = kurt * m.alpha * m.alpha + 2.0 * m.alpha * m.beta + m.beta * m.beta;
    return m4 < 1.0 ? 4.0 : 2.0;
}

}  // namespace

std::string variant_name(const ModelVariant& m) {
    struct Visitor {
        std::string operator()(const model::IidGaussian&) const { return "iid-gauss"; }
        std::string operator()(const model::IidStudentT&) const { return "iid-t"; }
        std::string operator()(const model::LinearMA&) const { return "linear-ma"; }
        std::string operator()(const model::Garch11&) const { return "garch11"; }
        std::string operator()(const model::Bilinear&) const { return "bilinear"; }
        std::string operator()(const model::ThresholdAr&) const { return "threshold-ar"; }
        std::string operator()(const model::ArmaFilter&) const { return "arma"; }
        std::string operator()(const model::HeavyTailEta&) const { return "heavy-tail"; }
        std::string operator()(const model::ConstantOne&) const { return "const1"; }
    };
    return std::visit(Visitor{}, m);
}

std::string to_string(EstimateSource s) {
    switch (s) {
        case EstimateSource::None: return "none";
        case EstimateSource::Analytic: return "analytic";
        case EstimateSource::Calibrated: return "calibrated";
    }
    return "unknown";
}

InnovationModel::~InnovationModel() = default;
InnovationModel::InnovationModel(InnovationModel&&) noexcept = default;
InnovationModel& InnovationModel::operator=(InnovationModel&&) noexcept = default;

InnovationModel::InnovationModel(InnovationSpec spec) : spec_(std::move(spec)) {
    bool needs_mean = false;
    bool needs_variance = false;
    bool needs_zeta = false;
    double default_q = kInf;
    std::size_t default_burn = 0;

    if (const auto* m = std::get_if<model::IidGaussian>(&spec_.model)) {
        if (!(m->sigma > 0.0)) throw DomainError("iid-gauss: sigma must be > 0");
        kernel_ = std::make_unique<GaussianKernel>(m->sigma);
        variance_ = m->sigma * m->sigma;
        zeta_norm_ = m->sigma;
    } else if (const auto* m = std::get_if<model::IidStudentT>(&spec_.model)) {
        if (!(m->nu > 2.0)) throw DomainError("iid-t: nu must be > 2 for a finite variance");
        if (!(m->scale > 0.0)) throw DomainError("iid-t: scale must be > 0");
        kernel_ = std::make_unique<StudentKernel>(m->nu, m->scale);
        variance_ = m->scale * m->scale * m->nu / (m->nu - 2.0);
        zeta_norm_ = std::sqrt(variance_);
        default_q = m->nu * (1.0 - 1e-9);
    } else if (const auto* m = std::get_if<model::LinearMA>(&spec_.model)) {
        if (m->b.empty() || !all_finite(m->b)) {
            throw DomainError("linear-ma: needs at least one finite coefficient");
        }
        validate_eps(m->eps, "linear-ma");
        kernel_ = std::make_unique<MaKernel>(*m);
        variance_ = std::inner_product(m->b.begin(), m->b.end(), m->b.begin(), 0.0);
        zeta_norm_ = std::abs(std::accumulate(m->b.begin(), m->b.end(), 0.0));
        default_q = eps_moment_limit(m->eps);
    } else if (const auto* m = std::get_if<model::Garch11>(&spec_.model)) {
        if (!(m->omega > 0.0) || !(m->alpha >= 0.0) || !(m->beta >= 0.0) ||
            !(m->alpha + m->beta < 1.0)) {
            throw DomainError("garch11: need omega > 0, alpha >= 0, beta >= 0, alpha + beta < 1");
        }
        validate_eps(m->eps, "garch11");
        kernel_ = std::make_unique<GarchKernel>(*m);
        variance_ = m->omega / (1.0 - m->alpha - m->beta);
        zeta_norm_ = std::sqrt(variance_);
        default_q = garch_default_q(*m);
        default_burn = 1000;
    } else if (const auto* m = std::get_if<model::Bilinear>(&spec_.model)) {
        validate_eps(m->eps, "bilinear");
        if (!(m->a * m->a + m->b * m->b < 1.0)) {
            throw DomainError("bilinear: need a^2 + b^2 < 1 for a finite second moment");
        }
        if (!(mean_log_contraction(*m) < 0.0)) {
            throw DomainError("bilinear: E log|a + b eps| must be negative");
        }
        kernel_ = std::make_unique<BilinearKernel>(*m);
        mean_shift_ = m->b / (1.0 - m->a);
        mean_source_ = EstimateSource::Analytic;
        needs_variance = needs_zeta = true;
        default_q = 2.0;
        default_burn = 1000;
    } else if (const auto* m = std::get_if<model::ThresholdAr>(&spec_.model)) {
        validate_eps(m->eps, "threshold-ar");
        if (!(std::max(std::abs(m->a_pos), std::abs(m->a_neg)) < 1.0)) {
            throw DomainError("threshold-ar: need max(|a_pos|, |a_neg|) < 1");
        }
        kernel_ = std::make_unique<ThresholdKernel>(*m);
        if (m->a_pos == m->a_neg) {
            mean_source_ = EstimateSource::Analytic;
        } else {
            needs_mean = true;
        }
        needs_variance = needs_zeta = true;
        default_q = eps_moment_limit(m->eps);
        default_burn = 1000;
    } else if (const auto* m = std::get_if<model::ArmaFilter>(&spec_.model)) {
        if (!m->inner) throw DomainError("arma: inner innovation spec is required");
        if (std::holds_alternative<model::HeavyTailEta>(m->inner->model)) {
            throw DomainError("arma: heavy-tail inner model is only valid in the boundary demo");
        }
        if (m->ma.empty() || !all_finite(m->ma) || !all_finite(m->ar)) {
            throw DomainError("arma: ma must hold at least ma[0]; all weights finite");
        }
        if (!ar_is_stationary(m->ar)) {
            throw DomainError("arma: AR polynomial has a root on or inside the unit circle");
        }
        InnovationModel inner(*m->inner);
        const double ratio = std::abs(std::accumulate(m->ma.begin(), m->ma.end(), 0.0)) /
                             std::abs(1.0 - std::accumulate(m->ar.begin(), m->ar.end(), 0.0));
        zeta_norm_ = ratio * inner.zeta_norm();
        zeta_source_ = inner.zeta_source();
        default_q = inner.q_moment();
        default_burn = 1000;
        kernel_ = std::make_unique<ArmaKernel>(m->ar, m->ma, std::move(inner));
        needs_variance = true;
    } else if (std::holds_alternative<model::HeavyTailEta>(spec_.model)) {
        throw DomainError(
            "heavy-tail: this variant is only valid in the moment-boundary demonstration");
    } else {
        kernel_ = std::make_unique<ConstantKernel>();
        variance_ = 0.0;
        zeta_norm_ = 0.0;
        zeta_source_ = EstimateSource::None;
    }

    q_moment_ = spec_.q_moment.value_or(default_q);
    if (!(q_moment_ >= 2.0)) throw DomainError("q_moment must be >= 2");
    burn_in_ = spec_.burn_in.value_or(default_burn);

    if (needs_mean || needs_variance || needs_zeta) {
        const auto raw_shift = mean_shift_;
        mean_shift_ = 0.0;
        std::vector<double> u = generate(kCalibrationLength, kCalibrationSeed);
        double mean = 0.0;
        for (double x : u) mean += x;
        mean /= static_cast<double>(u.size());
        if (needs_mean) {
            mean_shift_ = mean;
            mean_source_ = EstimateSource::Calibrated;
        } else {
            mean_shift_ = raw_shift;
            mean = raw_shift;
        }
        for (double& x : u) x -= mean;
        if (needs_variance) {
            double ss = 0.0;
            for (double x : u) ss += x * x;
            variance_ = ss / static_cast<double>(u.size());
            variance_source_ = EstimateSource::Calibrated;
        }
        if (needs_zeta) {
            const auto l = default_bandwidth(u.size());
            zeta_norm_ = std::sqrt(lrv_innovations(u, l));
            zeta_source_ = EstimateSource::Calibrated;
        }
    }
}

std::vector<double> InnovationModel::generate(std::size_t n, std::uint64_t seed) const {
    if (n == 0) throw EmptyInputError("gen: n must be >= 1");
    Rng rng = make_rng(seed);
    std::vector<double> state(kernel_->state_size());
    kernel_->reset(state);
    const std::size_t warm = std::max(burn_in_, kernel_->memory());
    for (std::size_t i = 0; i < warm; ++i) kernel_->step(state, kernel_->draw_eps(rng));
    std::vector<double> u(n);
    kernel_->run(u, state, rng, mean_shift_);
    return u;
}

std::vector<double> gen(const InnovationSpec& spec, std::size_t n, std::uint64_t seed) {
    return InnovationModel(spec).generate(n, seed);
}

MomentCompatibility check_moment_compat(double q_declared, double d, MomentContext context) {
    MomentCompatibility out;
    out.d = d;
    out.q_declared = q_declared;
    const double boundary = d < 0.0 ? 2.0 / (2.0 * d + 1.0) : 2.0;
    if (context == MomentContext::InvariancePrinciple) {
        out.q_required = boundary;
        // q = 2 suffices for d >= 0; strict inequality below zero.
        out.ok = d < 0.0 ? q_declared > boundary : q_declared >= 2.0;
    } else {
        out.q_required = std::max(2.0, boundary);
        out.ok = q_declared > out.q_required;
    }
    return out;
}

MomentCompatibility check_moment_compat(const InnovationModel& model, double d,
                                        MomentContext context) {
    return check_moment_compat(model.q_moment(), d, context);
}

DependenceCurve coupled_dependence(const InnovationSpec& spec, std::size_t k_max, double q,
                                   std::size_t reps, std::uint64_t seed) {
    if (reps < 100) throw DomainError("coupled_dependence: reps must be >= 100");
    if (!(q >= 1.0)) throw DomainError("coupled_dependence: q must be >= 1");
    const InnovationModel model(spec);
    const auto& kernel = model.kernel();

    std::vector<double> sum(k_max + 1, 0.0), sum_sq(k_max + 1, 0.0);
    std::vector<double> s1(kernel.state_size()), s2(kernel.state_size());
    const std::size_t warm = std::max(model.burn_in(), kernel.memory());
    for (std::size_t r = 0; r < reps; ++r) {
        Rng rng = make_rng(derive_seed(seed, r));
        kernel.reset(s1);
        for (std::size_t i = 0; i < warm; ++i) kernel.step(s1, kernel.draw_eps(rng));
        s2 = s1;
        const double e0 = kernel.draw_eps(rng);
        const double e0_copy = kernel.draw_eps(rng);
        for (std::size_t k = 0; k <= k_max; ++k) {
            double u = 0.0, u_star = 0.0;
            if (k == 0) {
                u = kernel.step(s1, e0);
                u_star = kernel.step(s2, e0_copy);
            } else {
                const double e = kernel.draw_eps(rng);
                u = kernel.step(s1, e);
                u_star = kernel.step(s2, e);
            }
            const double v = std::pow(std::abs(u - u_star), q);
            sum[k] += v;
            sum_sq[k] += v * v;
        }
    }

    DependenceCurve out;
    out.q = q;
    out.reps = reps;
    out.q_exceeds_moment = q > model.q_moment();
    out.delta.resize(k_max + 1);
    out.std_error.resize(k_max + 1);
    const auto nr = static_cast<double>(reps);
    for (std::size_t k = 0; k <= k_max; ++k) {
        const double mean = sum[k] / nr;
        const double var = std::max(0.0, sum_sq[k] / nr - mean * mean);
        const double se_mean = std::sqrt(var / nr);
        out.delta[k] = std::pow(mean, 1.0 / q);
        out.std_error[k] =
            out.delta[k] > 0.0 ? se_mean / (q * std::pow(out.delta[k], q - 1.0)) : 0.0;
    }
    return out;
}

double lrv_innovations(std::span<const double> u, std::size_t l) {
    return bartlett_lrv(u, l).w2;
}

HeavyTailSampler::HeavyTailSampler(double q0, double v0) : q0_(q0), v0_(v0) {
    if (!(q0 > 0.0) || !std::isfinite(q0)) throw DomainError("heavy-tail: q0 must be > 0");
    if (!(v0 >= std::exp(2.0) * (1.0 - 1e-12)) || !std::isfinite(v0)) {
        throw DomainError("heavy-tail: v0 must be >= e^2");
    }
    // Density of |η|^q0 is continuous at v0: body (1-p)/v0 equals tail density there.
    const double log_v0 = std::log(v0);
    c_ = v0 * log_v0 * log_v0 / (2.0 + 2.0 / log_v0);
    p_ = c_ / (v0 * log_v0 * log_v0);
}

double HeavyTailSampler::survival(double g) const {
    if (g <= 0.0) return 1.0;
    if (g < v0_) return 1.0 - (1.0 - p_) * g / v0_;
    const double lg = std::log(g);
    return c_ / (g * lg * lg);
}

double HeavyTailSampler::draw(Rng& rng) const {
    const double s = 1.0 - boost::random::uniform_01<double>{}(rng);  // (0, 1]
    const bool negative = (rng() & 1U) != 0;
    double g = 0.0;
    if (s >= p_) {
        g = v0_ * (1.0 - s) / (1.0 - p_);
    } else {
        // Solve log c - y - 2 log y = log s for y = log g >= log v0.
        const double target = std::log(c_) - std::log(s);
        auto h = [&](double y) { return target - y - 2.0 * std::log(y); };
        const double lo = std::log(v0_);
        double hi = lo + 1.0;
        while (h(hi) > 0.0) hi = lo + 2.0 * (hi - lo);
        std::uintmax_t max_iter = 200;
        const auto [a, b] = boost::math::tools::toms748_solve(
            h, lo, hi, boost::math::tools::eps_tolerance<double>(40), max_iter);
        g = std::exp(0.5 * (a + b));
    }
    const double mag = std::pow(g, 1.0 / q0_);
    return negative ? -mag : mag;
}

std::vector<double> gen_heavy_tail_eta(double q0, double v0, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw EmptyInputError("gen_heavy_tail_eta: n must be >= 1");
    const HeavyTailSampler sampler(q0, v0);
    Rng rng = make_rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = sampler.draw(rng);
    return out;
}

}  // namespace fracinv
