#include "fracinv/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fracinv/errors.hpp"
#include "fracinv/series_io.hpp"

namespace fracinv {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
    }
    return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& text) {
    // accepts 2^k as shorthand for powers of two
    if (const auto caret = text.find('^'); caret != std::string::npos) {
        const auto base = to_uint(key, text.substr(0, caret));
        const auto exp = to_uint(key, text.substr(caret + 1));
        std::uint64_t v = 1;
        for (std::uint64_t i = 0; i < exp; ++i) v *= base;
        return v;
    }
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ConfigError("config key '" + key + "': '" + text +
                          "' is not a nonnegative integer");
    }
    return v;
}

/// Typed access that remembers which keys were read.
class Reader {
public:
    Reader(const std::map<std::string, std::string>& values, std::string prefix)
        : values_(values), prefix_(std::move(prefix)) {}

    const std::string* find(const std::string& key) {
        const auto it = values_.find(key);
        if (it == values_.end()) return nullptr;
        used_.insert(key);
        return &it->second;
    }
    std::string require(const std::string& key) {
        if (const auto* v = find(key)) return *v;
        throw ConfigError("missing config key '" + prefix_ + key + "'");
    }
    std::string text(const std::string& key, const std::string& fallback) {
        const auto* v = find(key);
        return v ? *v : fallback;
    }
    double number(const std::string& key, double fallback) {
        const auto* v = find(key);
        return v ? to_double(prefix_ + key, *v) : fallback;
    }
    std::optional<double> optional_number(const std::string& key) {
        const auto* v = find(key);
        return v ? std::optional(to_double(prefix_ + key, *v)) : std::nullopt;
    }
    std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
        const auto* v = find(key);
        return v ? to_uint(prefix_ + key, *v) : fallback;
    }
    std::optional<std::uint64_t> optional_integer(const std::string& key) {
        const auto* v = find(key);
        return v ? std::optional(to_uint(prefix_ + key, *v)) : std::nullopt;
    }
    std::vector<double> numbers(const std::string& key) {
        std::vector<double> out;
        if (const auto* v = find(key)) {
            for (const auto& item : split_list(*v)) out.push_back(to_double(prefix_ + key, item));
        }
        return out;
    }
    bool flag(const std::string& key, bool fallback) {
        const auto* v = find(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw ConfigError("config key '" + prefix_ + key + "': expected true or false");
    }
    void mark_prefix_used(const std::string& prefix) {
        for (const auto& [k, v] : values_) {
            if (k.starts_with(prefix)) used_.insert(k);
        }
    }
    void reject_unknown() const {
        for (const auto& [k, v] : values_) {
            if (!used_.contains(k)) throw ConfigError("unknown config key '" + prefix_ + k + "'");
        }
    }

private:
    const std::map<std::string, std::string>& values_;
    std::string prefix_;
    std::set<std::string> used_;
};

EpsDist read_eps(Reader& r) {
    const std::string kind = r.text("eps", "gauss");
    if (kind == "gauss" || kind == "gaussian") return EpsDist::gaussian();
    if (kind == "t" || kind == "student-t") return EpsDist::student_t(r.number("eps_nu", 5.0));
    throw ConfigError("model.eps must be 'gauss' or 't', got '" + kind + "'");
}

InnovationSpec read_innovation(const std::map<std::string, std::string>& params,
                               const std::string& prefix) {
    Reader r(params, prefix);
    InnovationSpec spec;
    const std::string variant = r.text("variant", "iid-gauss");
    if (variant == "iid-gauss") {
        spec.model = model::IidGaussian{r.number("sigma", 1.0)};
    } else if (variant == "iid-t") {
        spec.model = model::IidStudentT{r.number("nu", 5.0), r.number("scale", 1.0)};
    } else if (variant == "linear-ma") {
        model::LinearMA m;
        m.b = r.numbers("ma");
        if (m.b.empty()) throw ConfigError("model.ma must list at least one weight");
        m.eps = read_eps(r);
        spec.model = m;
    } else if (variant == "garch11") {
        model::Garch11 m;
        m.omega = r.number("omega", m.omega);
        m.alpha = r.number("alpha", m.alpha);
        m.beta = r.number("beta", m.beta);
        m.eps = read_eps(r);
        spec.model = m;
    } else if (variant == "bilinear") {
        model::Bilinear m;
        m.a = r.number("a", 0.0);
        m.b = r.number("b", 0.0);
        m.eps = read_eps(r);
        spec.model = m;
    } else if (variant == "threshold-ar") {
        model::ThresholdAr m;
        m.a_pos = r.number("a_pos", 0.0);
        m.a_neg = r.number("a_neg", 0.0);
        m.eps = read_eps(r);
        spec.model = m;
    } else if (variant == "arma") {
        model::ArmaFilter m;
        m.ar = r.numbers("ar");
        m.ma = r.numbers("ma");
        if (m.ma.empty()) m.ma = {1.0};
        std::map<std::string, std::string> inner;
        for (const auto& [k, v] : params) {
            if (k.starts_with("inner.")) inner[k.substr(6)] = v;
        }
        r.mark_prefix_used("inner.");
        m.inner = std::make_shared<const InnovationSpec>(read_innovation(inner, prefix + "inner."));
        spec.model = m;
    } else if (variant == "heavy-tail") {
        model::HeavyTailEta m;
        m.q0 = r.number("q0", m.q0);
        m.v0 = r.number("v0", m.v0);
        spec.model = m;
    } else if (variant == "const1") {
        spec.model = model::ConstantOne{};
    } else {
        throw ConfigError("unknown model variant '" + variant +
                          "' (valid: iid-gauss, iid-t, linear-ma, garch11, bilinear, threshold-ar, "
                          "arma, heavy-tail, const1)");
    }
    spec.q_moment = r.optional_number("q");
    if (const auto b = r.optional_integer("burn_in")) spec.burn_in = static_cast<std::size_t>(*b);
    r.reject_unknown();
    return spec;
}

nlohmann::json eps_json(const EpsDist& e) {
    if (e.kind == EpsDist::Kind::Gaussian) return "gauss";
    return {{"dist", "t"}, {"nu", e.nu}};
}

}  // namespace

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::InvariancePrinciple: return "invariance";
        case Experiment::LrvScaling: return "lrv-scaling";
        case Experiment::StatConvergence: return "stat-convergence";
        case Experiment::CorollaryScaling: return "corollary-scaling";
        case Experiment::MomentBoundaryDemo: return "moment-boundary-demo";
    }
    return "unknown";
}

Experiment experiment_from_string(const std::string& s) {
    for (auto e : {Experiment::InvariancePrinciple, Experiment::LrvScaling,
                   Experiment::StatConvergence, Experiment::CorollaryScaling,
                   Experiment::MomentBoundaryDemo}) {
        if (s == to_string(e)) return e;
    }
    throw ConfigError("unknown experiment '" + s +
                      "' (valid: invariance, lrv-scaling, stat-convergence, corollary-scaling, "
                      "moment-boundary-demo)");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (!out.emplace(key, value).second) {
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key +
                              "'");
        }
    }
    return out;
}

InnovationSpec innovation_from_params(const std::map<std::string, std::string>& params) {
    return read_innovation(params, "model.");
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.raw = parse_key_values(text);
    Reader r(cfg.raw, "");

    cfg.experiment = experiment_from_string(r.require("experiment"));

    std::map<std::string, std::string> model_keys;
    for (const auto& [k, v] : cfg.raw) {
        if (k.starts_with("model.")) model_keys[k.substr(6)] = v;
    }
    r.mark_prefix_used("model.");
    cfg.innovation = innovation_from_params(model_keys);

    cfg.d = r.number("frac.d", 0.0);
    if (!(cfg.d > -0.5 && cfg.d < 0.5)) {
        throw ConfigError("frac.d must lie in (-1/2, 1/2), got " + r.text("frac.d", ""));
    }
    const auto p = r.integer("frac.p", 0);
    if (p > 8) throw ConfigError("frac.p must be a small nonnegative integer");
    cfg.p = static_cast<int>(p);
    try {
        cfg.kind = kind_from_string(r.text("frac.kind", "type1"));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("frac.kind: ") + e.what());
    }
    cfg.trunc_rel = r.number("frac.trunc_rel", cfg.trunc_rel);
    if (!(cfg.trunc_rel > 0.0)) throw ConfigError("frac.trunc_rel must be > 0");
    cfg.trunc_cap = r.integer("frac.trunc_cap", cfg.trunc_cap);

    for (const auto& item : split_list(r.require("n_list"))) {
        cfg.n_list.push_back(to_uint("n_list", item));
    }
    if (cfg.n_list.empty()) throw ConfigError("n_list must name at least one sample size");
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
        if (cfg.n_list[i] < 2) throw ConfigError("n_list entries must be >= 2");
        if (i > 0 && cfg.n_list[i] <= cfg.n_list[i - 1]) {
            throw ConfigError("n_list must be strictly increasing");
        }
    }
    cfg.reps = r.integer("reps", 0);
    if (cfg.reps < 100) {
        throw ConfigError("reps = " + std::to_string(cfg.reps) +
                          " is below the distributional minimum of 100");
    }
    cfg.seed = r.integer("seed", cfg.seed);

    cfg.bandwidth_rate = r.number("bandwidth.rate", cfg.bandwidth_rate);
    if (!(cfg.bandwidth_rate > 0.0 && cfg.bandwidth_rate < 1.0)) {
        throw ConfigError("bandwidth.rate must lie in (0, 1)");
    }
    if (const auto l = r.optional_integer("bandwidth.l")) {
        cfg.bandwidth_l = static_cast<std::size_t>(*l);
        if (*cfg.bandwidth_l >= cfg.n_list.front()) {
            throw ConfigError("bandwidth.l must be smaller than every n");
        }
    }
    try {
        if (const auto* v = r.find("functionals")) {
            cfg.functionals.clear();
            for (const auto& item : split_list(*v)) cfg.functionals.push_back(functional_from_string(item));
        }
        if (const auto* v = r.find("stats")) {
            cfg.stats.clear();
            for (const auto& item : split_list(*v)) cfg.stats.push_back(statistic_from_string(item));
        }
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }

    cfg.tables_dir = r.text("tables_dir", cfg.tables_dir.string());
    cfg.tables_m = r.integer("tables.m", cfg.tables_m);
    cfg.tables_reps = r.integer("tables.reps", cfg.tables_reps);
    cfg.tables_seed = r.integer("tables.seed", cfg.tables_seed);
    if (cfg.tables_reps < 1000) throw ConfigError("tables.reps must be >= 1000");
    cfg.out_dir = r.text("out_dir", cfg.out_dir.string());
    cfg.threads = r.integer("threads", 0);

    auto& t = cfg.tol;
    t.terminal_var = r.number("tol.terminal_var", t.terminal_var);
    t.ks_alpha = r.number("tol.ks_alpha", t.ks_alpha);
    t.ks_floor_factor = r.number("tol.ks_floor_factor", t.ks_floor_factor);
    t.lrv_median = r.number("tol.lrv_median", t.lrv_median);
    t.kpss_mean = r.number("tol.kpss_mean", t.kpss_mean);
    t.slope_level = r.number("tol.slope_level", t.slope_level);
    t.slope_sum = r.number("tol.slope_sum", t.slope_sum);
    t.slope_sumsq = r.number("tol.slope_sumsq", t.slope_sumsq);

    if (const auto c = r.optional_integer("check_n")) {
        cfg.check_n = static_cast<std::size_t>(*c);
        if (std::find(cfg.n_list.begin(), cfg.n_list.end(), *cfg.check_n) == cfg.n_list.end()) {
            throw ConfigError("check_n must be one of the n_list entries");
        }
    }
    const std::string ell = r.text("demo.ell", "inv-log");
    if (ell != "inv-log" && ell != "one") throw ConfigError("demo.ell must be 'inv-log' or 'one'");
    cfg.demo_log_ell = ell == "inv-log";
    r.reject_unknown();

    const bool heavy = std::holds_alternative<model::HeavyTailEta>(cfg.innovation.model);
    switch (cfg.experiment) {
        case Experiment::CorollaryScaling:
            if (cfg.n_list.size() < 3) throw ConfigError("corollary-scaling needs at least 3 n values");
            if (cfg.p < 1) throw ConfigError("corollary-scaling needs frac.p >= 1");
            break;
        case Experiment::MomentBoundaryDemo: {
            const bool gauss = std::holds_alternative<model::IidGaussian>(cfg.innovation.model);
            if (!heavy && !gauss) {
                throw ConfigError("moment-boundary-demo needs model.variant heavy-tail (or iid-gauss "
                                  "as the control)");
            }
            if (!(cfg.d < 0.0)) throw ConfigError("moment-boundary-demo needs frac.d < 0");
            if (heavy) {
                const double q0 = std::get<model::HeavyTailEta>(cfg.innovation.model).q0;
                const double boundary = 2.0 / (2.0 * cfg.d + 1.0);
                if (std::abs(q0 - boundary) > 1e-9 * boundary) {
                    throw ConfigError("moment-boundary-demo needs model.q0 = 2/(2d+1) = " +
                                      format_double(boundary));
                }
            }
            break;
        }
        default:
            if (cfg.p != 0) {
                throw ConfigError(to_string(cfg.experiment) +
                                  " works on the I(d) series itself; set frac.p = 0");
            }
            if (heavy) {
                throw ConfigError("the heavy-tail model is only valid in moment-boundary-demo");
            }
            break;
    }
    if (cfg.experiment != Experiment::MomentBoundaryDemo) {
        try {
            (void)InnovationModel(cfg.innovation);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("model: ") + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

nlohmann::json to_json(const InnovationSpec& spec) {
    nlohmann::json j;
    j["variant"] = variant_name(spec.model);
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, model::IidGaussian>) {
                j["sigma"] = m.sigma;
            } else if constexpr (std::is_same_v<M, model::IidStudentT>) {
                j["nu"] = m.nu;
                j["scale"] = m.scale;
            } else if constexpr (std::is_same_v<M, model::LinearMA>) {
                j["ma"] = m.b;
                j["eps"] = eps_json(m.eps);
            } else if constexpr (std::is_same_v<M, model::Garch11>) {
                j["omega"] = m.omega;
                j["alpha"] = m.alpha;
                j["beta"] = m.beta;
                j["eps"] = eps_json(m.eps);
            } else if constexpr (std::is_same_v<M, model::Bilinear>) {
                j["a"] = m.a;
                j["b"] = m.b;
                j["eps"] = eps_json(m.eps);
            } else if constexpr (std::is_same_v<M, model::ThresholdAr>) {
                j["a_pos"] = m.a_pos;
                j["a_neg"] = m.a_neg;
                j["eps"] = eps_json(m.eps);
            } else if constexpr (std::is_same_v<M, model::ArmaFilter>) {
                j["ar"] = m.ar;
                j["ma"] = m.ma;
                if (m.inner) j["inner"] = to_json(*m.inner);
            } else if constexpr (std::is_same_v<M, model::HeavyTailEta>) {
                j["q0"] = m.q0;
                j["v0"] = m.v0;
            }
        },
        spec.model);
    if (spec.q_moment) j["q"] = *spec.q_moment;
    if (spec.burn_in) j["burn_in"] = *spec.burn_in;
    return j;
}

}  // namespace fracinv
