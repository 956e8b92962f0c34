#include "fracinv/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "fracinv/config.hpp"
#include "fracinv/errors.hpp"
#include "fracinv/fbm.hpp"
#include "fracinv/fracops.hpp"
#include "fracinv/harness.hpp"
#include "fracinv/memtests.hpp"
#include "fracinv/series_io.hpp"

namespace fracinv::cli {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kTablesEnv = "FRACINV_TABLES";

struct SimulateFlags {
    std::string model;
    std::vector<std::string> params;
    std::string model_file;
    double d = 0.0;
    int p = 0;
    std::string kind = "type1";
    std::size_t n = 0;
    std::uint64_t seed = 1;
    std::string out;
    std::string format;
    std::optional<double> eps_tail;
    double trunc_rel = 0.1;
    std::size_t trunc_cap = kDefaultTruncationCap;
};

struct TestFlags {
    std::string input;
    std::string stat;
    std::optional<std::size_t> l;
    double bandwidth_rate = 1.0 / 3.0;
    double d_null = 0.0;
    std::string tables_dir = "tables";
    bool build_missing = false;
    std::size_t table_m = 1024;
    std::size_t table_reps = 100'000;
    std::uint64_t table_seed = 20'060'101;
    std::size_t threads = 0;
    std::string model_file;
};

struct TablesFlags {
    std::string functional;
    std::string kind = "type1";
    double d = 0.0;
    std::size_t m = 1024;
    std::size_t reps = 100'000;
    std::uint64_t seed = 20'060'101;
    std::string out_dir = "tables";
    std::size_t threads = 0;
};

struct VerifyFlags {
    std::string config;
    std::string out_dir;
    std::optional<std::size_t> threads;
    std::string tables_dir;
};

struct ShowFlags {
    std::string input;
    std::string plot_data;
};

struct Flags {
    SimulateFlags simulate;
    TestFlags test;
    TablesFlags tables;
    VerifyFlags verify;
    ShowFlags show;
};

std::unique_ptr<CLI::App> build_app(Flags& f) {
    auto app = std::make_unique<CLI::App>(
        "fracinv: fractionally integrated processes, long-memory tests and Monte Carlo checks of "
        "their invariance principles");
    app->require_subcommand(1);

    auto* sim = app->add_subcommand("simulate", "Simulate a fractionally integrated series");
    auto& s = f.simulate;
    sim->add_option("--model", s.model,
                    "Innovation model: iid-gauss, iid-t, linear-ma, garch11, bilinear, threshold-ar, "
                    "arma, const1 (default iid-gauss)");
    sim->add_option("--param", s.params,
                    "Model parameter key=value (repeatable), e.g. alpha=0.1 or ma=1,0.5");
    sim->add_option("--model-file", s.model_file,
                    "File of key = value model parameters (keys with or without 'model.')")
        ->check(CLI::ExistingFile);
    sim->add_option("--d", s.d, "Memory parameter d in (-1/2, 1/2)")->capture_default_str();
    sim->add_option("--p", s.p, "Integer integration order p >= 0")->capture_default_str();
    sim->add_option("--kind", s.kind, "Process type: type1 (infinite past) or type2 (Y_0 = 0)")
        ->capture_default_str();
    sim->add_option("--n", s.n, "Number of observations")->required();
    sim->add_option("--seed", s.seed, "Random seed")->capture_default_str();
    sim->add_option("--out", s.out, "Output series file (.csv, or .bin/.f64 for binary)")
        ->required();
    sim->add_option("--format", s.format, "Force output format: csv or bin");
    sim->add_option("--eps-tail", s.eps_tail,
                    "Type I pre-sample tolerance on the sd of the dropped tail (default: "
                    "trunc-rel * kappa1 * n^(d-1/2))");
    sim->add_option("--trunc-rel", s.trunc_rel,
                    "Relative tail tolerance used when --eps-tail is absent")
        ->capture_default_str();
    sim->add_option("--trunc-cap", s.trunc_cap, "Largest allowed Type I pre-sample length")
        ->capture_default_str();

    auto* test = app->add_subcommand("test", "Run the R/S or KPSS long-memory test on a series");
    auto& t = f.test;
    test->add_option("--input", t.input, "Input series file (CSV or binary)")->required();
    test->add_option("--stat", t.stat, "Statistic: rs or kpss")->required();
    test->add_option("--l", t.l, "Bartlett bandwidth (default floor(n^rate), at least 1)");
    test->add_option("--bandwidth-rate", t.bandwidth_rate,
                     "Exponent of the default bandwidth rule")
        ->capture_default_str();
    test->add_option("--d-null", t.d_null, "Memory parameter assumed under the null")
        ->capture_default_str();
    test->add_option("--tables-dir", t.tables_dir, "Quantile table directory")
        ->envname(kTablesEnv)
        ->capture_default_str();
    test->add_flag("--build-missing", t.build_missing,
                   "Build and save the quantile table when none matches");
    test->add_option("--table-m", t.table_m, "Grid size of the reference table")
        ->capture_default_str();
    test->add_option("--table-reps", t.table_reps, "Replications when building a table")
        ->capture_default_str();
    test->add_option("--table-seed", t.table_seed, "Seed when building a table")
        ->capture_default_str();
    test->add_option("--threads", t.threads, "Worker threads for table building (0: all cores)")
        ->capture_default_str();
    test->add_option("--model-file", t.model_file,
                     "Innovation model file; adds the moment-compatibility flag to the report")
        ->check(CLI::ExistingFile);

    auto* tables = app->add_subcommand("tables", "Build a Monte Carlo quantile table");
    auto& q = f.tables;
    tables->add_option("--functional", q.functional,
                       "range-of-bridge, sup-of-bridge, int-sq-bridge or terminal")
        ->required();
    tables->add_option("--kind", q.kind, "fBm type: type1 or type2")->capture_default_str();
    tables->add_option("--d", q.d, "Memory parameter d in (-1/2, 1/2)")->capture_default_str();
    tables->add_option("--m", q.m, "Grid size (power of two for type1)")->capture_default_str();
    tables->add_option("--reps", q.reps, "Monte Carlo replications (>= 1000)")
        ->capture_default_str();
    tables->add_option("--seed", q.seed, "Random seed")->capture_default_str();
    tables->add_option("--out-dir", q.out_dir, "Directory receiving the table")
        ->envname(kTablesEnv)
        ->capture_default_str();
    tables->add_option("--threads", q.threads, "Worker threads (0: all cores)")
        ->capture_default_str();

    auto* verify = app->add_subcommand("verify", "Run a Monte Carlo experiment from a config file");
    auto& v = f.verify;
    verify->add_option("--config", v.config, "Experiment config file")->required();
    verify->add_option("--out-dir", v.out_dir, "Output directory (overrides out_dir in the config)");
    verify->add_option("--threads", v.threads, "Worker threads (0: all cores)");
    verify->add_option("--tables-dir", v.tables_dir,
                       "Quantile table directory (overrides tables_dir in the config)")
        ->envname(kTablesEnv);

    auto* show = app->add_subcommand("show", "Summarize a report, table or series file");
    show->add_option("--input", f.show.input, "Report JSON, quantile table or series file")
        ->required();
    show->add_option("--plot-data", f.show.plot_data, "Write plot-ready CSV to this path");
    return app;
}

InnovationSpec model_from_flags(const SimulateFlags& s) {
    std::map<std::string, std::string> params;
    if (!s.model_file.empty()) {
        std::ifstream in(s.model_file);
        std::ostringstream text;
        text << in.rdbuf();
        for (const auto& [k, val] : parse_key_values(text.str())) {
            params[k.starts_with("model.") ? k.substr(6) : k] = val;
        }
    }
    if (!s.model.empty()) params["variant"] = s.model;
    for (const auto& p : s.params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("--param expects key=value, got '" + p + "'");
        }
        params[p.substr(0, eq)] = p.substr(eq + 1);
    }
    return innovation_from_params(params);
}

InnovationSpec model_from_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream text;
    text << in.rdbuf();
    std::map<std::string, std::string> params;
    for (const auto& [k, val] : parse_key_values(text.str())) {
        params[k.starts_with("model.") ? k.substr(6) : k] = val;
    }
    return innovation_from_params(params);
}

void require_d(double d) {
    if (!(d > -0.5 && d < 0.5)) {
        throw DomainError("--d must lie in the open interval (-1/2, 1/2), got " + format_double(d));
    }
}

nlohmann::json q_json(double q) {
    return std::isfinite(q) ? nlohmann::json(q) : nlohmann::json("inf");
}

int cmd_simulate(const SimulateFlags& s, std::ostream& out) {
    require_d(s.d);
    if (s.p < 0) throw DomainError("--p must be >= 0");
    if (s.n == 0) throw DomainError("--n must be >= 1");
    const ProcessKind kind = kind_from_string(s.kind);
    SeriesFormat format = format_from_path(s.out);
    if (s.format == "csv") {
        format = SeriesFormat::Csv;
    } else if (s.format == "bin") {
        format = SeriesFormat::Binary;
    } else if (!s.format.empty()) {
        throw DomainError("--format must be csv or bin");
    }
    const InnovationModel model(model_from_flags(s));
    const FracSpec spec(s.d, s.p, kind);
    double eps_tail = 0.0;
    if (kind == ProcessKind::TypeI) {
        eps_tail = s.eps_tail ? *s.eps_tail
                              : s.trunc_rel * kappa1(s.d, model.zeta_norm()) *
                                    std::pow(static_cast<double>(s.n), s.d - 0.5);
        if (!(eps_tail > 0.0)) throw DomainError("--eps-tail must be > 0");
    }
    Type1Result result;
    try {
        result = integrate_higher(model, spec, s.n, kind == ProcessKind::TypeI ? eps_tail : 1.0,
                                  s.seed, s.trunc_cap);
    } catch (const DomainError& e) {
        throw Error(std::string("generation failed: ") + e.what());
    }
    write_series(s.out, result.values, format);
    nlohmann::json meta = {{"format_version", kFormatVersion},
                           {"out", s.out},
                           {"n", s.n},
                           {"seed", s.seed},
                           {"d", s.d},
                           {"p", s.p},
                           {"kind", to_string(kind)},
                           {"model", to_json(model.spec())},
                           {"q_moment", q_json(model.q_moment())},
                           {"burn_in", model.burn_in()},
                           {"zeta_norm", model.zeta_norm()},
                           {"zeta_source", to_string(model.zeta_source())}};
    if (kind == ProcessKind::TypeI) {
        meta["truncation"] = result.truncation;
        meta["eps_tail"] = eps_tail;
    } else {
        meta["truncation"] = nullptr;
    }
    out << meta.dump(2) << '\n';
    return kExitOk;
}

int cmd_test(const TestFlags& t, std::ostream& out) {
    const Statistic stat = statistic_from_string(t.stat);
    require_d(t.d_null);
    TestOptions opts;
    opts.l = t.l;
    opts.bandwidth_rate = t.bandwidth_rate;
    opts.d_null = t.d_null;
    opts.table_dir = t.tables_dir;
    opts.build_missing = t.build_missing;
    opts.table_m = t.table_m;
    opts.table_reps = t.table_reps;
    opts.table_seed = t.table_seed;
    opts.threads = t.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : t.threads;
    if (!t.model_file.empty()) opts.innovation = model_from_file(t.model_file);
    const auto x = read_series(t.input);
    if (opts.l && *opts.l >= x.size()) {
        throw DomainError("--l must be smaller than the series length " + std::to_string(x.size()));
    }
    out << to_json(long_memory_test(x, stat, opts)).dump(2) << '\n';
    return kExitOk;
}

int cmd_tables(const TablesFlags& q, std::ostream& out) {
    const Functional functional = functional_from_string(q.functional);
    const ProcessKind kind = kind_from_string(q.kind);
    require_d(q.d);
    const std::size_t threads =
        q.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : q.threads;
    const auto table = build_quantile_table(functional, kind, q.d, q.m, q.reps, q.seed, threads);
    const auto path = save_table(table, q.out_dir);
    out << nlohmann::json{{"format_version", kFormatVersion},
                          {"file", path.string()},
                          {"id", table.id()},
                          {"functional", to_string(functional)},
                          {"kind", to_string(kind)},
                          {"d", q.d},
                          {"m", q.m},
                          {"reps", q.reps},
                          {"seed", q.seed},
                          {"mean", table.mean()},
                          {"median", table.quantile(0.5)}}
               .dump(2)
        << '\n';
    return kExitOk;
}

int cmd_verify(const VerifyFlags& v, std::ostream& out) {
    const auto cfg = load_config(v.config);
    RunOptions opts;
    opts.threads = v.threads;
    if (!v.tables_dir.empty()) opts.tables_dir = v.tables_dir;
    const auto out_dir = v.out_dir.empty() ? cfg.out_dir : std::filesystem::path(v.out_dir);
    const auto start = std::chrono::steady_clock::now();
    const auto report = run_experiment(cfg, opts);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_report(report, out_dir, wall, effective_threads(cfg, opts));
    for (const auto& verdict : report.verdicts) {
        out << (verdict.passed ? "PASS " : "FAIL ") << verdict.name;
        if (verdict.n) out << " n=" << *verdict.n;
        out << " value=" << format_double(verdict.value)
            << " target=" << format_double(verdict.target)
            << " tolerance=" << format_double(verdict.tolerance) << " [" << verdict.tolerance_key
            << "] " << verdict.rule << '\n';
    }
    out << (report.passed() ? "ALL PASSED" : "VERIFICATION FAILED") << " ("
        << report.verdicts.size() << " checks, report in " << out_dir.string() << ")\n";
    return report.passed() ? kExitOk : kExitVerdict;
}

std::string read_prefix(const std::string& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    std::string buf(count, '\0');
    in.read(buf.data(), static_cast<std::streamsize>(count));
    buf.resize(static_cast<std::size_t>(in.gcount()));
    return buf;
}

std::ofstream open_plot(const std::string& path) {
    std::ofstream plot(path, std::ios::trunc);
    if (!plot) throw FormatError("cannot write '" + path + "'");
    return plot;
}

void show_table(const std::string& path, const std::string& plot_path, std::ostream& out) {
    const auto table = read_table(path);
    out << "quantile table " << table.id() << '\n'
        << "  functional " << to_string(table.functional) << '\n'
        << "  kind       " << to_string(table.kind) << '\n'
        << "  d          " << format_double(table.d) << '\n'
        << "  m          " << table.m << '\n'
        << "  reps       " << table.reps << '\n'
        << "  seed       " << table.seed << '\n'
        << "  min        " << format_double(table.samples.front()) << '\n'
        << "  median     " << format_double(table.quantile(0.5)) << '\n'
        << "  max        " << format_double(table.samples.back()) << '\n'
        << "  mean       " << format_double(table.mean()) << '\n';
    if (!plot_path.empty()) {
        auto plot = open_plot(plot_path);
        plot << "p,value\n";
        for (int i = 0; i <= 100; ++i) {
            const double p = i / 100.0;
            plot << format_double(p) << ',' << format_double(table.quantile(p)) << '\n';
        }
    }
}

void show_report(const nlohmann::json& j, const std::string& plot_path, std::ostream& out) {
    if (j.contains("verdicts")) {
        out << "experiment " << j.value("experiment", std::string("?")) << '\n';
        for (const auto& row : j.at("per_n")) {
            out << "  n=" << row.at("n").get<std::size_t>();
            for (const auto& [k, val] : row.items()) {
                if (k != "n" && val.is_number()) out << "  " << k << '=' << val.dump();
            }
            out << '\n';
        }
        out << "verdicts:\n";
        for (const auto& v : j.at("verdicts")) {
            out << "  " << (v.at("passed").get<bool>() ? "PASS " : "FAIL ")
                << v.at("name").get<std::string>();
            if (!v.at("n").is_null()) out << " n=" << v.at("n").get<std::size_t>();
            out << " value=" << v.at("value").dump() << " target=" << v.at("target").dump()
                << " tolerance=" << v.at("tolerance").dump() << " ["
                << v.at("tolerance_key").get<std::string>() << "]\n";
        }
        if (!plot_path.empty()) {
            auto plot = open_plot(plot_path);
            plot << "n,metric,value\n";
            for (const auto& row : j.at("per_n")) {
                for (const auto& [k, val] : row.items()) {
                    if (k != "n" && val.is_number()) {
                        plot << row.at("n").get<std::size_t>() << ',' << k << ','
                             << format_double(val.get<double>()) << '\n';
                    }
                }
            }
        }
    } else if (j.contains("statistic")) {
        out << "test " << j.at("statistic").get<std::string>() << ": raw "
            << j.at("raw_value").dump() << ", normalized " << j.at("normalized_value").dump()
            << " at d = " << j.at("d_assumed").dump() << ", l = " << j.at("l").dump()
            << ", n = " << j.at("n").dump() << ", p-value " << j.at("p_value").dump() << '\n';
    } else {
        throw FormatError("JSON file is neither an experiment report nor a test report");
    }
}

void show_series(const std::string& path, const std::string& plot_path, std::ostream& out) {
    const auto x = read_series(path);
    double lo = x.front(), hi = x.front(), sum = 0.0;
    for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    out << "series " << path << ": n = " << x.size() << ", min " << format_double(lo) << ", max "
        << format_double(hi) << ", mean " << format_double(sum / static_cast<double>(x.size()))
        << '\n';
    if (!plot_path.empty()) {
        auto plot = open_plot(plot_path);
        plot << "t,value\n";
        for (std::size_t i = 0; i < x.size(); ++i) {
            plot << format_double(static_cast<double>(i + 1) / static_cast<double>(x.size())) << ','
                 << format_double(x[i]) << '\n';
        }
    }
}

int cmd_show(const ShowFlags& s, std::ostream& out) {
    const std::string head = read_prefix(s.input, 64);
    if (head.starts_with("FRACINV-QTABLE")) {
        show_table(s.input, s.plot_data, out);
    } else if (head.find_first_not_of(" \t\r\n") != std::string::npos &&
               head[head.find_first_not_of(" \t\r\n")] == '{') {
        std::ifstream in(s.input);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("report: not valid JSON (") + e.what() + ")");
        }
        try {
            show_report(j, s.plot_data, out);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("report: missing or mistyped field (") + e.what() + ")");
        }
    } else {
        show_series(s.input, s.plot_data, out);
    }
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Flags flags;
    auto app = build_app(flags);
    try {
        app->parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e_stream;
        const int code = app->exit(e, o, e_stream);
        out << o.str();
        err << e_stream.str();
        return code == 0 ? kExitOk : kExitUsage;
    }
    try {
        if (app->got_subcommand("simulate")) return cmd_simulate(flags.simulate, out);
        if (app->got_subcommand("test")) return cmd_test(flags.test, out);
        if (app->got_subcommand("tables")) return cmd_tables(flags.tables, out);
        if (app->got_subcommand("verify")) return cmd_verify(flags.verify, out);
        if (app->got_subcommand("show")) return cmd_show(flags.show, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

std::vector<std::string> undocumented_options() {
    Flags flags;
    auto app = build_app(flags);
    std::vector<std::string> missing;
    for (const auto* sub : app->get_subcommands([](const CLI::App*) { return true; })) {
        for (const auto* opt : sub->get_options()) {
            if (opt->get_name() == "--help" || opt->get_name() == "-h,--help") continue;
            if (opt->get_description().empty()) missing.push_back(sub->get_name() + " " + opt->get_name());
        }
    }
    return missing;
}

std::vector<std::string> subcommands() {
    Flags flags;
    auto app = build_app(flags);
    std::vector<std::string> names;
    for (const auto* sub : app->get_subcommands([](const CLI::App*) { return true; })) {
        names.push_back(sub->get_name());
    }
    return names;
}

}  // namespace fracinv::cli
