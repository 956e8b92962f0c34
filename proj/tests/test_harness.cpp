#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "fracinv/config.hpp"
#include "fracinv/errors.hpp"
#include "fracinv/harness.hpp"
#include "fracinv/ks.hpp"

using namespace fracinv;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fracinv_harness_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

ExperimentConfig small_config(const std::string& body, const std::filesystem::path& tables) {
    return parse_config(body + "\ntables_dir = " + tables.string() +
                        "\ntables.m = 128\ntables.reps = 1000\n");
}

const Verdict* find_verdict(const McReport& r, const std::string& name) {
    for (const auto& v : r.verdicts) {
        if (v.name == name) return &v;
    }
    return nullptr;
}

}  // namespace

TEST_CASE("ks_distance examples") {
    const std::vector<double> a{0.3, 0.1, 0.7, 0.7};
    CHECK(ks_distance(a, a) == 0.0);
    const auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
    CHECK(ks_distance(std::vector<double>{0.5}, uniform) == doctest::Approx(0.5));
    CHECK(ks_distance(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5}) == 1.0);
    CHECK(ks_distance(std::vector<double>{1, 2}, std::vector<double>{2, 3}) ==
          doctest::Approx(0.5));
    CHECK_THROWS_AS((void)ks_distance(std::vector<double>{}, a), EmptyInputError);
    CHECK_THROWS_AS((void)ks_distance(std::vector<double>{}, uniform), EmptyInputError);
}

TEST_CASE("ks_pvalue") {
    CHECK(ks_pvalue(0.0, 100) == doctest::Approx(1.0));
    CHECK(ks_pvalue(1.0, 100) < 1e-12);
    // Large-sample 5% critical value 1.358 / √n.
    CHECK(ks_pvalue(1.358 / std::sqrt(1e6), 1e6) == doctest::Approx(0.05).epsilon(0.02));
    CHECK(standard_normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(standard_normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
}

TEST_CASE("ks noise floor shrinks with size") {
    std::vector<double> ref;
    for (int i = 0; i < 5000; ++i) ref.push_back(std::sin(i * 0.7));
    const double small = ks_noise_floor(ref, 100, 1);
    const double large = ks_noise_floor(ref, 2000, 1);
    CHECK(small > large);
    CHECK(large > 0.0);
    CHECK(ks_noise_floor(ref, 100, 1) == small);
}

TEST_CASE("fit_slope, median and boundary_sigma") {
    const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
    const auto fit = fit_slope(x, y);
    CHECK(fit.slope == doctest::Approx(2.0));
    CHECK(fit.intercept == doctest::Approx(1.0));
    CHECK(fit.std_error == doctest::Approx(0.0));
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 2, 3}) == 2.5);
    CHECK(boundary_sigma(0.0, 256, false) == doctest::Approx(16.0));
    CHECK(boundary_sigma(-0.25, 256, true) ==
          doctest::Approx(const_A(-0.25) * std::pow(256.0, 0.25) / std::log(256.0) / 0.25));
}

TEST_CASE("config parsing") {
    const auto cfg = parse_config(
        "# comment\nexperiment = lrv-scaling\nmodel.variant = garch11\nmodel.omega = 0.2\n"
        "model.alpha = 0.1\nmodel.beta = 0.7\nfrac.d = 0.2\nn_list = 2^10, 4096\nreps = 100\n"
        "seed = 9\nbandwidth.rate = 0.25\n");
    CHECK(cfg.experiment == Experiment::LrvScaling);
    CHECK(cfg.n_list == std::vector<std::size_t>{1024, 4096});
    CHECK(cfg.bandwidth_rate == 0.25);
    const auto* g = std::get_if<model::Garch11>(&cfg.innovation.model);
    REQUIRE(g != nullptr);
    CHECK(g->omega == 0.2);
    CHECK(cfg.raw.at("seed") == "9");

    const auto arma = parse_config(
        "experiment = invariance\nmodel.variant = arma\nmodel.ar = 0.5\nmodel.ma = 1, 0.3\n"
        "model.inner.variant = garch11\nfrac.d = 0.1\nn_list = 512\nreps = 100\n");
    const auto* a = std::get_if<model::ArmaFilter>(&arma.innovation.model);
    REQUIRE(a != nullptr);
    CHECK(a->ma == std::vector<double>{1.0, 0.3});
    CHECK(std::holds_alternative<model::Garch11>(a->inner->model));
}

TEST_CASE("config errors") {
    const std::string base = "experiment = invariance\nfrac.d = 0.1\nn_list = 512\n";
    CHECK_NOTHROW(parse_config(base + "reps = 100\n"));
    CHECK_THROWS_AS(parse_config(base + "reps = 10\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(base + "reps = 100\nunknown_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(base + "reps = 100\nreps = 200\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(base + "reps = 100\nseed = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = invariance\nfrac.d = 0.5\nn_list = 512\nreps = 100"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = invariance\nfrac.d = 0\nn_list = 512, 256\nreps = 100"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = nonsense\nfrac.d = 0\nn_list = 512\nreps = 100"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(base + "reps = 100\nmodel.variant = heavy-tail\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(base + "reps = 100\nmodel.variant = garch11\nmodel.alpha = 0.6\n"
                                        "model.beta = 0.6\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = corollary-scaling\nfrac.d = 0\nfrac.p = 1\n"
                                 "n_list = 512, 1024\nreps = 100"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = moment-boundary-demo\nmodel.variant = heavy-tail\n"
                                 "model.q0 = 3\nfrac.d = -0.25\nn_list = 256, 4096\nreps = 100"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(base + "reps = 100\ncheck_n = 1024\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.cfg"), ConfigError);
}

TEST_CASE("invariance run is thread independent and seed isolated") {
    const auto tables = scratch_dir("inv_tables");
    const std::string body =
        "experiment = invariance\nfrac.d = 0.2\nfrac.kind = type1\nn_list = 256, 512\n"
        "seed = 5\nfunctionals = terminal, range-of-bridge\ntol.ks_floor_factor = 3\n";
    const auto cfg = small_config(body + "reps = 150\n", tables);
    const auto one = run_experiment(cfg, {1, {}});
    const auto three = run_experiment(cfg, {3, {}});
    CHECK(one.to_json().dump() == three.to_json().dump());
    REQUIRE(find_verdict(one, "terminal_variance") != nullptr);
    CHECK(find_verdict(one, "terminal_variance")->tolerance_key == "tol.terminal_var");
    CHECK(find_verdict(one, "range-of-bridge_ks") != nullptr);
    for (const auto& v : one.verdicts) CHECK_FALSE(v.tolerance_key.empty());

    const auto more = run_experiment(small_config(body + "reps = 200\n", tables), {2, {}});
    std::size_t matched = 0;
    for (const auto& row : one.rows) {
        for (const auto& other : more.rows) {
            if (other.n == row.n && other.replication == row.replication &&
                other.metric == row.metric) {
                CHECK(other.value == row.value);
                ++matched;
            }
        }
    }
    CHECK(matched == one.rows.size());
    std::filesystem::remove_all(tables);
}

TEST_CASE("reports are written") {
    const auto tables = scratch_dir("rep_tables");
    const auto out = scratch_dir("rep_out");
    const auto cfg = small_config(
        "experiment = invariance\nfrac.d = 0\nfrac.kind = type2\nn_list = 128\nreps = 100\n"
        "functionals = terminal\n",
        tables);
    const auto report = run_experiment(cfg);
    write_report(report, out, 1.5, 1);
    for (auto name : {"report.json", "summary.csv", "replications.csv", "run_meta.json"}) {
        CHECK(std::filesystem::exists(out / name));
    }
    std::ifstream csv(out / "replications.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "n,replication,metric,value");
    const auto j = report.to_json();
    CHECK(j.contains("verdicts"));
    CHECK(j.contains("per_n"));
    CHECK_FALSE(j.at("config").contains("out_dir"));
    std::filesystem::remove_all(tables);
    std::filesystem::remove_all(out);
}

TEST_CASE("lrv scaling run") {
    const auto tables = scratch_dir("lrv_tables");
    const auto cfg = small_config(
        "experiment = lrv-scaling\nfrac.d = 0\nn_list = 1024, 4096\nreps = 100\nseed = 3\n", tables);
    const auto report = run_experiment(cfg);
    REQUIRE(find_verdict(report, "lrv_median") != nullptr);
    CHECK(find_verdict(report, "lrv_median")->passed);
    CHECK(find_verdict(report, "lrv_error_shrinks") != nullptr);
    std::filesystem::remove_all(tables);
}

TEST_CASE("stat convergence run") {
    const auto tables = scratch_dir("stat_tables");
    const auto cfg = small_config(
        "experiment = stat-convergence\nfrac.d = 0\nn_list = 256, 1024\nreps = 200\nseed = 4\n",
        tables);
    const auto report = run_experiment(cfg);
    CHECK(find_verdict(report, "kpss_mean") != nullptr);
    CHECK(find_verdict(report, "rs_ks_shrinks") != nullptr);
    CHECK(find_verdict(report, "kpss_ks_shrinks") != nullptr);
    CHECK(report.metric(1024, "kpss_mean") > 0.0);
    std::filesystem::remove_all(tables);
}

TEST_CASE("corollary scaling run") {
    const auto tables = scratch_dir("cor_tables");
    const auto cfg = small_config(
        "experiment = corollary-scaling\nfrac.d = 0\nfrac.p = 1\nfrac.kind = type2\n"
        "n_list = 256, 1024, 4096\nreps = 100\nseed = 6\n",
        tables);
    const auto report = run_experiment(cfg);
    const auto* sum = find_verdict(report, "slope_sum");
    REQUIRE(sum != nullptr);
    CHECK(sum->target == doctest::Approx(1.5));
    CHECK(sum->passed);
    std::filesystem::remove_all(tables);
}

TEST_CASE("moment boundary demo run") {
    const auto tables = scratch_dir("demo_tables");
    const auto heavy = small_config(
        "experiment = moment-boundary-demo\nmodel.variant = heavy-tail\nmodel.q0 = 4\n"
        "frac.d = -0.25\nn_list = 2^8, 2^14\nreps = 100\nseed = 8\n",
        tables);
    const auto report = run_experiment(heavy);
    REQUIRE(find_verdict(report, "median_ratio_increasing") != nullptr);
    CHECK(report.passed());
    const auto gauss = small_config(
        "experiment = moment-boundary-demo\nmodel.variant = iid-gauss\nfrac.d = -0.25\n"
        "n_list = 2^8, 2^14\nreps = 100\nseed = 8\n",
        tables);
    const auto control = run_experiment(gauss);
    REQUIRE(find_verdict(control, "median_ratio_decreasing") != nullptr);
    CHECK(control.passed());
    std::filesystem::remove_all(tables);
}
