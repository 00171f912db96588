#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phonomaser/scenario.hpp"

using namespace phonomaser;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ScenarioSpec tiny_discrete_spec() {
    ScenarioSpec spec;
    spec.name = "tiny";
    spec.description = "fast test scenario";
    spec.run_mode = RunMode::DiscreteSampled;
    spec.n_spins = 12;
    spec.seed = 7;
    spec.cutoff = 12;
    spec.delta_t_tau = 35.0;
    spec.curves = {{"tiny",
                    GainChannel::heralded(SpinVector::plus(), post_for_probability(0.2), pi, 0.05),
                    5e-3}};
    spec.outputs = {"mean_phonons", "g2", "pn"};
    return spec;
}
}  // namespace

TEST_CASE("post state from a target success probability") {
    for (double ps : {0.05, 0.08, 0.21, 0.5, 0.9}) {
        SpinVector post = post_for_probability(ps);
        REQUIRE_THAT(spin_overlap_probability(SpinVector::plus(), post), WithinAbs(ps, 1e-12));
    }
    REQUIRE_THROWS_AS(post_for_probability(0.0), InvalidParameter);
    REQUIRE_THROWS_AS(post_for_probability(1.5), InvalidParameter);
}

TEST_CASE("config parsing") {
    SECTION("a full file resolves every field") {
        std::istringstream in(
            "# comment line\n"
            "name = demo\n"
            "channel = failures\n"
            "failure_weighting = per-branch\n"
            "pre_up = 0.4\npre_down = 0.6\n"
            "post_up = 0.9\npost_down = -0.1\n"
            "lambda = 0.002\nkappa = 2e-5\nnbar0 = 0.15\n"
            "tau = pi\ndelta_t = 41   # in units of tau\n"
            "run_mode = ode\nt_end = 1000\ncutoff = 20\n"
            "outputs = mean_phonons, g2\n");
        ScenarioSpec spec = parse_config(in, "demo.cfg");
        REQUIRE(spec.name == "demo");
        REQUIRE(spec.curves.size() == 1);
        const GainChannel& ch = spec.curves[0].channel;
        REQUIRE(ch.mode == ChannelMode::PostSelectWithFailures);
        REQUIRE(ch.failure_weighting == FailureWeighting::FixedPerBranch);
        REQUIRE_THAT(ch.lambda, WithinAbs(0.002, 1e-15));
        REQUIRE_THAT(spec.curves[0].kappa, WithinAbs(2e-5, 1e-18));
        REQUIRE_THAT(ch.success_probability(), WithinAbs(0.09 / (0.52 * 0.82), 1e-12));
        REQUIRE(spec.cutoff == 20);
    }
    SECTION("rejects malformed input") {
        auto parse = [](const std::string& text) {
            std::istringstream in(text);
            return parse_config(in, "bad.cfg");
        };
        REQUIRE_THROWS_AS(parse("nonsense line without equals\n"), ConfigError);
        REQUIRE_THROWS_AS(parse("unknown_key = 3\nt_end = 10\n"), ConfigError);
        REQUIRE_THROWS_AS(parse("lambda = abc\nt_end = 10\n"), ConfigError);
        REQUIRE_THROWS_AS(parse("lambda = 0.1\nlambda = 0.2\nt_end = 10\n"), ConfigError);
        REQUIRE_THROWS_AS(parse("channel = heralded\nt_end = 10\n"), ConfigError);  // no post state
        REQUIRE_THROWS_AS(parse("channel = trace\nt_end = 10\noutputs = bogus\n"), ConfigError);
        REQUIRE_THROWS_AS(parse("channel = trace\n"), ConfigError);  // ode mode without t_end
    }
    SECTION("built-in names resolve, bad names do not") {
        REQUIRE(find_builtin("fig2").has_value());
        REQUIRE(find_builtin("fig9") == std::nullopt);
        REQUIRE_THROWS_AS(load_scenario("no/such/file.cfg"), ConfigError);
    }
    SECTION("bundled scenario files parse to the built-in parameters") {
        const fs::path bundled = fs::path(PHONOMASER_SOURCE_DIR) / "scenarios" / "fig2.cfg";
        ScenarioSpec spec = load_scenario(bundled.string());
        ScenarioSpec builtin = *find_builtin("fig2");
        REQUIRE_THAT(spec.curves[0].kappa, WithinAbs(builtin.curves[0].kappa, 1e-18));
        REQUIRE_THAT(spec.curves[0].channel.lambda,
                     WithinAbs(builtin.curves[0].channel.lambda, 1e-18));
        REQUIRE(spec.t_end_tau == builtin.t_end_tau);
        REQUIRE(spec.run_mode == RunMode::Ode);
    }
}

TEST_CASE("scenario execution and output emission") {
    const fs::path outdir = fs::temp_directory_path() / "phonomaser_test_out";
    fs::remove_all(outdir);

    ScenarioSpec spec = tiny_discrete_spec();
    ScenarioResult result = run_scenario(spec);

    SECTION("result carries the fixed success probability and curve metrics") {
        REQUIRE(result.success_probability.has_value());
        REQUIRE_THAT(*result.success_probability, WithinAbs(0.2, 1e-12));
        REQUIRE(result.curves.size() == 1);
        REQUIRE(result.curves[0].series.times.size() == 13);  // initial + 12 spins
        REQUIRE(result.curves[0].min_eigenvalue >= -1e-9);
        REQUIRE(result.curves[0].max_trace_drift < 1e-10);
    }

    SECTION("emitted files: schema, determinism, initial-state distribution") {
        auto files = emit_outputs(result, outdir);
        REQUIRE(fs::exists(outdir / "timeseries.csv"));
        REQUIRE(fs::exists(outdir / "pn.csv"));
        REQUIRE(fs::exists(outdir / "pn_initial.csv"));
        REQUIRE(fs::exists(outdir / "summary.json"));

        // header schema
        std::string ts = slurp(outdir / "timeseries.csv");
        REQUIRE(ts.rfind("time,mean_phonons_numeric,mean_phonons_analytic,g2_numeric,g2_analytic,trace_drift\n", 0) == 0);
        REQUIRE(ts.find('\r') == std::string::npos);  // LF endings

        // initial thermal occupancy: p_0 = 1/1.1
        std::string pn0 = slurp(outdir / "pn_initial.csv");
        std::istringstream lines(pn0);
        std::string header, row0;
        std::getline(lines, header);
        std::getline(lines, row0);
        REQUIRE(header == "n,p_numeric,p_analytic,p_poisson");
        const double p0 = std::stod(row0.substr(2));
        REQUIRE_THAT(p0, WithinAbs(0.9091, 5e-4));

        // byte-identical rerun with the same seed
        const fs::path outdir2 = fs::temp_directory_path() / "phonomaser_test_out2";
        fs::remove_all(outdir2);
        ScenarioResult again = run_scenario(spec);
        emit_outputs(again, outdir2);
        for (const char* f : {"timeseries.csv", "pn.csv", "pn_initial.csv", "summary.json"})
            REQUIRE(slurp(outdir / f) == slurp(outdir2 / f));

        // summary structure
        nlohmann::json summary = nlohmann::json::parse(slurp(outdir / "summary.json"));
        REQUIRE(summary["scenario"] == "tiny");
        REQUIRE(summary["parameters"]["seed"] == 7);
        REQUIRE(summary["parameters"]["curves"][0]["channel"] == "heralded");
        REQUIRE_THAT(summary["results"]["P_S"].get<double>(), WithinAbs(0.2, 1e-12));
        REQUIRE(summary["results"]["curves"][0].contains("n_ss_numeric"));
        REQUIRE(summary["versions"].contains("phonomaser"));
        fs::remove_all(outdir2);
    }

    SECTION("empty outputs list still produces a summary") {
        ScenarioSpec bare = tiny_discrete_spec();
        bare.outputs = {};
        ScenarioResult r = run_scenario(bare);
        const fs::path dir = fs::temp_directory_path() / "phonomaser_test_bare";
        fs::remove_all(dir);
        auto files = emit_outputs(r, dir);
        REQUIRE(fs::exists(dir / "summary.json"));
        REQUIRE(!fs::exists(dir / "pn.csv"));
        fs::remove_all(dir);
    }

    fs::remove_all(outdir);
}

TEST_CASE("four-channel scenario reports the quoted success probability") {
    ScenarioSpec spec = *find_builtin("fig4");
    spec.t_end_tau = 500;  // shortened horizon; P_S depends only on the channel
    spec.samples = 10;
    ScenarioResult result = run_scenario(spec);
    REQUIRE(result.success_probability.has_value());
    REQUIRE_THAT(*result.success_probability, WithinAbs(0.21, 0.005));
    REQUIRE(result.curves.size() == 4);
}

TEST_CASE("scenario validation catches inconsistent requests") {
    ScenarioSpec spec = tiny_discrete_spec();
    spec.outputs = {"ps_sweep"};
    spec.ps_grid = {};
    REQUIRE_THROWS_AS(spec.validate(), ConfigError);

    ScenarioSpec ode = tiny_discrete_spec();
    ode.run_mode = RunMode::Ode;
    ode.t_end_tau = 0.0;
    REQUIRE_THROWS_AS(ode.validate(), ConfigError);
}
