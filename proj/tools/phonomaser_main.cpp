// Command-line runner: scenario execution, the verification suite, and
// scenario discovery. Exit codes: 0 success, 2 configuration error,
// 3 numeric or verification failure.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phonomaser/oracle.hpp"
#include "phonomaser/scenario.hpp"
#include "phonomaser/version.hpp"

namespace {

using namespace phonomaser;

int run_command(const std::string& target, const std::string& outdir, int cutoff_override,
                long long seed_override) {
    ScenarioSpec spec = load_scenario(target);
    if (cutoff_override > 0) spec.cutoff = cutoff_override;
    if (seed_override >= 0) spec.seed = static_cast<std::uint64_t>(seed_override);

    std::printf("running scenario '%s' (%s)\n", spec.name.c_str(), spec.description.c_str());
    ScenarioResult result = run_scenario(spec);
    const std::string dir = outdir.empty() ? ("out/" + spec.name) : outdir;
    const auto files = emit_outputs(result, dir);

    if (result.success_probability)
        std::printf("  P_S = %.4f\n", *result.success_probability);
    for (const CurveResult& c : result.curves) {
        std::printf("  %-12s n_ss(numeric) = %8.4f   n_ss(analytic) = %8.4f   g2(final) = %.4f",
                    c.spec.label.c_str(), c.n_ss_numeric, c.n_ss_analytic, c.g2_final_numeric);
        if (c.spins_to_95 >= 0) std::printf("   spins_to_95%% = %d", c.spins_to_95);
        std::printf("\n");
    }
    std::printf("  wrote %zu files to %s\n", files.size(), dir.c_str());
    return 0;
}

int verify_command(int dim) {
    int failures = 0;
    auto check = [&](const char* label, auto&& fn) {
        try {
            fn();
            std::printf("PASS  %s\n", label);
        } catch (const std::exception& e) {
            std::printf("FAIL  %s: %s\n", label, e.what());
            ++failures;
        }
    };

    check("factored evolution vs direct joint exponential (randomized sweep)", [&] {
        randomized_factorization_sweep(dim, 20190615, 20, 1e-8);
    });

    check("finite-K pump map converges to the rate-equation gain flow", [&] {
        MaserConfig cfg{GainChannel::heralded(SpinVector::plus(), SpinVector::down(), pi, 0.06),
                        1e-5, 0.1, 41.0 * pi};
        cfg.pump_p = 1e-3;
        const double t = 1500.0;
        const int K = static_cast<int>(std::round(cfg.injection_rate() * t / cfg.pump_p));
        DensityMatrix rho0 = thermal_state(0.1, 26);
        DensityMatrix binomial = pump_map_power(cfg, K, rho0);

        MaserConfig flow = cfg;
        flow.pump_p = 0.0;
        flow.kappa = 1e-14;
        TimeSeries series = integrate_ode(flow, rho0, t, std::vector<double>{t},
                                          IntegrationOptions{1e-10, 1e-12, true, true});
        const double a = detail::mean_phonons_raw(binomial.entries()) - 0.1;
        const double b = series.mean_phonons[0] - 0.1;
        if (std::abs(a - b) > 0.01 * std::abs(b))
            throw PrecisionError("pump map growth " + std::to_string(a) + " vs flow " + std::to_string(b));
    });

    check("Gaussian solution satisfies the phase-space transport equation", [&] {
        ClosedFormSolution sol{1e-3, 1e-5, 0.1, 1.0 / (41.0 * pi)};
        std::vector<double> ts;
        for (int i = 1; i <= 10; ++i) ts.push_back(i * 2e4);
        std::vector<Complex> betas;
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) betas.emplace_back(-1.0 + 0.22 * i, -1.0 + 0.22 * j);
        const double residual = fokker_planck_residual(sol, ts, betas);
        if (residual > 1e-8)
            throw PrecisionError("residual " + std::to_string(residual));
        if (fokker_planck_residual(sol, ts, betas, 1.01) <= 1e-3)
            throw PrecisionError("residual check lost its sensitivity");
    });

    check("generating-function g2 agrees with the closed expression", [&] {
        ClosedFormSolution sol{1e-3, 1e-5, 0.1, 1.0 / (41.0 * pi)};
        const double series_route = g2_series_oracle(sol, 1e12);
        const double closed = g2_analytic(sol, 1e12);
        if (std::abs(series_route - closed) > 1e-4)
            throw PrecisionError("series " + std::to_string(series_route) + " vs closed " +
                                 std::to_string(closed));
    });

    if (failures > 0) {
        std::printf("%d verification check(s) failed\n", failures);
        return 3;
    }
    std::printf("all verification checks passed\n");
    return 0;
}

int list_command() {
    for (const ScenarioSpec& s : builtin_scenarios())
        std::printf("%-8s %s\n", s.name.c_str(), s.description.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phonon maser simulator"};
    app.set_version_flag("--version", phonomaser::version_string());
    app.require_subcommand(1);

    std::string target, outdir;
    int cutoff = 0;
    long long seed = -1;
    CLI::App* run = app.add_subcommand("run", "run a built-in scenario or a config file");
    run->add_option("scenario", target, "scenario name or config path")->required();
    run->add_option("--out", outdir, "output directory (default out/<name>)");
    run->add_option("--cutoff", cutoff, "override the Fock cutoff");
    run->add_option("--seed", seed, "override the sampling seed");

    int dim = 40;
    CLI::App* verify = app.add_subcommand("verify", "run the brute-force validator suite");
    verify->add_option("--dim", dim, "oracle Fock dimension (<= 64)");

    CLI::App* list = app.add_subcommand("list-scenarios", "list built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return run_command(target, outdir, cutoff, seed);
        if (verify->parsed()) return verify_command(dim);
        if (list->parsed()) return list_command();
    } catch (const phonomaser::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
