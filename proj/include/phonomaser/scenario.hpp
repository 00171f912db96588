#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phonomaser/closed_form.hpp"
#include "phonomaser/dynamics.hpp"
#include "phonomaser/errors.hpp"
#include "phonomaser/fock.hpp"
#include "phonomaser/gain.hpp"
#include "phonomaser/observables.hpp"
#include "phonomaser/version.hpp"

namespace phonomaser {

enum class RunMode { Ode, DiscreteExpected, DiscreteSampled };

/// One labeled evolution run inside a scenario: a gain channel plus its own
/// damping rate (the multi-curve figures vary both).
struct CurveSpec {
    std::string label;
    GainChannel channel;
    double kappa;
};

/// Post state reaching a fixed success probability from the |+> pre state:
/// P_S = (1 + sin 2 theta) / 2.
inline SpinVector post_for_probability(double ps) {
    if (!(ps > 0.0) || !(ps < 1.0))
        throw InvalidParameter("post_for_probability: P_S must lie in (0,1)");
    return SpinVector::target_angle(0.5 * std::asin(2.0 * ps - 1.0));
}

/// Full scenario parameterization. Times in the file schema and in this
/// struct are expressed in units of tau, matching the way the parameter sets
/// are usually quoted; conversion to 1/omega_m happens when runs are built.
struct ScenarioSpec {
    std::string name;
    std::string description;

    double nbar0 = 0.1;
    double tau = pi;              // 1/omega_m
    double delta_t_tau = 41.0;    // units of tau
    int cutoff = 26;
    double pump_p = 0.0;

    RunMode run_mode = RunMode::Ode;
    double t_end_tau = 0.0;       // units of tau (ODE mode)
    int n_spins = 0;              // discrete modes
    std::uint64_t seed = 0;
    int samples = 400;

    std::vector<CurveSpec> curves;
    std::vector<std::string> outputs;

    std::vector<double> ps_grid;  // post-selection probability sweep (discrete)
    double sweep_kappa = 0.0;     // damping for the ps sweep; 0 = first curve's

    void validate() const {
        if (curves.empty()) throw ConfigError("scenario '" + name + "': no curves");
        if (run_mode == RunMode::Ode && !(t_end_tau > 0))
            throw ConfigError("scenario '" + name + "': ODE mode requires t_end > 0");
        if (run_mode != RunMode::Ode && n_spins < 1)
            throw ConfigError("scenario '" + name + "': discrete mode requires n_spins >= 1");
        static const std::vector<std::string> known = {
            "mean_phonons", "g2", "pn", "wigner", "linewidth_sweep", "pump_sweep", "ps_sweep"};
        for (const std::string& out : outputs)
            if (std::find(known.begin(), known.end(), out) == known.end())
                throw ConfigError("scenario '" + name + "': unknown output '" + out + "'");
        if (requested("ps_sweep") && ps_grid.empty())
            throw ConfigError("scenario '" + name + "': ps_sweep requested without ps_grid");
        for (const CurveSpec& c : curves)
            MaserConfig{c.channel, c.kappa, nbar0, delta_t_tau * tau, pump_p, cutoff}.validate();
    }

    bool requested(const std::string& out) const {
        return std::find(outputs.begin(), outputs.end(), out) != outputs.end();
    }

    MaserConfig config_for(const CurveSpec& curve) const {
        return {curve.channel, curve.kappa, nbar0, delta_t_tau * tau, pump_p, cutoff};
    }
};

struct CurveResult {
    CurveSpec spec;
    TimeSeries series;
    Matrix final_state;
    double drift_factor;        // per-kick first-moment gain relative to lambda |eta|
    double n_ss_analytic;       // steady mean of the effective closed-form solution
    double n_ss_numeric;        // final sample
    double g2_ss_analytic;
    double g2_final_numeric;
    double max_trace_drift;
    double min_eigenvalue;      // most negative eigenvalue over all samples
    int spins_to_95 = -1;       // discrete modes only
    ClosedFormSolution effective_solution;
};

struct PsSweepPoint {
    double ps;
    double n_ss;
    int spins_to_95;
    double n_ss_eigen_formula;
};

struct ScenarioResult {
    ScenarioSpec spec;
    std::vector<CurveResult> curves;
    std::optional<double> success_probability;              // fixed P_S of the first post-selecting curve
    std::vector<std::pair<double, double>> pump_sweep;      // (r^2, n_ss)
    std::vector<std::pair<double, double>> linewidth_sweep; // (r^2, linewidth)
    std::vector<PsSweepPoint> ps_sweep;
};

namespace detail {

/// Per-kick first-moment displacement of the channel on the thermal reference
/// state, normalized by the bare branch displacement lambda |eta|. This is
/// the amplification factor the channel applies to the drift (1 for a single
/// branch, the weak-value ratio for nearly orthogonal post-selection, 0 for
/// tracing over a balanced superposition).
inline double drift_factor(const GainChannel& channel, double delta_t, double nbar0, int dim) {
    const double bare = channel.lambda * std::abs(eta(channel.tau));
    if (bare == 0.0) return 0.0;
    const ChannelKernel kernel = ChannelKernel::stroboscopic(channel, delta_t, dim);
    const Matrix rho = thermal_state(nbar0, dim).entries();
    const Matrix kicked = kernel.apply(rho).rho_out;
    auto [b, bd, num] = ladder_operators(dim);
    const Complex mean_after = (b.entries() * kicked).trace();
    return std::abs(mean_after) / bare;
}

inline int spins_to_within_5_percent(const std::vector<double>& means) {
    if (means.empty()) return -1;
    const double steady = means.back();
    if (steady <= 0.0) return -1;
    for (size_t k = 0; k < means.size(); ++k) {
        bool settled = true;
        for (size_t j = k; j < means.size(); ++j)
            if (std::abs(means[j] - steady) > 0.05 * steady) {
                settled = false;
                break;
            }
        if (settled) return static_cast<int>(k);
    }
    return -1;
}

inline double min_eigenvalue_over(const std::vector<std::pair<double, DensityMatrix>>& snaps) {
    double worst = 0.0;
    for (const auto& [t, rho] : snaps) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(rho.entries(), Eigen::EigenvaluesOnly);
        worst = std::min(worst, es.eigenvalues().minCoeff());
    }
    return worst;
}

}  // namespace detail

/// Execute one curve of a scenario and collect its summary quantities.
inline CurveResult run_curve(const ScenarioSpec& spec, const CurveSpec& curve) {
    MaserConfig cfg = spec.config_for(curve);
    const DensityMatrix rho0 = thermal_state(spec.nbar0, spec.cutoff);

    TimeSeries series;
    if (spec.run_mode == RunMode::Ode) {
        IntegrationOptions opts;
        opts.keep_snapshots = true;
        series = integrate_ode(cfg, rho0, spec.t_end_tau * spec.tau,
                               default_output_grid(spec.t_end_tau * spec.tau, spec.samples), opts);
    } else {
        const DiscreteMode mode = (spec.run_mode == RunMode::DiscreteSampled)
                                      ? DiscreteMode::Sampled
                                      : DiscreteMode::Expected;
        series = run_discrete(cfg, rho0, spec.n_spins, mode, spec.seed, true);
    }

    const double g = detail::drift_factor(curve.channel, cfg.delta_t, spec.nbar0, spec.cutoff);
    const double lambda_eff = g * curve.channel.lambda * std::abs(eta(curve.channel.tau)) / 2.0;
    ClosedFormSolution sol(lambda_eff, curve.kappa, spec.nbar0, cfg.injection_rate());

    CurveResult out{curve,
                    std::move(series),
                    Matrix(),
                    g,
                    sol.steady_state_mean(),
                    0.0,
                    (spec.nbar0 > 0 || lambda_eff > 0) ? g2_analytic(sol, 1e16) : 0.0,
                    0.0,
                    0.0,
                    0.0,
                    -1,
                    sol};
    out.final_state = out.series.snapshots.back().second.entries();
    out.n_ss_numeric = out.series.mean_phonons.back();
    out.g2_final_numeric = out.series.g2_zero.back();
    out.max_trace_drift = *std::max_element(out.series.trace_drift.begin(), out.series.trace_drift.end());
    out.min_eigenvalue = detail::min_eigenvalue_over(out.series.snapshots);
    if (spec.run_mode != RunMode::Ode)
        out.spins_to_95 = detail::spins_to_within_5_percent(out.series.mean_phonons);
    return out;
}

/// Execute a scenario: all curves plus any requested parameter sweeps.
/// Sweep points run concurrently; results are assembled in deterministic order.
inline ScenarioResult run_scenario(const ScenarioSpec& spec) {
    spec.validate();
    ScenarioResult result;
    result.spec = spec;

    for (const CurveSpec& curve : spec.curves) {
        result.curves.push_back(run_curve(spec, curve));
        if (!result.success_probability && curve.channel.post)
            result.success_probability = curve.channel.success_probability();
    }

    const CurveSpec& first = spec.curves.front();
    if (spec.requested("pump_sweep") || spec.requested("linewidth_sweep")) {
        const ClosedFormSolution& base = result.curves.front().effective_solution;
        const double r0 = 1.0 / (spec.delta_t_tau * spec.tau);
        for (int i = 0; i <= 40; ++i) {
            const double r = r0 * 2.0 * i / 40.0;
            ClosedFormSolution sol(base.lambda, base.kappa, base.nbar0, r);
            if (spec.requested("pump_sweep"))
                result.pump_sweep.emplace_back(r * r, sol.steady_state_mean());
            if (spec.requested("linewidth_sweep") && r > 0)
                result.linewidth_sweep.emplace_back(r * r, linewidth_analytic(sol));
        }
    }

    if (spec.requested("ps_sweep")) {
        const double kappa = spec.sweep_kappa > 0 ? spec.sweep_kappa : first.kappa;
        const double lambda = first.channel.lambda;
        const int n_spins = spec.n_spins > 0 ? spec.n_spins : 120;
        // all sweep points share the relaxation channel
        const ThermalAttenuator relax(spec.cutoff, kappa, spec.nbar0, spec.delta_t_tau * spec.tau);
        auto run_point = [&](double ps) {
            GainChannel ch = GainChannel::heralded(SpinVector::plus(), post_for_probability(ps),
                                                   spec.tau, lambda);
            MaserConfig cfg{ch, kappa, spec.nbar0, spec.delta_t_tau * spec.tau, 0.0, spec.cutoff};
            TimeSeries series = run_discrete(cfg, thermal_state(spec.nbar0, spec.cutoff), n_spins,
                                             DiscreteMode::Expected, 0, false, &relax);
            const double r = cfg.injection_rate();
            PsSweepPoint point;
            point.ps = ps;
            point.n_ss = series.mean_phonons.back();
            point.spins_to_95 = detail::spins_to_within_5_percent(series.mean_phonons);
            point.n_ss_eigen_formula =
                spec.nbar0 + 16.0 * lambda * lambda * r * r / (kappa * kappa);
            return point;
        };
        std::vector<std::future<PsSweepPoint>> futures;
        for (double ps : spec.ps_grid)
            futures.push_back(std::async(std::launch::async, run_point, ps));
        for (auto& f : futures) result.ps_sweep.push_back(f.get());
    }
    return result;
}

// ---------------------------------------------------------------------------
// output emission
// ---------------------------------------------------------------------------

namespace detail {

/// 12 significant digits, C locale, no platform drift.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

class OutputTracker {
  public:
    explicit OutputTracker(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw ConfigError("cannot create output directory " + dir_.string());
    }
    std::ofstream open(const std::string& filename) {
        const std::filesystem::path p = dir_ / filename;
        std::ofstream out(p);
        if (!out) throw ConfigError("cannot open " + p.string() + " for writing");
        written_.push_back(p);
        return out;
    }
    const std::vector<std::filesystem::path>& written() const { return written_; }
    void remove_all_written() {
        for (const auto& p : written_) {
            std::error_code ec;
            std::filesystem::remove(p, ec);
        }
    }

  private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
};

inline const char* mode_name(RunMode m) {
    switch (m) {
        case RunMode::Ode: return "ode";
        case RunMode::DiscreteExpected: return "discrete-expected";
        case RunMode::DiscreteSampled: return "discrete-sampled";
    }
    return "?";
}

inline const char* channel_name(ChannelMode m) {
    switch (m) {
        case ChannelMode::HeraldedPostSelect: return "heralded";
        case ChannelMode::PostSelectWithFailures: return "failures";
        case ChannelMode::SpinTrace: return "trace";
    }
    return "?";
}

inline const char* weighting_name(FailureWeighting w) {
    switch (w) {
        case FailureWeighting::FixedGlobal: return "global";
        case FailureWeighting::FixedPerBranch: return "per-branch";
        case FailureWeighting::StateDependent: return "state-dependent";
    }
    return "?";
}

}  // namespace detail

/// Write the result bundle: one CSV per time series, the requested
/// distribution/Wigner/sweep tables, and summary.json. Partial outputs are
/// removed if any write fails. Returns the paths written.
inline std::vector<std::filesystem::path> emit_outputs(const ScenarioResult& result,
                                                       const std::filesystem::path& outdir) {
    using nlohmann::ordered_json;
    detail::OutputTracker tracker(outdir);
    const ScenarioSpec& spec = result.spec;
    try {
        for (const CurveResult& curve : result.curves) {
            const std::string filename = result.curves.size() == 1
                                             ? "timeseries.csv"
                                             : "timeseries_" + curve.spec.label + ".csv";
            std::ofstream out = tracker.open(filename);
            out << "time,mean_phonons_numeric,mean_phonons_analytic,g2_numeric,g2_analytic,trace_drift\n";
            for (size_t i = 0; i < curve.series.times.size(); ++i) {
                const double t = curve.series.times[i];
                out << detail::fmt(t) << ',' << detail::fmt(curve.series.mean_phonons[i]) << ','
                    << detail::fmt(mean_phonons_analytic(curve.effective_solution, t)) << ','
                    << detail::fmt(curve.series.g2_zero[i]) << ','
                    << detail::fmt(g2_analytic(curve.effective_solution, t)) << ','
                    << detail::fmt(curve.series.trace_drift[i]) << '\n';
            }
        }

        const CurveResult& first = result.curves.front();
        if (spec.requested("pn")) {
            auto write_pn = [&](const std::string& filename, const DensityMatrix& state, double t) {
                std::ofstream out = tracker.open(filename);
                out << "n,p_numeric,p_analytic,p_poisson\n";
                std::vector<double> p = number_distribution(state);
                const double mean = mean_phonons(state);
                for (int n = 0; n < spec.cutoff; ++n) {
                    const double poisson =
                        std::exp(-mean + n * std::log(mean) - log_factorial(n));
                    out << n << ',' << detail::fmt(p[n]) << ','
                        << detail::fmt(pn_analytic(first.effective_solution, t, n)) << ','
                        << detail::fmt(poisson) << '\n';
                }
            };
            write_pn("pn.csv", DensityMatrix(first.final_state), first.series.times.back());
            write_pn("pn_initial.csv", thermal_state(spec.nbar0, spec.cutoff), 0.0);
        }

        if (spec.requested("wigner")) {
            std::ofstream out = tracker.open("wigner.csv");
            out << "re_alpha,im_alpha,w\n";
            const double extent = std::max(3.0, std::sqrt(std::max(first.n_ss_numeric, 0.0)) + 2.2);
            const int npts = 41;
            std::vector<double> axis(npts);
            for (int i = 0; i < npts; ++i) axis[i] = -extent + 2.0 * extent * i / (npts - 1);
            const double reach = std::sqrt(static_cast<double>(spec.cutoff)) + 2.0 * extent;
            const int eval_dim = static_cast<int>(std::ceil(reach * reach)) + 8;
            const std::vector<double> w =
                wigner_grid(DensityMatrix(first.final_state), axis, axis, eval_dim);
            for (int j = 0; j < npts; ++j)
                for (int i = 0; i < npts; ++i)
                    out << detail::fmt(axis[i]) << ',' << detail::fmt(axis[j]) << ','
                        << detail::fmt(w[j * npts + i]) << '\n';
        }

        if (spec.requested("pump_sweep")) {
            std::ofstream out = tracker.open("pump_sweep.csv");
            out << "r_squared,n_ss\n";
            for (const auto& [r2, nss] : result.pump_sweep)
                out << detail::fmt(r2) << ',' << detail::fmt(nss) << '\n';
        }
        if (spec.requested("linewidth_sweep")) {
            std::ofstream out = tracker.open("linewidth_sweep.csv");
            out << "r_squared,linewidth\n";
            for (const auto& [r2, lw] : result.linewidth_sweep)
                out << detail::fmt(r2) << ',' << detail::fmt(lw) << '\n';
        }
        if (spec.requested("ps_sweep")) {
            std::ofstream out = tracker.open("ps_sweep.csv");
            out << "ps,n_ss,spins_to_95,n_ss_eigen_formula\n";
            for (const PsSweepPoint& p : result.ps_sweep)
                out << detail::fmt(p.ps) << ',' << detail::fmt(p.n_ss) << ',' << p.spins_to_95
                    << ',' << detail::fmt(p.n_ss_eigen_formula) << '\n';
        }

        // summary.json, stable key order
        ordered_json summary;
        summary["scenario"] = spec.name;
        summary["description"] = spec.description;
        ordered_json params;
        params["nbar0"] = spec.nbar0;
        params["tau"] = spec.tau;
        params["delta_t_over_tau"] = spec.delta_t_tau;
        params["cutoff"] = spec.cutoff;
        params["pump_p"] = spec.pump_p;
        params["run_mode"] = detail::mode_name(spec.run_mode);
        params["t_end_over_tau"] = spec.t_end_tau;
        params["n_spins"] = spec.n_spins;
        params["seed"] = spec.seed;
        params["samples"] = spec.samples;
        params["outputs"] = spec.outputs;
        ordered_json curve_params = ordered_json::array();
        for (const CurveSpec& c : spec.curves) {
            ordered_json j;
            j["label"] = c.label;
            j["channel"] = detail::channel_name(c.channel.mode);
            j["lambda"] = c.channel.lambda;
            j["kappa"] = c.kappa;
            j["tau"] = c.channel.tau;
            j["pre"] = {c.channel.pre.up_amplitude().real(), c.channel.pre.down_amplitude().real()};
            if (c.channel.post)
                j["post"] = {c.channel.post->up_amplitude().real(),
                             c.channel.post->down_amplitude().real()};
            if (c.channel.mode == ChannelMode::PostSelectWithFailures)
                j["failure_weighting"] = detail::weighting_name(c.channel.failure_weighting);
            curve_params.push_back(j);
        }
        params["curves"] = curve_params;
        summary["parameters"] = params;

        ordered_json results;
        if (result.success_probability) results["P_S"] = *result.success_probability;
        ordered_json curve_results = ordered_json::array();
        for (const CurveResult& c : result.curves) {
            ordered_json j;
            j["label"] = c.spec.label;
            j["n_ss_numeric"] = c.n_ss_numeric;
            j["n_ss_analytic"] = c.n_ss_analytic;
            j["g2_final_numeric"] = c.g2_final_numeric;
            j["g2_ss_analytic"] = c.g2_ss_analytic;
            j["drift_factor"] = c.drift_factor;
            j["linewidth_analytic"] = c.effective_solution.r > 0 && c.n_ss_analytic > 0
                                          ? linewidth_analytic(c.effective_solution)
                                          : 0.0;
            j["max_trace_drift"] = c.max_trace_drift;
            j["min_eigenvalue"] = c.min_eigenvalue;
            if (c.spins_to_95 >= 0) j["spins_to_95"] = c.spins_to_95;
            curve_results.push_back(j);
        }
        results["curves"] = curve_results;
        if (!result.ps_sweep.empty()) {
            ordered_json sweep = ordered_json::array();
            for (const PsSweepPoint& p : result.ps_sweep)
                sweep.push_back({{"ps", p.ps},
                                 {"n_ss", p.n_ss},
                                 {"spins_to_95", p.spins_to_95},
                                 {"n_ss_eigen_formula", p.n_ss_eigen_formula}});
            results["ps_sweep"] = sweep;
        }
        summary["results"] = results;

        ordered_json versions;
        versions["phonomaser"] = version_string();
        versions["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION);
        versions["compiler"] = __VERSION__;
        summary["versions"] = versions;

        std::vector<std::string> names;
        for (const auto& p : tracker.written()) names.push_back(p.filename().string());
        names.push_back("summary.json");
        summary["files"] = names;

        std::ofstream out = tracker.open("summary.json");
        out << summary.dump(2) << '\n';
    } catch (...) {
        tracker.remove_all_written();
        throw;
    }
    return tracker.written();
}

// ---------------------------------------------------------------------------
// built-in scenarios and the config file schema
// ---------------------------------------------------------------------------

inline std::vector<ScenarioSpec> builtin_scenarios() {
    std::vector<ScenarioSpec> all;

    {
        ScenarioSpec s;
        s.name = "fig2";
        s.description = "Heralded post-selection lasing: phonon growth, P(n), Wigner";
        s.t_end_tau = 240000;
        s.curves = {{"heralded",
                     GainChannel::heralded(SpinVector::plus(), SpinVector::down(), pi, 1e-3), 1e-5}};
        s.outputs = {"mean_phonons", "g2", "pn", "wigner", "pump_sweep"};
        all.push_back(s);
    }
    {
        ScenarioSpec s;
        s.name = "fig3";
        s.description = "Second-order coherence vs time plus the linewidth-pump curve";
        s.t_end_tau = 240000;
        s.curves = {{"heralded",
                     GainChannel::heralded(SpinVector::plus(), SpinVector::down(), pi, 1e-3), 1e-5}};
        s.outputs = {"mean_phonons", "g2", "linewidth_sweep"};
        all.push_back(s);
    }
    {
        ScenarioSpec s;
        s.name = "fig4";
        s.description = "Four measurement channels compared at kappa = 0.014 lambda";
        s.t_end_tau = 170000;
        const double kappa = 0.014e-3;
        const SpinVector pre(0.4, 0.6);
        const SpinVector post(0.9, -0.1);
        s.curves = {
            {"heralded", GainChannel::heralded(pre, post, pi, 1e-3), kappa},
            {"failures", GainChannel::with_failures(pre, post, pi, 1e-3), kappa},
            {"trace", GainChannel::spin_trace(pre, pi, 1e-3), kappa},
            {"eigenstate", GainChannel::spin_trace(SpinVector::up(), pi, 1e-3), kappa},
        };
        s.outputs = {"mean_phonons", "g2"};
        all.push_back(s);
    }
    {
        ScenarioSpec s;
        s.name = "fig5";
        s.description = "Discrete spin counting: spins to reach the lasing steady state";
        s.run_mode = RunMode::DiscreteExpected;
        s.delta_t_tau = 35.0;
        s.n_spins = 120;
        const double lambda = 0.06;
        s.curves = {
            {"ps008", GainChannel::heralded(SpinVector::plus(), post_for_probability(0.08), pi, lambda), 6e-3},
            {"ps021", GainChannel::heralded(SpinVector::plus(), post_for_probability(0.21), pi, lambda), 3.16e-3},
            {"ps050", GainChannel::heralded(SpinVector::plus(), post_for_probability(0.50), pi, lambda), 1.2e-3},
            {"eigen", GainChannel::spin_trace(SpinVector::up(), pi, lambda), 3.16e-3},
        };
        s.outputs = {"mean_phonons", "ps_sweep"};
        s.ps_grid = {0.05, 0.08, 0.12, 0.21, 0.30, 0.40, 0.50};
        s.sweep_kappa = 3.16e-3;
        all.push_back(s);
    }
    return all;
}

inline std::optional<ScenarioSpec> find_builtin(const std::string& name) {
    for (ScenarioSpec& s : builtin_scenarios())
        if (s.name == name) return s;
    return std::nullopt;
}

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& key, const std::string& value) {
    if (value == "pi") return pi;
    if (value == "inf") return std::numeric_limits<double>::infinity();
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has non-numeric value '" + value + "'");
    }
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

/// Parse the flat key = value scenario schema (one curve per file). Lines
/// starting with '#' are comments; keys mirror the MaserConfig field names
/// with times expressed in units of tau. See the bundled scenario files.
inline ScenarioSpec parse_config(std::istream& in, const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = detail::trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
        if (kv.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        kv[key] = value;
    }

    static const std::vector<std::string> known = {
        "name", "description", "channel", "failure_weighting", "pre_up", "pre_down",
        "post_up", "post_down", "post_ps", "lambda", "kappa", "nbar0", "tau", "delta_t",
        "t_end", "n_spins", "cutoff", "pump_p", "seed", "samples", "run_mode", "outputs",
        "ps_grid", "sweep_kappa"};
    for (const auto& [key, value] : kv)
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError(origin + ": unknown key '" + key + "'");

    auto get = [&](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    auto number = [&](const std::string& key, double fallback) {
        auto v = get(key);
        return v ? detail::parse_number(key, *v) : fallback;
    };

    ScenarioSpec spec;
    spec.name = get("name").value_or("custom");
    spec.description = get("description").value_or("user configuration");
    spec.nbar0 = number("nbar0", 0.1);
    spec.tau = number("tau", pi);
    spec.delta_t_tau = number("delta_t", 41.0);
    spec.cutoff = static_cast<int>(number("cutoff", 26));
    spec.pump_p = number("pump_p", 0.0);
    spec.t_end_tau = number("t_end", 0.0);
    spec.n_spins = static_cast<int>(number("n_spins", 0));
    spec.seed = static_cast<std::uint64_t>(number("seed", 0));
    spec.samples = static_cast<int>(number("samples", 400));
    spec.sweep_kappa = number("sweep_kappa", 0.0);

    const std::string mode = get("run_mode").value_or("ode");
    if (mode == "ode") spec.run_mode = RunMode::Ode;
    else if (mode == "discrete-expected") spec.run_mode = RunMode::DiscreteExpected;
    else if (mode == "discrete-sampled") spec.run_mode = RunMode::DiscreteSampled;
    else throw ConfigError(origin + ": unknown run_mode '" + mode + "'");

    const double lambda = number("lambda", 1e-3);
    const double kappa = number("kappa", 1e-5);
    const SpinVector pre(number("pre_up", 1.0), number("pre_down", 1.0));

    std::optional<SpinVector> post;
    if (get("post_ps")) {
        post = post_for_probability(number("post_ps", 0.0));
    } else if (get("post_up") || get("post_down")) {
        post = SpinVector(number("post_up", 0.0), number("post_down", 0.0));
    }

    FailureWeighting weighting = FailureWeighting::FixedGlobal;
    if (auto w = get("failure_weighting")) {
        if (*w == "global") weighting = FailureWeighting::FixedGlobal;
        else if (*w == "per-branch") weighting = FailureWeighting::FixedPerBranch;
        else if (*w == "state-dependent") weighting = FailureWeighting::StateDependent;
        else throw ConfigError(origin + ": unknown failure_weighting '" + *w + "'");
    }

    const std::string channel = get("channel").value_or("heralded");
    GainChannel ch = [&] {
        if (channel == "heralded") {
            if (!post) throw ConfigError(origin + ": heralded channel needs post_up/post_down or post_ps");
            return GainChannel::heralded(pre, *post, spec.tau, lambda);
        }
        if (channel == "failures") {
            if (!post) throw ConfigError(origin + ": failures channel needs post_up/post_down or post_ps");
            return GainChannel::with_failures(pre, *post, spec.tau, lambda, weighting);
        }
        if (channel == "trace") return GainChannel::spin_trace(pre, spec.tau, lambda);
        throw ConfigError(origin + ": unknown channel '" + channel + "'");
    }();
    spec.curves = {{spec.name, ch, kappa}};

    if (auto outs = get("outputs")) spec.outputs = detail::split_list(*outs);
    else spec.outputs = {"mean_phonons", "g2"};
    if (auto grid = get("ps_grid"))
        for (const std::string& item : detail::split_list(*grid))
            spec.ps_grid.push_back(detail::parse_number("ps_grid", item));

    spec.validate();
    return spec;
}

inline ScenarioSpec load_scenario(const std::string& name_or_path) {
    if (auto builtin = find_builtin(name_or_path)) return *builtin;
    std::ifstream in(name_or_path);
    if (!in)
        throw ConfigError("'" + name_or_path + "' is neither a built-in scenario nor a readable file");
    return parse_config(in, name_or_path);
}

}  // namespace phonomaser
