#pragma once

// Experiment harness: JSON experiment specs, deterministic summary reports,
// and per-path CSV output.  Reports carry a hash over the canonical spec echo
// plus results (scheduling fields excluded), so identical spec + seed yield
// identical hashes for any worker count.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mbm/conformal.hpp"
#include "mbm/coupling.hpp"
#include "mbm/graph_sim.hpp"
#include "mbm/reduced.hpp"
#include "mbm/surfaces.hpp"

namespace mbm {

using nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct ReducedSpec {
    ReducedParams params;
    std::size_t paths = 1000;
    std::size_t horizon_s = 1000;
    double delta = 0.01;
    double level = 0.0;
    double rho0 = 0.0;
    double bessel_r0 = 1.0;
    double bessel_horizon = 10.0;
    std::size_t bessel_paths = 1000;
};

struct ExperimentSpec {
    std::string experiment = "hitting";
    std::string surface = "flat_half_plane";
    std::map<std::string, double> surface_params;
    Vec2 start{1.0, 0.0};
    double dt = 1e-3;
    double d_chart = 1e-3;
    double horizon = 1.0;
    std::size_t paths = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string functional = "one";
    std::string csv;         // per-path CSV output path; empty: skip
    std::size_t grid = 1000;  // coupling-verify resolution
    RegionParams region;      // calibrate-regions parameters
    ReducedSpec reduced;
};

inline const std::set<std::string>& experiment_kinds() {
    static const std::set<std::string> kinds{"simulate",        "hitting",
                                             "harmonic",        "cross-check",
                                             "coupling-verify", "calibrate-regions",
                                             "reduced"};
    return kinds;
}

inline json to_json(const ExperimentSpec& s) {
    json j;
    j["experiment"] = s.experiment;
    j["surface"] = s.surface;
    if (!s.surface_params.empty()) j["surface_params"] = s.surface_params;
    j["start"] = {s.start.x, s.start.y};
    j["dt"] = s.dt;
    j["d_chart"] = s.d_chart;
    j["horizon"] = s.horizon;
    j["paths"] = s.paths;
    j["seed"] = s.seed;
    j["workers"] = s.workers;
    j["functional"] = s.functional;
    if (!s.csv.empty()) j["csv"] = s.csv;
    if (s.experiment == "coupling-verify") j["grid"] = s.grid;
    if (s.experiment == "calibrate-regions")
        j["region"] = {{"c1", s.region.c1},
                       {"c2", s.region.c2},
                       {"delta3", s.region.delta3},
                       {"tol_gc", s.region.tol_gc},
                       {"cos_tol_s4", s.region.cos_tol_s4}};
    if (s.experiment == "reduced") {
        const auto& r = s.reduced;
        j["reduced"] = {{"eps", r.params.eps},
                        {"c3p", r.params.c3p},
                        {"c4p", r.params.c4p},
                        {"kappa3", r.params.kappa3},
                        {"noise_corr", r.params.noise_corr},
                        {"ds", r.params.ds},
                        {"eps_constant", r.params.eps_constant},
                        {"paths", r.paths},
                        {"horizon_s", r.horizon_s},
                        {"delta", r.delta},
                        {"level", r.level},
                        {"rho0", r.rho0},
                        {"bessel_r0", r.bessel_r0},
                        {"bessel_horizon", r.bessel_horizon},
                        {"bessel_paths", r.bessel_paths}};
    }
    return j;
}

inline ExperimentSpec spec_from_json(const json& j) {
    static const std::set<std::string> known{
        "experiment", "surface", "surface_params", "start",   "dt",  "d_chart", "horizon",
        "paths",      "seed",    "workers",        "functional", "csv", "grid",    "region",
        "reduced"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("experiment spec: unknown field '" + it.key() + "'");
    ExperimentSpec s;
    s.experiment = j.value("experiment", s.experiment);
    for (auto& c : s.experiment)
        if (c == '_') c = '-';  // canonical kind names are hyphenated
    if (!experiment_kinds().count(s.experiment))
        throw std::invalid_argument("experiment spec: unknown experiment '" + s.experiment + "'");
    s.surface = j.value("surface", s.surface);
    if (j.contains("surface_params"))
        s.surface_params = j.at("surface_params").get<std::map<std::string, double>>();
    if (j.contains("start")) {
        auto v = j.at("start").get<std::vector<double>>();
        if (v.size() != 2) throw std::invalid_argument("experiment spec: start must be [x, y]");
        s.start = {v[0], v[1]};
    }
    s.dt = j.value("dt", s.dt);
    s.d_chart = j.value("d_chart", s.d_chart);
    s.horizon = j.value("horizon", s.horizon);
    s.paths = j.value("paths", s.paths);
    s.seed = j.value("seed", s.seed);
    s.workers = j.value("workers", s.workers);
    s.functional = j.value("functional", s.functional);
    s.csv = j.value("csv", s.csv);
    if (!(s.dt > 0.0 && s.d_chart > 0.0 && s.horizon > 0.0))
        throw std::invalid_argument("experiment spec: dt, d_chart, horizon must be positive");
    if (s.paths == 0) throw std::invalid_argument("experiment spec: paths must be positive");
    s.grid = j.value("grid", s.grid);
    if (j.contains("region")) {
        const json& r = j.at("region");
        s.region.c1 = r.value("c1", s.region.c1);
        s.region.c2 = r.value("c2", s.region.c2);
        s.region.delta3 = r.value("delta3", s.region.delta3);
        s.region.tol_gc = r.value("tol_gc", s.region.tol_gc);
        s.region.cos_tol_s4 = r.value("cos_tol_s4", s.region.cos_tol_s4);
        s.region.validate();
    }
    if (j.contains("reduced")) {
        const json& r = j.at("reduced");
        auto& d = s.reduced;
        d.params.eps = r.value("eps", d.params.eps);
        d.params.c3p = r.value("c3p", d.params.c3p);
        d.params.c4p = r.value("c4p", d.params.c4p);
        d.params.kappa3 = r.value("kappa3", d.params.kappa3);
        d.params.noise_corr = r.value("noise_corr", d.params.noise_corr);
        d.params.ds = r.value("ds", d.params.ds);
        d.params.eps_constant = r.value("eps_constant", d.params.eps_constant);
        d.paths = r.value("paths", d.paths);
        d.horizon_s = r.value("horizon_s", d.horizon_s);
        d.delta = r.value("delta", d.delta);
        d.level = r.value("level", d.level);
        d.rho0 = r.value("rho0", d.rho0);
        d.bessel_r0 = r.value("bessel_r0", d.bessel_r0);
        d.bessel_horizon = r.value("bessel_horizon", d.bessel_horizon);
        d.bessel_paths = r.value("bessel_paths", d.bessel_paths);
        d.params.validate();
    }
    return s;
}

inline ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open spec file: " + path);
    json j;
    in >> j;
    return spec_from_json(j);
}

// Boundary functionals addressable from specs.
inline double apply_functional(const std::string& name, Vec2 exit) {
    if (name == "one") return 1.0;
    if (name == "indicator_y_positive") return exit.y > 0.0 ? 1.0 : 0.0;
    if (name == "indicator_angle_upper") {
        double ang = std::atan2(exit.y, exit.x);
        return (ang >= 0.0 && ang < std::numbers::pi) ? 1.0 : 0.0;
    }
    throw std::invalid_argument("unknown boundary functional: " + name);
}

// One row per path: censored hitting times are written as ">=horizon", never
// as a bare number.
inline void write_paths_csv(const std::string& path, const EnsembleResult& ens) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open CSV output: " + path);
    std::fputs("path_id,hit,sigma,clock,exit_x,exit_y\n", f);
    for (std::size_t i = 0; i < ens.hit.size(); ++i) {
        if (ens.hit[i])
            std::fprintf(f, "%zu,1,%.17g,%.17g,%.17g,%.17g\n", i, ens.sigma[i], ens.clock[i],
                         ens.exit[i].x, ens.exit[i].y);
        else
            std::fprintf(f, "%zu,0,>=%.17g,%.17g,%.17g,%.17g\n", i, ens.horizon, ens.clock[i],
                         ens.exit[i].x, ens.exit[i].y);
    }
    std::fclose(f);
}

inline json interval_json(const Interval& iv) { return json{iv.lo, iv.hi}; }

inline std::size_t count_nonfinite(const EnsembleResult& ens) {
    std::size_t bad = 0;
    for (std::size_t i = 0; i < ens.hit.size(); ++i)
        if (!std::isfinite(ens.sigma[i]) || !std::isfinite(ens.clock[i]) ||
            !std::isfinite(ens.exit[i].x) || !std::isfinite(ens.exit[i].y))
            ++bad;
    return bad;
}

// Great-circle (f, g) pair driven by the reduced psi dynamics; theta - phi
// wanders as an independent Brownian motion.  Tabulated once per run so the
// schedule is a pure lookup.
inline FgSchedule make_driven_fg_schedule(const ReducedParams& pr, double horizon_tau, double ds,
                                          std::uint64_t seed) {
    auto n = static_cast<std::size_t>(std::llround(horizon_tau / ds)) + 1;
    auto table = std::make_shared<std::vector<std::pair<double, double>>>();
    table->reserve(n);
    PathRng rng(seed, 0xf9);
    double theta = std::numbers::pi / 4.0, phi = std::numbers::pi / 4.0;
    ReducedParams drv = pr;
    drv.ds = ds;
    ReducedState st{0.0, theta + phi, 0.0};
    double sqrt_ds = std::sqrt(ds);
    for (std::size_t k = 0; k < n; ++k) {
        auto branches = fg(theta, phi);
        const auto& br = branches.front();
        double f = std::max(br.f, br.g), g = std::min(br.f, br.g);  // sandwich needs g <= f
        table->push_back({f, g});
        ReducedState next = step_reduced(st, drv, rng);
        double dpsi = next.psi - st.psi;
        double dchi = sqrt_ds * rng.normal();
        theta += 0.5 * (dpsi + dchi);
        phi += 0.5 * (dpsi - dchi);
        st = next;
    }
    double step = ds;
    return [table, step](double tau) {
        auto idx = static_cast<std::size_t>(tau / step);
        if (idx >= table->size()) idx = table->size() - 1;
        return (*table)[idx];
    };
}

inline json run_ensemble_experiment(const ExperimentSpec& spec) {
    CatalogSurface surf = make_surface(spec.surface, spec.surface_params);
    SimOptions opt{spec.dt, spec.horizon, 0};
    EnsembleResult ens = std::visit(
        [&](const auto& s) {
            return simulate_ensemble(s, spec.start, opt, spec.paths, spec.seed, spec.workers,
                                     kGraphStreamSalt);
        },
        surf);
    if (!spec.csv.empty()) write_paths_csv(spec.csv, ens);

    json res;
    res["paths"] = spec.paths;
    res["hits"] = ens.hits();
    res["censored_mass"] = ens.censored_mass();
    res["min_normal_z"] = ens.min_normal_z;
    res["flagged_nonfinite"] = count_nonfinite(ens);
    ClockSummary cs = curvature_clock_summary(ens.clock);
    res["clock"] = {{"q50", cs.q50}, {"q90", cs.q90}, {"q99", cs.q99}, {"max", cs.max}};
    if (spec.experiment == "hitting" || spec.experiment == "simulate") {
        HittingEstimate est = hitting_estimate_from(ens);
        res["hitting_probability"] = est.p_hat;
        res["wilson_95"] = interval_json(est.ci);
    }
    if (spec.experiment == "harmonic") {
        std::vector<double> vals;
        for (std::size_t i = 0; i < ens.hit.size(); ++i)
            if (ens.hit[i]) vals.push_back(apply_functional(spec.functional, ens.exit[i]));
        if (vals.empty()) throw std::runtime_error("harmonic: no path reached the boundary");
        res["functional"] = spec.functional;
        res["estimate"] = mean(vals);
        res["std_error"] = vals.size() > 1 ? std_error(vals) : 0.0;
        res["non_hit_mass"] = ens.censored_mass();
    }
    return res;
}

inline json run_cross_check_experiment(const ExperimentSpec& spec) {
    CatalogSurface surf = make_surface(spec.surface, spec.surface_params);
    AnyChart chart = chart_for(spec.surface);
    CrossCheck cc = std::visit(
        [&](const auto& s, const auto& c) {
            return cross_check(s, c, spec.start, spec.horizon, spec.paths, spec.dt, spec.d_chart,
                               spec.seed, spec.workers);
        },
        surf, chart);
    json res;
    res["sigma_ks"] = {{"d", cc.sigma_ks.d}, {"p_value", cc.sigma_ks.p_value}};
    res["clock_ks"] = {{"d", cc.clock_ks.d}, {"p_value", cc.clock_ks.p_value}};
    res["graph"] = {{"hitting_probability", cc.graph_est.p_hat},
                    {"censored_mass", cc.graph_est.censored_mass},
                    {"wilson_95", interval_json(cc.graph_est.ci)}};
    res["chart"] = {{"hitting_probability", cc.chart_est.p_hat},
                    {"censored_mass", cc.chart_est.censored_mass},
                    {"wilson_95", interval_json(cc.chart_est.ci)}};
    res["flagged_nonfinite"] = 0;
    return res;
}

inline json run_reduced_experiment(const ExperimentSpec& spec) {
    const ReducedSpec& r = spec.reduced;
    ReducedRunResult run = run_reduced(r.params, r.paths, r.horizon_s, spec.seed, spec.workers,
                                       r.level, r.rho0);
    BernoulliStats bern = bernoulli_stats(run, r.delta);
    DecayFit fit = linear_decay_fit(run, 0.99, 200, spec.seed + 1);

    std::vector<double> exits;
    std::size_t never = 0;
    for (const auto& p : run.paths)
        if (p.last_exit >= 0.0)
            exits.push_back(p.last_exit);
        else
            ++never;
    json res;
    res["gamma_hat"] = bern.gamma_hat;
    res["delta"] = r.delta;
    res["slope"] = fit.slope;
    res["slope_ci_99"] = interval_json(fit.ci);
    if (!exits.empty())
        res["last_exit"] = {{"q50", quantile(exits, 0.5)},
                            {"q99", quantile(exits, 0.99)},
                            {"max", quantile(exits, 1.0)},
                            {"never_above_level", never}};
    SublinearityReport sub = run.horizon >= 1000 ? sublinearity_check(run) : SublinearityReport{};
    if (run.horizon >= 1000)
        res["sublinearity"] = {{"frac_decreasing", sub.frac_decreasing},
                               {"frac_small_at_end", sub.frac_small_at_end},
                               {"max_ratio_end", sub.max_ratio_end}};
    FgSchedule sched = make_driven_fg_schedule(r.params, r.bessel_horizon, r.params.ds, spec.seed);
    BesselReport bes = bessel_domination(r.bessel_r0, sched, r.bessel_horizon, r.params.ds,
                                         r.bessel_paths, spec.seed + 2, spec.workers);
    res["bessel"] = {{"max_r_minus_R", bes.max_r_minus_big_r},
                     {"max_lower_gap", bes.max_lower_gap},
                     {"truncated_paths", bes.truncated_paths},
                     {"slack", 5.0 * std::sqrt(r.params.ds)}};
    res["bessel_max_violation"] =
        std::max(bes.max_r_minus_big_r, bes.max_lower_gap) - 5.0 * std::sqrt(r.params.ds);
    double band = 0.0;
    for (const auto& p : run.paths) band += p.band_fraction;
    res["band_fraction"] = band / static_cast<double>(run.paths.size());
    res["flagged_nonfinite"] = 0;
    return res;
}

inline json run_coupling_verify_experiment(const ExperimentSpec& spec) {
    FgGridReport rep = verify_fg_grid(spec.grid);
    return json{{"grid", spec.grid},
                {"checked", rep.count},
                {"min_f_minus_g", rep.min_f_minus_g},
                {"max_identity_gap", rep.max_identity_gap},
                {"flagged_nonfinite", 0}};
}

inline json run_calibration_experiment(const ExperimentSpec& spec) {
    NestingGaps gaps = nesting_gaps(spec.region);
    CalibrationResult cal = calibrate_constants(spec.region, spec.paths, spec.seed);
    return json{{"c3", cal.c3},
                {"c4", cal.c4},
                {"n_s3", cal.n_s3},
                {"n_s1_not_s3", cal.n_s1_not_s3},
                {"attempts", cal.attempts},
                {"nesting_ok", gaps.all_positive()},
                {"flagged_nonfinite", 0}};
}

// Full report: canonical spec echo, deterministic results, content hash, and
// volatile run info kept outside the hash.
inline json run_experiment(const ExperimentSpec& spec, double elapsed_seconds = 0.0) {
    json results;
    if (spec.experiment == "cross-check")
        results = run_cross_check_experiment(spec);
    else if (spec.experiment == "reduced")
        results = run_reduced_experiment(spec);
    else if (spec.experiment == "coupling-verify")
        results = run_coupling_verify_experiment(spec);
    else if (spec.experiment == "calibrate-regions")
        results = run_calibration_experiment(spec);
    else
        results = run_ensemble_experiment(spec);

    json spec_echo = to_json(spec);
    json hashed = spec_echo;
    hashed.erase("workers");  // scheduling must not affect the content hash
    json report;
    report["spec"] = spec_echo;
    report["results"] = results;
    report["report_hash"] = hex64(fnv1a64(hashed.dump() + results.dump()));
    report["run_info"] = {{"version", kVersion},
                          {"workers", spec.workers},
                          {"elapsed_seconds", elapsed_seconds}};
    return report;
}

}  // namespace mbm
