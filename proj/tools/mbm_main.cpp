// Command line front end: runs JSON experiment specs, lists the surface
// catalog, scans the coupled-arc inequality grid, and calibrates region
// constants.  Exit codes: 0 success, 2 invalid configuration, 3 numerical
// failure.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "mbm/harness.hpp"

namespace {

int cmd_surfaces() {
    for (const auto& name : mbm::catalog_names()) std::cout << name << "\n";
    return 0;
}

int cmd_run(const std::string& spec_path, const std::string& out_path,
            const std::string& forced_kind = "") {
    mbm::ExperimentSpec spec = mbm::load_spec(spec_path);
    if (!forced_kind.empty() && spec.experiment != forced_kind)
        throw std::invalid_argument("spec experiment kind is '" + spec.experiment +
                                    "', expected '" + forced_kind + "'");
    auto t0 = std::chrono::steady_clock::now();
    nlohmann::json report = mbm::run_experiment(spec);
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
    report["run_info"]["elapsed_seconds"] = elapsed.count();

    std::cout << report.dump(2) << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot open report output: " + out_path);
        out << report.dump(2) << "\n";
    }
    auto flagged = report["results"].value("flagged_nonfinite", std::size_t{0});
    if (flagged * 100 > spec.paths) {
        std::cerr << "error: " << flagged << " of " << spec.paths
                  << " paths produced nonfinite results\n";
        return 3;
    }
    return 0;
}

int cmd_coupling_verify(std::size_t grid, double tol) {
    mbm::FgGridReport rep = mbm::verify_fg_grid(grid);
    bool ok = rep.min_f_minus_g >= -tol && rep.max_identity_gap <= tol;
    nlohmann::json j{{"grid", grid},
                     {"checked", rep.count},
                     {"min_f_minus_g", rep.min_f_minus_g},
                     {"max_identity_gap", rep.max_identity_gap},
                     {"tolerance", tol},
                     {"ok", ok}};
    std::cout << j.dump(2) << "\n";
    return ok ? 0 : 3;
}

int cmd_calibrate(std::size_t n, std::uint64_t seed, const mbm::RegionParams& params) {
    mbm::NestingGaps gaps = mbm::nesting_gaps(params);
    mbm::CalibrationResult cal = mbm::calibrate_constants(params, n, seed);
    double c3_analytic = 2.0 * (1.0 - std::cos(params.c1));
    double c4_analytic = 2.0 * std::sin(2.0 * params.delta3) * (1.0 - std::cos(params.c1));
    nlohmann::json j{{"samples_per_region", n},
                     {"seed", seed},
                     {"c1", params.c1},
                     {"c2", params.c2},
                     {"delta3", params.delta3},
                     {"c3", cal.c3},
                     {"c4", cal.c4},
                     {"c3_analytic_floor", c3_analytic},
                     {"c4_analytic_floor", c4_analytic},
                     {"n_s3", cal.n_s3},
                     {"n_s1_not_s3", cal.n_s1_not_s3},
                     {"attempts", cal.attempts},
                     {"nesting_gaps",
                      {{"s4_cos_within_s3", gaps.s4_cos_within_s3},
                       {"s4_coplanarity_within_s3", gaps.s4_coplanarity_within_s3},
                       {"s4_separation_within_s1", gaps.s4_separation_within_s1},
                       {"s3_cos_within_s2", gaps.s3_cos_within_s2},
                       {"s2_cos_within_range", gaps.s2_cos_within_range}}},
                     {"nesting_ok", gaps.all_positive()}};
    std::cout << j.dump(2) << "\n";
    return (cal.c3 > 0.0 && cal.c4 > 0.0 && gaps.all_positive()) ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo laboratory for Brownian motion on minimal graphs"};
    app.require_subcommand(1);

    auto* surfaces = app.add_subcommand("surfaces", "Surface catalog commands");
    surfaces->add_subcommand("list", "List the surface catalog");
    surfaces->require_subcommand(0, 1);

    std::string spec_path, out_path;
    auto* run = app.add_subcommand("run", "Run a JSON experiment spec");
    run->add_option("spec", spec_path, "experiment spec JSON file")->required();
    run->add_option("--out", out_path, "also write the report JSON to this file");

    std::string red_spec, red_out;
    auto* red = app.add_subcommand("reduced", "Run a reduced-dynamics spec");
    red->add_option("spec", red_spec, "experiment spec JSON file (kind: reduced)")->required();
    red->add_option("--out", red_out, "also write the report JSON to this file");

    std::string cc_spec, cc_out;
    auto* cc = app.add_subcommand("cross-check", "Run a graph-versus-chart comparison spec");
    cc->add_option("spec", cc_spec, "experiment spec JSON file (kind: cross-check)")->required();
    cc->add_option("--out", cc_out, "also write the report JSON to this file");

    std::size_t grid = 1000;
    double tol = 1e-12;
    auto* verify = app.add_subcommand("coupling-verify",
                                      "Scan the coupled-arc drift inequality over a grid");
    verify->add_option("--grid", grid, "grid resolution per axis");
    verify->add_option("--tol", tol, "violation tolerance");

    std::size_t cal_n = 20000;
    std::uint64_t cal_seed = 1;
    mbm::RegionParams params;
    auto* cal = app.add_subcommand("calibrate-regions",
                                   "Estimate the region drift constants by rejection sampling");
    cal->add_option("--n", cal_n, "accepted samples per region");
    cal->add_option("--seed", cal_seed, "sampling seed");
    cal->add_option("--c1", params.c1, "normal separation bound");
    cal->add_option("--c2", params.c2, "|cos(theta+phi)| bound");
    cal->add_option("--delta3", params.delta3, "inner band size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("surfaces")) return cmd_surfaces();
        if (app.got_subcommand("run")) return cmd_run(spec_path, out_path);
        if (app.got_subcommand("reduced")) return cmd_run(red_spec, red_out, "reduced");
        if (app.got_subcommand("cross-check")) return cmd_run(cc_spec, cc_out, "cross-check");
        if (app.got_subcommand("coupling-verify")) return cmd_coupling_verify(grid, tol);
        if (app.got_subcommand("calibrate-regions")) return cmd_calibrate(cal_n, cal_seed, params);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: invalid spec JSON: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
