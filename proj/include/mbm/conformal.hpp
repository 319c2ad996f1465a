#pragma once

// Oracle simulator: Brownian motion built in a conformal chart, where it is a
// standard planar motion run against the chart clock, and surface time is the
// additive functional  t = integral lambda^2(position) d(chart time).  Used to
// cross-check the graph-coordinate simulator on surfaces with explicit charts.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>

#include "mbm/graph_sim.hpp"
#include "mbm/linalg.hpp"
#include "mbm/rng.hpp"

namespace mbm {

// Identity chart on {x > 0}: lambda^2 = 1, boundary u = 0.
struct FlatChart {
    static constexpr const char* name() { return "flat_half_plane"; }
    Vec2 to_graph(Vec2 c) const { return c; }
    Vec2 from_graph(Vec2 p) const { return p; }
    double lambda2(Vec2) const { return 1.0; }
    double neg_k_lambda2(Vec2) const { return 0.0; }
    double signed_distance(Vec2 c) const { return -c.x; }
    double normal_z(Vec2) const { return 1.0; }
    Vec2 wrap(Vec2 c) const { return c; }
    std::array<Vec2, 2> frame(Vec2) const { return {Vec2{1.0, 0.0}, Vec2{0.0, 1.0}}; }
};

// (u, v) in [0, 2pi) x (0, inf) -> cosh v (cos u, sin u); lambda^2 = cosh^2 v,
// boundary v = 0, -K lambda^2 = sech^2 v.  u is periodic.
struct CatenoidChart {
    static constexpr const char* name() { return "half_catenoid"; }
    Vec2 to_graph(Vec2 c) const {
        double r = std::cosh(c.y);
        return {r * std::cos(c.x), r * std::sin(c.x)};
    }
    Vec2 from_graph(Vec2 p) const {
        double u = std::atan2(p.y, p.x);
        if (u < 0.0) u += 2.0 * std::numbers::pi;
        return {u, std::acosh(p.norm())};
    }
    double lambda2(Vec2 c) const {
        double ch = std::cosh(c.y);
        return ch * ch;
    }
    double neg_k_lambda2(Vec2 c) const {
        double ch = std::cosh(c.y);
        return 1.0 / (ch * ch);
    }
    double signed_distance(Vec2 c) const { return -c.y; }
    double normal_z(Vec2 c) const { return std::tanh(std::abs(c.y)); }
    Vec2 wrap(Vec2 c) const {
        double two_pi = 2.0 * std::numbers::pi;
        double u = std::fmod(c.x, two_pi);
        if (u < 0.0) u += two_pi;
        return {u, c.y};
    }
    std::array<Vec2, 2> frame(Vec2 c) const {
        double ch = std::cosh(c.y), sh = std::sinh(c.y);
        return {Vec2{-ch * std::sin(c.x), ch * std::cos(c.x)},
                Vec2{sh * std::cos(c.x), sh * std::sin(c.x)}};
    }
};

// (u, v) in (-pi/2, pi/2) x (0, inf) -> sinh v (cos u, sin u); lambda^2 =
// cosh^2 v, absorbing at u = +-pi/2 (the y-axis) and at v = 0 (the origin).
struct HelicoidChart {
    static constexpr const char* name() { return "helicoid_graph"; }
    Vec2 to_graph(Vec2 c) const {
        double r = std::sinh(c.y);
        return {r * std::cos(c.x), r * std::sin(c.x)};
    }
    Vec2 from_graph(Vec2 p) const { return {std::atan(p.y / p.x), std::asinh(p.norm())}; }
    double lambda2(Vec2 c) const {
        double ch = std::cosh(c.y);
        return ch * ch;
    }
    double neg_k_lambda2(Vec2 c) const {
        double ch = std::cosh(c.y);
        return 1.0 / (ch * ch);
    }
    double signed_distance(Vec2 c) const {
        return std::max(std::abs(c.x) - std::numbers::pi / 2.0, -c.y);
    }
    double normal_z(Vec2 c) const { return std::tanh(std::abs(c.y)); }
    Vec2 wrap(Vec2 c) const { return c; }
    std::array<Vec2, 2> frame(Vec2 c) const {
        double ch = std::cosh(c.y), sh = std::sinh(c.y);
        return {Vec2{-sh * std::sin(c.x), sh * std::cos(c.x)},
                Vec2{ch * std::cos(c.x), ch * std::sin(c.x)}};
    }
};

using AnyChart = std::variant<FlatChart, CatenoidChart, HelicoidChart>;

inline AnyChart chart_for(const std::string& surface_name) {
    if (surface_name == FlatChart::name()) return FlatChart{};
    if (surface_name == CatenoidChart::name()) return CatenoidChart{};
    if (surface_name == HelicoidChart::name()) return HelicoidChart{};
    throw std::invalid_argument("no conformal chart available for surface: " + surface_name);
}

struct ChartOptions {
    double d_chart = 1e-3;   // chart-time step
    double horizon = 1.0;    // surface-time horizon (censoring)
    unsigned record_stride = 0;
    bool zero_noise = false;  // freeze the Gaussian draws at 0 (position constant)
};

struct ChartPath {
    TrajectoryRecord record;  // surface-time clocked, graph-coordinate positions
    double chart_time = 0.0;  // chart time elapsed until hit or censoring
};

template <class C>
ChartPath simulate_chart_path(const C& chart, Vec2 graph_start, const ChartOptions& opt,
                              PathRng& rng) {
    if (!(opt.d_chart > 0.0) || !(opt.horizon > 0.0))
        throw std::invalid_argument("simulate_chart_path: steps and horizon must be positive");
    Vec2 c = chart.from_graph(graph_start);
    // Negated comparisons also reject NaN coordinates from out-of-image starts.
    if (!(chart.signed_distance(c) < 0.0))
        throw std::domain_error(std::string(chart.name()) + ": start is outside the chart domain");
    // Round trip must reproduce the start: from_graph is a left inverse only on
    // the chart image, so a mismatch means the start lies outside it.
    Vec2 back = chart.to_graph(c);
    if (!((back - graph_start).norm() <= 1e-9 * (1.0 + graph_start.norm())))
        throw std::domain_error(std::string(chart.name()) + ": start is outside the chart image");

    ChartPath out;
    TrajectoryRecord& rec = out.record;
    rec.surface = chart.name();
    rec.dt = opt.d_chart;
    rec.states.push_back({0.0, graph_start});

    double ds = opt.d_chart;
    double sqrt_ds = std::sqrt(ds);
    double t = 0.0;
    double sd_prev = chart.signed_distance(c);
    std::uint64_t k = 0;

    for (;;) {
        double lam2 = chart.lambda2(c);
        double rate = chart.neg_k_lambda2(c);
        rec.min_normal_z = std::min(rec.min_normal_z, chart.normal_z(c));
        if (t + lam2 * ds >= opt.horizon) {  // censored inside this step
            double frac = (opt.horizon - t) / (lam2 * ds);
            rec.clock += rate * frac * ds;
            out.chart_time += frac * ds;
            rec.sigma = opt.horizon;
            rec.sigma_censored = true;
            rec.exit = chart.to_graph(c);
            break;
        }
        Vec2 cn = c + (opt.zero_noise ? Vec2{0.0, 0.0} : rng.normal2()) * sqrt_ds;
        double sd_new = chart.signed_distance(cn);
        if (sd_new >= 0.0) {
            double lam = sd_prev / (sd_prev - sd_new);
            rec.hit = true;
            rec.sigma = t + lam2 * lam * ds;
            rec.clock += rate * lam * ds;
            out.chart_time += lam * ds;
            rec.exit = chart.to_graph(c + (cn - c) * lam);
            break;
        }
        t += lam2 * ds;
        rec.clock += rate * ds;
        out.chart_time += ds;
        c = chart.wrap(cn);
        sd_prev = chart.signed_distance(c);
        ++k;
        if (opt.record_stride > 0 && k % opt.record_stride == 0)
            rec.states.push_back({t, chart.to_graph(c)});
    }
    return out;
}

struct ChartEnsembleResult {
    EnsembleResult surface;          // sigma and clock in surface time
    std::vector<double> chart_time;  // per path
};

template <class C>
ChartEnsembleResult simulate_chart_ensemble(const C& chart, Vec2 graph_start,
                                            const ChartOptions& opt, std::size_t n_paths,
                                            std::uint64_t seed, int workers = 1,
                                            std::uint64_t stream_salt = 0) {
    if (n_paths == 0)
        throw std::invalid_argument("simulate_chart_ensemble: n_paths must be positive");
    ChartEnsembleResult out;
    out.surface.hit.resize(n_paths);
    out.surface.sigma.resize(n_paths);
    out.surface.clock.resize(n_paths);
    out.surface.exit.resize(n_paths);
    out.surface.horizon = opt.horizon;
    out.chart_time.resize(n_paths);
    std::vector<double> min_nz(n_paths, 1.0);
    parallel_for_index(n_paths, workers, [&](std::size_t i) {
        PathRng rng(seed, stream_salt + i);
        ChartPath cp = simulate_chart_path(chart, graph_start, opt, rng);
        out.surface.hit[i] = cp.record.hit ? 1 : 0;
        out.surface.sigma[i] = cp.record.sigma;
        out.surface.clock[i] = cp.record.clock;
        out.surface.exit[i] = cp.record.exit;
        out.chart_time[i] = cp.chart_time;
        min_nz[i] = cp.record.min_normal_z;
    });
    for (double v : min_nz) out.surface.min_normal_z = std::min(out.surface.min_normal_z, v);
    return out;
}

// Distinct substream families so the two simulators draw independent noise
// under one master seed.

struct CrossCheck {
    KsResult sigma_ks;   // hit-time samples, graph vs chart
    KsResult clock_ks;   // curvature-clock samples of hit paths
    HittingEstimate graph_est;
    HittingEstimate chart_est;
};

// Two-sample agreement between the graph-coordinate simulator and the chart
// oracle on the same surface, start, and horizon.
template <class S, class C>
CrossCheck cross_check(const S& surf, const C& chart, Vec2 start, double horizon,
                       std::size_t n_paths, double dt, double d_chart, std::uint64_t seed,
                       int workers = 1) {
    SimOptions gopt{dt, horizon, 0};
    EnsembleResult graph = simulate_ensemble(surf, start, gopt, n_paths, seed, workers,
                                             kGraphStreamSalt);
    ChartOptions copt{d_chart, horizon, 0};
    ChartEnsembleResult chart_run =
        simulate_chart_ensemble(chart, start, copt, n_paths, seed, workers, kChartStreamSalt);
    CrossCheck out;
    out.sigma_ks = ks_two_sample(graph.hit_sigmas(), chart_run.surface.hit_sigmas());
    out.clock_ks = ks_two_sample(graph.hit_clocks(), chart_run.surface.hit_clocks());
    out.graph_est = hitting_estimate_from(graph);
    out.chart_est = hitting_estimate_from(chart_run.surface);
    return out;
}

}  // namespace mbm
