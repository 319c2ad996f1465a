#pragma once

// Intrinsic Brownian motion (generator Laplace-Beltrami/2) on a minimal graph,
// simulated in graph coordinates by fixed-step Euler-Maruyama.  Boundary hits
// are detected by sign change of the domain's signed distance and the hitting
// time is linearly interpolated; paths alive at the horizon are censored and
// their hitting time is reported only as a lower bound.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbm/linalg.hpp"
#include "mbm/parallel.hpp"
#include "mbm/rng.hpp"
#include "mbm/stats.hpp"
#include "mbm/surfaces.hpp"

namespace mbm {

struct ItoCoefficients {
    Vec2 drift;      // b^i = (1 / 2 sqrt(G)) d_j (sqrt(G) g^{ij})
    Mat2 diffusion;  // symmetric, diffusion^2 = g^{-1}
};

// Closed form in grad u and Hess u: with W^2 = 1 + |grad u|^2 and R the
// minimal surface operator, b = -grad u * R / (2 W^4), and the symmetric
// square root of g^{-1} is I - grad u grad u^T / (W (W + 1)).
template <class S>
ItoCoefficients ito_coefficients(const S& surf, Vec2 p) {
    require_inside(surf, p);
    Vec2 gu = surf.grad(p);
    Mat2 h = surf.hess(p);
    double w2 = 1.0 + gu.norm2();
    double w = std::sqrt(w2);
    double residual = (1.0 + gu.y * gu.y) * h.xx - 2.0 * gu.x * gu.y * h.xy +
                      (1.0 + gu.x * gu.x) * h.yy;
    Vec2 b = gu * (-residual / (2.0 * w2 * w2));
    double c = 1.0 / (w * (w + 1.0));
    Mat2 sigma{1.0 - c * gu.x * gu.x, -c * gu.x * gu.y, 1.0 - c * gu.y * gu.y};
    return {b, sigma};
}

struct TimedPoint {
    double t = 0.0;
    Vec2 p;
};

struct TrajectoryRecord {
    std::string surface;
    double dt = 0.0;
    std::vector<TimedPoint> states;  // start plus every record_stride-th interior state
    bool hit = false;
    double sigma = 0.0;           // hitting time if hit; otherwise the horizon
    bool sigma_censored = false;  // censored: sigma is a lower bound (">= horizon")
    double clock = 0.0;           // integral of -K along the path, left endpoints
    Vec2 exit;                    // interpolated boundary point if hit, else last position
    Vec3 final_normal;
    double min_normal_z = 1.0;    // min over steps of the Gauss normal's third component
};

struct SimOptions {
    double dt = 1e-3;
    double horizon = 1.0;
    unsigned record_stride = 0;  // 0: keep only the initial state
    bool zero_noise = false;     // freeze the Gaussian draws at 0 (deterministic drift flow)
};

template <class S>
TrajectoryRecord simulate_path(const S& surf, Vec2 start, const SimOptions& opt, PathRng& rng) {
    if (!(opt.dt > 0.0) || !(opt.horizon > 0.0))
        throw std::invalid_argument("simulate_path: dt and horizon must be positive");
    require_inside(surf, start);

    TrajectoryRecord rec;
    rec.surface = surf.name();
    rec.dt = opt.dt;
    rec.states.push_back({0.0, start});

    double sqrt_dt = std::sqrt(opt.dt);
    auto n_steps = static_cast<std::uint64_t>(std::llround(opt.horizon / opt.dt));
    Vec2 p = start;
    double sd_prev = surf.signed_distance(p);

    for (std::uint64_t k = 0; k < n_steps; ++k) {
        Vec2 gu = surf.grad(p);
        Mat2 h = surf.hess(p);
        double w2 = 1.0 + gu.norm2();
        double neg_k = -h.det() / (w2 * w2);
        rec.min_normal_z = std::min(rec.min_normal_z, 1.0 / std::sqrt(w2));

        double residual = (1.0 + gu.y * gu.y) * h.xx - 2.0 * gu.x * gu.y * h.xy +
                          (1.0 + gu.x * gu.x) * h.yy;
        Vec2 b = gu * (-residual / (2.0 * w2 * w2));
        double w = std::sqrt(w2);
        double c = 1.0 / (w * (w + 1.0));
        Mat2 sigma{1.0 - c * gu.x * gu.x, -c * gu.x * gu.y, 1.0 - c * gu.y * gu.y};

        Vec2 noise = opt.zero_noise ? Vec2{0.0, 0.0} : rng.normal2();
        Vec2 pn = p + b * opt.dt + sigma.apply(noise) * sqrt_dt;
        double sd_new = surf.signed_distance(pn);
        double t = static_cast<double>(k) * opt.dt;

        if (sd_new >= 0.0) {
            double lam = sd_prev / (sd_prev - sd_new);
            rec.hit = true;
            rec.sigma = t + lam * opt.dt;
            rec.clock += neg_k * lam * opt.dt;
            rec.exit = p + (pn - p) * lam;
            rec.final_normal = gauss_map(surf, p);
            return rec;
        }
        rec.clock += neg_k * opt.dt;
        p = pn;
        sd_prev = sd_new;
        if (opt.record_stride > 0 && (k + 1) % opt.record_stride == 0)
            rec.states.push_back({t + opt.dt, p});
    }
    rec.sigma = opt.horizon;
    rec.sigma_censored = true;
    rec.exit = p;
    rec.final_normal = gauss_map(surf, p);
    return rec;
}

// Per-path outcomes of an ensemble run, indexed by path id.
struct EnsembleResult {
    std::vector<std::uint8_t> hit;
    std::vector<double> sigma;  // lower bound (= horizon) where hit[i] == 0
    std::vector<double> clock;
    std::vector<Vec2> exit;
    double min_normal_z = 1.0;
    double horizon = 0.0;

    std::size_t hits() const {
        std::size_t s = 0;
        for (auto h : hit) s += h;
        return s;
    }
    double censored_mass() const {
        return 1.0 - static_cast<double>(hits()) / static_cast<double>(hit.size());
    }
    std::vector<double> hit_sigmas() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < hit.size(); ++i)
            if (hit[i]) out.push_back(sigma[i]);
        return out;
    }
    std::vector<double> hit_clocks() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < hit.size(); ++i)
            if (hit[i]) out.push_back(clock[i]);
        return out;
    }
};

// Substream families under one master seed: path i of a family draws from
// stream (salt + i), so graph and chart ensembles never share streams.
inline constexpr std::uint64_t kGraphStreamSalt = 0;
inline constexpr std::uint64_t kChartStreamSalt = 1ULL << 62;

template <class S>
EnsembleResult simulate_ensemble(const S& surf, Vec2 start, const SimOptions& opt,
                                 std::size_t n_paths, std::uint64_t seed, int workers = 1,
                                 std::uint64_t stream_salt = 0) {
    if (n_paths == 0) throw std::invalid_argument("simulate_ensemble: n_paths must be positive");
    EnsembleResult out;
    out.hit.resize(n_paths);
    out.sigma.resize(n_paths);
    out.clock.resize(n_paths);
    out.exit.resize(n_paths);
    out.horizon = opt.horizon;
    std::vector<double> min_nz(n_paths, 1.0);
    parallel_for_index(n_paths, workers, [&](std::size_t i) {
        PathRng rng(seed, stream_salt + i);
        TrajectoryRecord rec = simulate_path(surf, start, opt, rng);
        out.hit[i] = rec.hit ? 1 : 0;
        out.sigma[i] = rec.sigma;
        out.clock[i] = rec.clock;
        out.exit[i] = rec.exit;
        min_nz[i] = rec.min_normal_z;
    });
    for (double v : min_nz) out.min_normal_z = std::min(out.min_normal_z, v);
    return out;
}

struct HittingEstimate {
    double p_hat = 0.0;
    Interval ci;  // Wilson score interval
    std::size_t hits = 0;
    std::size_t n = 0;
    double censored_mass = 0.0;
};

inline HittingEstimate hitting_estimate_from(const EnsembleResult& ens, double level = 0.95) {
    std::size_t h = ens.hits();
    HittingEstimate e;
    e.hits = h;
    e.n = ens.hit.size();
    e.p_hat = static_cast<double>(h) / static_cast<double>(e.n);
    e.ci = wilson_interval(h, e.n, level);
    e.censored_mass = ens.censored_mass();
    return e;
}

template <class S>
HittingEstimate hitting_probability(const S& surf, Vec2 start, double horizon, std::size_t n_paths,
                                    double dt, std::uint64_t seed, int workers = 1) {
    if (n_paths == 0) throw std::invalid_argument("hitting_probability: n_paths must be positive");
    require_inside(surf, start);
    if (horizon == 0.0)
        return {0.0, wilson_interval(0, n_paths, 0.95), 0, n_paths, 1.0};
    SimOptions opt{dt, horizon, 0};
    return hitting_estimate_from(simulate_ensemble(surf, start, opt, n_paths, seed, workers));
}

struct HarmonicEstimate {
    double value = 0.0;    // mean of h over boundary-hit locations
    double std_err = 0.0;
    double non_hit_mass = 0.0;  // censored mass, reported separately
    std::size_t hits = 0;
};

template <class S, class H>
HarmonicEstimate harmonic_estimate(const S& surf, Vec2 start, H&& h, double horizon,
                                   std::size_t n_paths, double dt, std::uint64_t seed,
                                   int workers = 1) {
    SimOptions opt{dt, horizon, 0};
    EnsembleResult ens = simulate_ensemble(surf, start, opt, n_paths, seed, workers);
    std::vector<double> values;
    for (std::size_t i = 0; i < ens.hit.size(); ++i)
        if (ens.hit[i]) values.push_back(h(ens.exit[i]));
    if (values.empty()) throw std::runtime_error("harmonic_estimate: no path reached the boundary");
    HarmonicEstimate est;
    est.value = mean(values);
    est.std_err = values.size() > 1 ? std_error(values) : 0.0;
    est.non_hit_mass = ens.censored_mass();
    est.hits = values.size();
    return est;
}

struct ClockSummary {
    double q50 = 0.0;
    double q90 = 0.0;
    double q99 = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

// Quantiles of the curvature clock integral -K dt evaluated at sigma ^ horizon.
inline ClockSummary curvature_clock_summary(std::span<const double> clocks) {
    if (clocks.empty()) throw std::invalid_argument("curvature_clock_summary: empty ensemble");
    std::vector<double> v(clocks.begin(), clocks.end());
    ClockSummary s;
    s.q50 = quantile(v, 0.50);
    s.q90 = quantile(v, 0.90);
    s.q99 = quantile(v, 0.99);
    s.max = quantile(v, 1.0);
    s.n = v.size();
    return s;
}

// Finite-limit diagnostic: the tail quantile stops moving when the horizon doubles.
inline bool clock_stabilized(const ClockSummary& at_T, const ClockSummary& at_2T,
                             double rel_tol = 0.1) {
    double denom = std::max(std::abs(at_2T.q99), 1e-12);
    return std::abs(at_2T.q99 - at_T.q99) / denom <= rel_tol;
}

}  // namespace mbm
