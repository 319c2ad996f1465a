#pragma once

// Reduced model of the coupled-distance argument.  The pair (rho, psi) follows
//   d rho = dW - D(psi) ds,        D(psi) = min(c4', c3' |cos psi|),
//   d psi = (2 + eps1) dW' + a dW'' + [A(psi)(2 + eps2) + b] ds,
// with A = sign(cos psi) (+1 at a tie), eps_i iid uniform in [-eps, eps] drawn
// each step (or held constant), and optional perturbation schedules a(s), b(s)
// subject to integrability budgets.  The run records exactly the statistics the
// contraction argument consumes: per-interval drift mass, Bernoulli indicator
// rates, the linear decay of the mean drift integral, last-exit times, the
// Bessel sandwich for the driven distance process, and sublinearity of the
// driving noise.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mbm/parallel.hpp"
#include "mbm/rng.hpp"
#include "mbm/stats.hpp"

namespace mbm {

struct ReducedParams {
    double eps = 0.05;        // half-width of the per-step uniform epsilon draws
    double c3p = 0.1;         // drift surrogate slope in |cos psi|
    double c4p = 0.2;         // drift surrogate cap
    double kappa3 = 0.2;      // |cos psi| half-width of the mirror band (residency diagnostic)
    double noise_corr = 0.0;  // correlation between the rho and psi drivers
    double ds = 1e-3;
    bool eps_constant = false;        // hold eps1 = eps2 = eps instead of drawing
    bool zero_noise = false;          // freeze every Gaussian draw at 0 (drift flow only)
    double schedule_budget = 0.01;    // bounds on int a^2 ds and int |b| ds
    std::function<double(double)> a_schedule;  // default identically zero
    std::function<double(double)> b_schedule;

    void validate() const {
        if (!(eps >= 0.0 && eps < 1.0))
            throw std::invalid_argument("reduced params: eps must lie in [0, 1)");
        if (!(c3p >= 0.0 && c4p >= 0.0))
            throw std::invalid_argument("reduced params: drift constants must be nonnegative");
        if (std::min(c3p, c4p) > 0.5)
            throw std::invalid_argument("reduced params: surrogate drift would exceed 1/2");
        if (!(kappa3 > 0.0 && kappa3 <= 1.0))
            throw std::invalid_argument("reduced params: kappa3 must lie in (0, 1]");
        if (!(noise_corr >= -1.0 && noise_corr <= 1.0))
            throw std::invalid_argument("reduced params: noise_corr must lie in [-1, 1]");
        if (!(ds > 0.0 && ds <= 0.1))
            throw std::invalid_argument("reduced params: ds must lie in (0, 0.1]");
    }
};

inline double surrogate_drift(double psi, const ReducedParams& pr) {
    return std::min(pr.c4p, pr.c3p * std::abs(std::cos(psi)));
}

struct ReducedState {
    double rho = 0.0;
    double psi = 0.0;
    double s = 0.0;
};

inline ReducedState step_reduced(ReducedState st, const ReducedParams& pr, PathRng& rng) {
    double sqrt_ds = std::sqrt(pr.ds);
    double z1 = pr.zero_noise ? 0.0 : rng.normal();
    double z2 = pr.zero_noise ? 0.0 : rng.normal();
    double dw = sqrt_ds * z1;
    double dwp = sqrt_ds * (pr.noise_corr * z1 + std::sqrt(1.0 - pr.noise_corr * pr.noise_corr) * z2);
    double a = pr.a_schedule ? pr.a_schedule(st.s) : 0.0;
    double dwpp = (pr.a_schedule && !pr.zero_noise) ? sqrt_ds * rng.normal() : 0.0;
    double b = pr.b_schedule ? pr.b_schedule(st.s) : 0.0;
    double e1 = pr.eps_constant ? pr.eps : rng.uniform(-pr.eps, pr.eps);
    double e2 = pr.eps_constant ? pr.eps : rng.uniform(-pr.eps, pr.eps);
    double big_a = std::cos(st.psi) >= 0.0 ? 1.0 : -1.0;
    double d = surrogate_drift(st.psi, pr);
    return {st.rho + dw - d * pr.ds,
            st.psi + (2.0 + e1) * dwp + a * dwpp + (big_a * (2.0 + e2) + b) * pr.ds,
            st.s + pr.ds};
}

struct ReducedPathSummary {
    std::vector<double> rho_grid;   // rho at integer times s = 0..S
    std::vector<double> drift_int;  // int_{I_n} D(psi) ds for n = 1..S, left endpoints
    double w_mid = 0.0;             // cumulative rho-noise at s = min(100, S)
    double w_end = 0.0;             // cumulative rho-noise at s = S
    double last_exit = -1.0;        // last step time with rho > level; -1 if never
    double band_fraction = 0.0;     // fraction of steps with |cos psi| <= kappa3
    double rho_final = 0.0;
    double psi_final = 0.0;
};

struct ReducedRunResult {
    std::vector<ReducedPathSummary> paths;
    std::size_t horizon = 0;
    double ds = 0.0;
    double level = 0.0;
};

inline ReducedRunResult run_reduced(const ReducedParams& pr, std::size_t n_paths,
                                    std::size_t horizon_s, std::uint64_t seed, int workers = 1,
                                    double last_exit_level = 0.0, double rho0 = 0.0,
                                    double psi0 = std::numbers::pi / 2.0) {
    pr.validate();
    if (n_paths == 0 || horizon_s == 0)
        throw std::invalid_argument("run_reduced: paths and horizon must be positive");
    auto spi = static_cast<std::uint64_t>(std::llround(1.0 / pr.ds));
    if (std::abs(spi * pr.ds - 1.0) > 1e-9)
        throw std::invalid_argument("run_reduced: ds must divide the unit interval");
    if (pr.a_schedule || pr.b_schedule) {
        double a2 = 0.0, babs = 0.0;
        for (std::uint64_t k = 0; k < spi * horizon_s; ++k) {
            double s = static_cast<double>(k) * pr.ds;
            if (pr.a_schedule) a2 += pr.a_schedule(s) * pr.a_schedule(s) * pr.ds;
            if (pr.b_schedule) babs += std::abs(pr.b_schedule(s)) * pr.ds;
        }
        if (a2 > pr.schedule_budget + 1e-12 || babs > pr.schedule_budget + 1e-12)
            throw std::invalid_argument("run_reduced: perturbation schedule exceeds budget");
    }

    ReducedRunResult out;
    out.paths.resize(n_paths);
    out.horizon = horizon_s;
    out.ds = pr.ds;
    out.level = last_exit_level;
    double mid_time = std::min<double>(100.0, static_cast<double>(horizon_s));

    parallel_for_index(n_paths, workers, [&](std::size_t i) {
        PathRng rng(seed, i);
        ReducedPathSummary& path = out.paths[i];
        path.rho_grid.reserve(horizon_s + 1);
        path.drift_int.reserve(horizon_s);
        path.rho_grid.push_back(rho0);

        ReducedState st{rho0, psi0, 0.0};
        if (rho0 > last_exit_level) path.last_exit = 0.0;
        double w = 0.0, cur_int = 0.0;
        std::uint64_t band_steps = 0;
        double sqrt_ds = std::sqrt(pr.ds);
        double corr_c = std::sqrt(1.0 - pr.noise_corr * pr.noise_corr);
        std::uint64_t total_steps = spi * horizon_s;
        std::uint64_t mid_step = static_cast<std::uint64_t>(std::llround(mid_time / pr.ds));

        for (std::uint64_t k = 0; k < total_steps; ++k) {
            double cos_psi = std::cos(st.psi);
            double d = std::min(pr.c4p, pr.c3p * std::abs(cos_psi));
            if (std::abs(cos_psi) <= pr.kappa3) ++band_steps;

            double z1 = pr.zero_noise ? 0.0 : rng.normal();
            double z2 = pr.zero_noise ? 0.0 : rng.normal();
            double dw = sqrt_ds * z1;
            double dwp = sqrt_ds * (pr.noise_corr * z1 + corr_c * z2);
            double a = pr.a_schedule ? pr.a_schedule(st.s) : 0.0;
            double dwpp = (pr.a_schedule && !pr.zero_noise) ? sqrt_ds * rng.normal() : 0.0;
            double b = pr.b_schedule ? pr.b_schedule(st.s) : 0.0;
            double e1 = pr.eps_constant ? pr.eps : rng.uniform(-pr.eps, pr.eps);
            double e2 = pr.eps_constant ? pr.eps : rng.uniform(-pr.eps, pr.eps);
            double big_a = cos_psi >= 0.0 ? 1.0 : -1.0;

            // Same association order as step_reduced so the two stay bitwise equal.
            st.rho = st.rho + dw - d * pr.ds;
            st.psi = st.psi + (2.0 + e1) * dwp + a * dwpp + (big_a * (2.0 + e2) + b) * pr.ds;
            st.s = static_cast<double>(k + 1) * pr.ds;
            w += dw;
            cur_int += d * pr.ds;

            if (st.rho > last_exit_level) path.last_exit = st.s;
            if (k + 1 == mid_step) path.w_mid = w;
            if ((k + 1) % spi == 0) {
                path.rho_grid.push_back(st.rho);
                path.drift_int.push_back(cur_int);
                cur_int = 0.0;
            }
        }
        path.w_end = w;
        path.band_fraction = static_cast<double>(band_steps) / static_cast<double>(total_steps);
        path.rho_final = st.rho;
        path.psi_final = st.psi;
    });
    return out;
}

struct BernoulliStats {
    double gamma_hat = 0.0;             // overall rate of drift-heavy unit intervals
    std::vector<double> interval_rate;  // per-interval rate across paths
    std::size_t n_paths = 0;
    std::size_t n_intervals = 0;
};

// X_n = 1 iff the drift mass accumulated over I_n = [n-1, n) is at least delta.
inline BernoulliStats bernoulli_stats(const ReducedRunResult& run, double delta) {
    if (run.paths.empty()) throw std::invalid_argument("bernoulli_stats: empty run");
    if (!(delta > 0.0)) throw std::invalid_argument("bernoulli_stats: delta must be positive");
    std::size_t s = run.horizon;
    BernoulliStats st;
    st.n_paths = run.paths.size();
    st.n_intervals = s;
    st.interval_rate.assign(s, 0.0);
    for (const auto& p : run.paths)
        for (std::size_t n = 0; n < s; ++n)
            if (p.drift_int[n] >= delta) st.interval_rate[n] += 1.0;
    double total = 0.0;
    for (auto& r : st.interval_rate) {
        r /= static_cast<double>(st.n_paths);
        total += r;
    }
    st.gamma_hat = total / static_cast<double>(s);
    return st;
}

struct DecayFit {
    double slope = 0.0;
    Interval ci;  // bootstrap percentile interval over path resamples
};

// Least-squares slope of the mean cumulative drift integral  -int_0^s D  in s,
// with a path-resampling bootstrap confidence interval.
inline DecayFit linear_decay_fit(const ReducedRunResult& run, double level = 0.99,
                                 std::size_t bootstrap = 200, std::uint64_t seed = 7) {
    if (run.paths.empty()) throw std::invalid_argument("linear_decay_fit: empty run");
    std::size_t s = run.horizon, n = run.paths.size();
    // Per-path cumulative sums, negated.
    std::vector<std::vector<double>> cum(n, std::vector<double>(s + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < s; ++k)
            cum[i][k + 1] = cum[i][k] - run.paths[i].drift_int[k];

    auto slope_of = [&](const std::vector<std::size_t>& idx) {
        double sbar = 0.5 * static_cast<double>(s);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k <= s; ++k) {
            double ybar = 0.0;
            for (auto i : idx) ybar += cum[i][k];
            ybar /= static_cast<double>(idx.size());
            double dsk = static_cast<double>(k) - sbar;
            num += dsk * ybar;
            den += dsk * dsk;
        }
        return num / den;
    };

    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    DecayFit fit;
    fit.slope = slope_of(all);

    PathRng rng(seed, 0xb00);
    std::vector<double> slopes(bootstrap);
    std::vector<std::size_t> idx(n);
    for (std::size_t b = 0; b < bootstrap; ++b) {
        for (auto& i : idx) i = static_cast<std::size_t>(rng.next_u64() % n);
        slopes[b] = slope_of(idx);
    }
    fit.ci = {quantile(slopes, 0.5 - level / 2.0), quantile(slopes, 0.5 + level / 2.0)};
    return fit;
}

// Supremum of recorded times with rho > level over an explicit trace sampled
// every grid_ds; nullopt if the trace never exceeds the level.
inline std::optional<double> last_exit(std::span<const double> rho_trace, double grid_ds,
                                       double level) {
    if (rho_trace.empty()) throw std::invalid_argument("last_exit: empty trace");
    for (std::size_t k = rho_trace.size(); k-- > 0;)
        if (rho_trace[k] > level) return static_cast<double>(k) * grid_ds;
    return std::nullopt;
}

using FgSchedule = std::function<std::pair<double, double>(double)>;  // tau -> (f, g)

struct BesselReport {
    double max_r_minus_big_r = -std::numeric_limits<double>::infinity();
    double max_lower_gap = -std::numeric_limits<double>::infinity();  // max of (r0 + W) - r
    std::size_t truncated_paths = 0;
    std::size_t n_paths = 0;
    bool identical = true;  // r == R bitwise at every step (holds when g == f)
};

// Discrete sandwich: with shared noise, dr = dW + (g/f)/(2r) dtau sits between
// the driftless motion r0 + W and the 2d Bessel dR = dW + 1/(2R) dtau.  A path
// is truncated and flagged as soon as r or R crosses zero.  f = 0 is read as
// g/f = 1 so identical schedules stay bitwise identical.
inline BesselReport bessel_domination(double r0, const FgSchedule& schedule, double horizon_tau,
                                      double ds, std::size_t n_paths, std::uint64_t seed,
                                      int workers = 1) {
    if (!(r0 > 0.0)) throw std::invalid_argument("bessel_domination: r0 must be positive");
    if (!(ds > 0.0 && horizon_tau > 0.0))
        throw std::invalid_argument("bessel_domination: ds and horizon must be positive");
    if (!schedule) throw std::invalid_argument("bessel_domination: schedule required");

    auto n_steps = static_cast<std::uint64_t>(std::llround(horizon_tau / ds));
    for (std::uint64_t k = 0; k < n_steps; ++k) {  // schedule is path independent
        auto [f, g] = schedule(static_cast<double>(k) * ds);
        if (!(g >= 0.0 && g <= f + 1e-12))
            throw std::invalid_argument("bessel_domination: schedule must satisfy 0 <= g <= f");
    }
    BesselReport rep;
    rep.n_paths = n_paths;
    std::vector<double> max_diff(n_paths, -std::numeric_limits<double>::infinity());
    std::vector<double> max_lower(n_paths, -std::numeric_limits<double>::infinity());
    std::vector<std::uint8_t> truncated(n_paths, 0);
    std::vector<std::uint8_t> ident(n_paths, 1);

    parallel_for_index(n_paths, workers, [&](std::size_t i) {
        PathRng rng(seed, i);
        double r = r0, big_r = r0, w = 0.0;
        double sqrt_ds = std::sqrt(ds);
        auto drift_step = [&](double x, double ratio, double dw) {
            return x + dw + ratio * ds / (2.0 * x);
        };
        for (std::uint64_t k = 0; k < n_steps; ++k) {
            auto [f, g] = schedule(static_cast<double>(k) * ds);
            double ratio = f > 0.0 ? std::min(1.0, g / f) : 1.0;
            double dw = sqrt_ds * rng.normal();
            r = drift_step(r, ratio, dw);
            big_r = drift_step(big_r, 1.0, dw);
            w += dw;
            if (r <= 0.0 || big_r <= 0.0) {
                truncated[i] = 1;
                break;
            }
            max_diff[i] = std::max(max_diff[i], r - big_r);
            max_lower[i] = std::max(max_lower[i], r0 + w - r);
            if (r != big_r) ident[i] = 0;
        }
    });
    for (std::size_t i = 0; i < n_paths; ++i) {
        rep.max_r_minus_big_r = std::max(rep.max_r_minus_big_r, max_diff[i]);
        rep.max_lower_gap = std::max(rep.max_lower_gap, max_lower[i]);
        rep.truncated_paths += truncated[i];
        rep.identical = rep.identical && ident[i] == 1;
    }
    return rep;
}

struct SublinearityReport {
    double frac_decreasing = 0.0;    // |W_s|/s smaller at the horizon than at s = 100
    double frac_small_at_end = 0.0;  // |W_S|/S below 0.2
    double max_ratio_end = 0.0;
    std::size_t n = 0;
};

inline SublinearityReport sublinearity_check(const ReducedRunResult& run) {
    if (run.horizon < 1000)
        throw std::invalid_argument("sublinearity_check: horizon must be at least 1000");
    SublinearityReport rep;
    rep.n = run.paths.size();
    double s_end = static_cast<double>(run.horizon);
    for (const auto& p : run.paths) {
        double r_mid = std::abs(p.w_mid) / 100.0;
        double r_end = std::abs(p.w_end) / s_end;
        if (r_end < r_mid) rep.frac_decreasing += 1.0;
        if (r_end < 0.2) rep.frac_small_at_end += 1.0;
        rep.max_ratio_end = std::max(rep.max_ratio_end, r_end);
    }
    rep.frac_decreasing /= static_cast<double>(rep.n);
    rep.frac_small_at_end /= static_cast<double>(rep.n);
    return rep;
}

}  // namespace mbm
