#pragma once

// Configuration algebra for mirror-coupled particle pairs on a minimal graph:
// the two Gauss-map normals together with the unit chord direction, the signed
// arc coordinates (theta, phi) on a common great circle, the coefficient pair
// (f, g) controlling the coupled-distance process, and the nested regions
// S4 c S3 c S2 c S1 used to calibrate drift constants.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mbm/linalg.hpp"
#include "mbm/rng.hpp"
#include "mbm/surfaces.hpp"

namespace mbm {

struct Configuration {
    Vec3 m_x;    // unit normal at the first particle
    Vec3 m_y;    // unit normal at the second particle
    Vec3 alpha;  // unit chord direction between the ambient positions
};

template <class S>
Configuration configuration_of(const S& surf, Vec2 p, Vec2 q) {
    Vec3 pp{p.x, p.y, surf.height(p)};
    Vec3 qq{q.x, q.y, surf.height(q)};
    Vec3 chord = pp - qq;
    double len = chord.norm();
    if (len < 1e-14)
        throw std::domain_error("configuration_of: coincident particles, chord undefined");
    return {gauss_map(surf, p), gauss_map(surf, q), chord * (1.0 / len)};
}

inline bool is_great_circle(const Configuration& c, double tol = 1e-9) {
    if (tol <= 0.0) throw std::invalid_argument("is_great_circle: tolerance must be positive");
    return std::abs(triple(c.m_x, c.m_y, c.alpha)) <= tol;
}

namespace detail {

// Deterministic unit vector orthogonal to a: split off the coordinate axis
// with the smallest |component|.
inline Vec3 orthogonal_unit(Vec3 a) {
    Vec3 h{1.0, 0.0, 0.0};
    double ax = std::abs(a.x), ay = std::abs(a.y), az = std::abs(a.z);
    if (ay <= ax && ay <= az)
        h = {0.0, 1.0, 0.0};
    else if (az <= ax && az <= ay)
        h = {0.0, 0.0, 1.0};
    return (h - a * h.dot(a)).normalized();
}

// Orientation convention for a circle normal: non-negative third component,
// ties broken by non-negative second, then first component.
inline Vec3 orient_normal(Vec3 n) {
    if (n.z < 0.0) return -n;
    if (n.z == 0.0) {
        if (n.y < 0.0) return -n;
        if (n.y == 0.0 && n.x < 0.0) return -n;
    }
    return n;
}

}  // namespace detail

struct CircleCoords {
    double theta = 0.0;      // signed arc from alpha to m_x
    double phi = 0.0;        // signed arc from alpha to m_y
    Vec3 normal;             // oriented normal of the fitted great circle
    double coplanarity = 0.0;  // l2 norm of the two off-circle latitudes
};

// Great-circle coordinates, extended off the coplanar set: among circles
// through alpha, pick the one minimizing the summed squared (chordal)
// deviations of m_x and m_y, then read signed arcs of their projections.
// On coplanar configurations this is the exact common circle.
inline CircleCoords great_circle_coords(const Configuration& c) {
    Vec3 e1 = detail::orthogonal_unit(c.alpha);
    Vec3 e2 = c.alpha.cross(e1);
    // Normal n = cos(t) e1 + sin(t) e2 minimizing n^T (m_x m_x^T + m_y m_y^T) n.
    double pxx = c.m_x.dot(e1), pxy = c.m_x.dot(e2);
    double pyx = c.m_y.dot(e1), pyy = c.m_y.dot(e2);
    double a = pxx * pxx + pyx * pyx;
    double b = pxx * pxy + pyx * pyy;
    double d = pxy * pxy + pyy * pyy;
    double half_gap = 0.5 * std::hypot(a - d, 2.0 * b);
    double lam = 0.5 * (a + d) - half_gap;  // smallest eigenvalue
    Vec3 n;
    if (half_gap < 1e-15) {
        n = e1;  // isotropic fit: any normal through alpha works, pick e1
    } else if (std::abs(a - lam) >= std::abs(d - lam)) {
        double v1 = b, v2 = lam - a;
        double nv = std::hypot(v1, v2);
        n = (nv == 0.0) ? e1 : e1 * (v1 / nv) + e2 * (v2 / nv);
    } else {
        double v1 = lam - d, v2 = b;
        double nv = std::hypot(v1, v2);
        n = (nv == 0.0) ? e1 : e1 * (v1 / nv) + e2 * (v2 / nv);
    }
    n = detail::orient_normal(n);

    auto signed_arc = [&](Vec3 m) {
        Vec3 proj = m - n * m.dot(n);
        if (proj.norm() < 1e-13) return 0.0;  // m at the circle pole: arc undefined
        proj = proj.normalized();
        return std::atan2(triple(c.alpha, proj, n), c.alpha.dot(proj));
    };
    double lat_x = std::asin(std::clamp(c.m_x.dot(n), -1.0, 1.0));
    double lat_y = std::asin(std::clamp(c.m_y.dot(n), -1.0, 1.0));
    return {signed_arc(c.m_x), signed_arc(c.m_y), n, std::hypot(lat_x, lat_y)};
}

struct FgBranch {
    double a = 1.0;  // A = sign(cos(theta + phi)); both signs at a tie
    double f = 0.0;
    double g = 0.0;
};

// f = (sin theta - A sin phi)^2, g = (cos theta - A cos phi)^2 with
// A = sign(cos(theta + phi)).  Within tie_tol of cos(theta + phi) = 0 both
// branches are returned, A = +1 first.
inline std::vector<FgBranch> fg(double theta, double phi, double tie_tol = 1e-12) {
    auto branch = [&](double a) {
        double f = std::sin(theta) - a * std::sin(phi);
        double g = std::cos(theta) - a * std::cos(phi);
        return FgBranch{a, f * f, g * g};
    };
    double c = std::cos(theta + phi);
    if (std::abs(c) <= tie_tol) return {branch(1.0), branch(-1.0)};
    return {branch(c > 0.0 ? 1.0 : -1.0)};
}

// f - g = 2 cos(theta + phi) (A - cos(theta - phi)); nonnegative on the
// principal branch A = sign(cos(theta + phi)).
inline double f_minus_g(double theta, double phi, double a) {
    return 2.0 * std::cos(theta + phi) * (a - std::cos(theta - phi));
}

enum class Region { S4, S3, S2, S1, Outside };

inline const char* region_name(Region r) {
    switch (r) {
        case Region::S4: return "S4";
        case Region::S3: return "S3";
        case Region::S2: return "S2";
        case Region::S1: return "S1";
        default: return "outside";
    }
}

struct RegionParams {
    double c1 = 0.1;       // minimum normal separation defining S1
    double c2 = 0.1;       // |cos(theta + phi)| bound defining S2
    double delta3 = 0.05;  // S3 neighborhood size around S4
    double tol_gc = 1e-9;  // coplanarity tolerance for exact great-circle tests
    double cos_tol_s4 = 1e-9;

    void validate() const {
        if (!(c1 > 0.0 && c1 < std::numbers::pi / 4.0))
            throw std::invalid_argument("region params: c1 must lie in (0, pi/4)");
        if (!(c2 > 0.0 && c2 < 1.0))
            throw std::invalid_argument("region params: c2 must lie in (0, 1)");
        if (!(delta3 > 0.0 && tol_gc > 0.0 && cos_tol_s4 > 0.0))
            throw std::invalid_argument("region params: tolerances must be positive");
        // Nesting S4 c S3 c S2 needs the S3 band inside the S2 band.
        if (!(std::sin(2.0 * delta3) <= c2) || cos_tol_s4 > std::sin(2.0 * delta3))
            throw std::invalid_argument("region params: nesting violated");
    }
};

struct NestingGaps {
    double s4_cos_within_s3 = 0.0;          // sin(2 delta3) - cos_tol_s4
    double s4_coplanarity_within_s3 = 0.0;  // delta3 - tol_gc / sin(2 c1)
    double s4_separation_within_s1 = 0.0;   // c1: S4 needs [2 c1, pi - 2 c1]
    double s3_cos_within_s2 = 0.0;          // c2 - sin(2 delta3)
    double s2_cos_within_range = 0.0;       // 1 - c2

    bool all_positive() const {
        return s4_cos_within_s3 > 0.0 && s4_coplanarity_within_s3 > 0.0 &&
               s4_separation_within_s1 > 0.0 && s3_cos_within_s2 > 0.0 &&
               s2_cos_within_range > 0.0;
    }
};

// Margins between consecutive region constraints.  Every gap positive makes
// each inclusion S4 c S3 c S2 c S1 strict at the parameter level.
inline NestingGaps nesting_gaps(const RegionParams& p) {
    p.validate();
    NestingGaps g;
    g.s4_cos_within_s3 = std::sin(2.0 * p.delta3) - p.cos_tol_s4;
    g.s4_coplanarity_within_s3 = p.delta3 - p.tol_gc / std::sin(2.0 * p.c1);
    g.s4_separation_within_s1 = p.c1;
    g.s3_cos_within_s2 = p.c2 - std::sin(2.0 * p.delta3);
    g.s2_cos_within_range = 1.0 - p.c2;
    return g;
}

// Innermost region containing the configuration.  S1 carries a two-sided
// separation bound (near-antipodal normals excluded); S3 is realized as the
// band {|cos(theta+phi)| <= sin(2 delta3), coplanarity <= delta3} inside S1,
// which contains every S1 configuration with cos(theta+phi) = 0.
inline Region classify_region(const Configuration& c, const RegionParams& params) {
    params.validate();
    CircleCoords cc = great_circle_coords(c);
    double d = sphere_dist(c.m_x, c.m_y);
    double abs_cos = std::abs(std::cos(cc.theta + cc.phi));
    double pi = std::numbers::pi;

    bool s1 = d >= params.c1 && d <= pi - params.c1;
    if (!s1) return Region::Outside;
    bool s2 = abs_cos <= params.c2;
    bool s3 = s2 && abs_cos <= std::sin(2.0 * params.delta3) && cc.coplanarity <= params.delta3;
    bool s4 = s3 && is_great_circle(c, params.tol_gc) && abs_cos <= params.cos_tol_s4 &&
              d >= 2.0 * params.c1 && d <= pi - 2.0 * params.c1;
    if (s4) return Region::S4;
    if (s3) return Region::S3;
    if (s2) return Region::S2;
    return Region::S1;
}

// A coplanar configuration with prescribed signed arcs on a random circle.
inline Configuration random_great_circle_config(PathRng& rng, double theta, double phi) {
    Vec3 n;
    do {
        n = {rng.normal(), rng.normal(), rng.normal()};
    } while (n.norm2() < 1e-12);
    n = n.normalized();
    Vec3 u1 = detail::orthogonal_unit(n);
    Vec3 u2 = n.cross(u1);
    double t0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    auto at = [&](double t) { return u1 * std::cos(t) + u2 * std::sin(t); };
    // u2 = n x u1, so increasing arc runs with the orientation induced by n.
    return {at(t0 + theta), at(t0 + phi), at(t0)};
}

struct CalibrationResult {
    double c3 = 0.0;  // min (f - g) / |cos(theta + phi)| over S3 samples
    double c4 = 0.0;  // min (f - g) over S1-not-S3 samples
    std::size_t n_s3 = 0;
    std::size_t n_s1_not_s3 = 0;
    std::size_t attempts = 0;
};

// Samples coplanar configurations uniformly in (theta, phi) on random circles
// until n fall in S3 and n in S1 \ S3, then records the empirical minima that
// realize the drift constants c3 and c4.
inline CalibrationResult calibrate_constants(const RegionParams& params, std::size_t n,
                                             std::uint64_t seed) {
    params.validate();
    if (n < 1000) throw std::invalid_argument("calibrate_constants: n must be at least 1000");
    PathRng rng(seed, 0x5eed);
    CalibrationResult out;
    out.c3 = std::numeric_limits<double>::infinity();
    out.c4 = std::numeric_limits<double>::infinity();
    std::size_t max_attempts = 2000 * n;
    while ((out.n_s3 < n || out.n_s1_not_s3 < n) && out.attempts < max_attempts) {
        ++out.attempts;
        double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        Configuration c = random_great_circle_config(rng, theta, phi);
        Region r = classify_region(c, params);
        if (r == Region::Outside) continue;
        CircleCoords cc = great_circle_coords(c);
        double abs_cos = std::abs(std::cos(cc.theta + cc.phi));
        auto branches = fg(cc.theta, cc.phi);
        double diff = branches.front().f - branches.front().g;
        if ((r == Region::S3 || r == Region::S4) && out.n_s3 < n) {
            ++out.n_s3;
            if (abs_cos >= 1e-9) out.c3 = std::min(out.c3, diff / abs_cos);
        } else if ((r == Region::S1 || r == Region::S2) && out.n_s1_not_s3 < n) {
            ++out.n_s1_not_s3;
            out.c4 = std::min(out.c4, diff);
        }
    }
    if (out.n_s3 < n || out.n_s1_not_s3 < n)
        throw std::runtime_error("calibrate_constants: region sampling starved");
    return out;
}

struct FgGridReport {
    double min_f_minus_g = std::numeric_limits<double>::infinity();
    double max_identity_gap = 0.0;  // |(f - g) - 2 cos(theta+phi)(A - cos(theta-phi))|
    std::size_t count = 0;
};

// Exhaustive scan of the principal branch over an n x n grid of coplanar
// signed-arc pairs covering [-pi, pi)^2.
inline FgGridReport verify_fg_grid(std::size_t n) {
    if (n < 2) throw std::invalid_argument("verify_fg_grid: grid must be at least 2 x 2");
    FgGridReport rep;
    double step = 2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double theta = -std::numbers::pi + step * static_cast<double>(i);
        for (std::size_t j = 0; j < n; ++j) {
            double phi = -std::numbers::pi + step * static_cast<double>(j);
            const FgBranch br = fg(theta, phi).front();
            double diff = br.f - br.g;
            rep.min_f_minus_g = std::min(rep.min_f_minus_g, diff);
            rep.max_identity_gap =
                std::max(rep.max_identity_gap, std::abs(diff - f_minus_g(theta, phi, br.a)));
            ++rep.count;
        }
    }
    return rep;
}

}  // namespace mbm
