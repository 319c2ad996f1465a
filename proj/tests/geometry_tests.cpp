// Surface catalog: closed-form spot values, interior-sample invariants, and
// finite-difference agreement of the analytic derivatives.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <variant>

#include "mbm/graph_sim.hpp"
#include "mbm/rng.hpp"
#include "mbm/surfaces.hpp"

namespace {

using namespace mbm;

constexpr double kPi = std::numbers::pi;

// Rejection-sample a point with signed distance below -margin.
template <class S>
Vec2 sample_interior(const S& surf, PathRng& rng, double margin = 0.0) {
    Bounds box = surf.sample_box();
    for (int tries = 0; tries < 100000; ++tries) {
        Vec2 p{rng.uniform(box.lo.x, box.hi.x), rng.uniform(box.lo.y, box.hi.y)};
        if (surf.signed_distance(p) < -margin) return p;
    }
    throw std::runtime_error("interior sampling starved");
}

template <class S>
void check_interior_invariants(const S& surf, std::uint64_t seed) {
    PathRng rng(seed, 0);
    for (int i = 0; i < 10000; ++i) {
        Vec2 p = sample_interior(surf, rng);
        EXPECT_LE(std::abs(minimal_residual(surf, p)), 1e-9) << surf.name();
        EXPECT_LE(gauss_curvature(surf, p), 1e-12) << surf.name();
        Vec3 n = gauss_map(surf, p);
        EXPECT_NEAR(n.norm(), 1.0, 1e-12);
        EXPECT_GT(n.z, 0.0);
    }
}

TEST(Geometry, CatalogLists4Surfaces) {
    auto names = catalog_names();
    ASSERT_EQ(names.size(), 4u);
    for (const auto& name : names) {
        CatalogSurface s = make_surface(name);
        EXPECT_EQ(surface_name(s), name);
    }
    EXPECT_THROW(make_surface("moebius"), std::invalid_argument);
}

TEST(Geometry, GaussMapSpotValues) {
    FlatHalfPlane flat;
    Vec3 nf = gauss_map(flat, {1.0, 0.0});
    EXPECT_NEAR(nf.x, 0.0, 1e-15);
    EXPECT_NEAR(nf.y, 0.0, 1e-15);
    EXPECT_NEAR(nf.z, 1.0, 1e-15);

    HelicoidGraph hel;
    Vec3 nh = gauss_map(hel, {1.0, 0.0});
    double s2 = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(nh.x, 0.0, 1e-14);
    EXPECT_NEAR(nh.y, -s2, 1e-14);
    EXPECT_NEAR(nh.z, s2, 1e-14);

    HalfCatenoid cat;
    Vec3 nc = gauss_map(cat, {2.0, 0.0});
    EXPECT_NEAR(nc.x, -0.5, 1e-14);
    EXPECT_NEAR(nc.y, 0.0, 1e-14);
    EXPECT_NEAR(nc.z, std::sqrt(3.0) / 2.0, 1e-14);
}

TEST(Geometry, GaussCurvatureSpotValues) {
    FlatHalfPlane flat;
    EXPECT_EQ(gauss_curvature(flat, {1.0, 0.5}), 0.0);

    HalfCatenoid cat;
    EXPECT_NEAR(gauss_curvature(cat, {2.0, 0.0}), -1.0 / 16.0, 1e-10);

    ScherkPatch sch;
    EXPECT_NEAR(gauss_curvature(sch, {0.0, 0.0}), -1.0, 1e-10);
}

TEST(Geometry, MetricSpotValues) {
    FlatHalfPlane flat;
    MetricData mf = metric_data(flat, {1.0, 0.0});
    EXPECT_EQ(mf.g.xx, 1.0);
    EXPECT_EQ(mf.g.xy, 0.0);
    EXPECT_EQ(mf.g.yy, 1.0);
    EXPECT_EQ(mf.sqrt_det, 1.0);

    HelicoidGraph hel;
    MetricData mh = metric_data(hel, {1.0, 0.0});
    EXPECT_NEAR(mh.g.xx, 1.0, 1e-14);
    EXPECT_NEAR(mh.g.xy, 0.0, 1e-14);
    EXPECT_NEAR(mh.g.yy, 2.0, 1e-14);
    EXPECT_NEAR(mh.sqrt_det, std::sqrt(2.0), 1e-14);

    HalfCatenoid cat;
    MetricData mc = metric_data(cat, {2.0, 0.0});
    EXPECT_NEAR(mc.g.xx, 4.0 / 3.0, 1e-14);
    EXPECT_NEAR(mc.g.xy, 0.0, 1e-14);
    EXPECT_NEAR(mc.g.yy, 1.0, 1e-14);
    EXPECT_NEAR(mc.sqrt_det, 2.0 / std::sqrt(3.0), 1e-14);
}

TEST(Geometry, MetricInverseIsExact) {
    PathRng rng(77, 0);
    auto check = [&](const auto& surf) {
        for (int i = 0; i < 200; ++i) {
            Vec2 p = sample_interior(surf, rng);
            MetricData md = metric_data(surf, p);
            // g * g_inv = I entrywise.
            EXPECT_NEAR(md.g.xx * md.g_inv.xx + md.g.xy * md.g_inv.xy, 1.0, 1e-12);
            EXPECT_NEAR(md.g.xx * md.g_inv.xy + md.g.xy * md.g_inv.yy, 0.0, 1e-12);
            EXPECT_NEAR(md.g.xy * md.g_inv.xy + md.g.yy * md.g_inv.yy, 1.0, 1e-12);
            EXPECT_NEAR(md.sqrt_det * md.sqrt_det, md.g.det(), 1e-12);
        }
    };
    check(FlatHalfPlane{});
    check(HalfCatenoid{});
    check(HelicoidGraph{});
    check(ScherkPatch{});
}

TEST(Geometry, MinimalResidualSpotValues) {
    FlatHalfPlane flat;
    EXPECT_EQ(minimal_residual(flat, {2.0, 1.0}), 0.0);

    HelicoidGraph hel;
    EXPECT_NEAR(minimal_residual(hel, {1.0, 1.0}), 0.0, 1e-12);

    ScherkPatch sch;
    EXPECT_NEAR(minimal_residual(sch, {0.3, -0.2}), 0.0, 1e-12);
}

TEST(Geometry, InteriorInvariants10kSamples) {
    check_interior_invariants(FlatHalfPlane{}, 101);
    check_interior_invariants(HalfCatenoid{}, 102);
    check_interior_invariants(HelicoidGraph{}, 103);
    check_interior_invariants(ScherkPatch{}, 104);
}

// Gradient is checked against central differences of the height; the Hessian
// against central differences of the analytic gradient, which keeps the
// difference-quotient roundoff floor far below the tolerance.
template <class S>
void check_derivatives_fd(const S& surf, std::uint64_t seed) {
    PathRng rng(seed, 1);
    const double h = 1e-5;
    auto rel = [](double got, double want) {
        return std::abs(got - want) / std::max(1.0, std::abs(want));
    };
    for (int i = 0; i < 300; ++i) {
        Vec2 p = sample_interior(surf, rng, 0.01);
        Vec2 g = surf.grad(p);
        double fd_gx = (surf.height({p.x + h, p.y}) - surf.height({p.x - h, p.y})) / (2.0 * h);
        double fd_gy = (surf.height({p.x, p.y + h}) - surf.height({p.x, p.y - h})) / (2.0 * h);
        EXPECT_LE(rel(g.x, fd_gx), 1e-6) << surf.name();
        EXPECT_LE(rel(g.y, fd_gy), 1e-6) << surf.name();

        Mat2 hess = surf.hess(p);
        Vec2 gxp = surf.grad({p.x + h, p.y}), gxm = surf.grad({p.x - h, p.y});
        Vec2 gyp = surf.grad({p.x, p.y + h}), gym = surf.grad({p.x, p.y - h});
        EXPECT_LE(rel(hess.xx, (gxp.x - gxm.x) / (2.0 * h)), 1e-6) << surf.name();
        EXPECT_LE(rel(hess.xy, (gyp.x - gym.x) / (2.0 * h)), 1e-6) << surf.name();
        EXPECT_LE(rel(hess.yy, (gyp.y - gym.y) / (2.0 * h)), 1e-6) << surf.name();
    }
}

TEST(Geometry, DerivativesMatchFiniteDifferences) {
    check_derivatives_fd(FlatHalfPlane{}, 201);
    check_derivatives_fd(HalfCatenoid{}, 202);
    check_derivatives_fd(HelicoidGraph{}, 203);
    check_derivatives_fd(ScherkPatch{}, 204);
}

TEST(Geometry, DomainErrors) {
    EXPECT_THROW(gauss_map(FlatHalfPlane{}, {-1.0, 0.0}), std::domain_error);
    EXPECT_THROW(gauss_curvature(HalfCatenoid{}, {0.5, 0.0}), std::domain_error);
    EXPECT_THROW(metric_data(HelicoidGraph{}, {-0.1, 1.0}), std::domain_error);
    EXPECT_THROW(minimal_residual(ScherkPatch{}, {1.5, 0.0}), std::domain_error);
    // Boundary points are not interior.
    EXPECT_THROW(gauss_map(FlatHalfPlane{}, {0.0, 0.0}), std::domain_error);
}

TEST(Geometry, ScherkParameterValidation) {
    EXPECT_THROW(ScherkPatch{kPi / 2.0}, std::invalid_argument);
    EXPECT_THROW(ScherkPatch{1.6}, std::invalid_argument);
    EXPECT_THROW(ScherkPatch{0.0}, std::invalid_argument);
    EXPECT_THROW(make_surface("scherk", {{"side", 2.0}}), std::invalid_argument);
    ScherkPatch sch;                     // default side 1.2
    EXPECT_DOUBLE_EQ(sch.side(), 1.2);
    EXPECT_FALSE(inside(sch, {1.5, 0.0}));
    EXPECT_TRUE(inside(sch, {1.1, -1.1}));
}

TEST(Geometry, SignedDistanceExamples) {
    EXPECT_DOUBLE_EQ(HalfCatenoid{}.signed_distance({2.0, 0.0}), -1.0);
    EXPECT_DOUBLE_EQ(FlatHalfPlane{}.signed_distance({1.0, 5.0}), -1.0);
    EXPECT_DOUBLE_EQ(ScherkPatch{}.signed_distance({0.0, 0.0}), -1.2);
    EXPECT_DOUBLE_EQ(HelicoidGraph{}.signed_distance({0.25, -2.0}), -0.25);
}

TEST(Geometry, CustomSurfaceFitsTheInterface) {
    CustomSurface plane;
    plane.label = "tilted";
    plane.height_fn = [](Vec2 p) { return 0.5 * p.x; };
    plane.grad_fn = [](Vec2) { return Vec2{0.5, 0.0}; };
    plane.hess_fn = [](Vec2) { return Mat2{0.0, 0.0, 0.0}; };
    plane.signed_distance_fn = [](Vec2 p) { return -p.x; };
    EXPECT_EQ(minimal_residual(plane, {1.0, 0.0}), 0.0);
    EXPECT_EQ(gauss_curvature(plane, {1.0, 0.0}), 0.0);
    Vec3 n = gauss_map(plane, {1.0, 0.0});
    EXPECT_NEAR(n.x, -0.5 / std::sqrt(1.25), 1e-15);
}

TEST(Geometry, ItoCoefficientsFlatAndHelicoid) {
    ItoCoefficients flat = ito_coefficients(FlatHalfPlane{}, {1.0, 0.0});
    EXPECT_EQ(flat.drift.x, 0.0);
    EXPECT_EQ(flat.drift.y, 0.0);
    EXPECT_EQ(flat.diffusion.xx, 1.0);
    EXPECT_EQ(flat.diffusion.xy, 0.0);
    EXPECT_EQ(flat.diffusion.yy, 1.0);

    ItoCoefficients hel = ito_coefficients(HelicoidGraph{}, {1.0, 0.0});
    Mat2 d = hel.diffusion;
    EXPECT_NEAR(d.xx * d.xx + d.xy * d.xy, 1.0, 1e-12);
    EXPECT_NEAR(d.xx * d.xy + d.xy * d.yy, 0.0, 1e-12);
    EXPECT_NEAR(d.xy * d.xy + d.yy * d.yy, 0.5, 1e-12);
}

TEST(Geometry, DiffusionSquaresToInverseMetric) {
    PathRng rng(303, 0);
    auto check = [&](const auto& surf) {
        for (int i = 0; i < 200; ++i) {
            Vec2 p = sample_interior(surf, rng);
            Mat2 d = ito_coefficients(surf, p).diffusion;
            Mat2 gi = metric_data(surf, p).g_inv;
            EXPECT_NEAR(d.xx * d.xx + d.xy * d.xy, gi.xx, 1e-12) << surf.name();
            EXPECT_NEAR(d.xx * d.xy + d.xy * d.yy, gi.xy, 1e-12) << surf.name();
            EXPECT_NEAR(d.xy * d.xy + d.yy * d.yy, gi.yy, 1e-12) << surf.name();
        }
    };
    check(FlatHalfPlane{});
    check(HalfCatenoid{});
    check(HelicoidGraph{});
    check(ScherkPatch{});
}

// b^i = (1 / 2 sqrt(G)) d_j (sqrt(G) g^{ij}), differenced on the closed-form
// metric data.
template <class S>
void check_drift_fd(const S& surf, Vec2 p) {
    const double h = 1e-6;
    auto flux = [&](Vec2 q) {
        MetricData md = metric_data(surf, q);
        return Mat2{md.sqrt_det * md.g_inv.xx, md.sqrt_det * md.g_inv.xy,
                    md.sqrt_det * md.g_inv.yy};
    };
    Mat2 fxp = flux({p.x + h, p.y}), fxm = flux({p.x - h, p.y});
    Mat2 fyp = flux({p.x, p.y + h}), fym = flux({p.x, p.y - h});
    double div_x = (fxp.xx - fxm.xx) / (2.0 * h) + (fyp.xy - fym.xy) / (2.0 * h);
    double div_y = (fxp.xy - fxm.xy) / (2.0 * h) + (fyp.yy - fym.yy) / (2.0 * h);
    double inv_2w = 0.5 / metric_data(surf, p).sqrt_det;
    Vec2 b = ito_coefficients(surf, p).drift;
    EXPECT_NEAR(b.x, inv_2w * div_x, 1e-6) << surf.name();
    EXPECT_NEAR(b.y, inv_2w * div_y, 1e-6) << surf.name();
}

TEST(Geometry, DriftMatchesDivergenceForm) {
    check_drift_fd(HalfCatenoid{}, {2.0, 0.0});
    check_drift_fd(HalfCatenoid{}, {-1.7, 2.2});
    check_drift_fd(HelicoidGraph{}, {1.0, 0.0});
    check_drift_fd(HelicoidGraph{}, {0.8, -1.3});
    check_drift_fd(ScherkPatch{}, {0.4, 0.7});
    check_drift_fd(FlatHalfPlane{}, {2.0, 1.0});

    // A non-minimal graph exercises the nonzero-drift branch.
    CustomSurface parab;
    parab.label = "paraboloid";
    parab.height_fn = [](Vec2 p) { return 0.5 * p.norm2(); };
    parab.grad_fn = [](Vec2 p) { return p; };
    parab.hess_fn = [](Vec2) { return Mat2{1.0, 0.0, 1.0}; };
    parab.signed_distance_fn = [](Vec2 p) { return p.norm() - 1.0; };
    check_drift_fd(parab, {0.5, 0.3});
    check_drift_fd(parab, {-0.2, 0.6});
    double rho2 = 0.5 * 0.5 + 0.3 * 0.3, w2 = 1.0 + rho2;
    Vec2 b = ito_coefficients(parab, {0.5, 0.3}).drift;
    EXPECT_NEAR(b.x, -0.5 * (2.0 + rho2) / (2.0 * w2 * w2), 1e-14);
    EXPECT_NEAR(b.y, -0.3 * (2.0 + rho2) / (2.0 * w2 * w2), 1e-14);
}

}  // namespace
