#pragma once

// Minimal graph surfaces z = u(x, y) over planar domains with boundary.
// Each surface supplies the exact first and second derivatives of u plus a
// signed distance to the domain boundary (negative inside).

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mbm/linalg.hpp"

namespace mbm {

struct Bounds {
    Vec2 lo;
    Vec2 hi;
};

struct FlatHalfPlane {
    static constexpr const char* name() { return "flat_half_plane"; }
    double height(Vec2) const { return 0.0; }
    Vec2 grad(Vec2) const { return {0.0, 0.0}; }
    Mat2 hess(Vec2) const { return {0.0, 0.0, 0.0}; }
    double signed_distance(Vec2 p) const { return -p.x; }
    Bounds sample_box() const { return {{0.0, -3.0}, {3.0, 3.0}}; }
};

// u = arccosh(r) on {r > 1}; the upper half of a catenoid.
struct HalfCatenoid {
    static constexpr const char* name() { return "half_catenoid"; }
    double height(Vec2 p) const { return std::acosh(p.norm()); }
    Vec2 grad(Vec2 p) const {
        double r = p.norm();
        double ur = 1.0 / std::sqrt(r * r - 1.0);
        return p * (ur / r);
    }
    Mat2 hess(Vec2 p) const {
        double r2 = p.norm2(), r = std::sqrt(r2);
        double ur = 1.0 / std::sqrt(r2 - 1.0);
        double urr = -r * ur * ur * ur;
        double c = (urr - ur / r) / r2;
        return {urr * p.x * p.x / r2 + ur * p.y * p.y / (r2 * r),
                c * p.x * p.y,
                urr * p.y * p.y / r2 + ur * p.x * p.x / (r2 * r)};
    }
    double signed_distance(Vec2 p) const { return 1.0 - p.norm(); }
    Bounds sample_box() const { return {{-4.0, -4.0}, {4.0, 4.0}}; }
};

// u = arctan(y/x) on {x > 0}; one graph sheet of the helicoid.
struct HelicoidGraph {
    static constexpr const char* name() { return "helicoid_graph"; }
    double height(Vec2 p) const { return std::atan(p.y / p.x); }
    Vec2 grad(Vec2 p) const {
        double rho2 = p.norm2();
        return {-p.y / rho2, p.x / rho2};
    }
    Mat2 hess(Vec2 p) const {
        double rho4 = p.norm2() * p.norm2();
        return {2.0 * p.x * p.y / rho4, (p.y * p.y - p.x * p.x) / rho4, -2.0 * p.x * p.y / rho4};
    }
    double signed_distance(Vec2 p) const { return -p.x; }
    Bounds sample_box() const { return {{0.0, -3.0}, {3.0, 3.0}}; }
};

// u = log(cos x / cos y) on the square [-s, s]^2, s < pi/2.
struct ScherkPatch {
    explicit ScherkPatch(double s = 1.2) : s_(s) {
        if (!(s > 0.0 && s < std::numbers::pi / 2.0))
            throw std::invalid_argument("scherk: side parameter must lie in (0, pi/2)");
    }
    static constexpr const char* name() { return "scherk"; }
    double side() const { return s_; }
    double height(Vec2 p) const { return std::log(std::cos(p.x) / std::cos(p.y)); }
    Vec2 grad(Vec2 p) const { return {-std::tan(p.x), std::tan(p.y)}; }
    Mat2 hess(Vec2 p) const {
        double cx = std::cos(p.x), cy = std::cos(p.y);
        return {-1.0 / (cx * cx), 0.0, 1.0 / (cy * cy)};
    }
    double signed_distance(Vec2 p) const { return std::max(std::abs(p.x), std::abs(p.y)) - s_; }
    Bounds sample_box() const { return {{-s_, -s_}, {s_, s_}}; }

  private:
    double s_;
};

// Arbitrary user-supplied graph with the same interface.
struct CustomSurface {
    std::string label = "custom";
    std::function<double(Vec2)> height_fn;
    std::function<Vec2(Vec2)> grad_fn;
    std::function<Mat2(Vec2)> hess_fn;
    std::function<double(Vec2)> signed_distance_fn;
    Bounds box{{-1.0, -1.0}, {1.0, 1.0}};

    const char* name() const { return label.c_str(); }
    double height(Vec2 p) const { return height_fn(p); }
    Vec2 grad(Vec2 p) const { return grad_fn(p); }
    Mat2 hess(Vec2 p) const { return hess_fn(p); }
    double signed_distance(Vec2 p) const { return signed_distance_fn(p); }
    Bounds sample_box() const { return box; }
};

template <class S>
bool inside(const S& surf, Vec2 p) {
    return surf.signed_distance(p) < 0.0;
}

template <class S>
void require_inside(const S& surf, Vec2 p) {
    if (!inside(surf, p))
        throw std::domain_error(std::string(surf.name()) + ": point (" + std::to_string(p.x) +
                                ", " + std::to_string(p.y) + ") is outside the domain interior");
}

// Upward unit normal m = (-u_x, -u_y, 1) / sqrt(1 + |grad u|^2).
template <class S>
Vec3 gauss_map(const S& surf, Vec2 p) {
    require_inside(surf, p);
    Vec2 g = surf.grad(p);
    double w = std::sqrt(1.0 + g.norm2());
    return {-g.x / w, -g.y / w, 1.0 / w};
}

// K = det(Hess u) / (1 + |grad u|^2)^2; nonpositive on minimal graphs.
template <class S>
double gauss_curvature(const S& surf, Vec2 p) {
    require_inside(surf, p);
    double w2 = 1.0 + surf.grad(p).norm2();
    return surf.hess(p).det() / (w2 * w2);
}

struct MetricData {
    Mat2 g;
    Mat2 g_inv;
    double sqrt_det = 1.0;
};

// Graph metric g = I + grad u grad u^T; sqrt(det g) = sqrt(1 + |grad u|^2).
template <class S>
MetricData metric_data(const S& surf, Vec2 p) {
    require_inside(surf, p);
    Vec2 g = surf.grad(p);
    double w2 = 1.0 + g.norm2();
    Mat2 metric{1.0 + g.x * g.x, g.x * g.y, 1.0 + g.y * g.y};
    Mat2 inv{1.0 - g.x * g.x / w2, -g.x * g.y / w2, 1.0 - g.y * g.y / w2};
    return {metric, inv, std::sqrt(w2)};
}

// Minimal surface operator (1 + u_y^2) u_xx - 2 u_x u_y u_xy + (1 + u_x^2) u_yy;
// identically zero on exact minimal graphs.
template <class S>
double minimal_residual(const S& surf, Vec2 p) {
    require_inside(surf, p);
    Vec2 g = surf.grad(p);
    Mat2 h = surf.hess(p);
    return (1.0 + g.y * g.y) * h.xx - 2.0 * g.x * g.y * h.xy + (1.0 + g.x * g.x) * h.yy;
}

using CatalogSurface = std::variant<FlatHalfPlane, HalfCatenoid, HelicoidGraph, ScherkPatch>;

inline std::vector<std::string> catalog_names() {
    return {FlatHalfPlane::name(), HalfCatenoid::name(), HelicoidGraph::name(),
            ScherkPatch::name()};
}

inline CatalogSurface make_surface(const std::string& name,
                                   const std::map<std::string, double>& params = {}) {
    if (name == FlatHalfPlane::name()) return FlatHalfPlane{};
    if (name == HalfCatenoid::name()) return HalfCatenoid{};
    if (name == HelicoidGraph::name()) return HelicoidGraph{};
    if (name == ScherkPatch::name()) {
        auto it = params.find("side");
        return it == params.end() ? ScherkPatch{} : ScherkPatch{it->second};
    }
    throw std::invalid_argument("unknown surface: " + name);
}

inline const char* surface_name(const CatalogSurface& s) {
    return std::visit([](const auto& surf) { return surf.name(); }, s);
}

}  // namespace mbm
