#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "phantom.hpp"
#include "special.hpp"

namespace cstk {

struct QuadratureOptions {
    std::size_t n_alpha = 64; // Gauss-Legendre nodes per parameter interval
    std::size_t n_phi = 128;  // trapezoid nodes on a full circle
    std::size_t n_arc = 32;   // Gauss-Legendre nodes per circular arc
    bool adaptive = true;
    double rel_tol = 1e-8;
    std::size_t max_nodes = 1024;
};

namespace detail {

struct Interval {
    double lo, hi;
    bool empty() const { return !(hi > lo); }
    Interval operator&(const Interval& o) const { return {std::max(lo, o.lo), std::min(hi, o.hi)}; }
};

inline double acos_c(double c) { return std::acos(std::clamp(c, -1.0, 1.0)); }
inline double asin_c(double s) { return std::asin(std::clamp(s, -1.0, 1.0)); }

// Branch angles alpha in [0, amax] where 2 - r cos(alpha) lies in [zlo, zhi].
inline Interval alpha_from_height(double r, double zlo, double zhi, double amax)
{
    return Interval{acos_c((2.0 - zlo) / r), acos_c((2.0 - zhi) / r)} & Interval{0.0, amax};
}

// Small fixed-capacity list of cut points.
struct Cuts {
    std::array<double, 24> v{};
    std::size_t n = 0;
    void add(double x)
    {
        if (n < v.size()) v[n++] = x;
    }
    double* begin() { return v.data(); }
    double* end() { return v.data() + n; }
};

template <class Value>
double adaptive_quadrature(Value&& value, const QuadratureOptions& o)
{
    QuadratureOptions q = o;
    double v = value(q);
    if (!o.adaptive) return v;
    while (q.n_alpha * 2 <= o.max_nodes) {
        q.n_alpha *= 2;
        q.n_phi = std::min(q.n_phi * 2, o.max_nodes);
        q.n_arc = std::min(q.n_arc * 2, o.max_nodes);
        double w = value(q);
        if (std::abs(w - v) <= o.rel_tol * std::abs(w)) return w;
        v = w;
    }
    return v;
}

// One primitive along one toric branch x = cx + side r sin(alpha),
// z = 2 - r cos(alpha).
inline double branch_integral(const Primitive& p, const Box3& support, double cx, double side, double r, double amax,
                              std::size_t n)
{
    Box3 b = p.bounds();
    double zl = std::max(support.lo.z, b.lo.z), zh = std::min(support.hi.z, b.hi.z);
    double xl = std::max(support.lo.x, b.lo.x), xh = std::min(support.hi.x, b.hi.x);
    if (zl > zh || xl > xh) return 0.0;
    Interval I = alpha_from_height(r, zl, zh, amax);
    if (side > 0)
        I = I & Interval{asin_c((xl - cx) / r), asin_c((xh - cx) / r)};
    else
        I = I & Interval{asin_c((cx - xh) / r), asin_c((cx - xl) / r)};
    if (I.empty()) return 0.0;

    Cuts cuts;
    cuts.add(I.lo);
    cuts.add(I.hi);
    double a = p.radius();
    double Dx = cx - p.center.x, Dz = 2.0 - p.center.z;
    if (p.kind != PrimitiveKind::box) {
        // side Dx sin(alpha) - Dz cos(alpha) = kappa
        double A = side * Dx, B = -Dz;
        double rho = std::hypot(A, B);
        double kappa = (a * a - Dx * Dx - Dz * Dz - r * r) / (2.0 * r);
        if (rho > 0 && std::abs(kappa) < rho) {
            double psi = std::atan2(B, A), s = std::asin(kappa / rho);
            for (double base : {s - psi, pi - s - psi})
                for (int m = -2; m <= 2; ++m) {
                    double t = base + 2.0 * pi * m;
                    if (t > I.lo && t < I.hi) cuts.add(t);
                }
        }
    }
    std::sort(cuts.begin(), cuts.end());

    auto point = [&](double al) { return Point3{cx + side * r * std::sin(al), 0.0, 2.0 - r * std::cos(al)}; };
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.n; ++i) {
        double lo = cuts.v[i], hi = cuts.v[i + 1];
        if (!(hi > lo)) continue;
        if (p.kind != PrimitiveKind::box) {
            Point3 m = point(0.5 * (lo + hi));
            double dx = m.x - p.center.x, dz = m.z - p.center.z;
            if (dx * dx + dz * dz > a * a) continue;
        }
        sum += integrate_gl([&](double al) { return p.value(point(al), 2); }, lo, hi, n);
    }
    return sum * r;
}

// Integral over phi in [0, 2 pi) of one primitive on the circle of radius
// rho about (x0, y0) at height z, clipped to the declared support.
inline double ring_integral(const Primitive& p, const Box3& support, double x0, double y0, double rho, double z,
                            std::size_t n_phi, std::size_t n_arc)
{
    if (z < support.lo.z || z > support.hi.z || !(rho > 0)) return 0.0;
    bool disk = p.kind != PrimitiveKind::box;
    double dzc = z - p.center.z;
    double az = 0.0;
    if (disk) {
        double a = p.radius();
        if (std::abs(dzc) >= a) return 0.0;
        az = std::sqrt((a - dzc) * (a + dzc));
    } else if (std::abs(dzc) > p.size.z) {
        return 0.0;
    }
    double ex = p.center.x - x0, ey = p.center.y - y0;
    Cuts cuts;
    if (disk) {
        double d = std::hypot(ex, ey);
        if (rho + d > az) {
            if (std::abs(rho - d) >= az) return 0.0;
            double beta = acos_c((rho * rho + d * d - az * az) / (2.0 * rho * d));
            double c = std::atan2(ey, ex);
            cuts.add(c - beta);
            cuts.add(c + beta);
        }
    } else {
        if (std::abs(ex) > p.size.x + rho || std::abs(ey) > p.size.y + rho) return 0.0;
    }
    auto vline = [&](double X) {
        double c = (X - x0) / rho;
        if (std::abs(c) < 1.0) {
            double t = std::acos(c);
            cuts.add(t);
            cuts.add(-t);
        }
    };
    auto hline = [&](double Y) {
        double s = (Y - y0) / rho;
        if (std::abs(s) < 1.0) {
            double t = std::asin(s);
            cuts.add(t);
            cuts.add(pi - t);
        }
    };
    if (!disk) {
        vline(p.center.x - p.size.x);
        vline(p.center.x + p.size.x);
        hline(p.center.y - p.size.y);
        hline(p.center.y + p.size.y);
    }
    vline(support.lo.x);
    vline(support.hi.x);
    hline(support.lo.y);
    hline(support.hi.y);

    auto at = [&](double phi) { return Point3{x0 + rho * std::cos(phi), y0 + rho * std::sin(phi), z}; };
    auto inside = [&](double phi) {
        Point3 q = at(phi);
        if (!support.contains(q, 3)) return false;
        double dx = q.x - p.center.x, dy = q.y - p.center.y;
        return disk ? dx * dx + dy * dy <= az * az : std::abs(dx) <= p.size.x && std::abs(dy) <= p.size.y;
    };
    auto f = [&](double phi) { return p.value(at(phi), 3); };

    if (cuts.n == 0) {
        if (!inside(0.0)) return 0.0;
        double s = 0.0, h = 2.0 * pi / double(n_phi);
        for (std::size_t k = 0; k < n_phi; ++k) s += f(h * double(k));
        return s * h;
    }
    double base = cuts.v[0];
    for (auto& c : cuts) {
        c = base + std::fmod(c - base, 2.0 * pi);
        if (c < base) c += 2.0 * pi;
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.add(base + 2.0 * pi);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.n; ++i) {
        double lo = cuts.v[i], hi = cuts.v[i + 1];
        if (!(hi > lo) || !inside(0.5 * (lo + hi))) continue;
        sum += integrate_gl(f, lo, hi, n_arc);
    }
    return sum;
}

// One primitive on apple sheet rho = R + sign r sin(alpha).
inline double sheet_integral(const Primitive& p, const Box3& support, double x0, double y0, double r, double R,
                             double sign, double amax, const QuadratureOptions& q)
{
    Box3 b = p.bounds();
    double zl = std::max(support.lo.z, b.lo.z), zh = std::min(support.hi.z, b.hi.z);
    if (zl > zh) return 0.0;
    Interval I = alpha_from_height(r, zl, zh, amax);
    double d = std::hypot(p.center.x - x0, p.center.y - y0);
    double axy = p.kind == PrimitiveKind::box ? std::hypot(p.size.x, p.size.y) : p.radius();
    double rl = std::max(0.0, d - axy), rh = d + axy;
    if (sign > 0)
        I = I & Interval{asin_c((rl - R) / r), asin_c((rh - R) / r)};
    else
        I = I & Interval{asin_c((R - rh) / r), asin_c((R - rl) / r)};
    if (I.empty()) return 0.0;
    auto g = [&](double al) {
        double rho = R + sign * r * std::sin(al), z = 2.0 - r * std::cos(al);
        return rho * ring_integral(p, support, x0, y0, rho, z, q.n_phi, q.n_arc);
    };
    return r * integrate_gl(g, I.lo, I.hi, q.n_alpha);
}

} // namespace detail

// Integral of a 2-D phantom over the toric section of radius r translated
// by x0, with respect to arc length.
inline double toric_transform(const Phantom& f, double x0, double r, const QuadratureOptions& opts = {})
{
    if (f.dim() != 2) throw ValidationError("toric transform needs a 2-D phantom");
    auto t = torus_params(r);
    if (r == 1.0) return 0.0;
    double amax = branch_alpha_max(r);
    auto value = [&](const QuadratureOptions& q) {
        double s = 0.0;
        for (int b = 0; b < 4; ++b) {
            double cx = (b < 2 ? t.R : -t.R) + x0, side = b % 2 == 0 ? 1.0 : -1.0;
            for (const auto& p : f.primitives()) s += detail::branch_integral(p, f.support(), cx, side, r, amax, q.n_alpha);
        }
        return s;
    };
    return detail::adaptive_quadrature(value, opts);
}

// Integral of a 3-D phantom over the apple of radius r translated by
// (x0, y0), with respect to surface area.
inline double apple_transform(const Phantom& f, double x0, double y0, double r, const QuadratureOptions& opts = {})
{
    if (f.dim() != 3) throw ValidationError("apple transform needs a 3-D phantom");
    auto t = torus_params(r);
    if (r == 1.0) return 0.0;
    double amax = branch_alpha_max(r);
    auto value = [&](const QuadratureOptions& q) {
        double s = 0.0;
        for (double sign : {1.0, -1.0})
            for (const auto& p : f.primitives())
                s += detail::sheet_integral(p, f.support(), x0, y0, r, t.R, sign, amax, q);
        return s;
    };
    return detail::adaptive_quadrature(value, opts);
}

// Integral over a family of surfaces of revolution. The height variable
// z in (1, r) is mapped through z = r - (r - 1)(1 - t)^2 so that profiles
// with an inverse square-root slope at z = r are integrated accurately.
inline double generalized_transform(const Phantom& f, const ProfileFamily& family, double x0, double y0, double r,
                                    const QuadratureOptions& opts = {})
{
    if (f.dim() != 3) throw ValidationError("generalized transform needs a 3-D phantom");
    if (!(r >= 1.0) || r > family.r_max() * (1 + 1e-12)) throw DomainError("radius outside [1, r_max]");
    for (const auto& pr : family.profiles())
        if (!pr.radius_dz) throw ValidationError("profile derivative unavailable");
    if (r == 1.0) return 0.0;
    auto t_of = [&](double z) { return 1.0 - std::sqrt(std::clamp((r - z) / (r - 1.0), 0.0, 1.0)); };
    auto value = [&](const QuadratureOptions& q) {
        double s = 0.0;
        for (const auto& pr : family.profiles())
            for (const auto& p : f.primitives()) {
                Box3 b = p.bounds();
                double hl = std::max(f.support().lo.z, b.lo.z), hh = std::min(f.support().hi.z, b.hi.z);
                if (hl > hh) continue;
                double tl = t_of(std::max(1.0, 2.0 - hh)), th = t_of(std::min(r, 2.0 - hl));
                if (!(th > tl)) continue;
                auto g = [&](double t) {
                    double u = 1.0 - t, z = r - (r - 1.0) * u * u;
                    double rho = pr.radius(r, z), slope = pr.radius_dz(r, z);
                    double w = std::sqrt(1.0 + slope * slope) * rho * 2.0 * (r - 1.0) * u;
                    return w * detail::ring_integral(p, f.support(), x0, y0, rho, 2.0 - z, q.n_phi, q.n_arc);
                };
                s += integrate_gl(g, tl, th, q.n_alpha);
            }
        return s;
    };
    return detail::adaptive_quadrature(value, opts);
}

inline double generalized_band_limit(const ProfileFamily& family)
{
    return stable_band_limit(family.r_max(), BandMode::generalized(family.max_bound()));
}

// A single branch (index 1..4) or apple sheet (1 outer, 2 inner).
struct Manifold {
    enum class Kind { branch, sheet };
    Kind kind = Kind::branch;
    int index = 1;
    double x0 = 0.0, y0 = 0.0, r = 2.0;
};

// Reference integral by a fine uniform midpoint rule over the full
// parameter range, using only point evaluation of the phantom.
inline double oracle_integral(const Phantom& f, const Manifold& m, std::size_t n)
{
    auto t = torus_params(m.r);
    double amax = branch_alpha_max(m.r);
    if (m.kind == Manifold::Kind::branch) {
        if (m.index < 1 || m.index > 4) throw DomainError("branch index must be 1..4");
        double cx = (m.index <= 2 ? t.R : -t.R) + m.x0, side = m.index % 2 == 1 ? 1.0 : -1.0;
        double h = amax / double(n), s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double al = (double(i) + 0.5) * h;
            s += f.eval({cx + side * m.r * std::sin(al), 0.0, 2.0 - m.r * std::cos(al)});
        }
        return s * m.r * h;
    }
    if (m.index != 1 && m.index != 2) throw DomainError("sheet index must be 1 or 2");
    double sign = m.index == 1 ? 1.0 : -1.0;
    std::size_t na = std::max<std::size_t>(1, std::size_t(std::sqrt(double(n) / 2.0))), nf = 2 * na;
    double ha = amax / double(na), hf = 2.0 * pi / double(nf), s = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
        double al = (double(i) + 0.5) * ha;
        double rho = t.R + sign * m.r * std::sin(al), z = 2.0 - m.r * std::cos(al);
        double ring = 0.0;
        for (std::size_t k = 0; k < nf; ++k) {
            double phi = hf * double(k);
            ring += f.eval({m.x0 + rho * std::cos(phi), m.y0 + rho * std::sin(phi), z});
        }
        s += ring * rho;
    }
    return s * m.r * ha * hf;
}

inline Sinogram sinogram_2d(const Phantom& f, const ScanConfig& cfg, const QuadratureOptions& q = {},
                            unsigned workers = 1)
{
    cfg.validate();
    if (cfg.dim != 2 || f.dim() != 2) throw ValidationError("sinogram_2d needs a 2-D phantom and scan");
    Sinogram s;
    s.dim = 2;
    s.x0 = cfg.x0;
    s.r = cfg.r_axis();
    s.r_max = cfg.r_max;
    s.delta = cfg.delta;
    s.allocate();
    parallel_for(s.r.count, workers, [&](std::size_t ir) {
        for (std::size_t ix = 0; ix < s.x0.count; ++ix) s.at(ix, 0, ir) = toric_transform(f, s.x0[ix], s.r[ir], q);
    });
    return s;
}

inline Sinogram sinogram_3d(const Phantom& f, const ScanConfig& cfg, const QuadratureOptions& q = {},
                            unsigned workers = 1)
{
    cfg.validate();
    if (cfg.dim != 3 || f.dim() != 3) throw ValidationError("sinogram_3d needs a 3-D phantom and scan");
    Sinogram s;
    s.dim = 3;
    s.x0 = cfg.x0;
    s.y0 = cfg.y0;
    s.r = cfg.r_axis();
    s.r_max = cfg.r_max;
    s.delta = cfg.delta;
    s.allocate();
    parallel_for(s.r.count * s.y0.count, workers, [&](std::size_t row) {
        std::size_t ir = row / s.y0.count, iy = row % s.y0.count;
        for (std::size_t ix = 0; ix < s.x0.count; ++ix)
            s.at(ix, iy, ir) = apple_transform(f, s.x0[ix], s.y0[iy], s.r[ir], q);
    });
    return s;
}

// Multilinear interpolation of cell-centred samples; zero outside the hull
// of the cell centres.
class GridField {
public:
    explicit GridField(const DensityGrid& g) : g_(g) {}

    double operator()(const Point3& p) const
    {
        double fx, fy = 0.0, fz;
        std::size_t ix, iy = 0, iz;
        if (!locate(g_.x, p.x, ix, fx) || !locate(g_.z, p.z, iz, fz)) return 0.0;
        if (g_.dim == 3 && !locate(g_.y, p.y, iy, fy)) return 0.0;
        std::size_t jx = std::min(ix + 1, g_.x.count - 1), jz = std::min(iz + 1, g_.z.count - 1);
        std::size_t jy = g_.dim == 3 ? std::min(iy + 1, g_.y.count - 1) : iy;
        auto plane = [&](std::size_t y) {
            double a = g_.at(ix, y, iz) * (1 - fx) + g_.at(jx, y, iz) * fx;
            double b = g_.at(ix, y, jz) * (1 - fx) + g_.at(jx, y, jz) * fx;
            return a * (1 - fz) + b * fz;
        };
        return g_.dim == 3 ? plane(iy) * (1 - fy) + plane(jy) * fy : plane(iy);
    }

private:
    static bool locate(const Axis& a, double v, std::size_t& i, double& frac)
    {
        double u = (v - a.origin) / a.spacing;
        if (u < 0.0 || u > double(a.count - 1)) return false;
        i = std::min(std::size_t(u), a.count > 1 ? a.count - 2 : 0);
        frac = a.count > 1 ? u - double(i) : 0.0;
        return true;
    }
    const DensityGrid& g_;
};

// Toric transform of an arbitrary density callable f(Point3), by composite
// Gauss-Legendre over the full branch range.
template <class Field>
double toric_transform_field(const Field& f, double x0, double r, std::size_t n_alpha = 16, std::size_t panels = 64)
{
    auto t = torus_params(r);
    if (r == 1.0) return 0.0;
    double amax = branch_alpha_max(r), s = 0.0, w = amax / double(panels);
    for (int b = 0; b < 4; ++b) {
        double cx = (b < 2 ? t.R : -t.R) + x0, side = b % 2 == 0 ? 1.0 : -1.0;
        auto g = [&](double al) { return f(Point3{cx + side * r * std::sin(al), 0.0, 2.0 - r * std::cos(al)}); };
        for (std::size_t k = 0; k < panels; ++k) s += integrate_gl(g, w * double(k), w * double(k + 1), n_alpha);
    }
    return s * r;
}

template <class Field>
double apple_transform_field(const Field& f, double x0, double y0, double r, std::size_t n_alpha = 16,
                             std::size_t panels = 32, std::size_t n_phi = 256)
{
    auto t = torus_params(r);
    if (r == 1.0) return 0.0;
    double amax = branch_alpha_max(r), s = 0.0, w = amax / double(panels), hf = 2.0 * pi / double(n_phi);
    for (double sign : {1.0, -1.0}) {
        auto g = [&](double al) {
            double rho = t.R + sign * r * std::sin(al), z = 2.0 - r * std::cos(al), ring = 0.0;
            for (std::size_t k = 0; k < n_phi; ++k) {
                double phi = hf * double(k);
                ring += f(Point3{x0 + rho * std::cos(phi), y0 + rho * std::sin(phi), z});
            }
            return ring * hf * rho;
        };
        for (std::size_t k = 0; k < panels; ++k) s += integrate_gl(g, w * double(k), w * double(k + 1), n_alpha);
    }
    return s * r;
}

// Reprojection of a sampled density (multilinear interpolation).
inline Sinogram sinogram_from_grid(const DensityGrid& g, const ScanConfig& cfg, unsigned workers = 1)
{
    cfg.validate();
    if (g.dim != cfg.dim) throw ValidationError("grid and scan dimensions differ");
    GridField field(g);
    Sinogram s;
    s.dim = cfg.dim;
    s.x0 = cfg.x0;
    s.y0 = cfg.dim == 3 ? cfg.y0 : Axis{0.0, 1.0, 1};
    s.r = cfg.r_axis();
    s.r_max = cfg.r_max;
    s.delta = cfg.delta;
    s.allocate();
    parallel_for(s.r.count * s.y0.count, workers, [&](std::size_t row) {
        std::size_t ir = row / s.y0.count, iy = row % s.y0.count;
        for (std::size_t ix = 0; ix < s.x0.count; ++ix)
            s.at(ix, iy, ir) = cfg.dim == 2 ? toric_transform_field(field, s.x0[ix], s.r[ir])
                                            : apple_transform_field(field, s.x0[ix], s.y0[iy], s.r[ir]);
    });
    return s;
}

// Additive white Gaussian noise, deterministic for a given seed.
inline void add_noise(Sinogram& s, double sigma, std::uint64_t seed)
{
    if (!(sigma >= 0)) throw ValidationError("noise level must be non-negative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    for (auto& v : s.values) v += n(rng);
}

} // namespace cstk
