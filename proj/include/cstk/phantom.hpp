#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "axis.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "spectral.hpp"

namespace cstk {

struct Point3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

// Closed axis-aligned box; the y range is ignored in 2-D.
struct Box3 {
    Point3 lo, hi;

    bool contains(const Point3& p, int dim) const
    {
        if (p.x < lo.x || p.x > hi.x || p.z < lo.z || p.z > hi.z) return false;
        return dim == 2 || (p.y >= lo.y && p.y <= hi.y);
    }
};

inline constexpr double gaussian_cutoff = 6.0;

enum class PrimitiveKind { gaussian, ball, box };

// gaussian: size.x = sigma, truncated at 6 sigma
// ball:     size.x = radius
// box:      size = half-widths
// In 2-D points are (x, z) and the y components are ignored.
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::gaussian;
    Point3 center;
    Point3 size;
    double amplitude = 1.0;

    // Radius of the spherical support (gaussian, ball).
    double radius() const { return kind == PrimitiveKind::gaussian ? gaussian_cutoff * size.x : size.x; }

    Box3 bounds() const
    {
        Point3 h = kind == PrimitiveKind::box ? size : Point3{radius(), radius(), radius()};
        return {{center.x - h.x, center.y - h.y, center.z - h.z}, {center.x + h.x, center.y + h.y, center.z + h.z}};
    }

    double value(const Point3& p, int dim) const
    {
        double dx = p.x - center.x, dy = dim == 3 ? p.y - center.y : 0.0, dz = p.z - center.z;
        switch (kind) {
        case PrimitiveKind::gaussian: {
            double d2 = dx * dx + dy * dy + dz * dz, s = size.x;
            if (d2 > gaussian_cutoff * gaussian_cutoff * s * s) return 0.0;
            return amplitude * std::exp(-d2 / (2.0 * s * s));
        }
        case PrimitiveKind::ball:
            return dx * dx + dy * dy + dz * dz <= size.x * size.x ? amplitude : 0.0;
        default:
            return std::abs(dx) <= size.x && std::abs(dz) <= size.z && (dim == 2 || std::abs(dy) <= size.y)
                       ? amplitude
                       : 0.0;
        }
    }
};

class Phantom {
public:
    Phantom(int dim, std::vector<Primitive> primitives, std::optional<Box3> support = std::nullopt)
        : dim_(dim), primitives_(std::move(primitives))
    {
        if (dim != 2 && dim != 3) throw ValidationError("phantom dim must be 2 or 3");
        for (const auto& p : primitives_) {
            bool bad = !(p.size.x > 0) || (p.kind == PrimitiveKind::box && (!(p.size.z > 0) || (dim == 3 && !(p.size.y > 0))));
            if (bad) throw ValidationError("primitive sizes must be positive");
            if (!std::isfinite(p.amplitude)) throw ValidationError("primitive amplitude must be finite");
        }
        if (support) {
            support_ = *support;
        } else {
            if (primitives_.empty()) throw ValidationError("empty phantom needs an explicit support");
            support_ = primitives_.front().bounds();
            for (const auto& p : primitives_) {
                auto b = p.bounds();
                support_.lo = {std::min(support_.lo.x, b.lo.x), std::min(support_.lo.y, b.lo.y), std::min(support_.lo.z, b.lo.z)};
                support_.hi = {std::max(support_.hi.x, b.hi.x), std::max(support_.hi.y, b.hi.y), std::max(support_.hi.z, b.hi.z)};
            }
        }
        if (dim == 2) {
            support_.lo.y = 0.0;
            support_.hi.y = 0.0;
        }
        if (!(support_.lo.x < support_.hi.x && support_.lo.z < support_.hi.z && support_.lo.y <= support_.hi.y))
            throw ValidationError("phantom support box is empty");
    }

    int dim() const { return dim_; }
    const std::vector<Primitive>& primitives() const { return primitives_; }
    const Box3& support() const { return support_; }

    double eval(const Point3& p) const
    {
        if (!support_.contains(p, dim_)) return 0.0;
        double v = 0.0;
        for (const auto& q : primitives_) v += q.value(p, dim_);
        return v;
    }

    // f(x - dx, y - dy, z)
    Phantom translated(double dx, double dy = 0.0) const
    {
        auto prims = primitives_;
        for (auto& p : prims) {
            p.center.x += dx;
            p.center.y += dy;
        }
        Box3 s = support_;
        s.lo.x += dx;
        s.hi.x += dx;
        if (dim_ == 3) {
            s.lo.y += dy;
            s.hi.y += dy;
        }
        return Phantom(dim_, std::move(prims), s);
    }

private:
    int dim_;
    std::vector<Primitive> primitives_;
    Box3 support_;
};

// Cell-centred samples on explicit axes, without support checks.
inline DensityGrid sample_on(const Phantom& f, const Axis& x, const Axis& y, const Axis& z)
{
    DensityGrid g;
    g.dim = f.dim();
    g.x = x;
    g.y = f.dim() == 3 ? y : Axis{0.0, 1.0, 1};
    g.z = z;
    g.allocate();
    for (std::size_t iz = 0; iz < g.z.count; ++iz)
        for (std::size_t iy = 0; iy < g.y.count; ++iy)
            for (std::size_t ix = 0; ix < g.x.count; ++ix)
                g.at(ix, iy, iz) = f.eval({g.x[ix], f.dim() == 3 ? g.y[iy] : 0.0, g.z[iz]});
    return g;
}

// Samples the phantom on the scan grid after checking that its support lies
// in the strip 2 - r_max < z < 1 - delta and inside the translation window.
inline DensityGrid sample_grid(const Phantom& f, const ScanConfig& cfg)
{
    cfg.validate();
    if (f.dim() != cfg.dim) throw ValidationError("phantom and scan dimensions differ");
    const auto& s = f.support();
    if (!(s.lo.z > 2.0 - cfg.r_max && s.hi.z < 1.0 - cfg.delta))
        throw ValidationError("phantom support leaves the strip 2 - r_max < z < 1 - delta");
    auto covers = [](const Axis& a, double lo, double hi) {
        return lo >= a.front() - 0.5 * a.spacing && hi <= a.back() + 0.5 * a.spacing;
    };
    if (!covers(cfg.x0, s.lo.x, s.hi.x) || (cfg.dim == 3 && !covers(cfg.y0, s.lo.y, s.hi.y)))
        throw ValidationError("translation grid does not cover the phantom support");
    DensityGrid g = sample_on(f, cfg.x0, cfg.y0, cfg.z_axis());
    g.r_max = cfg.r_max;
    g.delta = cfg.delta;
    return g;
}

// Applies the band mask along the translation axes of every z slice.
inline DensityGrid band_limited_reference(const DensityGrid& g, const StableBand& band)
{
    Axis wx = frequency_axis(g.x);
    Axis wy = g.dim == 3 ? frequency_axis(g.y) : Axis{0.0, 1.0, 1};
    auto close = [](const Axis& a, const Axis& b) {
        return a.count == b.count && std::abs(a.spacing - b.spacing) <= 1e-12 * std::abs(a.spacing);
    };
    if (band.dim != g.dim || !close(wx, band.omega_x) || (g.dim == 3 && !close(wy, band.omega_y)))
        throw ValidationError("band frequency grid does not match the grid's DFT grid");
    std::size_t plane = g.x.count * g.y.count;
    std::vector<cplx> v(g.values.begin(), g.values.end());
    Axis y = g.dim == 3 ? g.y : Axis{0.0, 1.0, 1};
    translation_dft(v, g.z.count, g.x, y);
    for (std::size_t iz = 0; iz < g.z.count; ++iz)
        for (std::size_t k = 0; k < plane; ++k) v[iz * plane + k] *= band.weights[k];
    translation_idft(v, g.z.count, g.x, y);
    DensityGrid out = g;
    for (std::size_t i = 0; i < v.size(); ++i) out.values[i] = v[i].real();
    return out;
}

// Band-limited phantom on centred axes x (and y): samples on a grid refined by
// `oversample`, keeps the central block of its translation DFT (the frequencies
// of the coarse grid), applies the mask and evaluates on the coarse axes.
inline DensityGrid band_limited_phantom(const Phantom& f, const Axis& x, const Axis& y, const Axis& z,
                                        const StableBand& band, std::size_t oversample = 4)
{
    int dim = f.dim();
    Axis yy = dim == 3 ? y : Axis{0.0, 1.0, 1};
    if (oversample < 1) throw ValidationError("oversample must be at least 1");
    if (!is_centered(x) || (dim == 3 && !is_centered(yy))) throw ValidationError("band-limited phantom needs centred axes");
    Axis wx = frequency_axis(x), wy = dim == 3 ? frequency_axis(yy) : Axis{0.0, 1.0, 1};
    auto close = [](const Axis& a, const Axis& b) {
        return a.count == b.count && std::abs(a.spacing - b.spacing) <= 1e-12 * std::abs(a.spacing);
    };
    if (band.dim != dim || !close(wx, band.omega_x) || (dim == 3 && !close(wy, band.omega_y)))
        throw ValidationError("band frequency grid does not match the axes");
    std::size_t m = oversample;
    Axis xf = centered_axis(x.count * m, x.spacing / double(m));
    Axis yf = dim == 3 ? centered_axis(yy.count * m, yy.spacing / double(m)) : yy;
    std::size_t ox = xf.count / 2 - x.count / 2, oy = dim == 3 ? yf.count / 2 - yy.count / 2 : 0;
    DensityGrid out;
    out.dim = dim;
    out.x = x;
    out.y = yy;
    out.z = z;
    out.allocate();
    std::size_t plane = x.count * yy.count;
    std::vector<cplx> fine(xf.count * yf.count), coarse(plane);
    for (std::size_t iz = 0; iz < z.count; ++iz) {
        for (std::size_t iy = 0; iy < yf.count; ++iy)
            for (std::size_t ix = 0; ix < xf.count; ++ix)
                fine[iy * xf.count + ix] = f.eval({xf[ix], dim == 3 ? yf[iy] : 0.0, z[iz]});
        translation_dft(fine, 1, xf, yf);
        for (std::size_t ky = 0; ky < yy.count; ++ky)
            for (std::size_t kx = 0; kx < x.count; ++kx)
                coarse[ky * x.count + kx] = band.weights[ky * x.count + kx] * fine[(ky + oy) * xf.count + kx + ox];
        translation_idft(coarse, 1, x, yy);
        for (std::size_t k = 0; k < plane; ++k) out.values[iz * plane + k] = coarse[k].real();
    }
    return out;
}

} // namespace cstk
