#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "axis.hpp"
#include "error.hpp"
#include "fft.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "special.hpp"

namespace cstk {

using cplx = std::complex<double>;

namespace detail {

// e^{-i omega_k x_first} for the centered frequencies of axis x.
inline std::vector<cplx> origin_phase(const Axis& x)
{
    std::size_t n = x.count;
    Axis w = frequency_axis(x);
    std::vector<cplx> ph(n);
    bool exact = n % 2 == 0 && x.origin == -double(n / 2) * x.spacing;
    for (std::size_t c = 0; c < n; ++c) {
        long k = long(c) - long(n / 2);
        ph[c] = exact ? cplx((k % 2 == 0) ? 1.0 : -1.0, 0.0) : std::polar(1.0, -w[c] * x.origin);
    }
    return ph;
}

inline std::size_t dft_index(std::size_t c, std::size_t n)
{
    long k = long(c) - long(n / 2);
    return std::size_t((k + long(n)) % long(n));
}

} // namespace detail

// Continuum-scaled DFT over the translation axes of `batch` contiguous
// slices of ny * nx samples each:
//   F(omega) = (2 pi)^{-d/2} sum f(x) e^{-i omega x} dx   (d = 1 or 2),
// output in centered frequency order. ny = 1 selects the 1-D transform.
inline void translation_dft(std::vector<cplx>& data, std::size_t batch, const Axis& x, const Axis& y)
{
    std::size_t nx = x.count, ny = y.count, m = nx * ny;
    if (data.size() != batch * m) throw ValidationError("translation_dft: data size mismatch");
    auto px = detail::origin_phase(x);
    std::vector<cplx> py = ny > 1 ? detail::origin_phase(y) : std::vector<cplx>{1.0};
    double scale = x.spacing / std::sqrt(2.0 * pi);
    if (ny > 1) scale *= y.spacing / std::sqrt(2.0 * pi);
    std::vector<cplx> tmp(m);
    for (std::size_t b = 0; b < batch; ++b) {
        cplx* s = data.data() + b * m;
        fft_inplace(s, ny, nx, FftDirection::forward);
        for (std::size_t cy = 0; cy < ny; ++cy) {
            std::size_t my = ny > 1 ? detail::dft_index(cy, ny) : 0;
            for (std::size_t cx = 0; cx < nx; ++cx)
                tmp[cy * nx + cx] = s[my * nx + detail::dft_index(cx, nx)] * (px[cx] * py[cy] * scale);
        }
        std::copy(tmp.begin(), tmp.end(), s);
    }
}

// Inverse of translation_dft; x and y are the spatial axes.
inline void translation_idft(std::vector<cplx>& data, std::size_t batch, const Axis& x, const Axis& y)
{
    std::size_t nx = x.count, ny = y.count, m = nx * ny;
    if (data.size() != batch * m) throw ValidationError("translation_idft: data size mismatch");
    auto px = detail::origin_phase(x);
    std::vector<cplx> py = ny > 1 ? detail::origin_phase(y) : std::vector<cplx>{1.0};
    double scale = frequency_axis(x).spacing / std::sqrt(2.0 * pi);
    if (ny > 1) scale *= frequency_axis(y).spacing / std::sqrt(2.0 * pi);
    std::vector<cplx> tmp(m);
    for (std::size_t b = 0; b < batch; ++b) {
        cplx* s = data.data() + b * m;
        for (std::size_t cy = 0; cy < ny; ++cy) {
            std::size_t my = ny > 1 ? detail::dft_index(cy, ny) : 0;
            for (std::size_t cx = 0; cx < nx; ++cx)
                tmp[my * nx + detail::dft_index(cx, nx)] = s[cy * nx + cx] * std::conj(px[cx] * py[cy]) * scale;
        }
        std::copy(tmp.begin(), tmp.end(), s);
        fft_inplace(s, ny, nx, FftDirection::backward);
    }
}

// Sinogram after the translation DFT; values [radial][ky][kx]. The radial
// axis is r for data-side spectra and s = r^2 after substitution.
struct SpectralSinogram {
    int dim = 2;
    Axis omega_x, omega_y{0.0, 1.0, 1};
    Axis radial;
    bool radial_is_s = false;
    std::vector<cplx> values;
    double r_max = 0.0;
    double delta = 0.0;

    std::size_t plane() const { return omega_x.count * omega_y.count; }
};

// Zero-pads the translation axes by `pad` and transforms.
inline SpectralSinogram dft_translations(const Sinogram& sino, std::size_t pad = 1)
{
    Axis xp = padded_axis(sino.x0, pad);
    Axis yp = sino.dim == 3 ? padded_axis(sino.y0, pad) : Axis{0.0, 1.0, 1};
    std::size_t ox = (xp.count - sino.x0.count) / 2, oy = sino.dim == 3 ? (yp.count - sino.y0.count) / 2 : 0;
    SpectralSinogram out;
    out.dim = sino.dim;
    out.omega_x = frequency_axis(xp);
    out.omega_y = sino.dim == 3 ? frequency_axis(yp) : Axis{0.0, 1.0, 1};
    out.radial = sino.r;
    out.r_max = sino.r_max;
    out.delta = sino.delta;
    std::size_t m = xp.count * yp.count;
    out.values.assign(m * sino.r.count, 0.0);
    for (std::size_t ir = 0; ir < sino.r.count; ++ir)
        for (std::size_t iy = 0; iy < sino.y0.count; ++iy)
            for (std::size_t ix = 0; ix < sino.x0.count; ++ix)
                out.values[ir * m + (iy + oy) * xp.count + ix + ox] = sino.at(ix, iy, ir);
    translation_dft(out.values, sino.r.count, xp, yp);
    return out;
}

// Back to (padded) translation space; the imaginary part is discarded.
inline Sinogram idft_translations(const SpectralSinogram& spec)
{
    if (spec.radial_is_s) throw ValidationError("idft_translations expects an r-indexed spectrum");
    Sinogram s;
    s.dim = spec.dim;
    s.x0 = centered_axis(spec.omega_x.count, 2.0 * pi / (double(spec.omega_x.count) * spec.omega_x.spacing));
    s.y0 = spec.dim == 3 ? centered_axis(spec.omega_y.count,
                                         2.0 * pi / (double(spec.omega_y.count) * spec.omega_y.spacing))
                         : Axis{0.0, 1.0, 1};
    s.r = spec.radial;
    s.r_max = spec.r_max;
    s.delta = spec.delta;
    auto v = spec.values;
    translation_idft(v, spec.radial.count, s.x0, s.y0);
    s.values.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) s.values[i] = v[i].real();
    return s;
}

// |‖f‖ - ‖F f‖| / ‖f‖ for samples on a centered axis with spacing dx.
inline double plancherel_residual(std::span<const double> f, double dx)
{
    Axis x = centered_axis(f.size(), dx);
    std::vector<cplx> v(f.begin(), f.end());
    translation_dft(v, 1, x, Axis{0.0, 1.0, 1});
    double a = 0, b = 0;
    for (double t : f) a += t * t * dx;
    double dw = frequency_axis(x).spacing;
    for (auto c : v) b += std::norm(c) * dw;
    a = std::sqrt(a);
    b = std::sqrt(b);
    if (a == 0) return b;
    return std::abs(a - b) / a;
}

// Local four-point Lagrange interpolation on a uniform grid (linear in the
// data, exact for cubics). Points slightly outside are extrapolated.
template <class T>
T cubic_interp(std::span<const T> v, double origin, double h, double x)
{
    std::size_t n = v.size();
    if (n < 4) throw ValidationError("interpolation needs at least 4 samples");
    double u = (x - origin) / h;
    long i = long(std::floor(u)) - 1;
    i = std::clamp(i, 0L, long(n) - 4);
    double t = u - double(i);
    double w0 = -(t - 1) * (t - 2) * (t - 3) / 6.0;
    double w1 = t * (t - 2) * (t - 3) / 2.0;
    double w2 = -t * (t - 1) * (t - 3) / 2.0;
    double w3 = t * (t - 1) * (t - 2) / 6.0;
    return w0 * v[i] + w1 * v[i + 1] + w2 * v[i + 2] + w3 * v[i + 3];
}

// s = r^2 resampling of one radial column given on r_i = r.origin + i dr.
// anchor_unit prepends the node r = 1 with value 0.
// Result: column(sqrt(s)) / (c sqrt(s)), c = 4 in 2-D and 1 in 3-D.
inline std::vector<cplx> substitute_column(std::span<const cplx> column, const Axis& r, const Axis& s, int dim,
                                           bool anchor_unit)
{
    if (column.size() != r.count) throw ValidationError("column length does not match radial axis");
    if (!(s.origin > 1.0 - 1e-15) || s.back() > r.back() * r.back() * (1 + 1e-12))
        throw DomainError("s grid outside (1, r_max^2]");
    std::vector<cplx> nodes;
    double origin = r.origin;
    if (anchor_unit) {
        if (std::abs(r.origin - r.spacing - 1.0) > 1e-9 * r.spacing)
            throw ValidationError("anchor at r = 1 requires r_0 = 1 + dr");
        nodes.push_back(0.0);
        origin = 1.0;
    }
    nodes.insert(nodes.end(), column.begin(), column.end());
    double c = dim == 2 ? 4.0 : 1.0;
    std::vector<cplx> out(s.count);
    for (std::size_t j = 0; j < s.count; ++j) {
        double rs = std::sqrt(s[j]);
        out[j] = cubic_interp<cplx>(nodes, origin, r.spacing, rs) / (c * rs);
    }
    return out;
}

// zeta-grid density from the s-grid density: f1(zeta) = 2 zeta f2(zeta^2).
// Points with zeta^2 below the s range are zero when zero_below is set.
inline std::vector<cplx> unsubstitute_column(std::span<const cplx> f2, const Axis& s, const Axis& zeta,
                                             bool zero_below)
{
    if (f2.size() != s.count) throw ValidationError("column length does not match s axis");
    std::vector<cplx> out(zeta.count);
    double tol = 1e-9 * s.spacing;
    for (std::size_t i = 0; i < zeta.count; ++i) {
        double z = zeta[i], z2 = z * z;
        if (z2 > s.back() + tol) throw DomainError("zeta^2 beyond the s grid");
        if (z2 < s.origin - tol) {
            if (zero_below) {
                out[i] = 0.0;
                continue;
            }
            throw DomainError("zeta^2 below the s grid");
        }
        out[i] = 2.0 * z * cubic_interp<cplx>(f2, s.origin, s.spacing, z2);
    }
    return out;
}

inline SpectralSinogram substitute_square(const SpectralSinogram& spec, const Axis& s, bool anchor_unit = false)
{
    if (spec.radial_is_s) throw ValidationError("spectrum is already s-indexed");
    if (spec.radial.count < 64) throw ValidationError("substitution needs at least 64 radial samples");
    SpectralSinogram out = spec;
    out.radial = s;
    out.radial_is_s = true;
    std::size_t m = spec.plane();
    out.values.assign(m * s.count, 0.0);
    std::vector<cplx> col(spec.radial.count);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < spec.radial.count; ++i) col[i] = spec.values[i * m + k];
        auto c = substitute_column(col, spec.radial, s, spec.dim, anchor_unit);
        for (std::size_t j = 0; j < s.count; ++j) out.values[j * m + k] = c[j];
    }
    return out;
}

inline SpectralSinogram substitute_square_2d(const SpectralSinogram& spec, const Axis& s, bool anchor_unit = false)
{
    if (spec.dim != 2) throw ValidationError("expected a 2-D spectrum");
    return substitute_square(spec, s, anchor_unit);
}

inline SpectralSinogram substitute_square_3d(const SpectralSinogram& spec, const Axis& s, bool anchor_unit = false)
{
    if (spec.dim != 3) throw ValidationError("expected a 3-D spectrum");
    return substitute_square(spec, s, anchor_unit);
}

// Inverse change of variables on every column; radial axis becomes zeta.
inline SpectralSinogram unsubstitute(const SpectralSinogram& spec, const Axis& zeta, bool zero_below = false)
{
    if (!spec.radial_is_s) throw ValidationError("unsubstitute expects an s-indexed spectrum");
    SpectralSinogram out = spec;
    out.radial = zeta;
    out.radial_is_s = false;
    std::size_t m = spec.plane();
    out.values.assign(m * zeta.count, 0.0);
    std::vector<cplx> col(spec.radial.count);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < spec.radial.count; ++i) col[i] = spec.values[i * m + k];
        auto c = unsubstitute_column(col, spec.radial, zeta, zero_below);
        for (std::size_t j = 0; j < zeta.count; ++j) out.values[j * m + k] = c[j];
    }
    return out;
}

// z -> 2 - z; the z axis is reversed and the values flipped.
inline DensityGrid reflect_z(const DensityGrid& g)
{
    DensityGrid out = g;
    out.z.origin = 2.0 - g.z.back();
    std::size_t plane = g.x.count * g.y.count, nz = g.z.count;
    for (std::size_t iz = 0; iz < nz; ++iz)
        std::copy_n(g.values.begin() + (nz - 1 - iz) * plane, plane, out.values.begin() + iz * plane);
    return out;
}

// Raised-cosine window: 1 below (1 - taper) omega_max, 0 from omega_max on.
inline double band_weight(double omega_abs, double omega_max, double taper)
{
    if (omega_abs >= omega_max) return 0.0;
    double knee = (1.0 - taper) * omega_max;
    if (omega_abs <= knee) return 1.0;
    return 0.5 * (1.0 + std::cos(pi * (omega_abs - knee) / (taper * omega_max)));
}

// Frequency mask on the DFT grid of the padded translation axes; the weight
// depends on |omega| (omega_1 in 2-D, |(omega_1, omega_2)| in 3-D).
struct StableBand {
    int dim = 2;
    Axis omega_x, omega_y{0.0, 1.0, 1};
    std::vector<double> weights; // [ky][kx]
    double omega_max = 0.0;
    double taper = 0.0;

    double omega_abs(std::size_t kx, std::size_t ky) const
    {
        return dim == 3 ? std::hypot(omega_x[kx], omega_y[ky]) : std::abs(omega_x[kx]);
    }
    double weight(std::size_t kx, std::size_t ky = 0) const { return weights[ky * omega_x.count + kx]; }
};

inline StableBand make_band(int dim, const Axis& wx, const Axis& wy, double omega_max, double taper)
{
    if (!(taper >= 0.0 && taper <= 1.0)) throw ValidationError("taper must lie in [0, 1]");
    StableBand b;
    b.dim = dim;
    b.omega_x = wx;
    b.omega_y = dim == 3 ? wy : Axis{0.0, 1.0, 1};
    b.omega_max = omega_max;
    b.taper = taper;
    b.weights.resize(b.omega_x.count * b.omega_y.count);
    for (std::size_t ky = 0; ky < b.omega_y.count; ++ky)
        for (std::size_t kx = 0; kx < b.omega_x.count; ++kx)
            b.weights[ky * wx.count + kx] = band_weight(b.omega_abs(kx, ky), omega_max, taper);
    return b;
}

inline StableBand build_stable_band(const ScanConfig& cfg, BandMode mode, double taper, std::size_t pad = 4)
{
    cfg.validate();
    Axis wx = frequency_axis(padded_axis(cfg.x0, pad));
    Axis wy = cfg.dim == 3 ? frequency_axis(padded_axis(cfg.y0, pad)) : Axis{0.0, 1.0, 1};
    return make_band(cfg.dim, wx, wy, stable_band_limit(cfg.r_max, mode), taper);
}

} // namespace cstk
