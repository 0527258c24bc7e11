#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "phantom.hpp"
#include "spectral.hpp"
#include "volterra.hpp"

namespace cstk {

inline double normalizer_2d(double omega, double s)
{
    if (s < 1.0) throw DomainError("normalizer needs s >= 1");
    return std::cos(omega * std::sqrt(s - 1.0));
}

inline double normalizer_3d(double omega_abs, double s)
{
    if (s < 1.0) throw DomainError("normalizer needs s >= 1");
    double q = std::sqrt(s - 1.0);
    return 2.0 * q * bessel_j0(omega_abs * q);
}

struct PipelineOptions {
    std::size_t pad_factor = 4;
    double eps_norm = 0.1;   // frequencies whose normalizer dips below this are dropped
    std::size_t n_s = 0;     // s samples; 0 means 2 n_r
    double eps_r = 1e-6;     // 2-D s grid starts at (1 + eps_r)^2
    double r_floor = 1e-3;   // guard on the apple radius in the 3-D kernel
    unsigned workers = 1;    // 0: all hardware threads
    bool amplification = false;
};

struct FrequencyDiagnostic {
    double omega_x = 0.0;
    double omega_y = 0.0;
    double omega = 0.0; // |omega|
    bool retained = false;
    double normalizer_min = 0.0;
    double residual = 0.0;
    double resolvent_bound = 0.0;
    double amplification = 0.0; // weighted 2-norm of the column map (if requested)
};

struct ReconstructionResult {
    DensityGrid grid;
    StableBand band; // mask actually applied (dropped frequencies zeroed)
    std::vector<FrequencyDiagnostic> diagnostics;
    double seconds = 0.0;
};

namespace detail {

inline Axis s_grid(const ScanConfig& cfg, const PipelineOptions& o)
{
    std::size_t ns = o.n_s ? o.n_s : 2 * cfg.n_r;
    if (ns < 16) throw ValidationError("s grid needs at least 16 samples");
    double s_lo = cfg.dim == 2 ? (1.0 + o.eps_r) * (1.0 + o.eps_r) : (1.0 + cfg.delta) * (1.0 + cfg.delta);
    double s_hi = cfg.r_max * cfg.r_max;
    return {s_lo, (s_hi - s_lo) / double(ns - 1), ns};
}

inline double normalizer_min(int dim, double omega, const Axis& s)
{
    double m = INFINITY;
    for (std::size_t j = 0; j < s.count; ++j)
        m = std::min(m, std::abs(dim == 2 ? normalizer_2d(omega, s[j]) : normalizer_3d(omega, s[j])));
    return m;
}

// Per-|omega| linear map from a data column on the r grid to a density
// column on the zeta grid.
struct ColumnMap {
    int dim = 2;
    double omega = 0.0;
    Axis r, s, zeta;
    std::vector<double> normalizer; // divisor applied in the chain
    double normalizer_min = 0.0;
    VolterraSystem system;

    std::vector<cplx> operator()(std::span<const cplx> column, double* residual = nullptr) const
    {
        auto h = substitute_column(column, r, s, dim, true);
        std::vector<cplx> g1;
        if (dim == 2) {
            for (std::size_t j = 0; j < h.size(); ++j) h[j] /= normalizer[j];
            auto G = abel_apply<cplx>(h, s.spacing);
            g1 = abel_derivative<cplx>(G, s.spacing, AbelNormalizer::inverse_pi);
        } else {
            auto G = abel_apply<cplx>(h, s.spacing);
            g1 = abel_derivative<cplx>(G, s.spacing, AbelNormalizer::none);
            for (std::size_t j = 0; j < g1.size(); ++j) g1[j] /= normalizer[j];
        }
        auto f2 = solve_second_kind<cplx>(system, g1);
        if (residual) *residual = second_kind_residual<cplx>(system, f2, g1);
        return unsubstitute_column(f2, s, zeta, dim == 3);
    }
};

inline ColumnMap make_column_map(int dim, double omega, const Axis& r, const Axis& s, const Axis& zeta)
{
    ColumnMap m;
    m.dim = dim;
    m.omega = omega;
    m.r = r;
    m.s = s;
    m.zeta = zeta;
    m.normalizer.resize(s.count);
    m.normalizer_min = normalizer_min(dim, omega, s);
    for (std::size_t j = 0; j < s.count; ++j) {
        double n = dim == 2 ? normalizer_2d(omega, s[j]) : normalizer_3d(omega, s[j]);
        // 3-D: G'(s) carries K1(s, s) = 2 pi^2 normalizer_3d
        m.normalizer[j] = dim == 2 ? n : 2.0 * pi * pi * n;
    }
    return m;
}

inline void attach_kernel(ColumnMap& m, const PipelineOptions& o)
{
    if (m.dim == 2) {
        double w = m.omega;
        m.system.lambda = -w * w / (2.0 * pi);
        m.system.kernel = KernelTable::build_difference(m.s, [&](double t) { return kernel_2d(t, 0.0, w); });
    } else {
        m.system.lambda = 1.0;
        m.system.kernel = KernelTable::build(m.s, [&](double s, double z) {
            return kernel_3d_dK1(s, z, m.omega, o.r_floor);
        });
        for (std::size_t i = 0; i < m.s.count; ++i) m.system.kernel.scale_row(i, 1.0 / m.normalizer[i]);
    }
}

// Weighted 2-norm sqrt(dzeta) M / sqrt(dr) of the (real) column map.
inline double column_map_norm(const ColumnMap& m)
{
    std::size_t nr = m.r.count, nz = m.zeta.count;
    std::vector<double> M(nz * nr);
    std::vector<cplx> e(nr, 0.0);
    double scale = std::sqrt(m.zeta.spacing / m.r.spacing);
    for (std::size_t j = 0; j < nr; ++j) {
        e[j] = 1.0;
        auto c = m(e);
        for (std::size_t i = 0; i < nz; ++i) M[i * nr + j] = scale * c[i].real();
        e[j] = 0.0;
    }
    std::vector<double> v(nr, 1.0), w(nz);
    double sigma = 0.0;
    for (int it = 0; it < 500; ++it) {
        for (std::size_t i = 0; i < nz; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < nr; ++j) s += M[i * nr + j] * v[j];
            w[i] = s;
        }
        std::fill(v.begin(), v.end(), 0.0);
        for (std::size_t i = 0; i < nz; ++i)
            for (std::size_t j = 0; j < nr; ++j) v[j] += M[i * nr + j] * w[i];
        double nv = 0;
        for (double x : v) nv += x * x;
        nv = std::sqrt(nv);
        if (nv == 0) return 0.0;
        for (double& x : v) x /= nv;
        double next = std::sqrt(nv);
        if (std::abs(next - sigma) <= 1e-12 * next) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    return sigma;
}

inline void check_inputs(const Sinogram& sino, const ScanConfig& cfg, const StableBand& band,
                         const PipelineOptions& o)
{
    cfg.validate(true);
    if (sino.dim != cfg.dim || band.dim != cfg.dim) throw ValidationError("dimension mismatch between inputs");
    if (!(sino.r == cfg.r_axis()) || !(sino.x0 == cfg.x0) || (cfg.dim == 3 && !(sino.y0 == cfg.y0)))
        throw ValidationError("sinogram sampling does not match the scan configuration");
    if (sino.values.size() != sino.size()) throw ValidationError("sinogram value count mismatch");
    Axis wx = frequency_axis(padded_axis(cfg.x0, o.pad_factor));
    auto close = [](const Axis& a, const Axis& b) {
        return a.count == b.count && std::abs(a.spacing - b.spacing) <= 1e-12 * std::abs(a.spacing);
    };
    if (!close(wx, band.omega_x)) throw ValidationError("band does not match the padded DFT grid");
    if (cfg.dim == 3 && !close(frequency_axis(padded_axis(cfg.y0, o.pad_factor)), band.omega_y))
        throw ValidationError("band does not match the padded DFT grid");
    if (cfg.n_r < 64) throw ValidationError("inversion needs at least 64 radii");
}

inline ReconstructionResult reconstruct(const Sinogram& sino, const ScanConfig& cfg, const StableBand& band,
                                        const PipelineOptions& o)
{
    auto t0 = std::chrono::steady_clock::now();
    check_inputs(sino, cfg, band, o);
    int dim = cfg.dim;
    Axis s = s_grid(cfg, o);
    double dzeta = (cfg.r_max - 1.0) / double(cfg.n_z);
    Axis zeta{1.0 + 0.5 * dzeta, dzeta, cfg.n_z};
    if (0.5 * dzeta <= o.eps_r) throw ValidationError("height grid too fine for eps_r");

    SpectralSinogram spec = dft_translations(sino, o.pad_factor);
    std::size_t plane = spec.plane(), nr = cfg.n_r;

    // Candidate frequencies and their |omega| groups.
    std::vector<std::size_t> active;
    std::map<double, std::size_t> group_of;
    std::vector<double> group_omega;
    for (std::size_t k = 0; k < plane; ++k) {
        if (band.weights[k] <= 0.0) continue;
        active.push_back(k);
        double w = band.omega_abs(k % band.omega_x.count, k / band.omega_x.count);
        if (!group_of.count(w)) {
            group_of[w] = group_omega.size();
            group_omega.push_back(w);
        }
    }
    // Signed omega matters in 2-D only through cos and omega^2, so |omega| groups suffice.
    std::vector<ColumnMap> maps(group_omega.size());
    std::vector<char> usable(group_omega.size());
    for (std::size_t g = 0; g < maps.size(); ++g) {
        maps[g] = make_column_map(dim, group_omega[g], sino.r, s, zeta);
        usable[g] = maps[g].normalizer_min > o.eps_norm;
    }
    parallel_for(maps.size(), o.workers, [&](std::size_t g) {
        if (usable[g]) attach_kernel(maps[g], o);
    });

    ReconstructionResult res;
    res.band = band;
    res.diagnostics.resize(active.size());
    std::vector<cplx> out(plane * cfg.n_z, 0.0);
    std::vector<double> amp(maps.size(), 0.0);
    if (o.amplification)
        parallel_for(maps.size(), o.workers, [&](std::size_t g) {
            if (usable[g]) amp[g] = column_map_norm(maps[g]);
        });

    parallel_for(active.size(), o.workers, [&](std::size_t a) {
        std::size_t k = active[a];
        std::size_t kx = k % band.omega_x.count, ky = k / band.omega_x.count;
        std::size_t g = group_of.at(band.omega_abs(kx, ky));
        const ColumnMap& m = maps[g];
        FrequencyDiagnostic& d = res.diagnostics[a];
        d.omega_x = band.omega_x[kx];
        d.omega_y = dim == 3 ? band.omega_y[ky] : 0.0;
        d.omega = m.omega;
        d.normalizer_min = m.normalizer_min;
        d.retained = usable[g];
        if (!d.retained) return;
        std::vector<cplx> col(nr);
        for (std::size_t i = 0; i < nr; ++i) col[i] = spec.values[i * plane + k];
        auto f1 = m(col, &d.residual);
        d.resolvent_bound = resolvent_bound(m.system);
        d.amplification = amp[g];
        for (std::size_t i = 0; i < cfg.n_z; ++i) out[i * plane + k] = band.weights[k] * f1[i];
    });
    for (const auto& d : res.diagnostics)
        if (!d.retained) {
            std::size_t kx = std::size_t(std::llround((d.omega_x - band.omega_x.origin) / band.omega_x.spacing));
            std::size_t ky = dim == 3 ? std::size_t(std::llround((d.omega_y - band.omega_y.origin) / band.omega_y.spacing)) : 0;
            res.band.weights[ky * band.omega_x.count + kx] = 0.0;
        }

    Axis xp = padded_axis(cfg.x0, o.pad_factor);
    Axis yp = dim == 3 ? padded_axis(cfg.y0, o.pad_factor) : Axis{0.0, 1.0, 1};
    translation_idft(out, cfg.n_z, xp, yp);
    DensityGrid f1;
    f1.dim = dim;
    f1.x = xp;
    f1.y = yp;
    f1.z = zeta;
    f1.r_max = cfg.r_max;
    f1.delta = cfg.delta;
    f1.values.resize(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) f1.values[i] = out[i].real();
    res.grid = reflect_z(f1);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace detail

// 2-D inversion: translation DFT, s = r^2 substitution, division by the
// normalizer, Abel transform and derivative, second-kind Volterra solve with
// lambda = -omega^2 / (2 pi), back-substitution, band mask, inverse DFT and
// reflection z -> 2 - z.
inline ReconstructionResult reconstruct_2d(const Sinogram& sino, const ScanConfig& cfg, const StableBand& band,
                                           const PipelineOptions& opts = {})
{
    if (cfg.dim != 2) throw ValidationError("reconstruct_2d needs a 2-D configuration");
    return detail::reconstruct(sino, cfg, band, opts);
}

// 3-D inversion: as in 2-D with the apple kernels; G' is divided by
// K1(s, s) = 2 pi^2 normalizer_3d and the kernel is dK1/ds / K1(s, s).
inline ReconstructionResult reconstruct_3d(const Sinogram& sino, const ScanConfig& cfg, const StableBand& band,
                                           const PipelineOptions& opts = {})
{
    if (cfg.dim != 3) throw ValidationError("reconstruct_3d needs a 3-D configuration");
    return detail::reconstruct(sino, cfg, band, opts);
}

// The mask reconstruct applies: `band` with every frequency whose normalizer
// falls to eps_norm or below on the s grid set to zero.
inline StableBand retained_band(const ScanConfig& cfg, const StableBand& band, const PipelineOptions& opts = {})
{
    Axis s = detail::s_grid(cfg, opts);
    StableBand out = band;
    std::map<double, bool> keep;
    for (std::size_t ky = 0; ky < band.omega_y.count; ++ky)
        for (std::size_t kx = 0; kx < band.omega_x.count; ++kx) {
            double& w = out.weights[ky * band.omega_x.count + kx];
            if (w <= 0.0) continue;
            double om = band.omega_abs(kx, ky);
            auto it = keep.find(om);
            if (it == keep.end()) it = keep.emplace(om, detail::normalizer_min(cfg.dim, om, s) > opts.eps_norm).first;
            if (!it->second) w = 0.0;
        }
    return out;
}

struct Metrics {
    double rmse = 0.0;
    double psnr = 0.0;
    double band_rmse = 0.0;
};

inline constexpr double psnr_sentinel = 999.0;

inline Metrics metrics(const DensityGrid& recon, const DensityGrid& ref, const StableBand* band = nullptr)
{
    check_same_shape(recon, ref);
    auto rmse_of = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s / double(a.size()));
    };
    Metrics m;
    m.rmse = rmse_of(recon.values, ref.values);
    double peak = 0;
    for (double v : ref.values) peak = std::max(peak, std::abs(v));
    if (m.rmse == 0.0)
        m.psnr = psnr_sentinel;
    else
        m.psnr = 20.0 * std::log10((peak > 0 ? peak : 1.0) / m.rmse);
    if (band) {
        auto a = band_limited_reference(recon, *band), b = band_limited_reference(ref, *band);
        m.band_rmse = rmse_of(a.values, b.values);
    } else {
        m.band_rmse = m.rmse;
    }
    return m;
}

// ||recon - ref|| / ||ref|| over the cells inside `region` (all cells if null).
inline double relative_l2(const DensityGrid& recon, const DensityGrid& ref, const Box3* region = nullptr)
{
    check_same_shape(recon, ref);
    double num = 0, den = 0;
    for (std::size_t iz = 0; iz < ref.z.count; ++iz)
        for (std::size_t iy = 0; iy < ref.y.count; ++iy)
            for (std::size_t ix = 0; ix < ref.x.count; ++ix) {
                Point3 p{ref.x[ix], ref.dim == 3 ? ref.y[iy] : 0.0, ref.z[iz]};
                if (region && !region->contains(p, ref.dim)) continue;
                double d = recon.at(ix, iy, iz) - ref.at(ix, iy, iz);
                num += d * d;
                den += ref.at(ix, iy, iz) * ref.at(ix, iy, iz);
            }
    if (den == 0) throw ValidationError("reference has no energy in the region");
    return std::sqrt(num / den);
}

// Bound on band_rmse per unit of sinogram noise: the largest weighted column-map
// norm over retained frequencies times the data-to-cell measure ratio. `noise_l2`
// is the unweighted 2-norm of the noise samples. Needs amplification diagnostics.
inline double noise_rmse_bound(const ReconstructionResult& res, const Sinogram& sino, double noise_l2)
{
    double gain = 0;
    for (const auto& d : res.diagnostics)
        if (d.retained) gain = std::max(gain, d.amplification);
    double data_cell = sino.x0.spacing * sino.r.spacing * (sino.dim == 3 ? sino.y0.spacing : 1.0);
    const auto& g = res.grid;
    double out_cell = g.cell_volume();
    return gain * noise_l2 * std::sqrt(data_cell) / std::sqrt(out_cell * double(g.size()));
}

} // namespace cstk
