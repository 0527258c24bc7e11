#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cstk/forward.hpp"
#include "cstk/reconstruct.hpp"

using namespace cstk;

namespace {

ScanConfig scan_2d(std::size_t n, double dx, std::size_t nr)
{
    ScanConfig c;
    c.x0 = centered_axis(n, dx);
    c.n_r = nr;
    c.n_z = nr;
    return c;
}

ScanConfig scan_3d(std::size_t n, double dx, std::size_t nr, std::size_t nz)
{
    ScanConfig c;
    c.dim = 3;
    c.delta = 0.1;
    c.x0 = centered_axis(n, dx);
    c.y0 = c.x0;
    c.n_r = nr;
    c.n_z = nz;
    return c;
}

Phantom gaussian_2d()
{
    Primitive p;
    p.center = {0.0, 0.0, 0.3};
    p.size = {0.15, 0.0, 0.0};
    return Phantom(2, {p}, Box3{{-0.9, 0.0, 0.01}, {0.9, 0.0, 0.99}});
}

Phantom gaussian_3d()
{
    Primitive p;
    p.center = {0.0, 0.0, 0.45};
    p.size = {0.07, 0.0, 0.0};
    return Phantom(3, {p});
}

Sinogram random_sino(const ScanConfig& c, std::uint64_t seed)
{
    Sinogram s;
    s.dim = c.dim;
    s.x0 = c.x0;
    s.y0 = c.dim == 3 ? c.y0 : Axis{0.0, 1.0, 1};
    s.r = c.r_axis();
    s.r_max = c.r_max;
    s.delta = c.delta;
    s.allocate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    for (auto& v : s.values) v = g(rng);
    return s;
}

double max_abs(const std::vector<double>& v)
{
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

TEST(Normalizer, Values)
{
    EXPECT_EQ(normalizer_2d(0.0, 3.0), 1.0);
    EXPECT_NEAR(normalizer_2d(0.5 * pi / std::sqrt(3.0), 4.0), 0.0, 1e-15);
    EXPECT_NEAR(normalizer_2d(1.0, 2.0), std::cos(1.0), 1e-15);
    EXPECT_EQ(normalizer_3d(0.7, 1.0), 0.0);
    EXPECT_NEAR(normalizer_3d(0.0, 2.0), 2.0, 1e-15);
    EXPECT_NEAR(normalizer_3d(2.404825557695773 / std::sqrt(3.0), 4.0), 0.0, 1e-14);
    EXPECT_THROW(normalizer_2d(1.0, 0.5), DomainError);
    EXPECT_THROW(normalizer_3d(1.0, 0.5), DomainError);
}

TEST(Reconstruct2D, ZeroSinogramGivesZero)
{
    auto c = scan_2d(64, 0.08, 64);
    auto s = random_sino(c, 1);
    std::fill(s.values.begin(), s.values.end(), 0.0);
    auto res = reconstruct_2d(s, c, build_stable_band(c, BandMode::toric(), 0.25, 4));
    EXPECT_EQ(max_abs(res.grid.values), 0.0);
    EXPECT_EQ(res.grid.x.count, 256u);
    EXPECT_NEAR(res.grid.z.front(), 2.0 - c.r_max + 0.5 * (c.r_max - 1) / 64, 1e-12);
}

TEST(Reconstruct2D, GaussianMatchesBandLimitedPhantom)
{
    auto c = scan_2d(256, 0.04, 256);
    auto f = gaussian_2d();
    auto sino = sinogram_2d(f, c);
    auto band = build_stable_band(c, BandMode::toric(), 0.25, 4);
    auto res = reconstruct_2d(sino, c, band);
    auto ref = band_limited_phantom(f, res.grid.x, res.grid.y, res.grid.z, res.band, 4);
    double err = relative_l2(res.grid, ref, &f.support());
    EXPECT_LT(err, 0.15);
    for (const auto& d : res.diagnostics)
        if (d.retained) { EXPECT_LT(d.residual, 1e-10); }
}

TEST(Reconstruct2D, Linearity)
{
    auto c = scan_2d(64, 0.08, 64);
    auto band = build_stable_band(c, BandMode::toric(), 0.25, 4);
    auto a = random_sino(c, 2), b = random_sino(c, 3), ab = a;
    for (std::size_t i = 0; i < ab.values.size(); ++i) ab.values[i] = 1.5 * a.values[i] - 0.25 * b.values[i];
    auto ra = reconstruct_2d(a, c, band), rb = reconstruct_2d(b, c, band), rab = reconstruct_2d(ab, c, band);
    double scale = max_abs(rab.grid.values);
    for (std::size_t i = 0; i < rab.grid.values.size(); ++i)
        EXPECT_NEAR(rab.grid.values[i], 1.5 * ra.grid.values[i] - 0.25 * rb.grid.values[i], 1e-8 * scale);
}

TEST(Reconstruct2D, TranslationEquivariance)
{
    auto c = scan_2d(256, 0.04, 64);
    auto band = build_stable_band(c, BandMode::toric(), 0.25, 4);
    auto f = gaussian_2d();
    int k = 5;
    auto s0 = sinogram_2d(f, c), s1 = sinogram_2d(f.translated(k * c.x0.spacing), c);
    auto r0 = reconstruct_2d(s0, c, band), r1 = reconstruct_2d(s1, c, band);
    std::size_t nx = r0.grid.x.count;
    double scale = max_abs(r0.grid.values);
    for (std::size_t iz = 0; iz < r0.grid.z.count; ++iz)
        for (std::size_t ix = 0; ix < nx; ++ix)
            EXPECT_NEAR(r1.grid.at((ix + k) % nx, 0, iz), r0.grid.at(ix, 0, iz), 1e-6 * scale);
}

TEST(Reconstruct2D, MirrorSymmetry)
{
    auto c = scan_2d(64, 0.08, 64);
    auto band = build_stable_band(c, BandMode::toric(), 0.25, 4);
    auto s = random_sino(c, 4), m = s;
    std::size_t n = c.x0.count;
    for (std::size_t ir = 0; ir < c.n_r; ++ir) {
        m.at(0, 0, ir) = 0.0;
        for (std::size_t i = 1; i < n; ++i) m.at(i, 0, ir) = 0.5 * (s.at(i, 0, ir) + s.at(n - i, 0, ir));
    }
    auto r = reconstruct_2d(m, c, band);
    std::size_t np = r.grid.x.count;
    double scale = max_abs(r.grid.values);
    for (std::size_t iz = 0; iz < r.grid.z.count; ++iz)
        for (std::size_t i = 1; i < np; ++i) EXPECT_NEAR(r.grid.at(i, 0, iz), r.grid.at(np - i, 0, iz), 1e-8 * scale);
}

TEST(Reconstruct2D, NormalizerFloorDropsFrequencies)
{
    auto c = scan_2d(64, 0.08, 64);
    auto band = build_stable_band(c, BandMode::toric(), 0.0, 4);
    auto s = random_sino(c, 5);
    PipelineOptions o;
    o.eps_norm = 0.8;
    auto res = reconstruct_2d(s, c, band, o);
    std::size_t dropped = 0;
    for (const auto& d : res.diagnostics) {
        EXPECT_EQ(d.retained, d.normalizer_min > o.eps_norm);
        double want = 1.0;
        for (double sv = 1.0; sv <= 4.0; sv += 1e-4) want = std::min(want, std::abs(std::cos(d.omega * std::sqrt(sv - 1.0))));
        EXPECT_NEAR(d.normalizer_min, want, 1e-3);
        if (!d.retained) {
            ++dropped;
            std::size_t kx = std::size_t(std::llround((d.omega_x - band.omega_x.origin) / band.omega_x.spacing));
            EXPECT_EQ(res.band.weight(kx), 0.0);
        }
    }
    EXPECT_GT(dropped, 0u);
    EXPECT_LT(dropped, res.diagnostics.size());
    auto spec = res.grid.values;
    std::vector<cplx> v(spec.begin(), spec.end());
    translation_dft(v, res.grid.z.count, res.grid.x, Axis{0.0, 1.0, 1});
    double out = 0, total = 0;
    for (std::size_t iz = 0; iz < res.grid.z.count; ++iz)
        for (std::size_t k = 0; k < res.grid.x.count; ++k) {
            double e = std::norm(v[iz * res.grid.x.count + k]);
            total += e;
            if (res.band.weight(k) == 0.0) out += e;
        }
    EXPECT_LT(out, 1e-24 * total);
}

TEST(Reconstruct2D, NoiseWithinAmplificationBound)
{
    auto c = scan_2d(64, 0.08, 64);
    auto band = build_stable_band(c, BandMode::toric(), 0.25, 4);
    auto f = gaussian_2d();
    auto clean = sinogram_2d(f, c);
    PipelineOptions o;
    o.amplification = true;
    auto r0 = reconstruct_2d(clean, c, band, o);
    double data_norm = 0;
    for (double v : clean.values) data_norm += v * v;
    data_norm = std::sqrt(data_norm);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        double prev_slope = -1;
        for (double frac : {0.0025, 0.005, 0.01}) {
            double eta = frac * data_norm / std::sqrt(double(clean.values.size()));
            auto noisy = clean;
            add_noise(noisy, eta, seed);
            double nl2 = 0;
            for (std::size_t i = 0; i < noisy.values.size(); ++i) nl2 += std::pow(noisy.values[i] - clean.values[i], 2);
            nl2 = std::sqrt(nl2);
            auto r = reconstruct_2d(noisy, c, band, o);
            double brmse = metrics(r.grid, r0.grid, &r.band).band_rmse;
            EXPECT_LE(brmse, noise_rmse_bound(r, noisy, nl2) * (1 + 1e-9));
            double slope = brmse / eta;
            if (prev_slope >= 0) { EXPECT_NEAR(slope, prev_slope, 1e-6 * prev_slope); }
            prev_slope = slope;
        }
    }
}

TEST(Reconstruct2D, Validation)
{
    auto c = scan_2d(64, 0.08, 64);
    auto band = build_stable_band(c, BandMode::toric(), 0.25, 4);
    auto s = random_sino(c, 6);
    EXPECT_THROW(reconstruct_2d(s, c, build_stable_band(c, BandMode::toric(), 0.25, 2)), ValidationError);
    auto c3 = c;
    c3.n_r = 32;
    EXPECT_THROW(reconstruct_2d(random_sino(c3, 7), c3, band), ValidationError);
    auto wrong = s;
    wrong.r.spacing *= 1.01;
    EXPECT_THROW(reconstruct_2d(wrong, c, band), ValidationError);
    EXPECT_THROW(reconstruct_3d(s, c, band), ValidationError);
}

TEST(Reconstruct3D, GaussianMatchesBandLimitedPhantom)
{
    auto c = scan_3d(32, 0.26, 64, 32);
    auto f = gaussian_3d();
    QuadratureOptions q;
    q.adaptive = false;
    q.n_alpha = 32;
    q.n_phi = 64;
    auto sino = sinogram_3d(f, c, q);
    auto band = build_stable_band(c, BandMode::apple(), 0.25, 2);
    PipelineOptions o;
    o.pad_factor = 2;
    auto res = reconstruct_3d(sino, c, band, o);
    auto ref = band_limited_phantom(f, res.grid.x, res.grid.y, res.grid.z, res.band, 8);
    EXPECT_LT(relative_l2(res.grid, ref, &f.support()), 0.2);
}

TEST(Reconstruct3D, ZeroAndPointSymmetry)
{
    auto c = scan_3d(16, 0.5, 64, 16);
    auto band = build_stable_band(c, BandMode::apple(), 0.25, 2);
    PipelineOptions o;
    o.pad_factor = 2;
    auto s = random_sino(c, 8), m = s;
    std::size_t n = 16;
    for (std::size_t ir = 0; ir < c.n_r; ++ir)
        for (std::size_t iy = 0; iy < n; ++iy)
            for (std::size_t ix = 0; ix < n; ++ix)
                m.at(ix, iy, ir) = (ix == 0 || iy == 0) ? 0.0 : 0.5 * (s.at(ix, iy, ir) + s.at(n - ix, n - iy, ir));
    auto r = reconstruct_3d(m, c, band, o);
    std::size_t np = r.grid.x.count;
    double scale = max_abs(r.grid.values);
    ASSERT_GT(scale, 0.0);
    for (std::size_t iz = 0; iz < r.grid.z.count; ++iz)
        for (std::size_t iy = 1; iy < np; ++iy)
            for (std::size_t ix = 1; ix < np; ++ix)
                EXPECT_NEAR(r.grid.at(ix, iy, iz), r.grid.at(np - ix, np - iy, iz), 1e-8 * scale);
    std::fill(s.values.begin(), s.values.end(), 0.0);
    EXPECT_EQ(max_abs(reconstruct_3d(s, c, band, o).grid.values), 0.0);
}

TEST(Reconstruct3D, NeedsStandoff)
{
    auto c = scan_3d(16, 0.5, 64, 16);
    auto band = build_stable_band(c, BandMode::apple(), 0.25, 2);
    PipelineOptions o;
    o.pad_factor = 2;
    auto s = random_sino(c, 9);
    c.delta = 0.0;
    EXPECT_THROW(reconstruct_3d(s, c, band, o), ValidationError);
}

TEST(Metrics, Definitions)
{
    DensityGrid a;
    a.x = centered_axis(8, 0.1);
    a.z = {0.05, 0.1, 4};
    a.allocate();
    auto b = a;
    auto m = metrics(a, b);
    EXPECT_EQ(m.rmse, 0.0);
    EXPECT_EQ(m.psnr, psnr_sentinel);
    b.values[3] = 1.0;
    m = metrics(a, b);
    EXPECT_NEAR(m.rmse, 1.0 / std::sqrt(32.0), 1e-15);
    EXPECT_NEAR(m.psnr, 20.0 * std::log10(std::sqrt(32.0)), 1e-12);
    auto c = a;
    c.z.count = 3;
    c.allocate();
    EXPECT_THROW(metrics(a, c), ValidationError);
}

TEST(BandLimitedPhantom, AllPassMatchesFineSamplingForSmoothPhantom)
{
    auto f = gaussian_2d();
    Axis x = centered_axis(128, 0.05), z{0.0125, 0.025, 40};
    auto band = make_band(2, frequency_axis(x), Axis{0.0, 1.0, 1}, 1e9, 0.0);
    auto g = band_limited_phantom(f, x, Axis{0.0, 1.0, 1}, z, band, 4);
    auto direct = sample_on(f, x, Axis{0.0, 1.0, 1}, z);
    for (std::size_t i = 0; i < g.values.size(); ++i) EXPECT_NEAR(g.values[i], direct.values[i], 1e-6);
}

TEST(RetainedBand, MatchesAppliedMask)
{
    for (double eps : {0.1, 0.5, 0.8}) {
        auto c = scan_2d(64, 0.08, 64);
        auto band = build_stable_band(c, BandMode::toric(), 0.25, 4);
        PipelineOptions o;
        o.eps_norm = eps;
        auto res = reconstruct_2d(random_sino(c, 10), c, band, o);
        EXPECT_EQ(retained_band(c, band, o).weights, res.band.weights);
    }
    auto c = scan_3d(16, 0.5, 64, 16);
    auto band = build_stable_band(c, BandMode::apple(), 0.25, 2);
    PipelineOptions o;
    o.pad_factor = 2;
    auto res = reconstruct_3d(random_sino(c, 11), c, band, o);
    EXPECT_EQ(retained_band(c, band, o).weights, res.band.weights);
}
