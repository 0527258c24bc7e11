// Acceptance gate: one PASS / FAIL / UNVERIFIED line per criterion.
// Exit status is nonzero only when some criterion fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include "cstk/cstk.hpp"

using namespace cstk;

namespace {

enum class Status { pass, fail, unverified };

struct Outcome {
    Status status;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v)
{
    char b[96];
    std::snprintf(b, sizeof b, f, v);
    return b;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

double ref_j0(double x) { return std::cyl_bessel_j(0.0, std::abs(x)); }

// ||f||^2 of a sum of untruncated 2-D gaussians.
double gaussian_norm2_2d(const Phantom& f)
{
    double s = 0;
    for (const auto& a : f.primitives())
        for (const auto& b : f.primitives()) {
            double sa = a.size.x * a.size.x, sb = b.size.x * b.size.x;
            double d2 = std::pow(a.center.x - b.center.x, 2) + std::pow(a.center.z - b.center.z, 2);
            s += a.amplitude * b.amplitude * 2 * pi * sa * sb / (sa + sb) * std::exp(-d2 / (2 * (sa + sb)));
        }
    return s;
}

Phantom random_gaussians_2d(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> ux(-0.5, 0.5), uz(0.35, 0.65), us(0.03, 0.05), ua(0.5, 2.0);
    std::vector<Primitive> p;
    for (int i = 0; i < n; ++i) {
        double s = us(rng);
        p.push_back({PrimitiveKind::gaussian, {ux(rng), 0, uz(rng)}, {s, s, s}, ua(rng)});
    }
    return Phantom(2, p);
}

// Fraction of output energy at translation frequencies with |omega| >= omega_max.
double out_of_band_fraction(const DensityGrid& g, double omega_max)
{
    std::vector<cplx> v(g.values.begin(), g.values.end());
    Axis y = g.dim == 3 ? g.y : Axis{0.0, 1.0, 1};
    translation_dft(v, g.z.count, g.x, y);
    Axis wx = frequency_axis(g.x), wy = g.dim == 3 ? frequency_axis(g.y) : Axis{0.0, 1.0, 1};
    double out = 0, total = 0;
    std::size_t plane = g.x.count * y.count;
    for (std::size_t iz = 0; iz < g.z.count; ++iz)
        for (std::size_t ky = 0; ky < y.count; ++ky)
            for (std::size_t kx = 0; kx < g.x.count; ++kx) {
                double e = std::norm(v[iz * plane + ky * g.x.count + kx]);
                total += e;
                if (std::hypot(wx[kx], g.dim == 3 ? wy[ky] : 0.0) >= omega_max) out += e;
            }
    return total > 0 ? out / total : 0.0;
}

bool mask_zero_beyond(const StableBand& b)
{
    for (std::size_t ky = 0; ky < b.omega_y.count; ++ky)
        for (std::size_t kx = 0; kx < b.omega_x.count; ++kx)
            if (b.omega_abs(kx, ky) >= b.omega_max && b.weight(kx, ky) != 0.0) return false;
    return true;
}

struct EndToEnd {
    ReconstructionResult res;
    double error = 0.0;
    double project_s = 0.0;
};

EndToEnd run_2d(unsigned workers)
{
    ScanConfig c;
    c.x0 = centered_axis(256, 0.04);
    c.n_r = c.n_z = 256;
    Phantom f(2, {{PrimitiveKind::gaussian, {0, 0, 0.3}, {0.15, 0, 0}, 1.0}}, Box3{{-0.9, 0, 0.01}, {0.9, 0, 0.99}});
    EndToEnd e;
    auto t0 = std::chrono::steady_clock::now();
    auto sino = sinogram_2d(f, c, {}, workers);
    e.project_s = seconds_since(t0);
    PipelineOptions o;
    o.workers = workers;
    e.res = reconstruct_2d(sino, c, build_stable_band(c, BandMode::toric(), 0.25, 4), o);
    auto ref = band_limited_phantom(f, e.res.grid.x, e.res.grid.y, e.res.grid.z, e.res.band, 4);
    e.error = relative_l2(e.res.grid, ref, &f.support());
    return e;
}

ScanConfig scan_3d()
{
    ScanConfig c;
    c.dim = 3;
    c.delta = 0.1;
    c.x0 = c.y0 = centered_axis(64, 0.13);
    c.n_r = 128;
    c.n_z = 64;
    return c;
}

Phantom phantom_3d() { return Phantom(3, {{PrimitiveKind::gaussian, {0, 0, 0.45}, {0.07, 0.07, 0.07}, 1.0}}); }

EndToEnd run_3d(const Sinogram* sino_in, unsigned workers)
{
    auto c = scan_3d();
    auto f = phantom_3d();
    QuadratureOptions q;
    q.adaptive = false;
    EndToEnd e;
    auto t0 = std::chrono::steady_clock::now();
    Sinogram sino = sino_in ? *sino_in : sinogram_3d(f, c, q, workers);
    e.project_s = sino_in ? 0.0 : seconds_since(t0);
    PipelineOptions o;
    o.pad_factor = 2;
    o.workers = workers;
    e.res = reconstruct_3d(sino, c, build_stable_band(c, BandMode::apple(), 0.25, 2), o);
    auto ref = band_limited_phantom(f, e.res.grid.x, e.res.grid.y, e.res.grid.z, e.res.band, 4);
    e.error = relative_l2(e.res.grid, ref, &f.support());
    return e;
}

} // namespace

int main()
{
    unsigned hw = std::thread::hardware_concurrency();
    std::printf("acceptance: %u hardware thread(s)\n", hw);
    std::vector<std::pair<std::string, std::function<Outcome()>>> crit;

    crit.emplace_back("toric kernel exponential sum = 4cos cos product", [] {
        auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(101);
        std::uniform_real_distribution<double> u(0, 1);
        double e = 0;
        for (int k = 0; k < 10000; ++k) {
            double r = 1 + u(rng), z = 2 - r + (r - 1) * u(rng), w = 8 * u(rng) - 4;
            e = std::max(e, std::abs(toric_fourier_kernel_sum(r, z, w) - 4 * std::cos(w * std::sqrt(r * r - 1)) * std::cos(w * std::sqrt(r * r - z * z))));
        }
        double s = seconds_since(t0);
        return verdict(e < 1e-12 && s < 1, fmt("max err %.3g", e) + fmt(", %.3f s", s));
    });
    crit.emplace_back("3-D angular identity = 2 pi rho J0", [] {
        auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(102);
        std::uniform_real_distribution<double> u(0, 1);
        double e = 0;
        for (int k = 0; k < 1000; ++k) {
            double rho = 3 * u(rng), w1 = 8 * u(rng) - 4, w2 = 8 * u(rng) - 4;
            e = std::max(e, std::abs(apple_angular_numeric(rho, w1, w2) - 2 * pi * rho * ref_j0(std::hypot(w1, w2) * rho)));
        }
        double s = seconds_since(t0);
        return verdict(e < 1e-10 && s < 5, fmt("max err %.3g", e) + fmt(", %.3f s", s));
    });
    crit.emplace_back("Abel'd 2-D kernel K1(s,s) = pi", [] {
        auto t0 = std::chrono::steady_clock::now();
        double e = 0;
        for (double z : {1.2, 2.0, 3.5})
            for (double w : {0.0, 0.5, 0.9}) e = std::max(e, std::abs(kernel_2d_abel(z + 1e-8, z, w) - pi));
        double s = seconds_since(t0);
        return verdict(e < 1e-6 && s < 1, fmt("max |K1 - pi| %.3g at s - z = 1e-8", e) + fmt(", %.3f s", s));
    });
    crit.emplace_back("|K2| <= pi/2", [] {
        auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(104);
        std::uniform_real_distribution<double> u(0, 1);
        double m = 0;
        int viol = 0;
        for (int k = 0; k < 10000; ++k) {
            double z = 1 + 3 * u(rng), s = z + (4 - z) * u(rng), v = std::abs(kernel_2d(s, z, 10 * u(rng) - 5));
            m = std::max(m, v);
            viol += v > pi / 2 + 1e-12;
        }
        double s = seconds_since(t0);
        return verdict(viol == 0 && s < 5, std::to_string(viol) + fmt(" violations, max %.17g", m) + fmt(", %.3f s", s));
    });
    crit.emplace_back("Volterra solver e^-x oracle and depth-30 resolvent", [] {
        auto t0 = std::chrono::steady_clock::now();
        Axis g{0.0, 2.0 / 1023.0, 1024};
        VolterraSystem sys{1.0, KernelTable::build_difference(g, [](double) { return 1.0; })};
        std::vector<double> rhs(1024, 1.0);
        auto f = solve_second_kind<double>(sys, rhs);
        double e = 0;
        for (std::size_t i = 0; i < 1024; ++i) e = std::max(e, std::abs(f[i] * std::exp(g[i]) - 1));
        double s1 = seconds_since(t0);
        double w = 0.5, d = 0;
        Axis gs{1.0 + 1e-6, (3.0 - 1e-6) / 511.0, 512};
        auto K = KernelTable::build(gs, [&](double s, double z) { return kernel_2d(s, z, w); });
        std::vector<double> g2(512);
        for (std::size_t i = 0; i < 512; ++i) g2[i] = std::exp(-gs[i]) * std::cos(3 * gs[i]);
        for (double lam : {-w * w / pi, -w * w / (2 * pi)}) {
            VolterraSystem v{lam, K};
            auto a = solve_second_kind<double>(v, g2), b = resolvent_neumann<double>(v, g2, 30);
            for (std::size_t i = 0; i < 512; ++i) d = std::max(d, std::abs(a[i] - b[i]));
        }
        return verdict(e < 1e-6 && s1 < 1 && d < 1e-8,
                       fmt("max rel err %.3g", e) + fmt(" (%.3f s)", s1) + fmt(", resolvent vs solve %.3g", d));
    });
    crit.emplace_back("toric norm bound ||Tf|| <= sqrt(8) r_m 2 sqrt(r_m - 1) ||f||", [] {
        auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(106);
        ScanConfig c;
        c.x0 = centered_axis(256, 0.04);
        c.n_r = 64;
        double bound = std::sqrt(8.0) * 2.0 * 2.0 * std::sqrt(1.0), worst = 0;
        int viol = 0;
        for (int k = 0; k < 20; ++k) {
            auto f = random_gaussians_2d(rng, 1 + k % 4);
            auto s = sinogram_2d(f, c);
            double t = 0;
            for (double v : s.values) t += v * v * c.x0.spacing * c.r_axis().spacing;
            double ratio = std::sqrt(t / gaussian_norm2_2d(f));
            worst = std::max(worst, ratio);
            viol += ratio > bound;
        }
        double s = seconds_since(t0);
        return verdict(viol == 0 && s < 60, std::to_string(viol) + fmt(" violations, max ratio %.4g", worst) +
                                                fmt(" vs bound %.4g", bound) + fmt(", %.2f s", s));
    });
    crit.emplace_back("forward projectors vs brute-force oracle", [] {
        auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(107);
        std::uniform_real_distribution<double> u(0, 1);
        double e2 = 0, e3 = 0;
        for (int c = 0; c < 50; ++c) {
            auto f = random_gaussians_2d(rng, 1 + c % 3);
            const auto& p = f.primitives()[0];
            double r = 1.5 + 0.5 * u(rng);
            int b = 1 + c % 4;
            double x0 = p.center.x - toric_branch_x(r, std::clamp(p.center.z, 2.0 - r, 1.0), b) + 0.05 * (u(rng) - 0.5);
            double v = toric_transform(f, x0, r), o = 0;
            for (int j = 1; j <= 4; ++j) o += oracle_integral(f, {Manifold::Kind::branch, j, x0, 0, r}, 1000000);
            e2 = std::max(e2, std::abs(v - o) / std::abs(o));
        }
        for (int c = 0; c < 50; ++c) {
            double s = 0.06;
            Phantom f(3, {{PrimitiveKind::gaussian, {0.6 * u(rng) - 0.3, 0.6 * u(rng) - 0.3, 0.4 + 0.2 * u(rng)}, {s, s, s}, 0.5 + 1.5 * u(rng)}});
            const auto& p = f.primitives()[0];
            double r = 1.4 + 0.6 * u(rng), phi = 2 * pi * u(rng);
            double rho = apple_radius(r, std::clamp(p.center.z, 2.0 - r, 1.0), 1 + c % 2);
            double x0 = p.center.x - rho * std::cos(phi), y0 = p.center.y - rho * std::sin(phi);
            double v = apple_transform(f, x0, y0, r);
            double o = oracle_integral(f, {Manifold::Kind::sheet, 1, x0, y0, r}, 8000000) +
                       oracle_integral(f, {Manifold::Kind::sheet, 2, x0, y0, r}, 8000000);
            e3 = std::max(e3, std::abs(v - o) / std::abs(o));
        }
        double s = seconds_since(t0);
        return verdict(e2 < 1e-5 && e3 < 1e-4 && s < 300,
                       fmt("max rel err 2-D %.3g", e2) + fmt(", 3-D %.3g", e3) + fmt(", %.1f s", s));
    });
    crit.emplace_back("Plancherel residual and DFT round trip", [] {
        auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(108);
        std::normal_distribution<double> nd;
        double pr = 0, rt = 0;
        for (std::size_t n : {8, 100, 255, 1024, 4096}) {
            std::vector<double> v(n);
            for (auto& x : v) x = nd(rng);
            pr = std::max(pr, plancherel_residual(v, 0.04));
            Axis a = centered_axis(n, 0.04);
            std::vector<cplx> z(v.begin(), v.end());
            translation_dft(z, 1, a, Axis{0.0, 1.0, 1});
            translation_idft(z, 1, a, Axis{0.0, 1.0, 1});
            for (std::size_t i = 0; i < n; ++i) rt = std::max(rt, std::abs(z[i] - v[i]));
        }
        double s = seconds_since(t0);
        return verdict(pr < 1e-12 && rt < 1e-12 && s < 10, fmt("plancherel %.3g", pr) + fmt(", round trip %.3g", rt) + fmt(", %.3f s", s));
    });

    EndToEnd e2d, e3d;
    crit.emplace_back("end-to-end 2-D gaussian", [&] {
        auto t0 = std::chrono::steady_clock::now();
        e2d = run_2d(1);
        double s1 = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        auto e8 = run_2d(8);
        double s8 = seconds_since(t0);
        bool same = e8.res.grid.values == e2d.res.grid.values;
        return verdict(e2d.error < 0.15 && s1 < 120 && s8 < 30 && same,
                       fmt("rel L2 %.4g", e2d.error) + fmt(", %.2f s single-threaded", s1) + fmt(", %.2f s with 8 workers", s8) +
                           (same ? ", identical output" : ", outputs differ"));
    });
    crit.emplace_back("end-to-end 3-D gaussian ball", [&] {
        auto t0 = std::chrono::steady_clock::now();
        e3d = run_3d(nullptr, 1);
        double s1 = seconds_since(t0);
        bool ok = e3d.error < 0.2 && s1 < 1200;
        std::string d = fmt("rel L2 %.4g", e3d.error) + fmt(", %.1f s single-threaded", s1) +
                        fmt(" (projection %.1f s", e3d.project_s) + fmt(", inversion %.1f s)", e3d.res.seconds);
        if (!ok) return Outcome{Status::fail, d};
        if (hw < 8) return Outcome{Status::unverified, d + "; 8-worker scaling not measurable on " + std::to_string(hw) + " hardware thread(s)"};
        auto c = scan_3d();
        QuadratureOptions q;
        q.adaptive = false;
        auto sino = sinogram_3d(phantom_3d(), c, q, 8);
        auto a = run_3d(&sino, 1), b = run_3d(&sino, 8);
        double speedup = a.res.seconds / b.res.seconds;
        return verdict(speedup >= 5, d + fmt("; inversion speedup at 8 workers %.2fx", speedup));
    });
    crit.emplace_back("3-D kernel derivative vs central differences", [] {
        auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(111);
        std::uniform_real_distribution<double> u(0, 1);
        double e = 0, om = stable_band_limit(2.0, BandMode::apple());
        for (int k = 0; k < 100; ++k) {
            double z = 1.21 + 2.6 * u(rng), s = z + 1e-3 + (4 - z - 1e-3) * u(rng), w = om * u(rng);
            double fd = (kernel_3d_K1(s + 1e-5, z, w) - kernel_3d_K1(s - 1e-5, z, w)) / 2e-5;
            double an = kernel_3d_dK1(s, z, w);
            e = std::max(e, std::abs(fd - an) / std::abs(an));
        }
        double s = seconds_since(t0);
        return verdict(e < 1e-5 && s < 10, fmt("max rel err %.3g", e) + fmt(", %.3f s", s));
    });
    crit.emplace_back("no reconstruction energy beyond the stable band", [&] {
        auto t0 = std::chrono::steady_clock::now();
        double f2 = out_of_band_fraction(e2d.res.grid, e2d.res.band.omega_max);
        double f3 = out_of_band_fraction(e3d.res.grid, e3d.res.band.omega_max);
        bool masks = mask_zero_beyond(e2d.res.band) && mask_zero_beyond(e3d.res.band);
        double s = seconds_since(t0);
        return verdict(masks && f2 < 1e-24 && f3 < 1e-24 && s < 10,
                       std::string(masks ? "mask identically 0 beyond the band" : "mask nonzero beyond the band") +
                           fmt("; out-of-band energy fraction 2-D %.3g", f2) + fmt(", 3-D %.3g", f3) + fmt(", %.3f s", s));
    });

    int failed = 0, unverified = 0, idx = 0;
    for (auto& [name, fn] : crit) {
        ++idx;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {Status::fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "UNVERIFIED";
        std::printf("%-10s %2d  %s: %s\n", tag, idx, name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += o.status == Status::fail;
        unverified += o.status == Status::unverified;
    }
    std::printf("acceptance: %d passed, %d failed, %d unverified\n", idx - failed - unverified, failed, unverified);
    return failed ? 1 : 0;
}
