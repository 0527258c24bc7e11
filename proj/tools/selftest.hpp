#pragma once

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cstk/cstk.hpp"

namespace cstk::selftest {

struct Check {
    std::string name;
    bool quick;
    std::function<std::pair<bool, std::string>()> run;
};

inline std::string num(double v)
{
    char b[64];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

inline std::vector<Check> checks()
{
    std::vector<Check> c;
    c.push_back({"bessel_j01 vs std::cyl_bessel_j", true, [] {
                     double e = 0;
                     for (double x = 0; x <= 50; x += 0.01)
                         e = std::max({e, std::abs(bessel_j0(x) - std::cyl_bessel_j(0.0, x)),
                                       std::abs(bessel_j1(x) - std::cyl_bessel_j(1.0, x))});
                     return std::pair{e < 1e-12, "max abs err " + num(e)};
                 }});
    c.push_back({"toric kernel sum = product", true, [] {
                     std::mt19937_64 rng(1);
                     std::uniform_real_distribution<double> u(0, 1);
                     double e = 0;
                     for (int k = 0; k < 10000; ++k) {
                         double r = 1 + u(rng), z = 2 - r + (r - 1) * u(rng), w = 8 * u(rng) - 4;
                         e = std::max(e, std::abs(toric_fourier_kernel_sum(r, z, w) - toric_fourier_kernel_product(r, z, w)));
                     }
                     return std::pair{e < 1e-12, "max abs err " + num(e)};
                 }});
    c.push_back({"apple angular identity", true, [] {
                     std::mt19937_64 rng(2);
                     std::uniform_real_distribution<double> u(0, 1);
                     double e = 0;
                     for (int k = 0; k < 1000; ++k) {
                         double rho = 3 * u(rng), w1 = 8 * u(rng) - 4, w2 = 8 * u(rng) - 4;
                         double want = 2 * pi * rho * std::cyl_bessel_j(0.0, std::hypot(w1, w2) * rho);
                         e = std::max(e, std::abs(apple_angular_numeric(rho, w1, w2) - want));
                     }
                     return std::pair{e < 1e-10, "max abs err " + num(e)};
                 }});
    c.push_back({"Abel'd 2-D kernel diagonal = pi", true, [] {
                     double e = 0;
                     for (double w : {0.0, 0.5, 0.9}) e = std::max(e, std::abs(kernel_2d_abel(2.0 + 1e-8, 2.0, w) - pi));
                     return std::pair{e < 1e-6, "max abs err " + num(e)};
                 }});
    c.push_back({"|K2| <= pi/2", true, [] {
                     std::mt19937_64 rng(3);
                     std::uniform_real_distribution<double> u(0, 1);
                     double m = 0;
                     for (int k = 0; k < 10000; ++k) {
                         double z = 1 + 3 * u(rng), s = z + (4 - z) * u(rng);
                         m = std::max(m, std::abs(kernel_2d(s, z, 10 * u(rng) - 5)));
                     }
                     return std::pair{m <= pi / 2 + 1e-12, "max |K2| " + num(m)};
                 }});
    c.push_back({"Volterra exponential oracle", true, [] {
                     Axis g{0.0, 2.0 / 1023.0, 1024};
                     VolterraSystem sys{1.0, KernelTable::build_difference(g, [](double) { return 1.0; })};
                     std::vector<double> rhs(1024, 1.0);
                     auto f = solve_second_kind<double>(sys, rhs);
                     double e = 0;
                     for (std::size_t i = 0; i < 1024; ++i) e = std::max(e, std::abs(f[i] * std::exp(g[i]) - 1.0));
                     return std::pair{e < 1e-6, "max rel err " + num(e)};
                 }});
    c.push_back({"Neumann series vs solver", true, [] {
                     double w = 0.5;
                     Axis g{1.0 + 1e-6, (3.0 - 1e-6) / 511.0, 512};
                     VolterraSystem sys{-w * w / (2 * pi), KernelTable::build(g, [&](double s, double z) { return kernel_2d(s, z, w); })};
                     std::vector<double> rhs(512);
                     for (std::size_t i = 0; i < 512; ++i) rhs[i] = std::cos(3 * g[i]);
                     auto f = solve_second_kind<double>(sys, rhs);
                     auto n = resolvent_neumann<double>(sys, rhs, 30);
                     double e = 0;
                     for (std::size_t i = 0; i < 512; ++i) e = std::max(e, std::abs(f[i] - n[i]));
                     return std::pair{e < 1e-8, "max abs diff " + num(e)};
                 }});
    c.push_back({"Plancherel and DFT round trip", true, [] {
                     std::mt19937_64 rng(4);
                     std::normal_distribution<double> nd;
                     double pr = 0, rt = 0;
                     for (std::size_t n : {64, 1000, 4096}) {
                         std::vector<double> v(n);
                         for (auto& x : v) x = nd(rng);
                         pr = std::max(pr, plancherel_residual(v, 0.05));
                         Axis a = centered_axis(n, 0.05);
                         std::vector<cplx> z(v.begin(), v.end());
                         translation_dft(z, 1, a, Axis{0.0, 1.0, 1});
                         translation_idft(z, 1, a, Axis{0.0, 1.0, 1});
                         for (std::size_t i = 0; i < n; ++i) rt = std::max(rt, std::abs(z[i] - v[i]));
                     }
                     return std::pair{pr < 1e-12 && rt < 1e-12, "plancherel " + num(pr) + ", round trip " + num(rt)};
                 }});
    c.push_back({"3-D kernel derivative vs finite differences", true, [] {
                     std::mt19937_64 rng(5);
                     std::uniform_real_distribution<double> u(0, 1);
                     double e = 0, om = stable_band_limit(2.0, BandMode::apple());
                     for (int k = 0; k < 100; ++k) {
                         double z = 1.21 + 2.6 * u(rng), s = z + 1e-3 + (4 - z - 1e-3) * u(rng), w = om * u(rng);
                         double fd = (kernel_3d_K1(s + 1e-5, z, w) - kernel_3d_K1(s - 1e-5, z, w)) / 2e-5;
                         double an = kernel_3d_dK1(s, z, w);
                         e = std::max(e, std::abs(fd - an) / std::max(1.0, std::abs(an)));
                     }
                     return std::pair{e < 1e-5, "max rel err " + num(e)};
                 }});
    c.push_back({"2-D end-to-end gaussian", false, [] {
                     ScanConfig cfg;
                     cfg.n_r = cfg.n_z = 128;
                     Primitive p;
                     p.center = {0, 0, 0.3};
                     p.size = {0.15, 0, 0};
                     Phantom f(2, {p}, Box3{{-0.9, 0, 0.01}, {0.9, 0, 0.99}});
                     auto band = build_stable_band(cfg, BandMode::toric(), 0.25, 4);
                     auto res = reconstruct_2d(sinogram_2d(f, cfg), cfg, band);
                     auto ref = band_limited_phantom(f, res.grid.x, res.grid.y, res.grid.z, res.band);
                     double e = relative_l2(res.grid, ref, &f.support());
                     return std::pair{e < 0.15, "relative L2 " + num(e)};
                 }});
    return c;
}

// Prints one line per check; returns the number of failures.
inline int run(bool quick, std::FILE* out)
{
    int failed = 0;
    for (const auto& c : checks()) {
        if (quick && !c.quick) continue;
        auto t0 = std::chrono::steady_clock::now();
        std::pair<bool, std::string> r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::fprintf(out, "%s  %s  (%s, %.2f s)\n", r.first ? "PASS" : "FAIL", c.name.c_str(), r.second.c_str(), s);
        failed += !r.first;
    }
    return failed;
}

} // namespace cstk::selftest
