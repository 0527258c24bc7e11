#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "axis.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "special.hpp"

namespace cstk {

// G(s_i) = int_{s_0}^{s_i} g(r) / sqrt(s_i - r) dr for g piecewise linear
// between the samples (exact product integration).
template <class T>
std::vector<T> abel_apply(std::span<const T> g, double h)
{
    std::size_t n = g.size();
    if (n < 16) throw ValidationError("Abel operator needs at least 16 samples");
    if (!(h > 0)) throw ValidationError("grid spacing must be positive");
    // Cell at distance m below the evaluation point: weights of its left and
    // right end values.
    std::vector<double> wl(n), wr(n);
    double sh = std::sqrt(h);
    for (std::size_t m = 1; m < n; ++m) {
        double a = std::sqrt(double(m)), b = std::sqrt(double(m - 1));
        double i0 = 2.0 / (a + b); // 2 (sqrt(m) - sqrt(m - 1))
        double md = double(m);
        double p32 = (3.0 * md * md - 3.0 * md + 1.0) / (md * a + (md - 1.0) * b);
        double i1 = md * i0 - 2.0 / 3.0 * p32;
        wl[m] = sh * (i0 - i1);
        wr[m] = sh * i1;
    }
    std::vector<T> G(n, T{});
    for (std::size_t i = 1; i < n; ++i) {
        T s{};
        for (std::size_t k = 0; k < i; ++k) s += wl[i - k] * g[k] + wr[i - k] * g[k + 1];
        G[i] = s;
    }
    return G;
}

enum class AbelNormalizer { inverse_pi, none };

// Fourth-order finite-difference derivative, optionally scaled by 1/pi.
template <class T>
std::vector<T> abel_derivative(std::span<const T> G, double h, AbelNormalizer norm)
{
    std::size_t n = G.size();
    if (n < 5) throw ValidationError("derivative needs at least 5 samples");
    std::vector<T> d(n);
    double c = 1.0 / (12.0 * h);
    if (norm == AbelNormalizer::inverse_pi) c /= pi;
    d[0] = c * (-25.0 * G[0] + 48.0 * G[1] - 36.0 * G[2] + 16.0 * G[3] - 3.0 * G[4]);
    d[1] = c * (-3.0 * G[0] - 10.0 * G[1] + 18.0 * G[2] - 6.0 * G[3] + G[4]);
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = c * (G[i - 2] - 8.0 * G[i - 1] + 8.0 * G[i + 1] - G[i + 2]);
    std::size_t e = n - 1;
    d[e - 1] = c * (3.0 * G[e] + 10.0 * G[e - 1] - 18.0 * G[e - 2] + 6.0 * G[e - 3] - G[e - 4]);
    d[e] = c * (25.0 * G[e] - 48.0 * G[e - 1] + 36.0 * G[e - 2] - 16.0 * G[e - 3] + 3.0 * G[e - 4]);
    return d;
}

// Fourier kernel of the toric transform as the sum over the four branches,
// and its product form.
inline std::complex<double> toric_fourier_kernel_sum(double r, double z, double omega)
{
    double R = std::sqrt((r - 1.0) * (r + 1.0)), w = std::sqrt(std::max(0.0, (r - z) * (r + z)));
    std::complex<double> s = 0.0;
    for (double c : {R, -R})
        for (double v : {w, -w}) s += std::polar(1.0, -omega * (c + v));
    return s;
}

inline double toric_fourier_kernel_product(double r, double z, double omega)
{
    double R = std::sqrt((r - 1.0) * (r + 1.0)), w = std::sqrt(std::max(0.0, (r - z) * (r + z)));
    return 4.0 * std::cos(omega * R) * std::cos(omega * w);
}

// rho * int_{-pi}^{pi} exp(-i rho (w1 cos phi + w2 sin phi)) dphi by the
// periodic trapezoid rule, and its closed form 2 pi rho J0(|w| rho).
inline std::complex<double> apple_angular_numeric(double rho, double w1, double w2, std::size_t n_phi = 256)
{
    std::complex<double> s = 0.0;
    double h = 2.0 * pi / double(n_phi);
    for (std::size_t k = 0; k < n_phi; ++k) {
        double phi = -pi + h * double(k);
        s += std::polar(1.0, -rho * (w1 * std::cos(phi) + w2 * std::sin(phi)));
    }
    return rho * h * s;
}

inline double apple_angular_closed(double rho, double omega_abs)
{
    return 2.0 * pi * rho * bessel_j0(omega_abs * rho);
}

// First-kind 2-D kernel cos(w sqrt(r - z)) / sqrt(r - z), written in the gap t = r - z.
inline double kernel_2d_firstkind_gap(double t, double omega)
{
    if (!(t > 0)) throw DomainError("first-kind kernel needs r > z");
    double q = std::sqrt(t);
    return std::cos(omega * q) / q;
}

inline double kernel_2d_firstkind(double r, double z, double omega)
{
    if (!(z < r)) throw DomainError("first-kind kernel needs z < r");
    return kernel_2d_firstkind_gap(r - z, omega);
}

// Abel transform in r of the first-kind kernel:
// int_z^s cos(w sqrt(r - z)) / (sqrt(r - z) sqrt(s - r)) dr (equals pi J0(w sqrt(s - z))).
inline double kernel_2d_abel(double s, double z, double omega, std::size_t n = 64)
{
    if (z > s) throw DomainError("Abel kernel needs z <= s");
    double q = std::sqrt(s - z);
    return integrate_gl([&](double th) { return 2.0 * std::cos(omega * q * std::sin(th)); }, 0.0, 0.5 * pi, n);
}

// Second-kind 2-D kernel 2 int_0^{pi/2} sin^2(t) sinc(w sin(t) sqrt(s - z)) dt
// (the u-form int sqrt(u)/sqrt(1-u) sinc(...) du with u = sin^2 t).
inline double kernel_2d(double s, double z, double omega, std::size_t n = 64)
{
    if (z > s) throw DomainError("kernel needs z <= s");
    double q = std::sqrt(s - z);
    return integrate_gl(
        [&](double th) {
            double st = std::sin(th);
            return 2.0 * st * st * sinc(omega * st * q);
        },
        0.0, 0.5 * pi, n);
}

namespace detail {

// J0(a rho) - a rho J1(a rho) = d/drho [rho J0(a rho)].
inline double radial_weight_slope(double a, double rho)
{
    auto b = bessel_j01(a * rho);
    return b.j0 - a * rho * b.j1;
}

} // namespace detail

// Abel'd 3-D kernel
//   K1(s, z) = int_0^1 H(s, z, u) / sqrt(u (1 - u)) du,
//   H = 2 pi sum_{+-} rho_{+-} J0(|w| rho_{+-}),
//   rho_{+-} = R +- sqrt(s - z) sqrt(u),  R = sqrt(z - 1 + (s - z) u),
// evaluated with u = sin^2(theta).
inline double kernel_3d_K1(double s, double z, double omega_abs, std::size_t n = 96)
{
    if (!(z >= 1.0) || z > s) throw DomainError("3-D kernel needs 1 <= z <= s");
    double q = std::sqrt(s - z);
    return integrate_gl(
        [&](double th) {
            double st = std::sin(th);
            double R = std::sqrt(z - 1.0 + q * q * st * st), d = q * st;
            double h = 0.0;
            for (double rho : {R + d, R - d}) h += rho * bessel_j0(omega_abs * rho);
            return 4.0 * pi * h;
        },
        0.0, 0.5 * pi, n);
}

// d/ds K1(s, z). The phi-integrals of the product-rule expansion of
// dh/ds collapse to
//   dH/ds = 2 pi [ u/(2R) (F(rho+) + F(rho-)) + u (F(rho+) - F(rho-)) / (2 d) ],
//   F(rho) = J0(a rho) - a rho J1(a rho),  d = sqrt(u) sqrt(s - z).
// Throws when R = sqrt(z - 1 + ...) falls below r_floor.
inline double kernel_3d_dK1(double s, double z, double omega_abs, double r_floor = 1e-3, std::size_t n = 96)
{
    if (!(z >= 1.0) || z > s) throw DomainError("3-D kernel needs 1 <= z <= s");
    if (std::sqrt(z - 1.0) < r_floor) throw NumericalGuardError("apple radius below floor in kernel derivative");
    double a = omega_abs, q = std::sqrt(s - z);
    return integrate_gl(
        [&](double th) {
            double st = std::sin(th), u = st * st;
            double R = std::sqrt(z - 1.0 + q * q * u), d = q * st;
            double fp = detail::radial_weight_slope(a, R + d), fm = detail::radial_weight_slope(a, R - d);
            double diff;
            if (d > 1e-6) {
                diff = (fp - fm) / (2.0 * d);
            } else {
                auto b = bessel_j01(a * R);
                diff = -a * b.j1 - a * a * R * b.j0;
            }
            double dH = 2.0 * pi * (u / (2.0 * R) * (fp + fm) + u * diff);
            return 2.0 * dH;
        },
        0.0, 0.5 * pi, n);
}

// Lower-triangular kernel samples K(s_i, s_k), k <= i.
class KernelTable {
public:
    KernelTable() = default;

    template <class F>
    static KernelTable build(const Axis& grid, F&& k, unsigned workers = 1)
    {
        KernelTable t(grid);
        parallel_for(grid.count, workers, [&](std::size_t i) {
            double* row = t.data_.data() + t.offset(i);
            for (std::size_t j = 0; j <= i; ++j) row[j] = k(grid[i], grid[j]);
        });
        return t;
    }

    // K(s, z) = k(s - z)
    template <class F>
    static KernelTable build_difference(const Axis& grid, F&& k)
    {
        KernelTable t(grid);
        std::vector<double> lag(grid.count);
        for (std::size_t m = 0; m < grid.count; ++m) lag[m] = k(grid.spacing * double(m));
        for (std::size_t i = 0; i < grid.count; ++i)
            for (std::size_t j = 0; j <= i; ++j) t.data_[t.offset(i) + j] = lag[i - j];
        return t;
    }

    double operator()(std::size_t i, std::size_t k) const { return data_[offset(i) + k]; }
    const Axis& grid() const { return grid_; }
    std::size_t size() const { return grid_.count; }

    double max_abs() const
    {
        double m = 0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    void scale_row(std::size_t i, double c)
    {
        for (std::size_t k = 0; k <= i; ++k) data_[offset(i) + k] *= c;
    }

private:
    explicit KernelTable(const Axis& g) : grid_(g), data_(g.count * (g.count + 1) / 2) {}
    static std::size_t offset(std::size_t i) { return i * (i + 1) / 2; }
    Axis grid_;
    std::vector<double> data_;
};

// f(s) + lambda int_{s_0}^{s} K(s, z) f(z) dz = g(s) on a uniform grid.
struct VolterraSystem {
    double lambda = 0.0;
    KernelTable kernel;
};

namespace detail {

inline double trapezoid_weight(std::size_t i, std::size_t k, double h)
{
    return (k == 0 || k == i) ? 0.5 * h : h;
}

} // namespace detail

// (A f)_i = sum_k w_ik K_ik f_k with trapezoid weights; this is the
// discrete Volterra operator used by the solver.
template <class T>
std::vector<T> volterra_operator(const KernelTable& K, std::span<const T> f)
{
    std::size_t n = K.size();
    double h = K.grid().spacing;
    std::vector<T> out(n, T{});
    for (std::size_t i = 1; i < n; ++i) {
        T s{};
        for (std::size_t k = 0; k <= i; ++k) s += detail::trapezoid_weight(i, k, h) * K(i, k) * f[k];
        out[i] = s;
    }
    return out;
}

// Trapezoid product integration with forward substitution.
template <class T>
std::vector<T> solve_second_kind(const VolterraSystem& sys, std::span<const T> g)
{
    const auto& K = sys.kernel;
    std::size_t n = K.size();
    if (g.size() != n) throw ValidationError("right-hand side does not match the kernel grid");
    double h = K.grid().spacing, lam = sys.lambda;
    std::vector<T> f(n);
    f[0] = g[0];
    for (std::size_t i = 1; i < n; ++i) {
        double diag = 1.0 + lam * 0.5 * h * K(i, i);
        if (std::abs(diag) < 1e-8) throw NumericalGuardError("near-singular diagonal in Volterra solve");
        T s = 0.5 * h * K(i, 0) * f[0];
        for (std::size_t k = 1; k < i; ++k) s += h * K(i, k) * f[k];
        f[i] = (g[i] - lam * s) / diag;
    }
    return f;
}

// f + lambda A f
template <class T>
std::vector<T> apply_second_kind(const VolterraSystem& sys, std::span<const T> f)
{
    auto a = volterra_operator<T>(sys.kernel, f);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = f[i] + sys.lambda * a[i];
    return a;
}

// ‖f + lambda A f - g‖ / ‖g‖
template <class T>
double second_kind_residual(const VolterraSystem& sys, std::span<const T> f, std::span<const T> g)
{
    auto a = apply_second_kind<T>(sys, f);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(std::complex<double>(a[i] - g[i]));
        den += std::norm(std::complex<double>(g[i]));
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

// Truncated resolvent series f = g - lambda sum_{nu < depth} (-lambda)^nu A^{nu+1} g,
// A the discrete operator above.
template <class T>
std::vector<T> resolvent_neumann(const VolterraSystem& sys, std::span<const T> g, std::size_t depth)
{
    std::vector<T> acc(g.begin(), g.end()), v(g.begin(), g.end());
    for (std::size_t nu = 0; nu < depth; ++nu) {
        v = volterra_operator<T>(sys.kernel, v);
        for (auto& x : v) x *= -sys.lambda;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
    }
    return acc;
}

// Gronwall bound on the sup-norm of the resolvent part, exp(|lambda| Kmax L) - 1.
inline double resolvent_bound(const VolterraSystem& sys)
{
    const auto& g = sys.kernel.grid();
    double L = g.spacing * double(g.count - 1);
    return std::expm1(std::abs(sys.lambda) * sys.kernel.max_abs() * L);
}

} // namespace cstk
