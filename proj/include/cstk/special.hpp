#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "error.hpp"

namespace cstk {

inline constexpr double pi = std::numbers::pi;

inline double sinc(double x)
{
    if (std::abs(x) < 1e-4) {
        double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

struct BesselPair {
    double j0;
    double j1;
};

namespace detail {

// Power series, summed in type Real; adequate while the largest term stays
// small compared with 1/eps(Real).
template <class Real>
BesselPair bessel_series(double xd)
{
    Real x = xd;
    Real q = -x * x / 4;
    Real t0 = 1, t1 = x / 2;
    Real s0 = t0, s1 = t1;
    for (int k = 1; k < 200; ++k) {
        t0 *= q / (Real(k) * Real(k));
        t1 *= q / (Real(k) * Real(k + 1));
        s0 += t0;
        s1 += t1;
        if (std::abs(t0) < Real(1e-20) && std::abs(t1) < Real(1e-20)) break;
    }
    return {double(s0), double(s1)};
}

// Hankel asymptotic expansion for x >= 16.
inline double bessel_asymptotic(int n, double x)
{
    double mu = 4.0 * n * n;
    double z8 = 8.0 * x;
    double a = 1.0, p = 1.0, q = 0.0;
    for (int k = 1; k < 60; ++k) {
        double next = a * (mu - double(2 * k - 1) * double(2 * k - 1)) / (double(k) * z8);
        if (std::abs(next) > std::abs(a)) break;
        a = next;
        switch (k % 4) {
        case 1: q += a; break;
        case 2: p -= a; break;
        case 3: q -= a; break;
        default: p += a; break;
        }
        if (std::abs(a) < 1e-18) break;
    }
    double chi = x - (2.0 * n + 1.0) * pi / 4.0;
    return std::sqrt(2.0 / (pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

} // namespace detail

// J0 and J1 together; absolute error ~1e-14 for |x| <= 50.
inline BesselPair bessel_j01(double x)
{
    double ax = std::abs(x);
    BesselPair r;
    if (ax < 8.0)
        r = detail::bessel_series<double>(ax);
    else if (ax < 16.0)
        r = detail::bessel_series<long double>(ax);
    else
        r = {detail::bessel_asymptotic(0, ax), detail::bessel_asymptotic(1, ax)};
    if (x < 0) r.j1 = -r.j1;
    return r;
}

inline double bessel_j0(double x) { return bessel_j01(x).j0; }
inline double bessel_j1(double x) { return bessel_j01(x).j1; }

// First positive zero of J0, by bisection then one Newton step.
inline double first_j0_root()
{
    static const double root = [] {
        double lo = 2.0, hi = 3.0;
        while (hi - lo > 1e-15) {
            double mid = 0.5 * (lo + hi);
            if (bessel_j0(mid) > 0) lo = mid;
            else hi = mid;
        }
        double t = 0.5 * (lo + hi);
        auto b = bessel_j01(t);
        return t + b.j0 / b.j1;
    }();
    return root;
}

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

inline QuadratureRule make_gauss_legendre(std::size_t n)
{
    QuadratureRule q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (double(i) + 0.75) / (double(n) + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                double p2 = ((2.0 * double(k) - 1.0) * x * p1 - (double(k) - 1.0) * p0) / double(k);
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = double(n) * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            double p2 = ((2.0 * double(k) - 1.0) * x * p1 - (double(k) - 1.0) * p0) / double(k);
            p0 = p1;
            p1 = p2;
        }
        if (n == 1) p0 = 1.0;
        dp = double(n) * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        q.nodes[i] = -x;
        q.nodes[n - 1 - i] = x;
        q.weights[i] = w;
        q.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) q.nodes[n / 2] = 0.0;
    return q;
}

} // namespace detail

// Gauss-Legendre rule on [-1, 1], cached per order.
inline const QuadratureRule& gauss_legendre(std::size_t n)
{
    if (n == 0) throw ValidationError("quadrature order must be positive");
    static std::mutex m;
    static std::map<std::size_t, std::unique_ptr<QuadratureRule>> cache;
    std::lock_guard lock(m);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<QuadratureRule>(detail::make_gauss_legendre(n));
    return *slot;
}

// Integral of f over [a, b] with an n-point Gauss-Legendre rule.
template <class F>
auto integrate_gl(F&& f, double a, double b, std::size_t n)
{
    const auto& q = gauss_legendre(n);
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    decltype(f(c)) sum{};
    for (std::size_t i = 0; i < n; ++i) sum += q.weights[i] * f(c + h * q.nodes[i]);
    return sum * h;
}

} // namespace cstk
