#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include "error.hpp"

namespace cstk {

// Uniform sample axis: coordinate of sample i is origin + i * spacing.
struct Axis {
    double origin = 0.0;
    double spacing = 1.0;
    std::size_t count = 0;

    double operator[](std::size_t i) const { return origin + spacing * double(i); }
    double front() const { return origin; }
    double back() const { return origin + spacing * double(count - 1); }
};

inline bool operator==(const Axis& a, const Axis& b)
{
    return a.count == b.count && a.origin == b.origin && a.spacing == b.spacing;
}

// n samples centered on zero: x_i = (i - n/2) * h.
inline Axis centered_axis(std::size_t n, double h)
{
    return {-double(n / 2) * h, h, n};
}

inline bool is_centered(const Axis& a)
{
    return std::abs(a.origin + double(a.count / 2) * a.spacing) <= 1e-12 * a.spacing * double(a.count + 1);
}

// Same spacing, factor times as many samples, still centered.
inline Axis padded_axis(const Axis& a, std::size_t factor)
{
    if (!is_centered(a)) throw ValidationError("padding requires a centered translation axis");
    if (factor < 1) throw ValidationError("padding factor must be >= 1");
    return centered_axis(a.count * factor, a.spacing);
}

// Angular frequencies of the DFT of a sampled axis, in centered order.
inline Axis frequency_axis(const Axis& a)
{
    return centered_axis(a.count, 2.0 * std::numbers::pi / (double(a.count) * a.spacing));
}

} // namespace cstk
