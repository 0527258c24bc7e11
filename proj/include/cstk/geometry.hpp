#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "axis.hpp"
#include "error.hpp"
#include "special.hpp"

namespace cstk {

// Toric section of radius r: two circles of radius r centred at (+-R, 2),
// R = sqrt(r^2 - 1), lowest point at height h = 2 - r.
struct TorusParams {
    double r;
    double R;
    double h;
};

inline TorusParams torus_params(double r)
{
    if (!(r >= 1.0)) throw DomainError("torus radius must be >= 1, got " + std::to_string(r));
    return {r, std::sqrt((r - 1.0) * (r + 1.0)), 2.0 - r};
}

// Upper limit of the branch angle: cos(alpha_max) = 1/r.
inline double branch_alpha_max(double r)
{
    return std::atan(torus_params(r).R);
}

namespace detail {

// sqrt(r^2 - (z - 2)^2) without cancellation.
inline double half_chord(double r, double z)
{
    double d = std::abs(2.0 - z);
    return std::sqrt(std::max(0.0, (r - d) * (r + d)));
}

inline void check_branch_height(double r, double z, double h)
{
    if (!(z >= h && z <= 1.0))
        throw DomainError("height " + std::to_string(z) + " outside [2 - r, 1] for r = " + std::to_string(r));
}

} // namespace detail

// Abscissa of branch j (1..4) at height z: +-R +- sqrt(r^2 - (z-2)^2).
inline double toric_branch_x(double r, double z, int branch)
{
    auto t = torus_params(r);
    detail::check_branch_height(r, z, t.h);
    double w = detail::half_chord(r, z);
    switch (branch) {
    case 1: return t.R + w;
    case 2: return t.R - w;
    case 3: return -t.R + w;
    case 4: return -t.R - w;
    default: throw DomainError("branch index must be 1..4");
    }
}

// Radius of apple sheet 1 (outer, R + chord) or 2 (inner, R - chord).
inline double apple_radius(double r, double z, int sheet)
{
    auto t = torus_params(r);
    if (sheet != 1 && sheet != 2) throw DomainError("sheet index must be 1 or 2");
    double w = detail::half_chord(r, z);
    return sheet == 1 ? t.R + w : t.R - w;
}

struct PlanarPoint {
    double x;
    double y;
};

inline PlanarPoint apple_point(double r, double z, double phi, int sheet)
{
    detail::check_branch_height(r, z, torus_params(r).h);
    double rho = apple_radius(r, z, sheet);
    return {rho * std::cos(phi), rho * std::sin(phi)};
}

// Arc-length density ds/dz = r / sqrt(r^2 - (z-2)^2) of every branch.
inline double arc_measure(double r, double z)
{
    torus_params(r);
    double d = std::abs(z - 2.0);
    if (!(d < r)) throw DomainError("arc measure singular or undefined at |z - 2| >= r");
    return r / std::sqrt((r - d) * (r + d));
}

// Surface density dA/(dz dphi) of an apple sheet.
inline double surface_measure(double r, double z, int sheet)
{
    return arc_measure(r, z) * apple_radius(r, z, sheet);
}

class BandMode {
public:
    enum class Kind { toric, apple, generalized };

    static BandMode toric() { return BandMode(Kind::toric, 0.0); }
    static BandMode apple() { return BandMode(Kind::apple, 0.0); }
    static BandMode generalized(double profile_bound)
    {
        if (!(profile_bound > 0)) throw DomainError("profile bound must be positive");
        return BandMode(Kind::generalized, profile_bound);
    }

    Kind kind() const { return kind_; }
    double profile_bound() const { return bound_; }

private:
    BandMode(Kind k, double m) : kind_(k), bound_(m) {}
    Kind kind_;
    double bound_;
};

// Largest |omega| for which the normalizer of the second-kind reduction
// cannot vanish on the scan.
inline double stable_band_limit(double r_max, BandMode mode)
{
    if (!(r_max > 1.0)) throw DomainError("r_max must exceed 1");
    double span = std::sqrt((r_max - 1.0) * (r_max + 1.0));
    switch (mode.kind()) {
    case BandMode::Kind::toric: return 0.5 * pi / span;
    case BandMode::Kind::apple: return first_j0_root() / span;
    default: return first_j0_root() / mode.profile_bound();
    }
}

// Scan geometry and sampling.
//   translations: x0 (and y0 in 3-D), centered axes
//   radii:        r_i = 1 + (i + 1) (r_max - 1) / n_r, i < n_r
//   heights:      n_z cells covering [2 - r_max, 1], cell centred
struct ScanConfig {
    int dim = 2;
    double r_max = 2.0;
    double delta = 0.0;
    Axis x0 = centered_axis(256, 0.04);
    Axis y0 = {0.0, 1.0, 1};
    std::size_t n_r = 256;
    std::size_t n_z = 256;

    Axis r_axis() const
    {
        double dr = (r_max - 1.0) / double(n_r);
        return {1.0 + dr, dr, n_r};
    }
    Axis z_axis() const
    {
        double dz = (r_max - 1.0) / double(n_z);
        return {2.0 - r_max + 0.5 * dz, dz, n_z};
    }

    void validate(bool inversion = false) const
    {
        if (dim != 2 && dim != 3) throw ValidationError("dim must be 2 or 3");
        if (!(r_max > 1.0)) throw ValidationError("r_max must exceed 1");
        if (n_r < 1 || n_z < 1) throw ValidationError("n_r and n_z must be positive");
        if (x0.count < 1 || !(x0.spacing > 0)) throw ValidationError("x0 axis must be non-empty with positive spacing");
        if (dim == 3 && (y0.count < 1 || !(y0.spacing > 0)))
            throw ValidationError("y0 axis must be non-empty with positive spacing");
        if (!(delta >= 0.0)) throw ValidationError("delta must be non-negative");
        if (inversion && dim == 3 && !(delta > 0.0 && delta < r_max - 1.0))
            throw ValidationError("3-D inversion requires 0 < delta < r_max - 1");
    }
};

// Rotationally symmetric surface family: sheet j is the surface of
// revolution of radius rho_j(r, z) about the vertical axis, at height 2 - z,
// for 1 < z < r.
struct Profile {
    std::function<double(double, double)> radius;
    std::function<double(double, double)> radius_dz; // partial in z at fixed r
};

class ProfileFamily {
public:
    // Bounds are sampled on the triangle 1 <= z <= r <= r_max (512 x 512)
    // and inflated by 1%.
    ProfileFamily(std::vector<Profile> profiles, double r_max) : profiles_(std::move(profiles)), r_max_(r_max)
    {
        if (profiles_.empty()) throw ValidationError("profile family is empty");
        if (!(r_max > 1.0)) throw DomainError("r_max must exceed 1");
        const int n = 512;
        for (const auto& p : profiles_) {
            if (!p.radius) throw ValidationError("profile without radius function");
            double m = 0;
            for (int i = 0; i < n; ++i) {
                double r = 1.0 + (r_max - 1.0) * double(i) / (n - 1);
                for (int k = 0; k < n; ++k) {
                    double z = 1.0 + (r - 1.0) * double(k) / (n - 1);
                    double v = p.radius(r, z);
                    if (!std::isfinite(v)) continue;
                    if (v < -1e-12) throw ValidationError("profile radius is negative");
                    m = std::max(m, v);
                }
            }
            bounds_.push_back(1.01 * m);
        }
    }

    const std::vector<Profile>& profiles() const { return profiles_; }
    double bound(std::size_t j) const { return bounds_.at(j); }
    double max_bound() const { return *std::max_element(bounds_.begin(), bounds_.end()); }
    double r_max() const { return r_max_; }

private:
    std::vector<Profile> profiles_;
    std::vector<double> bounds_;
    double r_max_;
};

// The two apple sheets written as a profile family (z reflected to (1, r)).
inline ProfileFamily apple_profiles(double r_max)
{
    auto chord = [](double r, double z) { return std::sqrt(std::max(0.0, (r - z) * (r + z))); };
    auto R = [](double r) { return std::sqrt((r - 1.0) * (r + 1.0)); };
    std::vector<Profile> p(2);
    p[0].radius = [=](double r, double z) { return R(r) + chord(r, z); };
    p[0].radius_dz = [=](double r, double z) { return -z / chord(r, z); };
    p[1].radius = [=](double r, double z) { return R(r) - chord(r, z); };
    p[1].radius_dz = [=](double r, double z) { return z / chord(r, z); };
    return ProfileFamily(std::move(p), r_max);
}

} // namespace cstk
