// Apple transform of a constant density and of a gaussian ball, with the
// brute-force surface integral for comparison.

#include <cmath>
#include <cstdio>

#include "cstk/cstk.hpp"

using namespace cstk;

int main()
{
    Phantom unit(3, {{PrimitiveKind::box, {0, 0, 0.5}, {6, 6, 1}, 1.0}}, Box3{{-6, -6, -0.5}, {6, 6, 1.5}});
    std::printf("%6s %14s %14s\n", "r", "A[1](0,0,r)", "4 pi R r a_m");
    for (double r : {1.25, 1.5, 1.75, 2.0}) {
        double R = std::sqrt(r * r - 1);
        std::printf("%6.2f %14.8f %14.8f\n", r, apple_transform(unit, 0, 0, r), 4 * pi * R * r * std::atan(R));
    }

    Phantom ball(3, {{PrimitiveKind::gaussian, {0.1, -0.2, 0.5}, {0.08, 0.08, 0.08}, 1.0}});
    std::printf("\n%6s %6s %6s %14s %14s\n", "x0", "y0", "r", "quadrature", "brute force");
    for (auto [x0, y0, r] : {std::tuple{1.3, 0.0, 1.6}, {0.0, 1.8, 1.8}, {-0.3, -0.2, 2.0}}) {
        double q = apple_transform(ball, x0, y0, r);
        double b = oracle_integral(ball, {Manifold::Kind::sheet, 1, x0, y0, r}, 4000000) +
                   oracle_integral(ball, {Manifold::Kind::sheet, 2, x0, y0, r}, 4000000);
        std::printf("%6.2f %6.2f %6.2f %14.8g %14.8g\n", x0, y0, r, q, b);
    }
}
