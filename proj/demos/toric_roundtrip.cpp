// Projects a gaussian onto toric sections, inverts within the stable band and
// prints the central z-profile next to the band-limited phantom.

#include <cstdio>

#include "cstk/cstk.hpp"

using namespace cstk;

int main()
{
    ScanConfig scan;
    scan.x0 = centered_axis(256, 0.04);
    scan.n_r = scan.n_z = 128;

    Phantom f(2, {{PrimitiveKind::gaussian, {0.0, 0.0, 0.3}, {0.15, 0.0, 0.0}, 1.0}},
              Box3{{-0.9, 0.0, 0.01}, {0.9, 0.0, 0.99}});

    auto sino = sinogram_2d(f, scan);
    auto band = build_stable_band(scan, BandMode::toric(), 0.25, 4);
    auto res = reconstruct_2d(sino, scan, band);
    auto ref = band_limited_phantom(f, res.grid.x, res.grid.y, res.grid.z, res.band);

    std::printf("band limit %.6f, %zu frequencies, %.2f s\n", band.omega_max, res.diagnostics.size(), res.seconds);
    std::printf("relative L2 error on the support %.4g\n\n", relative_l2(res.grid, ref, &f.support()));
    std::printf("%8s %12s %12s\n", "z", "recon", "reference");
    std::size_t ix = res.grid.x.count / 2;
    for (std::size_t iz = 0; iz < res.grid.z.count; iz += 8)
        std::printf("%8.4f %12.6f %12.6f\n", res.grid.z[iz], res.grid.at(ix, 0, iz), ref.at(ix, 0, iz));
}
