#pragma once

#include <cstddef>
#include <vector>

#include "axis.hpp"
#include "error.hpp"

namespace cstk {

// Cell-centred samples, row-major [z][y][x] with x fastest; y has a single
// sample in 2-D.
struct DensityGrid {
    int dim = 2;
    Axis x, y{0.0, 1.0, 1}, z;
    std::vector<double> values;
    double r_max = 0.0;
    double delta = 0.0;

    std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz) const
    {
        return (iz * y.count + iy) * x.count + ix;
    }
    double& at(std::size_t ix, std::size_t iy, std::size_t iz) { return values[index(ix, iy, iz)]; }
    double at(std::size_t ix, std::size_t iy, std::size_t iz) const { return values[index(ix, iy, iz)]; }
    std::size_t size() const { return x.count * y.count * z.count; }
    double cell_volume() const { return x.spacing * z.spacing * (dim == 3 ? y.spacing : 1.0); }
    void allocate() { values.assign(size(), 0.0); }
};

// Samples of the forward transform, row-major [r][y0][x0] with x0 fastest.
struct Sinogram {
    int dim = 2;
    Axis x0, y0{0.0, 1.0, 1}, r;
    std::vector<double> values;
    double r_max = 0.0;
    double delta = 0.0;

    std::size_t index(std::size_t ix, std::size_t iy, std::size_t ir) const
    {
        return (ir * y0.count + iy) * x0.count + ix;
    }
    double& at(std::size_t ix, std::size_t iy, std::size_t ir) { return values[index(ix, iy, ir)]; }
    double at(std::size_t ix, std::size_t iy, std::size_t ir) const { return values[index(ix, iy, ir)]; }
    std::size_t size() const { return x0.count * y0.count * r.count; }
    void allocate() { values.assign(size(), 0.0); }
};

inline void check_same_shape(const DensityGrid& a, const DensityGrid& b)
{
    if (a.dim != b.dim || !(a.x == b.x) || !(a.y == b.y) || !(a.z == b.z) || a.values.size() != b.values.size())
        throw ValidationError("grids differ in shape or sampling");
}

} // namespace cstk
