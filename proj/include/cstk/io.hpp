#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "forward.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "phantom.hpp"
#include "reconstruct.hpp"

namespace cstk {

// Everything a run needs, as read from a `key value` config file.
struct RunConfig {
    ScanConfig scan;
    QuadratureOptions quad;
    PipelineOptions pipeline;
    double taper = 0.25;
};

namespace detail {

inline std::string fmt(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline double parse_double(const std::string& s, const std::string& what)
{
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw ValidationError(what + ": not a finite number: '" + s + "'");
    return v;
}

inline std::size_t parse_count(const std::string& s, const std::string& what)
{
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ValidationError(what + ": not a count: '" + s + "'");
    return v;
}

inline std::string strip_comment(std::string line)
{
    auto h = line.find('#');
    if (h != std::string::npos) line.erase(h);
    return line;
}

inline std::vector<std::string> split_ws(const std::string& line)
{
    std::istringstream is(line);
    std::vector<std::string> out;
    for (std::string t; is >> t;) out.push_back(t);
    return out;
}

} // namespace detail

inline RunConfig parse_config(std::istream& in)
{
    RunConfig c;
    std::size_t nx0 = c.scan.x0.count, ny0 = 1;
    double dx0 = c.scan.x0.spacing, dy0 = 0.0;
    int lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        auto t = detail::split_ws(detail::strip_comment(line));
        if (t.empty()) continue;
        std::string where = "config line " + std::to_string(lineno) + " (" + t[0] + ")";
        if (t.size() != 2) throw ValidationError(where + ": expected 'key value'");
        const std::string &k = t[0], &v = t[1];
        auto num = [&] { return detail::parse_double(v, where); };
        auto cnt = [&] { return detail::parse_count(v, where); };
        if (k == "dim") c.scan.dim = int(cnt());
        else if (k == "r_max") c.scan.r_max = num();
        else if (k == "delta") c.scan.delta = num();
        else if (k == "nx0") nx0 = cnt();
        else if (k == "dx0") dx0 = num();
        else if (k == "ny0") ny0 = cnt();
        else if (k == "dy0") dy0 = num();
        else if (k == "nr") c.scan.n_r = cnt();
        else if (k == "nz") c.scan.n_z = cnt();
        else if (k == "pad") c.pipeline.pad_factor = cnt();
        else if (k == "taper") c.taper = num();
        else if (k == "eps_norm") c.pipeline.eps_norm = num();
        else if (k == "ns") c.pipeline.n_s = cnt();
        else if (k == "eps_r") c.pipeline.eps_r = num();
        else if (k == "r_floor") c.pipeline.r_floor = num();
        else if (k == "workers") c.pipeline.workers = unsigned(cnt());
        else if (k == "n_alpha") c.quad.n_alpha = cnt();
        else if (k == "n_phi") c.quad.n_phi = cnt();
        else if (k == "n_arc") c.quad.n_arc = cnt();
        else if (k == "adaptive") c.quad.adaptive = cnt() != 0;
        else if (k == "quad_tol") c.quad.rel_tol = num();
        else if (k == "max_nodes") c.quad.max_nodes = cnt();
        else throw ValidationError(where + ": unknown key");
    }
    if (dy0 == 0.0) dy0 = dx0;
    c.scan.x0 = centered_axis(nx0, dx0);
    c.scan.y0 = c.scan.dim == 3 ? centered_axis(ny0 > 1 ? ny0 : nx0, dy0) : Axis{0.0, 1.0, 1};
    c.scan.validate();
    if (c.pipeline.pad_factor < 1) throw ValidationError("config: pad must be >= 1");
    if (!(c.taper >= 0 && c.taper <= 1)) throw ValidationError("config: taper must lie in [0, 1]");
    if (c.quad.n_alpha < 1 || c.quad.n_phi < 1 || c.quad.n_arc < 1) throw ValidationError("config: quadrature orders must be positive");
    return c;
}

inline RunConfig read_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path);
    return parse_config(in);
}

// Phantom description:
//   dim 2|3
//   support xlo xhi [ylo yhi] zlo zhi
//   gaussian|ball|box cx [cy] cz size amplitude
// size is one number, or for a box comma-separated half-widths per axis.
inline Phantom parse_phantom(std::istream& in)
{
    int dim = 0;
    std::optional<Box3> support;
    std::vector<Primitive> prims;
    int lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        auto t = detail::split_ws(detail::strip_comment(line));
        if (t.empty()) continue;
        std::string where = "phantom line " + std::to_string(lineno);
        auto num = [&](std::size_t i) { return detail::parse_double(t[i], where); };
        if (t[0] == "dim") {
            if (t.size() != 2) throw ValidationError(where + ": expected 'dim 2|3'");
            dim = int(detail::parse_count(t[1], where));
            if (dim != 2 && dim != 3) throw ValidationError(where + ": dim must be 2 or 3");
            continue;
        }
        if (dim == 0) throw ValidationError(where + ": 'dim' must come first");
        if (t[0] == "support") {
            if (t.size() != std::size_t(1 + 2 * dim)) throw ValidationError(where + ": wrong number of support bounds");
            Box3 b;
            b.lo.x = num(1);
            b.hi.x = num(2);
            if (dim == 3) {
                b.lo.y = num(3);
                b.hi.y = num(4);
            }
            b.lo.z = num(2 * dim - 1);
            b.hi.z = num(2 * dim);
            support = b;
            continue;
        }
        Primitive p;
        if (t[0] == "gaussian") p.kind = PrimitiveKind::gaussian;
        else if (t[0] == "ball") p.kind = PrimitiveKind::ball;
        else if (t[0] == "box") p.kind = PrimitiveKind::box;
        else throw ValidationError(where + ": unknown primitive '" + t[0] + "'");
        if (t.size() != std::size_t(dim + 3)) throw ValidationError(where + ": wrong number of fields");
        p.center.x = num(1);
        if (dim == 3) p.center.y = num(2);
        p.center.z = num(dim);
        std::vector<double> size;
        {
            std::string s = t[dim + 1];
            for (std::size_t a = 0; a <= s.size();) {
                auto b = s.find(',', a);
                if (b == std::string::npos) b = s.size();
                size.push_back(detail::parse_double(s.substr(a, b - a), where));
                a = b + 1;
            }
        }
        if (size.size() == 1) size.assign(3, size[0]);
        else if (p.kind == PrimitiveKind::box && size.size() == std::size_t(dim)) {
            if (dim == 2) size = {size[0], 0.0, size[1]};
        } else throw ValidationError(where + ": bad size field");
        p.size = {size[0], dim == 3 ? size[1] : size[0], size[2]};
        p.amplitude = num(dim + 2);
        prims.push_back(p);
    }
    if (dim == 0) throw ValidationError("phantom description lacks 'dim'");
    return Phantom(dim, std::move(prims), support);
}

inline Phantom read_phantom(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open phantom file " + path);
    return parse_phantom(in);
}

// Binary container: magic line, `key value` header, DATA line, then
// little-endian float64 samples, fastest axis first.
namespace detail {

struct Container {
    std::string kind;
    int dim = 2;
    std::vector<std::pair<std::string, Axis>> axes; // fastest first
    double r_max = 0, delta = 0;
    std::vector<double> values;
};

inline void put_le(std::ostream& os, const std::vector<double>& v)
{
    std::vector<unsigned char> buf(v.size() * 8);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t u = std::bit_cast<std::uint64_t>(v[i]);
        for (int b = 0; b < 8; ++b) buf[8 * i + b] = (u >> (8 * b)) & 0xff;
    }
    os.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
}

inline void write_container(const std::string& path, const Container& c)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot write " + path);
    os << "CSTK1\n" << "kind " << c.kind << "\n" << "dim " << c.dim << "\n";
    for (const auto& [name, a] : c.axes)
        os << name << ".count " << a.count << "\n" << name << ".origin " << fmt(a.origin) << "\n"
           << name << ".spacing " << fmt(a.spacing) << "\n";
    os << "r_max " << fmt(c.r_max) << "\n" << "delta " << fmt(c.delta) << "\n" << "DATA\n";
    put_le(os, c.values);
    if (!os) throw ValidationError("write failed for " + path);
}

inline Container read_container(const std::string& path, const std::string& kind,
                                const std::vector<std::string>& names3)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != "CSTK1") throw ValidationError(path + ": bad magic, expected CSTK1");
    std::map<std::string, std::string> h;
    bool data = false;
    while (std::getline(is, line)) {
        if (line == "DATA") {
            data = true;
            break;
        }
        auto t = split_ws(line);
        if (t.size() != 2) throw ValidationError(path + ": malformed header line '" + line + "'");
        if (h.count(t[0])) throw ValidationError(path + ": duplicate header key " + t[0]);
        h[t[0]] = t[1];
    }
    if (!data) throw ValidationError(path + ": missing DATA line");
    auto need = [&](const std::string& k) {
        auto it = h.find(k);
        if (it == h.end()) throw ValidationError(path + ": missing header key " + k);
        return it->second;
    };
    Container c;
    c.kind = need("kind");
    if (c.kind != kind) throw ValidationError(path + ": header key kind is '" + c.kind + "', expected '" + kind + "'");
    c.dim = int(parse_count(need("dim"), path + ": header key dim"));
    if (c.dim != 2 && c.dim != 3) throw ValidationError(path + ": header key dim must be 2 or 3");
    std::size_t expect = 1, used = 2;
    for (std::size_t i = 0; i < names3.size(); ++i) {
        if (c.dim == 2 && i == 1) continue;
        const auto& n = names3[i];
        Axis a;
        a.count = parse_count(need(n + ".count"), path + ": header key " + n + ".count");
        a.origin = parse_double(need(n + ".origin"), path + ": header key " + n + ".origin");
        a.spacing = parse_double(need(n + ".spacing"), path + ": header key " + n + ".spacing");
        if (a.count == 0) throw ValidationError(path + ": header key " + n + ".count must be positive");
        if (!(a.spacing > 0)) throw ValidationError(path + ": header key " + n + ".spacing must be positive");
        c.axes.emplace_back(n, a);
        expect *= a.count;
        used += 3;
    }
    c.r_max = parse_double(need("r_max"), path + ": header key r_max");
    c.delta = parse_double(need("delta"), path + ": header key delta");
    used += 2;
    if (h.size() != used) {
        for (const auto& [k, v] : h) {
            bool known = k == "kind" || k == "dim" || k == "r_max" || k == "delta";
            for (const auto& [n, a] : c.axes) known = known || k.rfind(n + ".", 0) == 0;
            if (!known) throw ValidationError(path + ": unknown header key " + k);
        }
    }
    auto offset = std::size_t(is.tellg());
    std::vector<char> raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (raw.size() != expect * 8)
        throw ValidationError(path + ": payload at byte offset " + std::to_string(offset) + " has " +
                              std::to_string(raw.size()) + " bytes, expected " + std::to_string(expect * 8));
    c.values.resize(expect);
    for (std::size_t i = 0; i < expect; ++i) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= std::uint64_t(static_cast<unsigned char>(raw[8 * i + b])) << (8 * b);
        c.values[i] = std::bit_cast<double>(u);
    }
    return c;
}

} // namespace detail

inline void write_grid(const std::string& path, const DensityGrid& g)
{
    detail::Container c{"grid", g.dim, {{"x", g.x}}, g.r_max, g.delta, g.values};
    if (g.dim == 3) c.axes.emplace_back("y", g.y);
    c.axes.emplace_back("z", g.z);
    detail::write_container(path, c);
}

inline DensityGrid read_grid(const std::string& path)
{
    auto c = detail::read_container(path, "grid", {"x", "y", "z"});
    DensityGrid g;
    g.dim = c.dim;
    g.x = c.axes[0].second;
    if (c.dim == 3) g.y = c.axes[1].second;
    g.z = c.axes.back().second;
    g.r_max = c.r_max;
    g.delta = c.delta;
    g.values = std::move(c.values);
    return g;
}

inline void write_sinogram(const std::string& path, const Sinogram& s)
{
    detail::Container c{"sinogram", s.dim, {{"x0", s.x0}}, s.r_max, s.delta, s.values};
    if (s.dim == 3) c.axes.emplace_back("y0", s.y0);
    c.axes.emplace_back("r", s.r);
    detail::write_container(path, c);
}

inline Sinogram read_sinogram(const std::string& path)
{
    auto c = detail::read_container(path, "sinogram", {"x0", "y0", "r"});
    Sinogram s;
    s.dim = c.dim;
    s.x0 = c.axes[0].second;
    if (c.dim == 3) s.y0 = c.axes[1].second;
    s.r = c.axes.back().second;
    s.r_max = c.r_max;
    s.delta = c.delta;
    s.values = std::move(c.values);
    return s;
}

// Sinogram header adopted as the scan geometry.
inline ScanConfig scan_from_sinogram(const Sinogram& s, std::size_t n_z)
{
    ScanConfig c;
    c.dim = s.dim;
    c.r_max = s.r_max;
    c.delta = s.delta;
    c.x0 = s.x0;
    c.y0 = s.dim == 3 ? s.y0 : Axis{0.0, 1.0, 1};
    c.n_r = s.r.count;
    c.n_z = n_z;
    return c;
}

inline void export_csv(const std::string& path, const DensityGrid& g)
{
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot write " + path);
    os << (g.dim == 3 ? "x,y,z,value\n" : "x,z,value\n");
    for (std::size_t iz = 0; iz < g.z.count; ++iz)
        for (std::size_t iy = 0; iy < g.y.count; ++iy)
            for (std::size_t ix = 0; ix < g.x.count; ++ix) {
                os << detail::fmt(g.x[ix]) << ',';
                if (g.dim == 3) os << detail::fmt(g.y[iy]) << ',';
                os << detail::fmt(g.z[iz]) << ',' << detail::fmt(g.at(ix, iy, iz)) << '\n';
            }
}

// 16-bit binary PGM (rows = z from top to bottom, columns = x), linear
// scaling between the grid minimum and maximum recorded in <base>.meta.
// 3-D grids give one image per z slice (rows = y): <base>_000.pgm, ...
inline std::vector<std::string> export_pgm(const std::string& base, const DensityGrid& g)
{
    double lo = INFINITY, hi = -INFINITY;
    for (double v : g.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    auto level = [&](double v) {
        if (!(hi > lo)) return 0u;
        return unsigned(std::lround(std::clamp((v - lo) / (hi - lo), 0.0, 1.0) * 65535.0));
    };
    std::string stem = base;
    if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".pgm") stem.resize(stem.size() - 4);
    auto write_image = [&](const std::string& path, std::size_t w, std::size_t h, auto&& pixel) {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw ValidationError("cannot write " + path);
        os << "P5\n" << w << ' ' << h << "\n65535\n";
        for (std::size_t row = 0; row < h; ++row)
            for (std::size_t col = 0; col < w; ++col) {
                unsigned v = level(pixel(col, row));
                char b[2] = {char(v >> 8), char(v & 0xff)};
                os.write(b, 2);
            }
    };
    std::vector<std::string> files;
    if (g.dim == 2) {
        files.push_back(stem + ".pgm");
        write_image(files.back(), g.x.count, g.z.count,
                    [&](std::size_t c, std::size_t r) { return g.at(c, 0, g.z.count - 1 - r); });
    } else {
        std::size_t width = std::max<std::size_t>(3, std::to_string(g.z.count - 1).size());
        for (std::size_t iz = 0; iz < g.z.count; ++iz) {
            std::ostringstream name;
            name << stem << '_' << std::setw(int(width)) << std::setfill('0') << iz << ".pgm";
            files.push_back(name.str());
            write_image(files.back(), g.x.count, g.y.count,
                        [&](std::size_t c, std::size_t r) { return g.at(c, g.y.count - 1 - r, iz); });
        }
    }
    std::ofstream meta(stem + ".meta");
    meta << "min " << detail::fmt(std::isfinite(lo) ? lo : 0.0) << "\nmax " << detail::fmt(std::isfinite(hi) ? hi : 0.0)
         << "\n";
    return files;
}

// One row per candidate frequency: omega_1 in 2-D, |omega| in 3-D.
inline void write_diagnostics_csv(const std::string& path, const std::vector<FrequencyDiagnostic>& d, int dim)
{
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot write " + path);
    os << "omega,retained,normalizer_min,residual\n";
    for (const auto& e : d)
        os << detail::fmt(dim == 2 ? e.omega_x : e.omega) << ',' << (e.retained ? 1 : 0) << ','
           << detail::fmt(e.normalizer_min) << ',' << detail::fmt(e.residual) << '\n';
}

} // namespace cstk
