// cstk: phantoms, projection, inversion, metrics and export for toric-section
// and apple transforms.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cstk/cstk.hpp"
#include "selftest.hpp"

using namespace cstk;

namespace {

constexpr int exit_selftest_failed = 3;

bool is_container(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    std::string first;
    std::getline(is, first);
    return first == "CSTK1";
}

StableBand nominal_band(const ScanConfig& scan, double taper, std::size_t pad)
{
    return build_stable_band(scan, scan.dim == 2 ? BandMode::toric() : BandMode::apple(), taper, pad);
}

void print_kv(const char* key, double v) { std::printf("%s %.17g\n", key, v); }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Toric-section and apple transform toolkit"};
    app.require_subcommand(1);

    std::string in, in2, cfg_path, out, mode, format = "csv", diag_path, region_path;
    double noise = 0.0, taper = -1.0, eps_norm = -1.0;
    std::uint64_t seed = 1;
    bool reference = false, band_flag = false, quick = false;

    auto* ph = app.add_subcommand("phantom", "sample a phantom description on the scan grid");
    ph->add_option("spec", in, "phantom description")->required();
    ph->add_option("--config", cfg_path, "run configuration")->required();
    ph->add_option("-o,--output", out, "output grid file")->required();
    ph->add_flag("--reference", reference, "band-limited phantom on the reconstruction grid");

    auto* pr = app.add_subcommand("project", "forward projection");
    pr->add_option("input", in, "phantom description or grid file")->required();
    pr->add_option("--mode", mode, "2d or 3d")->required()->check(CLI::IsMember({"2d", "3d"}));
    pr->add_option("--config", cfg_path, "run configuration")->required();
    pr->add_option("--noise", noise, "standard deviation of additive gaussian noise")->check(CLI::NonNegativeNumber);
    pr->add_option("--seed", seed, "noise seed");
    pr->add_option("-o,--output", out, "output sinogram file")->required();

    auto* rc = app.add_subcommand("reconstruct", "band-limited inversion");
    rc->add_option("sinogram", in, "sinogram file")->required();
    rc->add_option("--config", cfg_path, "run configuration")->required();
    rc->add_option("--taper", taper, "raised-cosine taper fraction")->check(CLI::Range(0.0, 1.0));
    rc->add_option("--eps-norm", eps_norm, "normalizer floor")->check(CLI::NonNegativeNumber);
    rc->add_option("-o,--output", out, "output grid file")->required();
    rc->add_option("--diag", diag_path, "per-frequency diagnostics CSV");

    auto* me = app.add_subcommand("metrics", "compare a reconstruction with a reference grid");
    me->add_option("recon", in, "reconstruction grid")->required();
    me->add_option("reference", in2, "reference grid")->required();
    me->add_flag("--band", band_flag, "apply the nominal stable band to both grids for band_rmse");
    me->add_option("--taper", taper, "taper of the band used by --band")->check(CLI::Range(0.0, 1.0));
    me->add_option("--region", region_path, "phantom description whose support restricts rel_l2");

    auto* ex = app.add_subcommand("export", "write CSV or 16-bit PGM");
    ex->add_option("grid", in, "grid file")->required();
    ex->add_option("--format", format, "csv or pgm")->check(CLI::IsMember({"csv", "pgm"}));
    ex->add_option("-o,--output", out, "output file or PGM base name")->required();

    auto* st = app.add_subcommand("selftest", "run the invariant suite");
    st->add_flag("--quick", quick, "skip the end-to-end check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "cstk: %s\n", e.what());
        return 1;
    }

    try {
        if (*ph) {
            auto cfg = read_config(cfg_path);
            auto f = read_phantom(in);
            if (f.dim() != cfg.scan.dim) throw ValidationError("phantom dim differs from config dim");
            if (!reference) {
                write_grid(out, sample_grid(f, cfg.scan));
            } else {
                sample_grid(f, cfg.scan);
                double t = taper >= 0 ? taper : cfg.taper;
                auto& p = cfg.pipeline;
                auto band = retained_band(cfg.scan, nominal_band(cfg.scan, t, p.pad_factor), p);
                Axis x = padded_axis(cfg.scan.x0, p.pad_factor);
                Axis y = cfg.scan.dim == 3 ? padded_axis(cfg.scan.y0, p.pad_factor) : Axis{0.0, 1.0, 1};
                auto g = band_limited_phantom(f, x, y, cfg.scan.z_axis(), band, 4);
                g.r_max = cfg.scan.r_max;
                g.delta = cfg.scan.delta;
                write_grid(out, g);
            }
        } else if (*pr) {
            auto cfg = read_config(cfg_path);
            int dim = mode == "2d" ? 2 : 3;
            if (dim != cfg.scan.dim) throw ValidationError("--mode " + mode + " differs from config dim " + std::to_string(cfg.scan.dim));
            unsigned w = cfg.pipeline.workers;
            Sinogram s;
            if (is_container(in)) {
                auto g = read_grid(in);
                if (g.dim != dim) throw ValidationError("grid dim differs from --mode");
                s = sinogram_from_grid(g, cfg.scan, w);
            } else {
                auto f = read_phantom(in);
                if (f.dim() != dim) throw ValidationError("phantom dim differs from --mode");
                sample_grid(f, cfg.scan);
                s = dim == 2 ? sinogram_2d(f, cfg.scan, cfg.quad, w) : sinogram_3d(f, cfg.scan, cfg.quad, w);
            }
            if (noise > 0) add_noise(s, noise, seed);
            write_sinogram(out, s);
        } else if (*rc) {
            auto cfg = read_config(cfg_path);
            auto sino = read_sinogram(in);
            auto scan = scan_from_sinogram(sino, cfg.scan.n_z);
            auto opts = cfg.pipeline;
            if (eps_norm >= 0) opts.eps_norm = eps_norm;
            double t = taper >= 0 ? taper : cfg.taper;
            auto band = nominal_band(scan, t, opts.pad_factor);
            auto res = scan.dim == 2 ? reconstruct_2d(sino, scan, band, opts) : reconstruct_3d(sino, scan, band, opts);
            write_grid(out, res.grid);
            if (!diag_path.empty()) write_diagnostics_csv(diag_path, res.diagnostics, scan.dim);
            std::size_t dropped = 0;
            for (const auto& d : res.diagnostics) dropped += !d.retained;
            if (dropped)
                std::fprintf(stderr, "cstk: warning: %zu of %zu in-band frequencies dropped by the normalizer floor\n",
                             dropped, res.diagnostics.size());
        } else if (*me) {
            auto a = read_grid(in), b = read_grid(in2);
            std::optional<StableBand> band;
            if (band_flag) {
                Axis wy = a.dim == 3 ? frequency_axis(a.y) : Axis{0.0, 1.0, 1};
                double om = stable_band_limit(a.r_max, a.dim == 2 ? BandMode::toric() : BandMode::apple());
                band = make_band(a.dim, frequency_axis(a.x), wy, om, taper >= 0 ? taper : 0.25);
            }
            auto m = metrics(a, b, band ? &*band : nullptr);
            print_kv("rmse", m.rmse);
            print_kv("psnr", m.psnr);
            print_kv("band_rmse", m.band_rmse);
            if (!region_path.empty()) {
                auto f = read_phantom(region_path);
                print_kv("rel_l2", relative_l2(a, b, &f.support()));
            } else {
                print_kv("rel_l2", relative_l2(a, b));
            }
        } else if (*ex) {
            auto g = read_grid(in);
            if (format == "csv")
                export_csv(out, g);
            else
                export_pgm(out, g);
        } else if (*st) {
            int failed = selftest::run(quick, stdout);
            return failed ? exit_selftest_failed : 0;
        }
    } catch (const NumericalGuardError& e) {
        std::fprintf(stderr, "cstk: numerical guard: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "cstk: %s\n", e.what());
        return 1;
    }
    return 0;
}
