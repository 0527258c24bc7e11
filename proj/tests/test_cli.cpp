#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cstk/io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string cli = CSTK_CLI_PATH;
const std::string data = CSTK_DATA_DIR;

fs::path dir()
{
    auto d = fs::temp_directory_path() / "cstk_test_cli" / ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::create_directories(d);
    return d;
}

std::string at(const std::string& name) { return (dir() / name).string(); }

int run(const std::string& args, std::string* out = nullptr)
{
    std::string o = at("stdout.txt"), e = at("stderr.txt");
    int rc = std::system((cli + " " + args + " >" + o + " 2>" + e).c_str());
    if (out) {
        std::ifstream is(o);
        *out = {std::istreambuf_iterator<char>(is), {}};
    }
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string stderr_text()
{
    std::ifstream is(at("stderr.txt"));
    return {std::istreambuf_iterator<char>(is), {}};
}

std::string bytes(const std::string& p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

void write(const std::string& p, const std::string& s) { std::ofstream(p) << s; }

const char* small_2d = "dim 2\nr_max 2\nnx0 128\ndx0 0.07\nnr 64\nnz 64\npad 4\n";
const char* small_3d = "dim 3\nr_max 2\ndelta 0.1\nnx0 16\ndx0 0.5\nnr 64\nnz 16\npad 2\nadaptive 0\nn_alpha 16\nn_phi 32\n";

} // namespace

TEST(Cli, PipelineAndMetrics)
{
    write(at("c2.cfg"), small_2d);
    std::string ph = data + "/gaussian_2d.txt";
    ASSERT_EQ(run("project " + ph + " --mode 2d --config " + at("c2.cfg") + " -o " + at("s.cstk")), 0) << stderr_text();
    ASSERT_EQ(run("reconstruct " + at("s.cstk") + " --config " + at("c2.cfg") + " -o " + at("r.cstk") + " --diag " + at("d.csv")), 0)
        << stderr_text();
    ASSERT_EQ(run("phantom " + ph + " --config " + at("c2.cfg") + " --reference -o " + at("ref.cstk")), 0) << stderr_text();
    std::string out;
    ASSERT_EQ(run("metrics " + at("r.cstk") + " " + at("ref.cstk") + " --band --region " + ph, &out), 0) << stderr_text();
    std::istringstream is(out);
    std::string k;
    double v;
    std::map<std::string, double> m;
    while (is >> k >> v) m[k] = v;
    ASSERT_EQ(m.size(), 4u) << out;
    EXPECT_LT(m["rel_l2"], 0.15);
    EXPECT_GT(m["psnr"], 0.0);
    EXPECT_EQ(bytes(at("d.csv")).rfind("omega,retained,normalizer_min,residual\n", 0), 0u);
    auto r = cstk::read_grid(at("r.cstk"));
    EXPECT_EQ(r.x.count, 512u);
    EXPECT_EQ(run("metrics " + at("r.cstk") + " " + at("r.cstk"), &out), 0);
    EXPECT_NE(out.find("psnr 999\n"), std::string::npos) << out;
}

TEST(Cli, ProjectionIsDeterministic)
{
    write(at("c2.cfg"), small_2d);
    std::string ph = data + "/gaussian_2d.txt";
    for (const char* name : {"n1.cstk", "n2.cstk"})
        ASSERT_EQ(run("project " + ph + " --mode 2d --config " + at("c2.cfg") + " --noise 0.01 --seed 7 -o " + at(name)), 0);
    EXPECT_EQ(bytes(at("n1.cstk")), bytes(at("n2.cstk")));
    ASSERT_EQ(run("project " + ph + " --mode 2d --config " + at("c2.cfg") + " --noise 0.01 --seed 8 -o " + at("n3.cstk")), 0);
    EXPECT_NE(bytes(at("n1.cstk")), bytes(at("n3.cstk")));
}

TEST(Cli, GridInputAndExport)
{
    write(at("c2.cfg"), small_2d);
    std::string ph = data + "/gaussian_2d.txt";
    ASSERT_EQ(run("phantom " + ph + " --config " + at("c2.cfg") + " -o " + at("g.cstk")), 0) << stderr_text();
    ASSERT_EQ(run("project " + at("g.cstk") + " --mode 2d --config " + at("c2.cfg") + " -o " + at("gs.cstk")), 0) << stderr_text();
    auto s = cstk::read_sinogram(at("gs.cstk"));
    EXPECT_EQ(s.r.count, 64u);
    ASSERT_EQ(run("export " + at("g.cstk") + " --format csv -o " + at("g.csv")), 0);
    EXPECT_EQ(bytes(at("g.csv")).rfind("x,z,value\n", 0), 0u);
    ASSERT_EQ(run("export " + at("g.cstk") + " --format pgm -o " + at("g")), 0);
    EXPECT_EQ(bytes(at("g.pgm")).rfind("P5\n128 64\n65535\n", 0), 0u);
    EXPECT_TRUE(fs::exists(at("g.meta")));
}

TEST(Cli, ThreeDimensionalRun)
{
    write(at("c3.cfg"), small_3d);
    std::string ph = data + "/gaussian_3d.txt";
    ASSERT_EQ(run("project " + ph + " --mode 3d --config " + at("c3.cfg") + " -o " + at("s3.cstk")), 0) << stderr_text();
    ASSERT_EQ(run("reconstruct " + at("s3.cstk") + " --config " + at("c3.cfg") + " -o " + at("r3.cstk")), 0) << stderr_text();
    ASSERT_EQ(run("export " + at("r3.cstk") + " --format pgm -o " + at("vol")), 0);
    EXPECT_TRUE(fs::exists(at("vol_000.pgm")));
    EXPECT_TRUE(fs::exists(at("vol_015.pgm")));
}

TEST(Cli, ValidationExitsOne)
{
    write(at("c2.cfg"), small_2d);
    write(at("bad.cfg"), "dim 2\nspeed 3\n");
    std::string ph = data + "/gaussian_2d.txt";
    EXPECT_EQ(run("project " + ph + " --mode 2d --config " + at("bad.cfg") + " -o " + at("x.cstk")), 1);
    EXPECT_NE(stderr_text().find("speed"), std::string::npos);
    EXPECT_EQ(stderr_text().find('\n'), stderr_text().size() - 1);
    EXPECT_EQ(run("project " + ph + " --mode 3d --config " + at("c2.cfg") + " -o " + at("x.cstk")), 1);
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("export " + at("missing.cstk") + " -o " + at("x.csv")), 1);

    ASSERT_EQ(run("phantom " + ph + " --config " + at("c2.cfg") + " -o " + at("t.cstk")), 0);
    auto b = bytes(at("t.cstk"));
    std::ofstream(at("t.cstk"), std::ios::binary).write(b.data(), std::streamsize(b.size() - 8));
    EXPECT_EQ(run("export " + at("t.cstk") + " -o " + at("x.csv")), 1);
    EXPECT_NE(stderr_text().find("byte offset"), std::string::npos) << stderr_text();

    write(at("tall.txt"), "dim 2\ngaussian 0 0.8 0.15 1\n");
    EXPECT_EQ(run("phantom " + at("tall.txt") + " --config " + at("c2.cfg") + " -o " + at("x.cstk")), 1);
}

TEST(Cli, NumericalGuardExitsTwo)
{
    write(at("guard.cfg"), std::string(small_3d) + "r_floor 0.5\n");
    std::string ph = data + "/gaussian_3d.txt";
    ASSERT_EQ(run("project " + ph + " --mode 3d --config " + at("guard.cfg") + " -o " + at("sg.cstk")), 0) << stderr_text();
    EXPECT_EQ(run("reconstruct " + at("sg.cstk") + " --config " + at("guard.cfg") + " -o " + at("rg.cstk")), 2);
    EXPECT_NE(stderr_text().find("numerical guard"), std::string::npos);
}

TEST(Cli, QuickSelftest)
{
    std::string out;
    EXPECT_EQ(run("selftest --quick", &out), 0) << out;
    EXPECT_EQ(out.find("FAIL"), std::string::npos) << out;
    EXPECT_NE(out.find("PASS"), std::string::npos);
}
