#include "cli_harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace fractalms::testing;

namespace {

const double kd = std::log(4.0) / std::log(3.0);

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("fractalms_test_" + name)).string();
}

} // namespace

TEST(Cli, DimensionOfKochLineAndSegment)
{
    auto r = run({"dimension"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto csv = parse_csv(r.out);
    EXPECT_EQ(csv.header, (std::vector<std::string>{"delta", "mass"}));
    EXPECT_NEAR(std::stod(csv.meta_value("dimension")), kd, 0.02);

    r = run({"dimension", "--curve", "line"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(std::stod(parse_csv(r.out).meta_value("dimension")), 1.0, 1e-3);

    r = run({"dimension", "--level", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(std::stod(parse_csv(r.out).meta_value("dimension")), 1.0, 1e-3);
}

TEST(Cli, StaircaseOracles)
{
    auto r = run({"staircase", "--curve", "line", "--alpha", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto csv = parse_csv(r.out);
    ASSERT_FALSE(csv.rows.empty());
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        ASSERT_NEAR(csv.num(i, "S"), csv.num(i, "t"), 1e-12);

    r = run({"staircase"});
    ASSERT_EQ(r.code, 0) << r.err;
    csv = parse_csv(r.out);
    const double s1 = csv.num(csv.rows.size() - 1, "S");
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        if (csv.num(i, "t") == 0.25) {
            EXPECT_NEAR(csv.num(i, "S") / s1, 0.25, 1e-6);
        }
    }

    r = run({"staircase", "--p0", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    csv = parse_csv(r.out);
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const double t = csv.num(i, "t"), s = csv.num(i, "S");
        if (t < 0.5)
            ASSERT_LT(s, 0.0);
        else if (t > 0.5)
            ASSERT_GT(s, 0.0);
        else
            ASSERT_EQ(s, 0.0);
    }
}

TEST(Cli, CdfReproducesExponential)
{
    auto r = run({"cdf", "--lambda", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto csv = parse_csv(r.out);
    EXPECT_EQ(csv.header, (std::vector<std::string>{"t", "J", "F_X"}));
    EXPECT_EQ(csv.num(0, "J"), 0.0);
    EXPECT_EQ(csv.num(0, "F_X"), 0.0);
    EXPECT_NEAR(std::stod(csv.meta_value("final_F_X")), 1.0 - std::exp(-1.0), 1e-12);
    for (std::size_t i = 1; i < csv.rows.size(); ++i)
        ASSERT_GE(csv.num(i, "F_X"), csv.num(i - 1, "F_X"));

    const auto twice = parse_csv(run({"cdf", "--lambda", "2"}).out);
    ASSERT_EQ(twice.rows.size(), csv.rows.size());
    for (std::size_t i = 1; i < csv.rows.size(); ++i)
        ASSERT_GT(twice.num(i, "F_X"), csv.num(i, "F_X"));
}

TEST(Cli, SdeCosineAndBetaBlock)
{
    auto r = run({"sde", "--a2", "4", "--ex0", "1", "--ex1", "0", "--ex1sq", "0", "--ex0x1", "0", "--jmax", "2",
                  "--grid", "400", "--n", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto csv = parse_csv(r.out);
    EXPECT_EQ(csv.header,
              (std::vector<std::string>{"t", "J", "mean", "second_moment", "variance", "mc_mean", "mc_stderr"}));
    EXPECT_EQ(csv.num(0, "mean"), 1.0);
    double first_zero = -1.0;
    for (std::size_t i = 1; i < csv.rows.size() && first_zero < 0; ++i) {
        const double m0 = csv.num(i - 1, "mean"), m1 = csv.num(i, "mean");
        if (m0 > 0 && m1 <= 0) {
            const double j0 = csv.num(i - 1, "J"), j1 = csv.num(i, "J");
            first_zero = j0 + (j1 - j0) * m0 / (m0 - m1);
        }
    }
    EXPECT_NEAR(first_zero, std::numbers::pi / 4, 1e-4);

    r = run({"sde", "--n", "0", "--grid", "1000"});
    ASSERT_EQ(r.code, 0) << r.err;
    csv = parse_csv(r.out);
    const double j = csv.num(1, "J");
    EXPECT_NEAR(csv.num(1, "mean"), 1 + j - j * j / 3 - j * j * j / 9, 1e-9);
    EXPECT_NEAR(csv.num(1, "second_moment"), 1 + 2 * j + j * j, 1e-9);
}

TEST(Cli, SdeSeedChangesOnlyMonteCarlo)
{
    const auto a = parse_csv(run({"sde", "--n", "2000", "--seed", "1"}).out);
    const auto b = parse_csv(run({"sde", "--n", "2000", "--seed", "2"}).out);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i][a.col("mean")], b.rows[i][b.col("mean")]);
        if (a.rows[i][a.col("mc_mean")] != b.rows[i][b.col("mc_mean")])
            differs = true;
        EXPECT_NEAR(a.num(i, "mc_mean"), b.num(i, "mc_mean"),
                    4 * std::hypot(a.num(i, "mc_stderr"), b.num(i, "mc_stderr")) + 1e-15);
    }
    EXPECT_TRUE(differs);
}

TEST(Cli, MsdiagVerdicts)
{
    const auto r = run({"msdiag"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto csv = parse_csv(r.out);
    ASSERT_EQ(csv.rows.size(), 4u);
    std::map<std::string, std::vector<std::string>> by;
    for (const auto& row : csv.rows)
        by[row[0]] = row;
    const auto c = csv.col("continuous"), d = csv.col("differentiable"), v = csv.col("second_derivative");
    EXPECT_EQ(by["linear-amplitude"][d], "yes");
    EXPECT_EQ(std::stod(by["linear-amplitude"][v]), 2.0);
    EXPECT_EQ(by["white-noise"][c], "no");
    EXPECT_EQ(by["cosine-phase"][c], "yes");
    EXPECT_EQ(by["cosine-phase"][d], "yes");
    EXPECT_EQ(by["brownian-like"][d], "no");

    EXPECT_EQ(run({"msdiag", "--fixture", "nope"}).code, 2);
}

TEST(Cli, CorrelationAndSampleColumns)
{
    auto r = run({"correlation", "--points", "3", "--n", "500"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto csv = parse_csv(r.out);
    EXPECT_EQ(csv.header, (std::vector<std::string>{"J1", "J2", "R", "stderr"}));
    EXPECT_EQ(csv.rows.size(), 9u);

    r = run({"sample", "--count", "20", "--seed", "9"});
    ASSERT_EQ(r.code, 0) << r.err;
    csv = parse_csv(r.out);
    EXPECT_EQ(csv.header, (std::vector<std::string>{"i", "t", "J", "x1", "x2"}));
    EXPECT_EQ(csv.rows.size(), 20u);
    EXPECT_EQ(csv.meta_value("seed"), "9");
}

TEST(Cli, RoundTripIsLossless)
{
    for (const auto& args : std::vector<std::vector<std::string>>{{"staircase", "--level", "3"},
                                                                  {"cdf", "--level", "3"},
                                                                  {"sample", "--count", "50"},
                                                                  {"correlation", "--points", "4", "--n", "200"},
                                                                  {"sde", "--n", "500"},
                                                                  {"dimension", "--level", "4"}}) {
        const auto r = run(args);
        ASSERT_EQ(r.code, 0) << args[0] << ": " << r.err;
        const auto csv = parse_csv(r.out);
        for (const auto& row : csv.rows) {
            ASSERT_EQ(row.size(), csv.header.size());
            for (const auto& cell : row) {
                char* end = nullptr;
                const double x = std::strtod(cell.c_str(), &end);
                ASSERT_EQ(*end, '\0') << cell;
                if (cell.find_first_of(".e") != std::string::npos || cell == "nan" || cell == "inf") {
                    ASSERT_EQ(fractalms::cli::fmt(x), cell);
                }
            }
        }
        EXPECT_EQ(r.out.find('\r'), std::string::npos);
        EXPECT_EQ(r.out.back(), '\n');
    }
}

TEST(Cli, ConfigFileAndFlagPrecedence)
{
    const auto path = temp_path("cfg.txt");
    {
        std::ofstream f(path);
        f << "# memoryless recipe\nlambda = 2\nlevel=4\n\nseed=77\n";
    }
    auto r = run({"cdf", "--config", path});
    ASSERT_EQ(r.code, 0) << r.err;
    auto csv = parse_csv(r.out);
    EXPECT_EQ(csv.meta_value("lambda"), "2");
    EXPECT_EQ(csv.meta_value("level"), "4");
    EXPECT_EQ(csv.meta_value("seed"), "77");

    r = run({"cdf", "--config", path, "--lambda", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(parse_csv(r.out).meta_value("lambda"), "3");

    // same resolved config, same bytes
    EXPECT_EQ(run({"cdf", "--config", path}).out, run({"cdf", "--lambda", "2", "--level", "4", "--seed", "77"}).out);
    std::remove(path.c_str());
}

TEST(Cli, OutFlagWritesFile)
{
    const auto path = temp_path("out.csv");
    const auto r = run({"staircase", "--level", "2", "--alpha", "1.2", "--out", path});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    std::ifstream f(path, std::ios::binary);
    const std::string body((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    EXPECT_EQ(body, run({"staircase", "--level", "2", "--alpha", "1.2"}).out);
    std::remove(path.c_str());
}

TEST(Cli, UserErrorsExitTwo)
{
    EXPECT_EQ(run({"cdf", "--lambda", "0"}).code, 2);
    EXPECT_EQ(run({"cdf", "--lambda", "abc"}).code, 2);
    EXPECT_EQ(run({"cdf", "--curve", "hilbert"}).code, 2);
    EXPECT_EQ(run({"cdf", "--level", "13"}).code, 2);
    EXPECT_EQ(run({"cdf", "--config", "/nonexistent/cfg"}).code, 2);
    EXPECT_EQ(run({"sde", "--ex0", "2", "--ex0sq", "1"}).code, 2);
    EXPECT_EQ(run({"sde", "--form", "other"}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"staircase", "--curve", "line", "--alpha", "1.5"}).code, 2);

    const auto path = temp_path("bad.txt");
    {
        std::ofstream f(path);
        f << "lamda = 2\n";
    }
    EXPECT_EQ(run({"cdf", "--config", path}).code, 2);
    std::remove(path.c_str());
}

TEST(Cli, NumericalFailureExitsThree)
{
    // too coarse a Koch level to classify the mass function
    const auto r = run({"staircase", "--level", "1"});
    EXPECT_EQ(r.code, 3);
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, HelpAndVersion)
{
    EXPECT_EQ(run({"--help"}).code, 0);
    const auto v = run({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_EQ(v.out, std::string(fractalms::cli::version) + "\n");
}
