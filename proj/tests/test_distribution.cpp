#include "fractalms/distribution.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

using namespace fractalms;

namespace {

const double kd = std::log(4.0) / std::log(3.0);

std::shared_ptr<const StaircaseTable> table_for(const FractalCurve& c, double alpha, std::optional<double> mass = {})
{
    StaircaseOptions o;
    o.total_mass = mass;
    return std::make_shared<const StaircaseTable>(build_staircase(c, alpha, c.a(), o));
}

double ks_band(std::size_t n) { return 1.36 / std::sqrt(static_cast<double>(n)); }

} // namespace

TEST(Uniform, LineMoments)
{
    const auto d = DistributionOnCurve::uniform(table_for(build_line(0, 1), 1.0));
    EXPECT_NEAR(moment(d, 1)[0], 0.5, 1e-9);
    EXPECT_NEAR(moment(d, 2)[0], 1.0 / 3.0, 1e-9);
    EXPECT_NEAR(variance(d)[0], 1.0 / 12.0, 1e-9);
}

TEST(Uniform, RawKochDensityIsGammaConstant)
{
    // without rescaling the total mass is 1/Gamma(alpha+1), so the density is Gamma(alpha+1)
    const auto d = DistributionOnCurve::uniform(table_for(build_koch(6), kd));
    EXPECT_NEAR(d.pdf_at_j(0.3), std::tgamma(kd + 1.0), 1e-9);
    EXPECT_NEAR(d.unnormalized_uniform_density(), std::tgamma(kd + 1.0), 1e-12);
}

TEST(Uniform, KochVarianceIdentity)
{
    const auto d = DistributionOnCurve::uniform(table_for(build_koch(6), kd, 1.0));
    const auto m1 = moment(d, 1), m2 = moment(d, 2), v = variance(d);
    for (std::size_t c = 0; c < 2; ++c)
        EXPECT_NEAR(v[c], m2[c] - m1[c] * m1[c], 1e-6) << c;
    // symmetry of the Koch curve about x = 1/2
    EXPECT_NEAR(m1[0], 0.5, 1e-9);
    EXPECT_NEAR(moment(d, 1, MomentMode::j_coordinate)[0], 0.5, 1e-9);
}

TEST(Uniform, MeanAgreesWithSampleMean)
{
    const auto d = DistributionOnCurve::uniform(table_for(build_koch(6), kd, 1.0));
    const std::size_t n = 1000000;
    const auto s = sample(d, 2024, n);
    const auto m = moment(d, 1);
    const auto v = variance(d);
    for (std::size_t c = 0; c < 2; ++c) {
        double sum = 0.0;
        for (const auto& p : s.points)
            sum += p.x[c];
        EXPECT_NEAR(sum / n, m[c], 3.0 * std::sqrt(v[c] / n)) << c;
    }
}

TEST(Normalization, EveryFamilyIntegratesToOne)
{
    CurveFunction dummy;
    const auto koch = table_for(build_koch(6), kd, 1.0);
    const auto line = table_for(build_line(0, 50), 1.0);
    const auto uni = DistributionOnCurve::uniform(koch);
    const auto mem = DistributionOnCurve::memoryless(line, 1.0);
    const auto cus = DistributionOnCurve::custom(koch, [](double s) { return s; }, 0.0, 1.0);
    for (const auto* d : {&uni, &mem, &cus}) {
        const auto& t = d->table();
        CurveFunction pdf = [&](const CurvePoint& p) { return d->pdf_at_j(t.S(p.t)); };
        const double ta = t.parameter_at(d->support_lo()), tb = t.parameter_at(d->support_hi());
        EXPECT_NEAR(falpha_integral(pdf, t, ta, tb, 8192), 1.0, 1e-6);
    }
}

TEST(Cdf, MemorylessFormula)
{
    const auto t = table_for(build_koch(6), kd, 1.0);
    const auto d = DistributionOnCurve::memoryless(t, 1.0);
    EXPECT_EQ(d.cdf_at_j(0.0), 0.0);
    EXPECT_NEAR(d.cdf_at_j(1.0), 1.0 - std::exp(-1.0), 1e-15);
    EXPECT_NEAR(d.cdf(t->curve().evaluate(1.0)), 0.63212055882855767, 1e-12);
    // doubling lambda raises the CDF pointwise
    const auto d2 = DistributionOnCurve::memoryless(t, 2.0);
    for (double s : {0.1, 0.5, 0.9})
        EXPECT_GT(d2.cdf_at_j(s), d.cdf_at_j(s));
    EXPECT_THROW(DistributionOnCurve::memoryless(t, 0.0), domain_error);
}

TEST(Cdf, MemorylessProperty)
{
    const auto d = DistributionOnCurve::memoryless(table_for(build_line(0, 50), 1.0), 1.3);
    auto surv = [&](double s) { return 1.0 - d.cdf_at_j(s); };
    for (double s : {0.2, 1.0, 3.0}) {
        for (double t : {0.1, 0.7, 2.5})
            EXPECT_NEAR(surv(s + t) / surv(s), surv(t), 1e-9);
    }
}

TEST(Cdf, MonotoneAndBounded)
{
    const auto t = table_for(build_koch(5), kd, 1.0);
    const auto u = DistributionOnCurve::uniform(t);
    const auto c = DistributionOnCurve::custom(t, [](double s) { return 1.0 + std::sin(6.0 * s); }, 0.0, 1.0);
    double pu = -1.0, pc = -1.0;
    for (int i = 0; i <= 200; ++i) {
        const auto th = t->curve().evaluate(i / 200.0);
        const double fu = u.cdf(th), fc = c.cdf(th);
        ASSERT_GE(fu, pu);
        ASSERT_GE(fc, pc);
        ASSERT_GE(fu, 0.0);
        ASSERT_LE(fc, 1.0);
        pu = fu;
        pc = fc;
    }
    EXPECT_NEAR(pu, 1.0, 1e-12);
    EXPECT_NEAR(pc, 1.0, 1e-12);
}

TEST(Sampling, KsWithinBandForEachFamily)
{
    const std::size_t n = 100000;
    const auto koch = table_for(build_koch(6), kd, 1.0);
    const auto uni = DistributionOnCurve::uniform(koch);
    const auto mem = DistributionOnCurve::memoryless(table_for(build_line(0, 50), 1.0), 1.0);
    const auto cus = DistributionOnCurve::custom(koch, [](double s) { return s; }, 0.0, 1.0);

    const auto su = sample(uni, 1, n);
    EXPECT_LT(ks_statistic(su.j, [](double s) { return s; }), ks_band(n));
    const auto sm = sample(mem, 4, n);
    EXPECT_LT(ks_statistic(sm.j, [](double s) { return -std::expm1(-s); }), ks_band(n));
    const auto sc = sample(cus, 3, n);
    EXPECT_LT(ks_statistic(sc.j, [](double s) { return s * s; }), ks_band(n));
}

TEST(Sampling, ClippedMemorylessOnUnitCurve)
{
    const std::size_t n = 100000;
    const auto d = DistributionOnCurve::memoryless(table_for(build_koch(6), kd, 1.0), 1.0);
    const auto s = sample(d, 11, n);
    // the mass beyond the curve end is exp(-1)
    const double p = std::exp(-1.0);
    EXPECT_NEAR(static_cast<double>(s.clipped) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
    EXPECT_LT(ks_statistic(s.j, [&](double x) { return d.cdf_at_j(x); }, d.support_hi()), ks_band(n));
}

TEST(Sampling, DeterministicPerSeed)
{
    const auto d = DistributionOnCurve::uniform(table_for(build_koch(4), kd, 1.0));
    const auto a = sample(d, 99, 500), b = sample(d, 99, 500), c = sample(d, 100, 500);
    EXPECT_EQ(a.j, b.j);
    for (std::size_t i = 0; i < 500; ++i)
        ASSERT_EQ(a.points[i].x, b.points[i].x);
    EXPECT_NE(a.j, c.j);
    // a prefix is reproduced by a shorter run
    const auto p = sample(d, 99, 10);
    EXPECT_TRUE(std::equal(p.j.begin(), p.j.end(), a.j.begin()));
}

TEST(Sampling, PointsLieOnCurveAtTheirJ)
{
    const auto t = table_for(build_koch(5), kd, 1.0);
    const auto s = sample(DistributionOnCurve::uniform(t), 5, 50);
    for (std::size_t i = 0; i < s.count; ++i)
        EXPECT_NEAR(t->J(s.points[i].x), s.j[i], 1e-9);
}

TEST(Variance, ShrinksWithSupport)
{
    const auto t = table_for(build_koch(6), kd, 1.0);
    double prev = 1.0;
    for (double w : {0.2, 0.05, 0.01}) {
        const auto d = DistributionOnCurve::custom(t, [](double) { return 1.0; }, 0.5 - w / 2, 0.5 + w / 2);
        const auto v = variance(d);
        const double tot = v[0] + v[1];
        EXPECT_LT(tot, prev);
        prev = tot;
    }
    EXPECT_LT(prev, 1e-4);
}

TEST(Moment, RejectsOrderZero)
{
    const auto d = DistributionOnCurve::uniform(table_for(build_line(0, 1), 1.0));
    EXPECT_THROW(moment(d, 0), domain_error);
}
