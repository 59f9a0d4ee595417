#include <gtest/gtest.h>

#include <cmath>

#include "scan3d/approx_pipeline.hpp"

using namespace scan3d;

namespace {

QTable table_from(const std::array<double, 8>& q, const std::array<double, 8>& beta)
{
    QTable t;
    for (int r = 2; r <= 3; ++r)
        for (int a = 2; a <= 3; ++a)
            for (int b = 2; b <= 3; ++b) {
                QEstimate e;
                e.value = e.raw_value = q[QTable::slot(r, a, b)];
                e.beta = beta[QTable::slot(r, a, b)];
                t.set(r, a, b, e);
            }
    return t;
}

// A realistic monotone table (Table 1, p=0.00005, n=1 magnitudes).
QTable sample_table()
{
    return table_from({0.99982753, 0.99970767, 0.99970886, 0.99950764, 0.99970626, 0.99950654, 0.99950644, 0.99916806},
                      {1.09e-6, 1.94e-6, 1.93e-6, 3.46e-6, 1.96e-6, 3.44e-6, 3.47e-6, 6.11e-6});
}

double sq(double x)
{
    return x * x;
}

PipelineOptions quick(std::int64_t iterations, std::uint64_t seed = 1)
{
    PipelineOptions o;
    o.iterations = iterations;
    o.simulation.seed = seed;
    return o;
}

} // namespace

TEST(Cascade, ConstantTableIsAFixedPoint)
{
    for (const double q0 : {1.0, 0.999, 0.95, 0.5}) {
        const Cascade c = cascade_point(QTable::constant(q0), {15, 15, 15});
        EXPECT_NEAR(c.point, q0, 1e-14);
        for (const auto& row : c.gamma_ts)
            for (const double g : row) EXPECT_NEAR(g, q0, 1e-14);
        EXPECT_NEAR(c.gamma_s[0], q0, 1e-14);
        EXPECT_NEAR(c.gamma_s[1], q0, 1e-14);
    }
}

TEST(Cascade, AllOnesHasNoError)
{
    const ErrorBudget b = error_budget(QTable::constant(1.0), {12, 12, 12});
    EXPECT_EQ(b.cascade.point, 1.0);
    EXPECT_EQ(b.approximation.E_app, 0.0);
    EXPECT_EQ(b.simulation.E_sf, 0.0);
    EXPECT_EQ(b.simulation.E_sim, 0.0);
    EXPECT_TRUE(b.approximation.applicable);
}

TEST(Cascade, RejectsIncompleteTableAndSmallRatios)
{
    QTable partial;
    partial.set(2, 2, 2, QEstimate{});
    EXPECT_THROW(cascade_point(partial, {5, 5, 5}), ParameterError);
    EXPECT_THROW(enforce_monotone(partial), ParameterError);
    EXPECT_THROW(cascade_point(QTable::constant(0.9), {2, 5, 5}), GeometryError);
    EXPECT_THROW(partial.at(4, 2, 2), ParameterError);
}

TEST(MonotoneEnforcement, NonincreasingAlongEveryAxisAndRawKept)
{
    auto noisy = sample_table();
    QEstimate e = noisy.at(3, 3, 3);
    e.value = e.raw_value = 0.99999; // above every neighbour
    noisy.set(3, 3, 3, e);
    const QTable m = enforce_monotone(noisy);
    for (int a = 2; a <= 3; ++a)
        for (int b = 2; b <= 3; ++b) {
            EXPECT_LE(m.q(3, a, b), m.q(2, a, b));
            EXPECT_LE(m.q(a, 3, b), m.q(a, 2, b));
            EXPECT_LE(m.q(a, b, 3), m.q(a, b, 2));
        }
    EXPECT_EQ(m.at(3, 3, 3).raw_value, 0.99999);
    EXPECT_LE(m.q(3, 3, 3), sample_table().q(2, 3, 3));
}

TEST(ErrorBudget, RecomputesFromStoredIntermediates)
{
    const QTable q = sample_table();
    const Ratios L{15, 15, 15};
    for (const bool squared : {false, true}) {
        const ErrorBudget b = error_budget(q, L, squared);
        const auto& a = b.approximation;
        const auto& s = b.simulation;
        ASSERT_TRUE(a.applicable);
        const double L1 = L[0], L2 = L[1], L3 = L[2];
        double sum2 = 0.0, sumu = 0.0, betas = 0.0;
        for (int t = 2; t <= 3; ++t)
            for (int u = 2; u <= 3; ++u) {
                sum2 += sq(1.0 - q.q(2, t, u));
                sumu += sq(s.u_rts[QTable::slot(2, t, u)]);
            }
        for (const auto& e : q.entries()) betas += e.beta;

        const double d22 = squared ? sq(a.delta_22) : a.delta_22;
        const double d2 = 1.0 - b.cascade.gamma_s[0] + (L2 - 1) * a.F2 * d22 +
                          (L2 - 2) * (L1 - 1) * a.F3 * (sq(1.0 - q.q(2, 2, 2)) + sq(1.0 - q.q(2, 3, 2)));
        EXPECT_NEAR(a.delta_2, d2, 1e-15 * d2);
        const double e_app = (L3 - 1) * a.F1 * sq(a.delta_2) + (L3 - 2) * (L2 - 1) * a.F2 * (sq(a.delta_22) + sq(a.delta_23)) +
                             (L3 - 2) * (L2 - 2) * (L1 - 1) * a.F3 * sum2;
        EXPECT_NEAR(a.E_app, e_app, 1e-15 * e_app);

        EXPECT_NEAR(s.E_sf, (L1 - 2) * (L2 - 2) * (L3 - 2) * betas, 1e-15 * s.E_sf);
        const double e_sapp = (L3 - 1) * a.F1 * sq(s.delta_bar_2) +
                              (L3 - 2) * (L2 - 1) * a.F2 * (sq(s.delta_bar_22) + sq(s.delta_bar_23)) +
                              (L3 - 2) * (L2 - 2) * (L1 - 1) * a.F3 * sumu;
        EXPECT_NEAR(s.E_sapp, e_sapp, 1e-15 * e_sapp);
        EXPECT_DOUBLE_EQ(s.E_sim, s.E_sf + s.E_sapp);
        EXPECT_DOUBLE_EQ(b.total, a.E_app + s.E_sim);
        EXPECT_GE(a.E_app, 0.0);
        EXPECT_GE(s.E_sapp, 0.0);
    }
}

TEST(ErrorBudget, SquaredFormIsSmaller)
{
    const QTable q = sample_table();
    EXPECT_LT(error_budget(q, {15, 15, 15}, true).total, error_budget(q, {15, 15, 15}, false).total);
}

TEST(ErrorBudget, ZeroBetasGiveZeroSfError)
{
    auto q = sample_table();
    for (int r = 2; r <= 3; ++r)
        for (int a = 2; a <= 3; ++a)
            for (int b = 2; b <= 3; ++b) {
                QEstimate e = q.at(r, a, b);
                e.beta = 0.0;
                q.set(r, a, b, e);
            }
    const ErrorBudget b = error_budget(q, {15, 15, 15});
    EXPECT_EQ(b.simulation.E_sf, 0.0);
}

TEST(ErrorBudget, GatesReportFailingLevel)
{
    const ErrorBudget low = error_budget(QTable::constant(0.85), {10, 10, 10});
    EXPECT_FALSE(low.approximation.applicable);
    EXPECT_EQ(low.approximation.failing, GateLevel::alpha233);
    EXPECT_TRUE(std::isinf(low.approximation.E_app));
    EXPECT_TRUE(std::isinf(low.total));

    // Base probabilities pass but the second cascade level drifts past 0.1.
    const ErrorBudget mid = error_budget(table_from({0.999, 0.998, 0.998, 0.996, 0.99, 0.985, 0.985, 0.98}, {}),
                                         {40, 40, 40});
    EXPECT_FALSE(mid.approximation.applicable);
    EXPECT_NE(mid.approximation.failing, GateLevel::alpha233);
}

TEST(ErrorBudget, PlugInAlphaNeverExceedsGateWhenApplicable)
{
    RandomStream rng(3);
    for (int i = 0; i < 300; ++i) {
        std::array<double, 8> q{};
        const double base = 1.0 - 0.02 * rng.uniform();
        for (auto& v : q) v = base - 0.002 * rng.uniform();
        const double L = 4 + static_cast<double>(rng.below(20));
        const ErrorBudget b = error_budget(enforce_monotone(table_from(q, {})), {L, L, L});
        if (b.approximation.applicable) {
            EXPECT_LE(b.approximation.alpha3, kMaxAlpha);
            EXPECT_LE(1.0 - b.cascade.gamma_s[1], kMaxAlpha);
        }
    }
}

TEST(ApproximateCdf, ZeroProbabilityModel)
{
    const ApproxReport r = approximate_cdf(ScanGeometry({20, 20, 20}, {5, 5, 5}), DistributionModel::bernoulli(0.0), 0,
                                           quick(100));
    EXPECT_EQ(r.point, 1.0);
    EXPECT_EQ(r.E_app, 0.0);
    EXPECT_EQ(r.E_sim, 0.0);
    EXPECT_EQ(r.total, 0.0);
}

TEST(ApproximateCdf, GeometryPreconditions)
{
    const auto m = DistributionModel::bernoulli(0.01);
    EXPECT_THROW(approximate_cdf(ScanGeometry({60, 60, 60}, {8, 4, 2}), m, 5, quick(100)), GeometryError);
    EXPECT_THROW(approximate_cdf(ScanGeometry({12, 12, 12}, {5, 5, 5}), m, 1, quick(100)), GeometryError);
    EXPECT_THROW(approximate_cdf(ScanGeometry({10, 10, 10}, {10, 5, 5}), m, 1, quick(100)), GeometryError);
}

TEST(ApproximateCdf, DeterministicForSeedAndThreads)
{
    const ScanGeometry g({16, 16, 16}, {3, 3, 3});
    const auto m = DistributionModel::poisson(0.05);
    PipelineOptions a = quick(3000, 9);
    PipelineOptions b = a;
    a.simulation.threads = 1;
    b.simulation.threads = 4;
    const auto ra = approximate_cdf(g, m, 2, a);
    const auto rb = approximate_cdf(g, m, 2, b);
    EXPECT_EQ(ra.point, rb.point);
    EXPECT_EQ(ra.total, rb.total);
}

TEST(ApproximateCdf, PointNondecreasingInN)
{
    const ScanGeometry g({24, 24, 24}, {4, 4, 4});
    const auto m = DistributionModel::bernoulli(0.01);
    double previous = 0.0;
    for (int n = 1; n <= 5; ++n) {
        const auto r = approximate_cdf(g, m, n, quick(4000));
        EXPECT_GE(r.point, previous) << n;
        EXPECT_GE(r.point, 0.0);
        EXPECT_LE(r.point, 1.0);
        previous = r.point;
    }
}

TEST(ApproximateCdfOracle, SmallLatticeAgreesWithNaiveSimulation)
{
    const ScanGeometry g({4, 4, 4}, {2, 2, 2});
    const auto m = DistributionModel::bernoulli(0.2);
    const auto hist = naive_scan_distribution(g, m, 1000000, {.seed = 21});
    for (int n = 5; n <= 8; ++n) {
        const auto r = approximate_cdf(g, m, n, quick(20000, 4));
        ASSERT_TRUE(r.applicable) << n;
        EXPECT_LE(std::abs(r.point - hist.cdf(n)), r.total + 3.0 * hist.beta(n)) << n;
    }
}

TEST(ApproximateCdfPublished, BernoulliTable1SecondRow)
{
    // Published: 0.999192 with total error 0.000170.
    const auto r = approximate_cdf(ScanGeometry({60, 60, 60}, {5, 5, 5}), DistributionModel::bernoulli(0.00005), 2,
                                   quick(100000));
    EXPECT_NEAR(r.point, 0.999192, r.total + 0.000170);
    EXPECT_GT(r.E_sim, 0.000170 / 2.0);
    EXPECT_LT(r.E_sim, 0.000170 * 2.0);
}

TEST(ApproximateCdfPublished, BernoulliTable1FirstRowErrorWithSquaredDelta)
{
    PipelineOptions o = quick(100000);
    o.squared_delta22 = true;
    const auto r = approximate_cdf(ScanGeometry({60, 60, 60}, {5, 5, 5}), DistributionModel::bernoulli(0.00005), 1, o);
    EXPECT_NEAR(r.E_app, 0.011849, 0.2 * 0.011849);
}

TEST(ApproximateCdfPublished, BinomialTable4)
{
    const auto r = approximate_cdf(ScanGeometry({84, 84, 84}, {4, 4, 4}), DistributionModel::binomial(10, 0.0025), 11,
                                   quick(100000));
    EXPECT_NEAR(r.point, 0.955417, r.total + 0.003202);
}

TEST(InterpolatedCdf, DivisibleRegionCollapsesToOneBracket)
{
    const ScanGeometry g({20, 20, 20}, {5, 5, 5});
    const auto m = DistributionModel::bernoulli(0.001);
    const auto in = interpolated_cdf(g, m, 1, quick(2000));
    const auto direct = approximate_cdf(g, m, 1, quick(2000));
    EXPECT_EQ(in.weight, 0.0);
    EXPECT_EQ(in.lower.point, in.upper.point);
    EXPECT_EQ(in.point, direct.point);
    EXPECT_EQ(in.total, direct.total);
}

TEST(InterpolatedCdf, BracketsAndWeight)
{
    const ScanGeometry g({22, 21, 20}, {5, 5, 5});
    const auto m = DistributionModel::bernoulli(0.001);
    const auto in = interpolated_cdf(g, m, 1, quick(2000));
    EXPECT_NEAR(in.weight, (0.5 + 0.25 + 0.0) / 3.0, 1e-15);
    EXPECT_EQ(in.upper.geometry.region(), (Extent3{20, 20, 20}));
    EXPECT_EQ(in.lower.geometry.region(), (Extent3{24, 24, 20}));
    EXPECT_GE(in.point, in.bracket_min);
    EXPECT_LE(in.point, in.bracket_max);
    EXPECT_LE(in.lower.point, in.upper.point); // larger region, smaller cdf
    EXPECT_FALSE(in.inverted);
    EXPECT_GE(in.total, std::max(in.lower.total, in.upper.total));
}

TEST(CriticalValue, SignificanceOneGivesTauOne)
{
    const ScanGeometry g({8, 8, 8}, {2, 2, 2});
    const auto cv = critical_value(g, DistributionModel::bernoulli(0.01), 1.0, quick(500));
    EXPECT_EQ(cv.tau, 1);
}

TEST(CriticalValue, UsesSuppliedEvaluatorAndConservativeMode)
{
    const ScanGeometry g({8, 8, 8}, {2, 2, 2});
    // Stub cdf: P(S <= n) = 1 - 10^-(n+1), total error 0.05 everywhere.
    auto eval = [](std::int64_t n) { return CdfPoint{1.0 - std::pow(10.0, -static_cast<double>(n + 1)), 0.05, true}; };
    const auto m = DistributionModel::bernoulli(0.3);
    EXPECT_EQ(critical_value(g, m, 0.05, {}, false, eval).tau, 2);
    EXPECT_EQ(critical_value(g, m, 0.06, {}, true, eval).tau, 3);
    EXPECT_THROW(critical_value(g, m, 0.05, {}, true, eval), UnreachableError);
    EXPECT_THROW(critical_value(g, m, 0.0, {}, false, eval), ParameterError);
    auto inapplicable = [](std::int64_t) { return CdfPoint{1.0, 0.0, false}; };
    EXPECT_THROW(critical_value(g, m, 0.5, {}, true, inapplicable), UnreachableError);
}

TEST(CriticalValue, UnreachableWithinTinySupport)
{
    const ScanGeometry g({4, 4, 4}, {2, 2, 2});
    EXPECT_THROW(critical_value(g, DistributionModel::bernoulli(0.2), 1e-9, quick(2000)), UnreachableError);
}

TEST(CriticalValuePublished, Table1GeometryAtFivePercent)
{
    const auto cv = critical_value(ScanGeometry({60, 60, 60}, {5, 5, 5}), DistributionModel::bernoulli(0.00005), 0.05,
                                   quick(100000));
    EXPECT_EQ(cv.tau, 3);
    EXPECT_LE(cv.attained, 0.05);
}
