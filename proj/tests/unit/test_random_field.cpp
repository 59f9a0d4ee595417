#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "scan3d/random_field.hpp"

using namespace scan3d;

namespace {

double binomial_coefficient(int n, int k)
{
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

/// Upper-tail p-value of Pearson's statistic for observed counts against expected probabilities.
double chi_square_p_value(const std::vector<double>& observed, const std::vector<double>& probs, double total)
{
    double stat = 0.0;
    int bins = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double e = probs[i] * total;
        if (e <= 0.0) continue;
        stat += (observed[i] - e) * (observed[i] - e) / e;
        ++bins;
    }
    const boost::math::chi_squared dist(bins - 1);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

} // namespace

TEST(DistributionModelOracle, BernoulliPmfMatchesClosedForm)
{
    const auto m = DistributionModel::bernoulli(0.3);
    EXPECT_NEAR(m.pmf(0), 0.7, 1e-15);
    EXPECT_NEAR(m.pmf(1), 0.3, 1e-15);
    EXPECT_EQ(m.pmf(2), 0.0);
    EXPECT_NEAR(m.upper_tail(1), 0.3, 1e-15);
    EXPECT_EQ(m.upper_tail(0), 1.0);
    EXPECT_EQ(m.trials(), 1);
}

TEST(DistributionModelOracle, BinomialPmfMatchesClosedForm)
{
    const auto m = DistributionModel::binomial(10, 0.25);
    for (int k = 0; k <= 10; ++k) {
        const double expect = binomial_coefficient(10, k) * std::pow(0.25, k) * std::pow(0.75, 10 - k);
        EXPECT_NEAR(m.pmf(k), expect, 1e-14) << k;
    }
    EXPECT_EQ(m.pmf(11), 0.0);
    EXPECT_EQ(m.max_value().value(), 10);
}

TEST(DistributionModelOracle, PoissonTailMatchesSeries)
{
    const auto m = DistributionModel::poisson(0.8);
    double term = std::exp(-0.8);
    double below = 0.0;
    for (int k = 0; k < 6; ++k) {
        EXPECT_NEAR(m.pmf(k), term, 1e-15);
        below += term;
        term *= 0.8 / (k + 1);
    }
    EXPECT_NEAR(m.upper_tail(6), 1.0 - below, 1e-14);
    EXPECT_FALSE(m.max_value().has_value());
}

TEST(DistributionModel, RejectsInvalidParameters)
{
    EXPECT_THROW(DistributionModel::bernoulli(-0.1), ParameterError);
    EXPECT_THROW(DistributionModel::bernoulli(1.5), ParameterError);
    EXPECT_THROW(DistributionModel::binomial(0, 0.5), ParameterError);
    EXPECT_THROW(DistributionModel::poisson(-1.0), ParameterError);
    EXPECT_THROW(DistributionModel::bernoulli(std::nan("")), ParameterError);
}

TEST(DistributionModel, DescribeIsStable)
{
    EXPECT_EQ(DistributionModel::bernoulli(0.00005).describe(), "bernoulli:p=5e-05");
    EXPECT_EQ(DistributionModel::binomial(10, 0.0025).describe(), "binomial:m=10,p=0.0025");
    EXPECT_EQ(DistributionModel::poisson(0.025).describe(), "poisson:lambda=0.025");
}

TEST(AggregateDistribution, WindowSumLaws)
{
    const Extent3 w{5, 5, 5};
    const auto bern = window_aggregate_distribution(DistributionModel::bernoulli(0.00005), w);
    EXPECT_EQ(bern.law(), DistributionModel::binomial(125, 0.00005));
    const auto bin = window_aggregate_distribution(DistributionModel::binomial(10, 0.0025), {4, 4, 4});
    EXPECT_EQ(bin.law(), DistributionModel::binomial(640, 0.0025));
    const auto poi = window_aggregate_distribution(DistributionModel::poisson(0.025), {4, 4, 4});
    EXPECT_NEAR(poi.law().lambda(), 1.6, 1e-15);
    EXPECT_FALSE(poi.support_max().has_value());
    EXPECT_EQ(bin.support_max().value(), 640);
}

TEST(AggregateDistribution, PmfSumsToOneAndCdfIsMonotone)
{
    const auto agg = window_aggregate_distribution(DistributionModel::poisson(0.3), {3, 3, 3});
    const auto& cdf = agg.cdf_table();
    ASSERT_FALSE(cdf.empty());
    for (std::size_t i = 1; i < cdf.size(); ++i) EXPECT_GE(cdf[i], cdf[i - 1]);
    EXPECT_NEAR(cdf.back(), 1.0, 1e-14);
}

TEST(AggregateDistribution, RejectsEmptyWindow)
{
    EXPECT_THROW(window_aggregate_distribution(DistributionModel::bernoulli(0.1), {0, 2, 2}), ParameterError);
}

TEST(TruncatedTail, ProbabilitiesAreNormalisedConditionalPmf)
{
    const auto agg = window_aggregate_distribution(DistributionModel::bernoulli(0.2), {2, 2, 2});
    const TruncatedTail tail(agg, 3);
    double total = 0.0;
    for (int t = 0; t <= 8; ++t) total += tail.probability(t);
    EXPECT_NEAR(total, 1.0, 1e-14);
    EXPECT_EQ(tail.probability(2), 0.0);
    EXPECT_NEAR(tail.probability(3), agg.pmf(3) / agg.upper_tail(3), 1e-15);
}

TEST(TruncatedTail, ThrowsOnEmptySupport)
{
    const auto agg = window_aggregate_distribution(DistributionModel::bernoulli(0.2), {2, 2, 2});
    EXPECT_THROW(TruncatedTail(agg, 9), EmptySupportError);
    const auto zero = window_aggregate_distribution(DistributionModel::bernoulli(0.0), {2, 2, 2});
    EXPECT_THROW(TruncatedTail(zero, 1), EmptySupportError);
}

TEST(TruncatedTail, SamplesPassChiSquare)
{
    const auto agg = window_aggregate_distribution(DistributionModel::binomial(3, 0.1), {2, 2, 2});
    const TruncatedTail tail(agg, 4);
    RandomStream rng(11);
    const int draws = 200000;
    std::vector<double> observed(25, 0.0);
    std::vector<double> probs(25, 0.0);
    for (int t = 0; t < 25; ++t) probs[t] = tail.probability(t);
    for (int i = 0; i < draws; ++i) {
        const auto t = tail.sample(rng);
        ASSERT_GE(t, 4);
        ASSERT_LE(t, 24);
        observed[static_cast<std::size_t>(t)] += 1.0;
    }
    EXPECT_GT(chi_square_p_value(observed, probs, draws), 1e-4);
}

TEST(TruncatedTail, BoundaryCases)
{
    const auto agg = window_aggregate_distribution(DistributionModel::bernoulli(0.5), {1, 1, 2});
    RandomStream rng(3);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_truncated_aggregate(agg, 2, rng), 2);
    // tau = 0 is the unconditioned law.
    const TruncatedTail whole(agg, 0);
    EXPECT_NEAR(whole.mass(), 1.0, 1e-15);
}

class CellSamplerLaw : public ::testing::TestWithParam<DistributionModel> {};

TEST_P(CellSamplerLaw, FillPassesChiSquare)
{
    const DistributionModel model = GetParam();
    const CellSampler sampler(model);
    RandomStream rng(2024);
    std::vector<std::int32_t> cells(4096);
    std::vector<double> observed(12, 0.0);
    double total = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        sampler.fill(cells, rng);
        for (const auto c : cells) {
            observed[static_cast<std::size_t>(std::min(c, 11))] += 1.0;
            total += 1.0;
        }
    }
    std::vector<double> probs(12, 0.0);
    for (int k = 0; k < 11; ++k) probs[static_cast<std::size_t>(k)] = model.pmf(k);
    probs[11] = model.upper_tail(11);
    // Pool sparse bins so every expected count is at least 5.
    std::vector<double> po;
    std::vector<double> pp;
    double acc_o = 0.0;
    double acc_p = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc_o += observed[k];
        acc_p += probs[k];
        if (acc_p * total >= 5.0 || k + 1 == probs.size()) {
            po.push_back(acc_o);
            pp.push_back(acc_p);
            acc_o = acc_p = 0.0;
        }
    }
    ASSERT_GE(pp.size(), 2u);
    EXPECT_GT(chi_square_p_value(po, pp, total), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(SparseAndDense, CellSamplerLaw,
                         ::testing::Values(DistributionModel::bernoulli(0.01), DistributionModel::bernoulli(0.6),
                                           DistributionModel::binomial(10, 0.0025), DistributionModel::binomial(4, 0.4),
                                           DistributionModel::poisson(0.025), DistributionModel::poisson(2.5)));

TEST(CellSampler, SparseSwitchAtThreshold)
{
    EXPECT_TRUE(CellSampler(DistributionModel::bernoulli(0.25)).sparse());
    EXPECT_FALSE(CellSampler(DistributionModel::bernoulli(0.26)).sparse());
}

TEST(CellSampler, DegenerateModels)
{
    RandomStream rng(1);
    std::vector<std::int32_t> cells(100, 7);
    CellSampler(DistributionModel::bernoulli(0.0)).fill(cells, rng);
    EXPECT_EQ(std::accumulate(cells.begin(), cells.end(), 0), 0);
    CellSampler(DistributionModel::bernoulli(1.0)).fill(cells, rng);
    EXPECT_EQ(std::accumulate(cells.begin(), cells.end(), 0), 100);
}

TEST(SampleField, ReproducibleForSeed)
{
    RandomStream a(99);
    RandomStream b(99);
    const auto fa = sample_field({6, 5, 4}, DistributionModel::poisson(0.3), a);
    const auto fb = sample_field({6, 5, 4}, DistributionModel::poisson(0.3), b);
    EXPECT_TRUE(std::equal(fa.cells().begin(), fa.cells().end(), fb.cells().begin()));
}

namespace {
std::map<std::vector<std::int32_t>, double> conditional_frequencies(const DistributionModel& model,
                                                                    const Extent3& window, std::int64_t total,
                                                                    int draws)
{
    RandomStream rng(5);
    std::map<std::vector<std::int32_t>, double> freq;
    for (int i = 0; i < draws; ++i) freq[fill_window_conditional(model, window, total, rng)] += 1.0 / draws;
    return freq;
}
} // namespace

TEST(ConditionalFillerOracle, BinomialIsMultivariateHypergeometric)
{
    // Two Binomial(2, p) cells with total 2: (2,0) 1/6, (1,1) 4/6, (0,2) 1/6.
    const auto freq = conditional_frequencies(DistributionModel::binomial(2, 0.3), {1, 1, 2}, 2, 120000);
    EXPECT_NEAR(freq.at({2, 0}), 1.0 / 6.0, 0.006);
    EXPECT_NEAR(freq.at({1, 1}), 4.0 / 6.0, 0.006);
    EXPECT_NEAR(freq.at({0, 2}), 1.0 / 6.0, 0.006);
}

TEST(ConditionalFillerOracle, PoissonIsMultinomial)
{
    const auto freq = conditional_frequencies(DistributionModel::poisson(0.7), {1, 1, 2}, 2, 120000);
    EXPECT_NEAR(freq.at({2, 0}), 0.25, 0.006);
    EXPECT_NEAR(freq.at({1, 1}), 0.5, 0.006);
    EXPECT_NEAR(freq.at({0, 2}), 0.25, 0.006);
}

TEST(ConditionalFillerOracle, BernoulliIsUniformSubset)
{
    const auto freq = conditional_frequencies(DistributionModel::bernoulli(0.1), {1, 2, 2}, 2, 120000);
    ASSERT_EQ(freq.size(), 6u);
    for (const auto& [cfg, f] : freq) {
        EXPECT_EQ(std::accumulate(cfg.begin(), cfg.end(), 0), 2);
        EXPECT_NEAR(f, 1.0 / 6.0, 0.006);
    }
}

TEST(ConditionalFiller, SumAndCapacity)
{
    RandomStream rng(8);
    const auto model = DistributionModel::binomial(3, 0.2);
    for (int t = 0; t <= 24; ++t) {
        const auto cells = fill_window_conditional(model, {2, 2, 2}, t, rng);
        EXPECT_EQ(std::accumulate(cells.begin(), cells.end(), 0), t);
        for (const auto c : cells) EXPECT_LE(c, 3);
    }
    EXPECT_THROW(fill_window_conditional(model, {2, 2, 2}, 25, rng), ParameterError);
    EXPECT_THROW(fill_window_conditional(model, {2, 2, 2}, -1, rng), ParameterError);
}
