#include <gtest/gtest.h>

#include "oracles.hpp"
#include "skolr/error.hpp"
#include "skolr/metrics.hpp"
#include "skolr/model.hpp"
#include "skolr/rng.hpp"

using namespace skolr;

TEST(Metrics, HandCase)
{
    const MetricReport r = evaluate(Tensor::matrix({{8}}), Tensor::matrix({{10}}));
    EXPECT_DOUBLE_EQ(r.mse, 4.0);
    EXPECT_DOUBLE_EQ(r.mae, 2.0);
    ASSERT_TRUE(r.smape);
    EXPECT_NEAR(*r.smape, 200.0 * 2.0 / 18.0, 1e-12);
    EXPECT_NEAR(*r.smape, 22.222, 1e-3);
    EXPECT_FALSE(r.mase);
    EXPECT_EQ(r.count, 1u);
}

TEST(Metrics, PerfectForecast)
{
    Rng rng(1);
    const Tensor a = oracle::random_tensor({5, 2}, rng);
    const MetricReport r = evaluate(a, a);
    EXPECT_EQ(r.mse, 0.0);
    EXPECT_EQ(r.mae, 0.0);
    EXPECT_EQ(*r.smape, 0.0);
}

TEST(Metrics, SmapeIsSymmetricAndBounded)
{
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor a = oracle::random_tensor({6, 3}, rng, -5, 5), b = oracle::random_tensor({6, 3}, rng, -5, 5);
        const double ab = *evaluate(a, b).smape, ba = *evaluate(b, a).smape;
        EXPECT_NEAR(ab, ba, 1e-12);
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 200.0);
    }
}

TEST(Metrics, BothZeroContributesNothing)
{
    const MetricReport r = evaluate(Tensor::matrix({{0}, {1}}), Tensor::matrix({{0}, {1}}));
    EXPECT_EQ(*r.smape, 0.0);
}

TEST(Metrics, MaseEqualsOneWhenErrorMatchesNaiveScale)
{
    const Tensor history = Tensor::matrix({{0}, {1}, {2}, {3}});
    const MetricReport r = evaluate(Tensor::matrix({{5}, {6}}), Tensor::matrix({{4}, {5}}), &history, 1);
    ASSERT_TRUE(r.mase);
    EXPECT_DOUBLE_EQ(*r.mase, 1.0);
}

TEST(Metrics, ConstantSeasonalHistoryLeavesMaseUndefined)
{
    const Tensor history = Tensor::matrix({{1}, {2}, {1}, {2}});
    const MetricReport r = evaluate(Tensor::matrix({{5}}), Tensor::matrix({{4}}), &history, 2);
    EXPECT_FALSE(r.mase);
    EXPECT_FALSE(r.owa);
    EXPECT_TRUE(r.smape);
}

TEST(Metrics, NaiveForecastHasUnitOwa)
{
    Rng rng(3);
    const Tensor history = oracle::random_tensor({12, 2}, rng, 1, 5);
    const Tensor truth = oracle::random_tensor({4, 2}, rng, 1, 5);
    const MetricReport r = evaluate(seasonal_naive(history, 4, 4), truth, &history, 4);
    ASSERT_TRUE(r.owa);
    EXPECT_NEAR(*r.owa, 1.0, 1e-12);
}

TEST(Metrics, OwaAveragesRelativeErrors)
{
    const Tensor history = Tensor::matrix({{1}, {2}, {3}, {4}});
    const Tensor truth = Tensor::matrix({{6}, {7}});
    // Persistence predicts 4: errors 2, 3. Model predicts 5, 7: errors 1, 0.
    const MetricReport r = evaluate(Tensor::matrix({{5}, {7}}), truth, &history, 1);
    const double smape_model = 100.0 * (1.0 / 11.0 + 0.0);
    const double smape_naive = 100.0 * (2.0 / 10.0 + 3.0 / 11.0);
    const double mase_model = 0.5, mase_naive = 2.5;
    EXPECT_NEAR(*r.smape, smape_model, 1e-12);
    EXPECT_NEAR(*r.mase, mase_model, 1e-12);
    EXPECT_NEAR(*r.owa, 0.5 * (smape_model / smape_naive + mase_model / mase_naive), 1e-12);
}

TEST(Metrics, MseAgreesWithTrainingLoss)
{
    Rng rng(4);
    const Tensor a = oracle::random_tensor({8, 3}, rng), b = oracle::random_tensor({8, 3}, rng);
    EXPECT_NEAR(evaluate(a, b).mse, mse_loss(a, b), 1e-12);
}

TEST(Metrics, AccumulatorWeightsByElement)
{
    MetricAccumulator acc;
    acc.add(Tensor::matrix({{1}}), Tensor::matrix({{0}}));
    acc.add(Tensor::matrix({{0}, {0}, {0}}), Tensor::matrix({{0}, {0}, {0}}));
    EXPECT_DOUBLE_EQ(acc.report().mse, 0.25);
}

TEST(Metrics, ShapeMismatchIsDimensionError)
{
    EXPECT_THROW(evaluate(Tensor({2, 1}), Tensor({3, 1})), DimensionError);
}

TEST(Baselines, SeasonalNaiveAndPersistence)
{
    const Tensor history = Tensor::matrix({{1}, {2}, {3}, {4}, {5}});
    EXPECT_EQ(seasonal_naive(history, 2, 5), Tensor::matrix({{4}, {5}, {4}, {5}, {4}}));
    EXPECT_EQ(persistence_forecast(history, 2), Tensor::matrix({{5}, {5}}));
}
