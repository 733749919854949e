#include "skolr/metrics.hpp"

#include <cmath>

#include "skolr/error.hpp"

namespace skolr {

namespace {

double smape_term(double truth, double pred)
{
    const double denom = std::abs(truth) + std::abs(pred);
    return denom == 0.0 ? 0.0 : std::abs(truth - pred) / denom;
}

}  // namespace

Tensor seasonal_naive(const Tensor& history, std::size_t seasonality, std::size_t horizon)
{
    const std::size_t n = history.rows(), c = history.cols();
    if (seasonality == 0 || seasonality > n)
        throw ConfigError("seasonal naive needs 1 <= m <= history length, got m=" + std::to_string(seasonality));
    Tensor out({horizon, c});
    for (std::size_t t = 0; t < horizon; ++t)
        for (std::size_t j = 0; j < c; ++j) out(t, j) = history(n - seasonality + t % seasonality, j);
    return out;
}

Tensor persistence_forecast(const Tensor& history, std::size_t horizon) { return seasonal_naive(history, 1, horizon); }

void MetricAccumulator::add(const Tensor& pred, const Tensor& truth, const Tensor* history, std::size_t seasonality)
{
    if (!pred.same_shape(truth) || pred.rank() != 2)
        throw DimensionError("metrics: prediction " + shape_string(pred.shape()) + " vs truth " +
                             shape_string(truth.shape()));
    const std::size_t rows = pred.rows(), cols = pred.cols();
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        squared_ += d * d;
        absolute_ += std::abs(d);
        smape_ += smape_term(truth[i], pred[i]);
    }
    count_ += pred.size();

    if (!history) return;
    if (history->rank() != 2 || history->cols() != cols)
        throw DimensionError("metrics: history " + shape_string(history->shape()) + " does not match " +
                             std::to_string(cols) + " channels");
    const std::size_t n = history->rows();
    if (seasonality == 0 || n <= seasonality)
        throw ConfigError("MASE needs seasonality m >= 1 and more than m history rows");

    const Tensor naive = seasonal_naive(*history, seasonality, rows);
    for (std::size_t j = 0; j < cols; ++j) {
        double scale = 0.0;
        for (std::size_t k = seasonality; k < n; ++k) scale += std::abs((*history)(k, j) - (*history)(k - seasonality, j));
        scale /= static_cast<double>(n - seasonality);
        if (scale == 0.0) {
            scale_undefined_ = true;
            continue;
        }
        for (std::size_t t = 0; t < rows; ++t) {
            mase_ += std::abs(truth(t, j) - pred(t, j)) / scale;
            naive_mase_ += std::abs(truth(t, j) - naive(t, j)) / scale;
        }
    }
    for (std::size_t i = 0; i < naive.size(); ++i) naive_smape_ += smape_term(truth[i], naive[i]);
    scaled_count_ += pred.size();
}

MetricReport MetricAccumulator::report() const
{
    MetricReport r;
    r.count = count_;
    if (count_ == 0) return r;
    const double n = static_cast<double>(count_);
    r.mse = squared_ / n;
    r.mae = absolute_ / n;
    r.smape = 200.0 * smape_ / n;
    if (scaled_count_ > 0 && !scale_undefined_) {
        const double m = static_cast<double>(scaled_count_);
        r.mase = mase_ / m;
        const double smape_model = 200.0 * smape_ / n;
        const double smape_naive = 200.0 * naive_smape_ / m;
        const double mase_naive = naive_mase_ / m;
        if (smape_naive > 0.0 && mase_naive > 0.0) r.owa = 0.5 * (smape_model / smape_naive + *r.mase / mase_naive);
    }
    return r;
}

MetricReport evaluate(const Tensor& pred, const Tensor& truth, const Tensor* history, std::size_t seasonality)
{
    MetricAccumulator acc;
    acc.add(pred, truth, history, seasonality);
    return acc.report();
}

}  // namespace skolr
