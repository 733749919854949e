#pragma once

#include <cstddef>
#include <optional>

#include "skolr/tensor.hpp"

namespace skolr {

struct MetricReport {
    double mse = 0.0;
    double mae = 0.0;
    std::optional<double> smape;  // percent, in [0, 200]
    std::optional<double> mase;   // needs history and seasonality; empty when the naive scale is zero
    std::optional<double> owa;    // relative to the seasonal-naive (Naive2) reference
    std::size_t count = 0;
};

/// Running sums over many forecast windows; report() gives element-weighted means, with OWA
/// formed from the aggregated sMAPE/MASE of the model and of the seasonal-naive reference.
class MetricAccumulator {
public:
    /// pred/truth [T x C]; history [n x C] (n > m) enables MASE and OWA.
    void add(const Tensor& pred, const Tensor& truth, const Tensor* history = nullptr, std::size_t seasonality = 0);
    MetricReport report() const;

private:
    std::size_t count_ = 0;
    double squared_ = 0.0;
    double absolute_ = 0.0;
    double smape_ = 0.0;
    std::size_t scaled_count_ = 0;
    double mase_ = 0.0;
    double naive_smape_ = 0.0;
    double naive_mase_ = 0.0;
    bool scale_undefined_ = false;
};

MetricReport evaluate(const Tensor& pred, const Tensor& truth, const Tensor* history = nullptr,
                      std::size_t seasonality = 0);

/// Repeats the last season of `history` [n x C] over `horizon` steps.
Tensor seasonal_naive(const Tensor& history, std::size_t seasonality, std::size_t horizon);
/// Repeats the last observed row.
Tensor persistence_forecast(const Tensor& history, std::size_t horizon);

}  // namespace skolr
