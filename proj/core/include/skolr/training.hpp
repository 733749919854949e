#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "skolr/data.hpp"
#include "skolr/metrics.hpp"
#include "skolr/model.hpp"

namespace skolr {

struct TrainConfig {
    double lr = 1e-4;
    double weight_decay = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    /// Units per tape. The partition of a batch into micro-batches is fixed, so results do not
    /// depend on `threads`.
    std::size_t micro_batch = 32;
    std::size_t train_stride = 1;
    std::size_t eval_stride = 1;
    /// Global gradient-norm clip; 0 disables.
    double clip_norm = 0.0;

    void validate() const;
    std::string canonical() const;
};

struct OptimizerState {
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::uint64_t step = 0;
    double lr = 1e-4;
    double weight_decay = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static OptimizerState create(std::span<Tensor* const> params, const TrainConfig& cfg);
};

/// Decoupled weight decay (theta -= lr*wd*theta) followed by the bias-corrected Adam update.
/// Throws NumericError naming the parameter and step when a gradient is not finite.
void adamw_step(std::span<Tensor* const> params, std::span<const Tensor> grads, OptimizerState& state,
                std::span<const std::string> names = {});

struct LossAndGradients {
    double loss = 0.0;
    std::vector<Tensor> grads;  // ordered as SkolrParams::named()
};

/// Mean-square loss of denormalized forecasts over univariate windows [B x L] / targets [B x T].
LossAndGradients loss_and_gradients(const SkolrParams& params, const ModelConfig& cfg, const Tensor& windows,
                                    const Tensor& targets, bool training = false, Rng* rng = nullptr);
double loss_value(const SkolrParams& params, const ModelConfig& cfg, const Tensor& windows, const Tensor& targets);

struct EpochLog {
    std::size_t epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    SkolrParams best;
    SkolrParams last;
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_val = 0.0;
    bool diverged = false;
    std::string stop_reason;
};

/// Shuffled mini-batch AdamW over channel-independent windows of `values` (already standardized),
/// validation MSE after every epoch, best-checkpoint tracking and early stopping.
TrainResult train(const ModelConfig& cfg, const Tensor& values, IndexRange train_rows, IndexRange val_rows,
                  const TrainConfig& tcfg, const std::function<void(const EpochLog&)>& on_epoch = {});

/// Same, starting from the given parameters.
TrainResult train(const ModelConfig& cfg, SkolrParams init, const Tensor& values, IndexRange train_rows,
                  IndexRange val_rows, const TrainConfig& tcfg, const std::function<void(const EpochLog&)>& on_epoch = {});

struct RangeForecast {
    std::vector<std::size_t> origins;
    std::vector<Tensor> predictions;  // horizon x C each
    std::vector<Tensor> truths;
    std::vector<Tensor> histories;    // the L input rows of each window
};

/// Forecasts every window in `rows` (stride `stride`) with the model horizon.
RangeForecast forecast_range(const SkolrParams& params, const ModelConfig& cfg, const Tensor& values, IndexRange rows,
                             std::size_t stride = 1, std::size_t threads = 1);

MetricReport evaluate_range(const SkolrParams& params, const ModelConfig& cfg, const Tensor& values, IndexRange rows,
                            std::size_t stride = 1, std::size_t threads = 1);

/// Repeat-last-value baseline on the same windows.
MetricReport persistence_baseline(const Tensor& values, IndexRange rows, std::size_t lookback, std::size_t horizon,
                                  std::size_t stride = 1);

}  // namespace skolr
