#include "skolr/training.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "skolr/error.hpp"
#include "skolr/rng.hpp"

namespace skolr {

namespace {

// Runs task(i) for i in [0, tasks) on up to `threads` workers.
template <typename Task>
void run_parallel(std::size_t tasks, std::size_t threads, Task&& task)
{
    if (threads <= 1 || tasks <= 1) {
        for (std::size_t i = 0; i < tasks; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    const std::size_t workers = std::min(threads, tasks);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < tasks; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct Unit {
    std::size_t origin;
    std::size_t channel;
};

std::vector<Unit> enumerate_units(const Tensor& values, IndexRange rows, std::size_t lookback, std::size_t horizon,
                                  std::size_t stride)
{
    const std::size_t windows = window_count(rows, lookback, horizon, stride);
    if (windows == 0)
        throw ConfigError("split of " + std::to_string(rows.size()) + " rows is shorter than the required L+T=" +
                          std::to_string(lookback + horizon));
    std::vector<Unit> units;
    units.reserve(windows * values.cols());
    for (std::size_t w = 0; w < windows; ++w)
        for (std::size_t c = 0; c < values.cols(); ++c) units.push_back({rows.begin + w * stride, c});
    return units;
}

void fill_unit_rows(const Tensor& values, std::span<const Unit> units, std::size_t lookback, std::size_t horizon,
                    Tensor& windows, Tensor& targets)
{
    windows = Tensor({units.size(), lookback});
    targets = Tensor({units.size(), horizon});
    for (std::size_t i = 0; i < units.size(); ++i) {
        const auto [origin, c] = units[i];
        for (std::size_t k = 0; k < lookback; ++k) windows(i, k) = values(origin + k, c);
        for (std::size_t k = 0; k < horizon; ++k) targets(i, k) = values(origin + lookback + k, c);
    }
}

}  // namespace

void TrainConfig::validate() const
{
    if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
    if (batch_size == 0) throw ConfigError("batch size must be at least 1");
    if (micro_batch == 0) throw ConfigError("micro batch must be at least 1");
    if (max_epochs == 0) throw ConfigError("max epochs must be at least 1");
    if (train_stride == 0 || eval_stride == 0) throw ConfigError("window strides must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
}

std::string TrainConfig::canonical() const
{
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::ostringstream s;
    s << "lr=" << num(lr) << ";weight_decay=" << num(weight_decay) << ";beta1=" << num(beta1) << ";beta2=" << num(beta2)
      << ";eps=" << num(eps) << ";batch_size=" << batch_size << ";max_epochs=" << max_epochs << ";patience=" << patience
      << ";seed=" << seed << ";micro_batch=" << micro_batch << ";train_stride=" << train_stride
      << ";eval_stride=" << eval_stride << ";clip_norm=" << num(clip_norm);
    return s.str();
}

OptimizerState OptimizerState::create(std::span<Tensor* const> params, const TrainConfig& cfg)
{
    OptimizerState s;
    for (const Tensor* p : params) {
        s.first_moment.emplace_back(p->shape());
        s.second_moment.emplace_back(p->shape());
    }
    s.lr = cfg.lr;
    s.weight_decay = cfg.weight_decay;
    s.beta1 = cfg.beta1;
    s.beta2 = cfg.beta2;
    s.eps = cfg.eps;
    return s;
}

void adamw_step(std::span<Tensor* const> params, std::span<const Tensor> grads, OptimizerState& state,
                std::span<const std::string> names)
{
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw DimensionError("adamw_step: parameter, gradient and moment counts differ");
    const std::uint64_t step = state.step + 1;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(grads[i]) || !params[i]->same_shape(state.first_moment[i]))
            throw DimensionError("adamw_step: shape mismatch for parameter " +
                                 (i < names.size() ? names[i] : std::to_string(i)));
        if (!grads[i].all_finite())
            throw NumericError("non-finite gradient for parameter " + (i < names.size() ? names[i] : std::to_string(i)) +
                               " at step " + std::to_string(step));
    }
    const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(step));
    const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(step));
    const double decay = 1.0 - state.lr * state.weight_decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        Tensor& m = state.first_moment[i];
        Tensor& v = state.second_moment[i];
        const Tensor& g = grads[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            p[k] *= decay;
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
            const double m_hat = m[k] / correction1;
            const double v_hat = v[k] / correction2;
            p[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
    state.step = step;
}

LossAndGradients loss_and_gradients(const SkolrParams& params, const ModelConfig& cfg, const Tensor& windows,
                                    const Tensor& targets, bool training, Rng* rng)
{
    ad::Tape tape;
    const auto vars = bind(tape, params, true);
    const BatchLoss out = batch_loss(tape, vars, cfg, windows, targets, training, rng);
    tape.backward(out.loss);

    LossAndGradients result;
    result.loss = out.loss.value()[0];
    for (const auto& b : vars) {
        result.grads.push_back(b.gate.grad());
        for (const auto& l : b.encoder) {
            result.grads.push_back(l.weight.grad());
            result.grads.push_back(l.bias.grad());
        }
        result.grads.push_back(b.transition.grad());
        for (const auto& l : b.decoder) {
            result.grads.push_back(l.weight.grad());
            result.grads.push_back(l.bias.grad());
        }
    }
    return result;
}

double loss_value(const SkolrParams& params, const ModelConfig& cfg, const Tensor& windows, const Tensor& targets)
{
    ad::Tape tape;
    const auto vars = bind(tape, params, false);
    return batch_loss(tape, vars, cfg, windows, targets, false, nullptr).loss.value()[0];
}

RangeForecast forecast_range(const SkolrParams& params, const ModelConfig& cfg, const Tensor& values, IndexRange rows,
                             std::size_t stride, std::size_t threads)
{
    if (values.cols() != cfg.channels)
        throw DimensionError("dataset has " + std::to_string(values.cols()) + " channels, model expects " +
                             std::to_string(cfg.channels));
    const auto units = enumerate_units(values, rows, cfg.lookback, cfg.horizon, stride);
    const std::size_t channels = values.cols();
    const std::size_t windows = units.size() / channels;

    RangeForecast out;
    out.origins.resize(windows);
    out.predictions.assign(windows, Tensor({cfg.horizon, channels}));
    out.truths.assign(windows, Tensor({cfg.horizon, channels}));
    out.histories.assign(windows, Tensor({cfg.lookback, channels}));

    constexpr std::size_t chunk = 256;
    const std::size_t chunks = (units.size() + chunk - 1) / chunk;
    run_parallel(chunks, threads, [&](std::size_t ci) {
        const std::size_t begin = ci * chunk, end = std::min(units.size(), begin + chunk);
        const std::span<const Unit> slice(units.data() + begin, end - begin);
        Tensor inputs, targets;
        fill_unit_rows(values, slice, cfg.lookback, cfg.horizon, inputs, targets);
        const Tensor pred = predict_rows(inputs, params, cfg, cfg.horizon);
        for (std::size_t i = 0; i < slice.size(); ++i) {
            const std::size_t w = (begin + i) / channels, c = slice[i].channel;
            out.origins[w] = slice[i].origin;
            for (std::size_t t = 0; t < cfg.horizon; ++t) {
                out.predictions[w](t, c) = pred(i, t);
                out.truths[w](t, c) = targets(i, t);
            }
            for (std::size_t k = 0; k < cfg.lookback; ++k) out.histories[w](k, c) = inputs(i, k);
        }
    });
    return out;
}

MetricReport evaluate_range(const SkolrParams& params, const ModelConfig& cfg, const Tensor& values, IndexRange rows,
                            std::size_t stride, std::size_t threads)
{
    const RangeForecast f = forecast_range(params, cfg, values, rows, stride, threads);
    MetricAccumulator acc;
    for (std::size_t w = 0; w < f.predictions.size(); ++w) acc.add(f.predictions[w], f.truths[w]);
    return acc.report();
}

MetricReport persistence_baseline(const Tensor& values, IndexRange rows, std::size_t lookback, std::size_t horizon,
                                  std::size_t stride)
{
    MetricAccumulator acc;
    for (const auto& w : make_windows(values, rows, lookback, horizon, stride))
        acc.add(persistence_forecast(w.input, horizon), w.target);
    return acc.report();
}

TrainResult train(const ModelConfig& cfg, const Tensor& values, IndexRange train_rows, IndexRange val_rows,
                  const TrainConfig& tcfg, const std::function<void(const EpochLog&)>& on_epoch)
{
    cfg.validate();
    Rng init_rng = Rng(tcfg.seed).split(0);
    return train(cfg, SkolrParams::initialize(cfg, init_rng), values, train_rows, val_rows, tcfg, on_epoch);
}

TrainResult train(const ModelConfig& cfg, SkolrParams init, const Tensor& values, IndexRange train_rows,
                  IndexRange val_rows, const TrainConfig& tcfg, const std::function<void(const EpochLog&)>& on_epoch)
{
    cfg.validate();
    tcfg.validate();
    if (values.cols() != cfg.channels)
        throw DimensionError("dataset has " + std::to_string(values.cols()) + " channels, model expects " +
                             std::to_string(cfg.channels));

    std::vector<Unit> units = enumerate_units(values, train_rows, cfg.lookback, cfg.horizon, tcfg.train_stride);
    const Rng root(tcfg.seed);

    TrainResult result;
    result.last = std::move(init);
    result.best = result.last;
    result.best_val = std::numeric_limits<double>::infinity();

    auto named = result.last.named();
    std::vector<Tensor*> slots;
    std::vector<std::string> names;
    for (auto& [n, t] : named) {
        slots.push_back(t);
        names.push_back(n);
    }
    OptimizerState opt = OptimizerState::create(slots, tcfg);

    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        Rng shuffle = root.split(1'000'000 + epoch);
        for (std::size_t i = units.size(); i > 1; --i) std::swap(units[i - 1], units[shuffle.below(i)]);

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        try {
            for (std::size_t start = 0; start < units.size(); start += tcfg.batch_size) {
                const std::size_t batch = std::min(tcfg.batch_size, units.size() - start);
                const std::size_t parts = (batch + tcfg.micro_batch - 1) / tcfg.micro_batch;
                std::vector<LossAndGradients> partial(parts);
                const std::uint64_t step = opt.step + 1;
                run_parallel(parts, tcfg.threads, [&](std::size_t p) {
                    const std::size_t b0 = start + p * tcfg.micro_batch;
                    const std::size_t b1 = std::min(start + batch, b0 + tcfg.micro_batch);
                    Tensor windows, targets;
                    fill_unit_rows(values, std::span<const Unit>(units.data() + b0, b1 - b0), cfg.lookback,
                                   cfg.horizon, windows, targets);
                    Rng dropout_rng = root.split(step * 4096 + p);
                    partial[p] = loss_and_gradients(result.last, cfg, windows, targets, cfg.dropout > 0.0, &dropout_rng);
                    const double weight = static_cast<double>(b1 - b0) / static_cast<double>(batch);
                    partial[p].loss *= weight;
                    for (auto& g : partial[p].grads)
                        for (double& v : g.storage()) v *= weight;
                });
                LossAndGradients total = std::move(partial[0]);
                for (std::size_t p = 1; p < parts; ++p) {
                    total.loss += partial[p].loss;
                    for (std::size_t i = 0; i < total.grads.size(); ++i)
                        for (std::size_t k = 0; k < total.grads[i].size(); ++k)
                            total.grads[i][k] += partial[p].grads[i][k];
                }
                if (!std::isfinite(total.loss))
                    throw NumericError("training loss became non-finite at step " + std::to_string(step));
                if (tcfg.clip_norm > 0.0) {
                    double norm = 0.0;
                    for (const auto& g : total.grads)
                        for (double v : g.values()) norm += v * v;
                    norm = std::sqrt(norm);
                    if (norm > tcfg.clip_norm)
                        for (auto& g : total.grads)
                            for (double& v : g.storage()) v *= tcfg.clip_norm / norm;
                }
                adamw_step(slots, total.grads, opt, names);
                loss_sum += total.loss * static_cast<double>(batch);
                loss_count += batch;
            }
        } catch (const NumericError& e) {
            result.diverged = true;
            result.stop_reason = e.what();
            break;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_mse = loss_sum / static_cast<double>(loss_count);
        entry.val_mse = evaluate_range(result.last, cfg, values, val_rows, tcfg.eval_stride, tcfg.threads).mse;
        entry.lr = tcfg.lr;
        entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.log.push_back(entry);
        if (on_epoch) on_epoch(entry);

        if (!std::isfinite(entry.val_mse)) {
            result.diverged = true;
            result.stop_reason = "validation loss became non-finite at epoch " + std::to_string(epoch);
            break;
        }
        if (entry.val_mse < result.best_val) {
            result.best_val = entry.val_mse;
            result.best = result.last;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= tcfg.patience && tcfg.patience > 0) {
            result.stop_reason = "no validation improvement for " + std::to_string(tcfg.patience) + " epochs";
            break;
        }
    }
    if (result.stop_reason.empty()) result.stop_reason = "reached max epochs";
    return result;
}

}  // namespace skolr
