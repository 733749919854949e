#include <benchmark/benchmark.h>

#include <vector>

#include "skolr/fft.hpp"
#include "skolr/koopman.hpp"
#include "skolr/model.hpp"
#include "skolr/rng.hpp"
#include "skolr/training.hpp"

using namespace skolr;

namespace {

Tensor random_tensor(Shape shape, Rng& rng)
{
    Tensor t(std::move(shape));
    for (double& v : t.storage()) v = rng.uniform(-1.0, 1.0);
    return t;
}

void BM_Rfft(benchmark::State& state)
{
    Rng rng(1);
    std::vector<double> x(static_cast<std::size_t>(state.range(0)));
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(rfft(x));
}
BENCHMARK(BM_Rfft)->Arg(96)->Arg(336)->Arg(512)->Arg(720);

void BM_RnnScan(benchmark::State& state)
{
    Rng rng(2);
    const auto d = static_cast<std::size_t>(state.range(0));
    const TransitionMatrix w = TransitionMatrix::scaled_orthogonal(d, 0.99, rng);
    const Tensor z = random_tensor({6, d}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(rnn_scan(z, w));
}
BENCHMARK(BM_RnnScan)->Arg(16)->Arg(64)->Arg(256);

void BM_Eigenvalues(benchmark::State& state)
{
    Rng rng(3);
    const TransitionMatrix w = TransitionMatrix::scaled_orthogonal(static_cast<std::size_t>(state.range(0)), 0.99, rng);
    for (auto _ : state) benchmark::DoNotOptimize(eigenvalues(w));
}
BENCHMARK(BM_Eigenvalues)->Arg(64)->Arg(256);

void BM_Forward(benchmark::State& state)
{
    ModelConfig cfg;
    cfg.channels = static_cast<std::size_t>(state.range(0));
    Rng rng(4);
    const SkolrParams params = SkolrParams::initialize(cfg, rng);
    const Tensor window = random_tensor({cfg.lookback, cfg.channels}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(forward(window, params, cfg));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(7);

void BM_LossAndGradients(benchmark::State& state)
{
    ModelConfig cfg;
    Rng rng(5);
    const SkolrParams params = SkolrParams::initialize(cfg, rng);
    const auto batch = static_cast<std::size_t>(state.range(0));
    const Tensor windows = random_tensor({batch, cfg.lookback}, rng);
    const Tensor targets = random_tensor({batch, cfg.horizon}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradients(params, cfg, windows, targets));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_LossAndGradients)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_AdamwStep(benchmark::State& state)
{
    ModelConfig cfg;
    Rng rng(6);
    SkolrParams params = SkolrParams::initialize(cfg, rng);
    std::vector<Tensor*> ptrs;
    std::vector<Tensor> grads;
    for (auto& [name, t] : params.named()) {
        ptrs.push_back(t);
        grads.push_back(random_tensor(t->shape(), rng));
    }
    TrainConfig tcfg;
    OptimizerState opt = OptimizerState::create(ptrs, tcfg);
    for (auto _ : state) adamw_step(ptrs, grads, opt);
}
BENCHMARK(BM_AdamwStep);

}  // namespace

BENCHMARK_MAIN();
