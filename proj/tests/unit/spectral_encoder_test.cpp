#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "skolr/error.hpp"
#include "skolr/fft.hpp"
#include "skolr/rng.hpp"
#include "skolr/spectral_encoder.hpp"

using namespace skolr;

namespace {

GateBank constant_gates(std::size_t branches, std::size_t length, double logit)
{
    GateBank bank = GateBank::zeros(branches, length);
    for (auto& g : bank.logits)
        for (double& v : g.storage()) v = logit;
    return bank;
}

}  // namespace

TEST(Decompose, SaturatedGatePassesSignal)
{
    Rng rng(1);
    const Tensor y = oracle::random_tensor({16}, rng);
    const auto out = decompose(y, constant_gates(1, 16, 20.0));
    EXPECT_LE(max_abs_diff(out[0], y), 1e-6);
}

TEST(Decompose, ZeroLogitsHalveSignal)
{
    Rng rng(2);
    const Tensor y = oracle::random_tensor({15}, rng);
    const auto out = decompose(y, constant_gates(3, 15, 0.0));
    ASSERT_EQ(out.size(), 3u);
    for (const auto& b : out) EXPECT_LE(max_abs_diff(b, scale(y, 0.5)), 1e-10);
}

TEST(Decompose, SelectsSingleFrequency)
{
    const std::size_t n = 8;
    std::vector<double> raw(n), expected(n);
    for (std::size_t k = 0; k < n; ++k) {
        expected[k] = std::cos(2.0 * std::numbers::pi * k / 8.0);
        raw[k] = expected[k] + std::cos(2.0 * std::numbers::pi * 2.0 * k / 8.0);
    }
    GateBank bank = constant_gates(1, n, -20.0);
    bank.logits[0][1] = 20.0;

    // Oracle: gate the direct-sum spectrum and invert it directly.
    auto bins = oracle::dft_half(raw);
    for (std::size_t f = 0; f < bins.size(); ++f) bins[f] *= 1.0 / (1.0 + std::exp(-bank.logits[0][f]));
    const auto reference = oracle::idft_half(bins, n);

    const auto out = decompose(Tensor::vector(raw), bank);
    for (std::size_t k = 0; k < n; ++k) {
        EXPECT_NEAR(out[0][k], reference[k], 1e-12);
        EXPECT_NEAR(out[0][k], expected[k], 1e-6);
    }
}

TEST(Decompose, LinearInTheWindow)
{
    Rng rng(3);
    GateBank bank = GateBank::zeros(2, 12);
    for (auto& g : bank.logits) g = oracle::random_tensor({7}, rng, -3, 3);
    const Tensor x = oracle::random_tensor({12}, rng), y = oracle::random_tensor({12}, rng);
    const double a = 1.7, b = -0.3;
    const auto lhs = decompose(add(scale(x, a), scale(y, b)), bank);
    const auto dx = decompose(x, bank), dy = decompose(y, bank);
    for (std::size_t n = 0; n < 2; ++n) EXPECT_LE(max_abs_diff(lhs[n], add(scale(dx[n], a), scale(dy[n], b))), 1e-9);
}

TEST(Decompose, LengthMismatchIsDimensionError)
{
    EXPECT_THROW(decompose(Tensor({10}), GateBank::zeros(1, 12)), DimensionError);
}

TEST(GateSpectrum, GateGradientMatchesFiniteDifferences)
{
    Rng rng(4);
    const std::size_t n = 12;
    const Tensor signals = oracle::random_tensor({3, n}, rng);
    const Tensor logits = oracle::random_tensor({7}, rng, -2, 2);
    const Tensor weights = oracle::random_tensor({3, n}, rng);
    auto loss = [&](const Tensor& w, Tensor* grad) {
        ad::Tape tape;
        const ad::Var g = tape.variable(w);
        const ad::Var out = ad::sum(ad::mul(gate_spectrum(tape.constant(signals), g), tape.constant(weights)));
        if (grad) {
            tape.backward(out);
            *grad = g.grad();
        }
        return out.value()[0];
    };
    Tensor analytic;
    loss(logits, &analytic);
    const Tensor numeric = finite_difference_grad([&](const Tensor& w) { return loss(w, nullptr); }, logits, 1e-5);
    EXPECT_LE(frobenius_norm(subtract(analytic, numeric)) / frobenius_norm(numeric), 1e-4);
}

TEST(Patchify, TokensAreConsecutiveSamples)
{
    std::vector<double> raw(12);
    for (std::size_t i = 0; i < 12; ++i) raw[i] = static_cast<double>(i);
    const Tensor tokens = patchify(Tensor::vector(raw), 2);
    ASSERT_EQ(tokens.shape(), (Shape{6, 2}));
    EXPECT_EQ(tokens(0, 0), 0.0);
    EXPECT_EQ(tokens(0, 1), 1.0);
    EXPECT_EQ(tokens(5, 1), 11.0);
}

TEST(Patchify, WholeSignalAsOneToken)
{
    const Tensor x = Tensor::vector({1, 2, 3, 4, 5});
    const Tensor tokens = patchify(x, 5);
    ASSERT_EQ(tokens.shape(), (Shape{1, 5}));
    EXPECT_EQ(tokens.storage(), x.storage());
}

TEST(Patchify, RoundtripIsExactForEveryDivisor)
{
    Rng rng(9);
    for (std::size_t len : {12u, 36u, 96u}) {
        const Tensor x = oracle::random_tensor({len}, rng);
        for (std::size_t p : divisors(len)) EXPECT_EQ(unpatchify(patchify(x, p)), x);
    }
}

TEST(Patchify, NonDivisorListsValidChoices)
{
    try {
        patchify(Tensor({12}), 5);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("1, 2, 3, 4, 6, 12"), std::string::npos);
    }
}

TEST(Encode, ZeroWeightsGiveBias)
{
    Rng rng(1);
    FeedForward ffn = FeedForward::create(4, 8, 3, 1, rng);
    for (auto& l : ffn.layers) std::fill(l.weight.storage().begin(), l.weight.storage().end(), 0.0);
    const Tensor bias = ffn.layers.back().bias;
    const Tensor out = encode(oracle::random_tensor({5, 4}, rng), ffn);
    for (std::size_t k = 0; k < 5; ++k)
        for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(out(k, d), bias[d]);
}

TEST(Encode, HandComputedReluNet)
{
    FeedForward ffn;
    ffn.layers.push_back({Tensor::identity(2), Tensor::vector({0.0, 0.0})});
    ffn.layers.push_back({Tensor::matrix({{1, 1}, {0, 2}}), Tensor::vector({0.5, 0.0})});
    const Tensor out = encode(Tensor::matrix({{1, -2}, {-1, 3}}), ffn);
    // relu([1,-2]) = [1,0] -> [1.5, 1]; relu([-1,3]) = [0,3] -> [0.5, 6]
    EXPECT_EQ(out, Tensor::matrix({{1.5, 1.0}, {0.5, 6.0}}));
}

TEST(Encode, MatchesStraightLineMlp)
{
    Rng rng(12);
    for (std::size_t depth : {1u, 2u, 3u}) {
        const FeedForward ffn = FeedForward::create(6, 10, 5, depth, rng);
        const Tensor tokens = oracle::random_tensor({4, 6}, rng);
        const Tensor out = encode(tokens, ffn);
        for (std::size_t k = 0; k < 4; ++k) {
            const auto ref = oracle::mlp(tokens.row(k).storage(), ffn);
            for (std::size_t d = 0; d < 5; ++d) EXPECT_NEAR(out(k, d), ref[d], 1e-12);
        }
    }
}

TEST(Encode, WidthMismatchIsDimensionError)
{
    Rng rng(1);
    const FeedForward ffn = FeedForward::create(4, 8, 3, 1, rng);
    EXPECT_THROW(encode(Tensor({2, 5}), ffn), DimensionError);
}

TEST(FeedForward, ParameterCountMatchesLayers)
{
    Rng rng(1);
    for (std::size_t depth : {1u, 2u, 3u}) {
        const FeedForward ffn = FeedForward::create(16, 128, 64, depth, rng);
        std::size_t total = 0;
        for (const auto& l : ffn.layers) total += l.weight.size() + l.bias.size();
        EXPECT_EQ(total, FeedForward::parameter_count(16, 128, 64, depth));
    }
}
