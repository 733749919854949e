#pragma once

#include <cstddef>
#include <vector>

#include "skolr/autodiff.hpp"
#include "skolr/tensor.hpp"

namespace skolr {

class Rng;

/// One real gate logit per half-spectrum bin, per branch.
struct GateBank {
    std::vector<Tensor> logits;

    static GateBank zeros(std::size_t branches, std::size_t window_length);
    std::size_t branches() const { return logits.size(); }
    std::size_t bins() const;
    void validate() const;
};

struct DenseLayer {
    Tensor weight;  // in x out, applied as x * weight + bias
    Tensor bias;    // out
};

/// ReLU MLP: `depth` hidden layers of width `hidden`, then an affine map to the output width.
struct FeedForward {
    std::vector<DenseLayer> layers;

    static FeedForward create(std::size_t input, std::size_t hidden, std::size_t output, std::size_t depth, Rng& rng);
    static std::size_t parameter_count(std::size_t input, std::size_t hidden, std::size_t output, std::size_t depth);
    std::size_t input_width() const;
    std::size_t output_width() const;
};

/// Soft spectral gating of each row of `signals` [B x L]: irfft(rfft(row) * sigmoid(logits)).
ad::Var gate_spectrum(ad::Var signals, ad::Var logits);

/// Branch signals of one window, one per gate vector.
std::vector<Tensor> decompose(const Tensor& window, const GateBank& gates);

/// Non-overlapping tokens: [L] -> [L/P x P]. Throws ConfigError listing valid P when P does not divide L.
Tensor patchify(const Tensor& signal, std::size_t patch);
Tensor unpatchify(const Tensor& tokens);
std::vector<std::size_t> divisors(std::size_t n);

struct DenseLayerVars {
    ad::Var weight;
    ad::Var bias;
};

/// Applies the MLP to every row of x. Dropout (training only) follows each hidden ReLU.
ad::Var feed_forward(ad::Var x, const std::vector<DenseLayerVars>& layers, double dropout = 0.0, Rng* rng = nullptr);
std::vector<DenseLayerVars> bind(ad::Tape& tape, const FeedForward& ffn, bool trainable);

/// Tokens [K x P_token] -> measurements [K x D], inference mode.
Tensor encode(const Tensor& tokens, const FeedForward& ffn);

}  // namespace skolr
