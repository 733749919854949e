#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "skolr/autodiff.hpp"
#include "skolr/koopman.hpp"
#include "skolr/spectral_encoder.hpp"
#include "skolr/tensor.hpp"

namespace skolr {

class Rng;

struct ModelConfig {
    std::size_t lookback = 96;   // L
    std::size_t horizon = 48;    // T
    std::size_t branches = 2;    // N
    std::size_t dynamic_dim = 64;  // D
    std::size_t ffn_layers = 1;  // M
    std::size_t patch = 16;      // P
    double dropout = 0.0;
    std::size_t channels = 1;    // C

    std::size_t hidden() const { return 2 * dynamic_dim; }
    std::size_t tokens() const { return lookback / patch; }
    std::size_t rollout_steps() const { return horizon / patch; }
    std::size_t gate_bins() const { return lookback / 2 + 1; }

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;
    /// Canonical "key=value;..." text; the basis of the config hash.
    std::string canonical() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Patch length L/6 when integral; otherwise ConfigError asking for an explicit divisor.
std::size_t default_patch(std::size_t lookback);

/// FNV-1a 64 over arbitrary text, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& text);
std::string config_hash(const ModelConfig& cfg);

struct BranchParams {
    Tensor gate;  // gate_bins logits
    FeedForward encoder;
    TransitionMatrix transition;
    FeedForward decoder;
};

struct SkolrParams {
    std::vector<BranchParams> branches;

    /// Zero gate logits, PyTorch-style uniform FFN init, orthogonal*0.99 transitions.
    static SkolrParams initialize(const ModelConfig& cfg, Rng& rng);

    /// Stable parameter naming, e.g. "branch0.encoder.1.weight".
    std::vector<std::pair<std::string, Tensor*>> named();
    std::vector<std::pair<std::string, const Tensor*>> named() const;
    std::size_t parameter_count() const;
    GateBank gate_bank() const;
};

/// Closed-form count: N*(L/2+1) + N*ffn(P->H..->D) + N*D^2 + N*ffn(D->H..->P).
std::size_t expected_parameter_count(const ModelConfig& cfg);

struct NormState {
    static constexpr double epsilon = 1e-5;
    std::vector<double> mean;
    std::vector<double> stdev;  // sqrt(population variance + epsilon)
};

std::pair<Tensor, NormState> instance_norm(const Tensor& window);
Tensor denormalize(const Tensor& pred, const NormState& state);

/// Tape-bound view of the parameters.
struct BranchVars {
    ad::Var gate;
    std::vector<DenseLayerVars> encoder;
    ad::Var transition;
    std::vector<DenseLayerVars> decoder;
};
std::vector<BranchVars> bind(ad::Tape& tape, const SkolrParams& params, bool trainable);

struct BatchOutput {
    ad::Var combined;                 // [B x steps*P], normalized units
    std::vector<ad::Var> per_branch;  // same shape, one per branch; sum == combined
    std::size_t transition_steps = 0;  // W_n applications past h_L, per branch and sample
};

/// Channel-independent pipeline on instance-normalized univariate windows [B x L].
BatchOutput forward_normalized(ad::Var inputs, const std::vector<BranchVars>& vars, const ModelConfig& cfg,
                               std::size_t rollout_steps, bool training, Rng* rng);

/// Per-row instance statistics of univariate windows [B x L].
NormState row_statistics(const Tensor& windows);
Tensor normalize_rows(const Tensor& windows, const NormState& state);

/// Denormalized predictions [B x horizon] and mean-square loss against targets [B x horizon].
struct BatchLoss {
    ad::Var prediction;
    ad::Var loss;
};
BatchLoss batch_loss(ad::Tape& tape, const std::vector<BranchVars>& vars, const ModelConfig& cfg, const Tensor& windows,
                     const Tensor& targets, bool training, Rng* rng);

/// Inference on univariate windows [B x L] -> [B x horizon] in the windows' units.
Tensor predict_rows(const Tensor& windows, const SkolrParams& params, const ModelConfig& cfg, std::size_t horizon);

/// Window [L x C] -> forecast [T x C]: normalize, decompose, patch, encode, scan, roll out, decode,
/// sum over branches, denormalize. Each channel is an independent sample.
Tensor forward(const Tensor& window, const SkolrParams& params, const ModelConfig& cfg, bool training = false,
               Rng* rng = nullptr);

/// forward() with horizon/P rollout steps instead of T/P. When given, `transition_applications`
/// receives the number of W_n applications made past h_L in each branch.
Tensor extend_horizon(const Tensor& window, const SkolrParams& params, const ModelConfig& cfg, std::size_t horizon,
                      std::size_t* transition_applications = nullptr);

/// Per-branch contributions [T x C] in data units; they sum to forward() (channel means split evenly).
std::vector<Tensor> branch_forecasts(const Tensor& window, const SkolrParams& params, const ModelConfig& cfg);

ad::Var mse_loss(ad::Var pred, ad::Var truth);
double mse_loss(const Tensor& pred, const Tensor& truth);

}  // namespace skolr
