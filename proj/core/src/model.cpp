#include "skolr/model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "skolr/error.hpp"
#include "skolr/rng.hpp"

namespace skolr {

void ModelConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (lookback < 2) fail("lookback L must be at least 2");
    if (horizon < 1) fail("horizon T must be positive");
    if (branches < 1) fail("branch count N must be at least 1");
    if (dynamic_dim < 1) fail("dynamic dimension D must be at least 1");
    if (ffn_layers < 1 || ffn_layers > 3) fail("FFN depth M must be 1, 2 or 3");
    if (channels < 1) fail("channel count must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
    if (patch == 0 || lookback % patch != 0 || horizon % patch != 0) {
        std::string valid;
        for (std::size_t d : divisors(lookback))
            if (horizon % d == 0) valid += (valid.empty() ? "" : ", ") + std::to_string(d);
        fail("patch length P=" + std::to_string(patch) + " must divide both L=" + std::to_string(lookback) +
             " and T=" + std::to_string(horizon) + "; valid choices: " + valid);
    }
}

std::string ModelConfig::canonical() const
{
    char dropout_text[32];
    std::snprintf(dropout_text, sizeof dropout_text, "%.17g", dropout);
    std::ostringstream s;
    s << "L=" << lookback << ";T=" << horizon << ";N=" << branches << ";D=" << dynamic_dim << ";M=" << ffn_layers
      << ";P=" << patch << ";dropout=" << dropout_text << ";C=" << channels;
    return s.str();
}

std::size_t default_patch(std::size_t lookback)
{
    if (lookback % 6 != 0 || lookback == 0)
        throw ConfigError("default patch length L/6 is not an integer for L=" + std::to_string(lookback) +
                          "; pass an explicit patch length dividing L");
    return lookback / 6;
}

std::string fnv1a_hex(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const ModelConfig& cfg) { return fnv1a_hex(cfg.canonical()); }

SkolrParams SkolrParams::initialize(const ModelConfig& cfg, Rng& rng)
{
    cfg.validate();
    SkolrParams params;
    for (std::size_t n = 0; n < cfg.branches; ++n) {
        BranchParams b;
        b.gate = Tensor({cfg.gate_bins()});
        b.encoder = FeedForward::create(cfg.patch, cfg.hidden(), cfg.dynamic_dim, cfg.ffn_layers, rng);
        b.transition = TransitionMatrix::scaled_orthogonal(cfg.dynamic_dim, 0.99, rng);
        b.decoder = FeedForward::create(cfg.dynamic_dim, cfg.hidden(), cfg.patch, cfg.ffn_layers, rng);
        params.branches.push_back(std::move(b));
    }
    return params;
}

namespace {

template <typename Self, typename Ptr>
std::vector<std::pair<std::string, Ptr>> collect(Self& self)
{
    std::vector<std::pair<std::string, Ptr>> out;
    for (std::size_t n = 0; n < self.branches.size(); ++n) {
        auto& b = self.branches[n];
        const std::string prefix = "branch" + std::to_string(n) + ".";
        out.emplace_back(prefix + "gate", &b.gate);
        for (std::size_t l = 0; l < b.encoder.layers.size(); ++l) {
            out.emplace_back(prefix + "encoder." + std::to_string(l) + ".weight", &b.encoder.layers[l].weight);
            out.emplace_back(prefix + "encoder." + std::to_string(l) + ".bias", &b.encoder.layers[l].bias);
        }
        out.emplace_back(prefix + "transition", &b.transition.weights);
        for (std::size_t l = 0; l < b.decoder.layers.size(); ++l) {
            out.emplace_back(prefix + "decoder." + std::to_string(l) + ".weight", &b.decoder.layers[l].weight);
            out.emplace_back(prefix + "decoder." + std::to_string(l) + ".bias", &b.decoder.layers[l].bias);
        }
    }
    return out;
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> SkolrParams::named() { return collect<SkolrParams, Tensor*>(*this); }

std::vector<std::pair<std::string, const Tensor*>> SkolrParams::named() const
{
    return collect<const SkolrParams, const Tensor*>(*this);
}

std::size_t SkolrParams::parameter_count() const
{
    std::size_t total = 0;
    for (const auto& [name, t] : named()) total += t->size();
    return total;
}

GateBank SkolrParams::gate_bank() const
{
    GateBank bank;
    for (const auto& b : branches) bank.logits.push_back(b.gate);
    return bank;
}

std::size_t expected_parameter_count(const ModelConfig& cfg)
{
    const std::size_t n = cfg.branches, d = cfg.dynamic_dim, h = cfg.hidden(), m = cfg.ffn_layers, p = cfg.patch;
    return n * cfg.gate_bins() + n * FeedForward::parameter_count(p, h, d, m) + n * d * d +
           n * FeedForward::parameter_count(d, h, p, m);
}

std::pair<Tensor, NormState> instance_norm(const Tensor& window)
{
    if (window.rank() != 2) throw DimensionError("instance_norm expects [L x C], got " + shape_string(window.shape()));
    const Tensor by_channel = window.transposed();
    NormState state = row_statistics(by_channel);
    return {normalize_rows(by_channel, state).transposed(), std::move(state)};
}

Tensor denormalize(const Tensor& pred, const NormState& state)
{
    if (pred.rank() != 2 || pred.cols() != state.mean.size() || state.stdev.size() != state.mean.size())
        throw DimensionError("denormalize: prediction " + shape_string(pred.shape()) + " vs " +
                             std::to_string(state.mean.size()) + " channel statistics");
    Tensor out = pred;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = out(r, c) * state.stdev[c] + state.mean[c];
    return out;
}

NormState row_statistics(const Tensor& windows)
{
    if (windows.rank() != 2 || windows.cols() < 2)
        throw DimensionError("instance statistics need windows of length >= 2, got " + shape_string(windows.shape()));
    NormState state;
    const std::size_t rows = windows.rows(), len = windows.cols();
    state.mean.resize(rows);
    state.stdev.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double mean = 0.0;
        for (std::size_t k = 0; k < len; ++k) mean += windows(r, k);
        mean /= static_cast<double>(len);
        double var = 0.0;
        for (std::size_t k = 0; k < len; ++k) {
            const double d = windows(r, k) - mean;
            var += d * d;
        }
        var /= static_cast<double>(len);
        state.mean[r] = mean;
        state.stdev[r] = std::sqrt(var + NormState::epsilon);
    }
    return state;
}

Tensor normalize_rows(const Tensor& windows, const NormState& state)
{
    Tensor out = windows;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t k = 0; k < out.cols(); ++k) out(r, k) = (out(r, k) - state.mean[r]) / state.stdev[r];
    return out;
}

std::vector<BranchVars> bind(ad::Tape& tape, const SkolrParams& params, bool trainable)
{
    auto leaf = [&](const Tensor& t) { return trainable ? tape.variable(t) : tape.constant(t); };
    std::vector<BranchVars> vars;
    for (const auto& b : params.branches) {
        BranchVars v;
        v.gate = leaf(b.gate);
        v.encoder = bind(tape, b.encoder, trainable);
        v.transition = leaf(b.transition.weights);
        v.decoder = bind(tape, b.decoder, trainable);
        vars.push_back(std::move(v));
    }
    return vars;
}

BatchOutput forward_normalized(ad::Var inputs, const std::vector<BranchVars>& vars, const ModelConfig& cfg,
                               std::size_t rollout_steps, bool training, Rng* rng)
{
    const Tensor& x = inputs.value();
    if (x.rank() != 2 || x.cols() != cfg.lookback)
        throw DimensionError("model input " + shape_string(x.shape()) + " does not match lookback L=" +
                             std::to_string(cfg.lookback));
    if (vars.size() != cfg.branches)
        throw DimensionError("parameter set has " + std::to_string(vars.size()) + " branches, config expects " +
                             std::to_string(cfg.branches));
    if (rollout_steps == 0) throw ConfigError("rollout needs at least one step");

    const std::size_t batch = x.rows(), tokens = cfg.tokens(), patch = cfg.patch;
    const double rate = training ? cfg.dropout : 0.0;
    std::vector<std::size_t> last_rows(batch);
    for (std::size_t b = 0; b < batch; ++b) last_rows[b] = b * tokens + tokens - 1;

    BatchOutput out;
    for (const auto& v : vars) {
        const ad::Var branch_signal = gate_spectrum(inputs, v.gate);
        const ad::Var patches = ad::reshape(branch_signal, {batch * tokens, patch});
        const ad::Var z = feed_forward(patches, v.encoder, rate, rng);
        const ad::Var states = ad::linear_scan(z, v.transition, tokens);
        const ad::Var last = ad::gather_rows(states, last_rows);
        const ad::Var future = ad::linear_rollout(last, v.transition, rollout_steps);
        out.transition_steps = future.value().rows() / batch;
        const ad::Var decoded = feed_forward(future, v.decoder, rate, rng);
        out.per_branch.push_back(ad::reshape(decoded, {batch, rollout_steps * patch}));
    }
    out.combined = out.per_branch.front();
    for (std::size_t n = 1; n < out.per_branch.size(); ++n) out.combined = ad::add(out.combined, out.per_branch[n]);
    return out;
}

BatchLoss batch_loss(ad::Tape& tape, const std::vector<BranchVars>& vars, const ModelConfig& cfg, const Tensor& windows,
                     const Tensor& targets, bool training, Rng* rng)
{
    if (targets.rank() != 2 || targets.rows() != windows.rows() || targets.cols() != cfg.horizon)
        throw DimensionError("targets " + shape_string(targets.shape()) + " do not match " +
                             std::to_string(windows.rows()) + " windows of horizon " + std::to_string(cfg.horizon));
    const NormState state = row_statistics(windows);
    const ad::Var inputs = tape.constant(normalize_rows(windows, state));
    const BatchOutput out = forward_normalized(inputs, vars, cfg, cfg.rollout_steps(), training, rng);
    const ad::Var pred = ad::affine_rows(out.combined, state.stdev, state.mean);
    return {pred, ad::mean_square_error(pred, tape.constant(targets))};
}

Tensor predict_rows(const Tensor& windows, const SkolrParams& params, const ModelConfig& cfg, std::size_t horizon)
{
    if (horizon == 0 || horizon % cfg.patch != 0)
        throw ConfigError("forecast horizon " + std::to_string(horizon) + " must be a positive multiple of P=" +
                          std::to_string(cfg.patch));
    ad::Tape tape;
    const NormState state = row_statistics(windows);
    const auto vars = bind(tape, params, false);
    const BatchOutput out =
        forward_normalized(tape.constant(normalize_rows(windows, state)), vars, cfg, horizon / cfg.patch, false, nullptr);
    return ad::affine_rows(out.combined, state.stdev, state.mean).value();
}

namespace {

Tensor window_rows(const Tensor& window, const ModelConfig& cfg)
{
    if (window.rank() != 2 || window.rows() != cfg.lookback)
        throw DimensionError("window " + shape_string(window.shape()) + " does not match lookback L=" +
                             std::to_string(cfg.lookback));
    if (window.cols() != cfg.channels)
        throw DimensionError("window has " + std::to_string(window.cols()) + " channels, config expects " +
                             std::to_string(cfg.channels));
    return window.transposed();
}

}  // namespace

Tensor forward(const Tensor& window, const SkolrParams& params, const ModelConfig& cfg, bool training, Rng* rng)
{
    if (!training) return predict_rows(window_rows(window, cfg), params, cfg, cfg.horizon).transposed();
    ad::Tape tape;
    const Tensor rows = window_rows(window, cfg);
    const NormState state = row_statistics(rows);
    const auto vars = bind(tape, params, false);
    const BatchOutput out =
        forward_normalized(tape.constant(normalize_rows(rows, state)), vars, cfg, cfg.rollout_steps(), true, rng);
    return ad::affine_rows(out.combined, state.stdev, state.mean).value().transposed();
}

Tensor extend_horizon(const Tensor& window, const SkolrParams& params, const ModelConfig& cfg, std::size_t horizon,
                      std::size_t* transition_applications)
{
    if (horizon == 0 || horizon % cfg.patch != 0)
        throw ConfigError("extended horizon " + std::to_string(horizon) + " is not a multiple of P=" +
                          std::to_string(cfg.patch));
    const Tensor rows = window_rows(window, cfg);
    ad::Tape tape;
    const NormState state = row_statistics(rows);
    const auto vars = bind(tape, params, false);
    const BatchOutput out =
        forward_normalized(tape.constant(normalize_rows(rows, state)), vars, cfg, horizon / cfg.patch, false, nullptr);
    if (transition_applications) *transition_applications = out.transition_steps;
    return ad::affine_rows(out.combined, state.stdev, state.mean).value().transposed();
}

std::vector<Tensor> branch_forecasts(const Tensor& window, const SkolrParams& params, const ModelConfig& cfg)
{
    const Tensor rows = window_rows(window, cfg);
    ad::Tape tape;
    const NormState state = row_statistics(rows);
    const auto vars = bind(tape, params, false);
    const BatchOutput out =
        forward_normalized(tape.constant(normalize_rows(rows, state)), vars, cfg, cfg.rollout_steps(), false, nullptr);
    const double share = 1.0 / static_cast<double>(cfg.branches);
    std::vector<double> shifted(state.mean);
    for (double& m : shifted) m *= share;
    std::vector<Tensor> result;
    for (const auto& b : out.per_branch) result.push_back(ad::affine_rows(b, state.stdev, shifted).value().transposed());
    return result;
}

ad::Var mse_loss(ad::Var pred, ad::Var truth) { return ad::mean_square_error(pred, truth); }

double mse_loss(const Tensor& pred, const Tensor& truth)
{
    if (!pred.same_shape(truth))
        throw DimensionError("mse_loss shape mismatch: " + shape_string(pred.shape()) + " vs " +
                             shape_string(truth.shape()));
    if (pred.size() == 0) throw DimensionError("mse_loss: empty operands");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

}  // namespace skolr
