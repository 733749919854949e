#include "skolr/spectral_encoder.hpp"

#include <cmath>

#include "skolr/error.hpp"
#include "skolr/fft.hpp"
#include "skolr/rng.hpp"

namespace skolr {

GateBank GateBank::zeros(std::size_t branches, std::size_t window_length)
{
    if (branches == 0) throw ConfigError("gate bank needs at least one branch");
    GateBank bank;
    bank.logits.assign(branches, Tensor({half_spectrum_size(window_length)}));
    return bank;
}

std::size_t GateBank::bins() const { return logits.empty() ? 0 : logits.front().size(); }

void GateBank::validate() const
{
    if (logits.empty()) throw ConfigError("gate bank needs at least one branch");
    for (const auto& g : logits)
        if (g.rank() != 1 || g.size() != bins())
            throw DimensionError("gate vectors must share one length, got " + shape_string(g.shape()));
}

FeedForward FeedForward::create(std::size_t input, std::size_t hidden, std::size_t output, std::size_t depth,
                                Rng& rng)
{
    if (depth == 0) throw ConfigError("feed-forward depth must be at least 1");
    FeedForward ffn;
    std::size_t in = input;
    for (std::size_t layer = 0; layer <= depth; ++layer) {
        const std::size_t out = layer == depth ? output : hidden;
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        DenseLayer d{Tensor({in, out}), Tensor({out})};
        for (double& w : d.weight.storage()) w = rng.uniform(-bound, bound);
        for (double& b : d.bias.storage()) b = rng.uniform(-bound, bound);
        ffn.layers.push_back(std::move(d));
        in = out;
    }
    return ffn;
}

std::size_t FeedForward::parameter_count(std::size_t input, std::size_t hidden, std::size_t output, std::size_t depth)
{
    return (input * hidden + hidden) + (depth - 1) * (hidden * hidden + hidden) + (hidden * output + output);
}

std::size_t FeedForward::input_width() const { return layers.empty() ? 0 : layers.front().weight.rows(); }
std::size_t FeedForward::output_width() const { return layers.empty() ? 0 : layers.back().weight.cols(); }

ad::Var gate_spectrum(ad::Var signals, ad::Var logits)
{
    const std::size_t length = signals.value().cols();
    if (logits.value().size() != half_spectrum_size(length))
        throw DimensionError("gate length " + std::to_string(logits.value().size()) + " does not match window length " +
                             std::to_string(length) + " (expected " + std::to_string(half_spectrum_size(length)) +
                             " bins)");
    const auto dft = real_dft_matrices(length);
    ad::Tape& tape = *signals.tape;
    const ad::Var re = ad::matmul(signals, tape.constant(dft->forward_re));
    const ad::Var im = ad::matmul(signals, tape.constant(dft->forward_im));
    const ad::Var gate = ad::sigmoid(logits);
    return ad::add(ad::matmul(ad::mul_row(re, gate), tape.constant(dft->inverse_re)),
                   ad::matmul(ad::mul_row(im, gate), tape.constant(dft->inverse_im)));
}

std::vector<Tensor> decompose(const Tensor& window, const GateBank& gates)
{
    gates.validate();
    if (window.rank() != 1) throw DimensionError("decompose expects a rank-1 window, got " + shape_string(window.shape()));
    ad::Tape tape;
    const ad::Var x = tape.constant(window.reshaped({1, window.size()}));
    std::vector<Tensor> out;
    for (const auto& g : gates.logits) {
        const ad::Var y = gate_spectrum(x, tape.constant(g));
        out.push_back(y.value().reshaped({window.size()}));
    }
    return out;
}

std::vector<std::size_t> divisors(std::size_t n)
{
    std::vector<std::size_t> out;
    for (std::size_t d = 1; d <= n; ++d)
        if (n % d == 0) out.push_back(d);
    return out;
}

namespace {

std::string join(const std::vector<std::size_t>& values)
{
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + std::to_string(values[i]);
    return s;
}

}  // namespace

Tensor patchify(const Tensor& signal, std::size_t patch)
{
    if (signal.rank() != 1) throw DimensionError("patchify expects a rank-1 signal, got " + shape_string(signal.shape()));
    const std::size_t length = signal.size();
    if (patch == 0 || length % patch != 0)
        throw ConfigError("patch length " + std::to_string(patch) + " does not divide signal length " +
                          std::to_string(length) + "; valid choices: " + join(divisors(length)));
    return signal.reshaped({length / patch, patch});
}

Tensor unpatchify(const Tensor& tokens)
{
    if (tokens.rank() != 2) throw DimensionError("unpatchify expects [K x P] tokens, got " + shape_string(tokens.shape()));
    return tokens.reshaped({tokens.size()});
}

ad::Var feed_forward(ad::Var x, const std::vector<DenseLayerVars>& layers, double dropout, Rng* rng)
{
    if (layers.empty()) throw ContractError("feed_forward: no layers");
    if (x.value().cols() != layers.front().weight.value().rows())
        throw DimensionError("feed_forward: input " + shape_string(x.shape()) + " does not match first layer " +
                             shape_string(layers.front().weight.shape()));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        x = ad::add_row(ad::matmul(x, layers[l].weight), layers[l].bias);
        if (l + 1 < layers.size()) {
            x = ad::relu(x);
            if (dropout > 0.0) {
                if (!rng) throw ContractError("feed_forward: dropout requires a random generator");
                x = ad::dropout(x, dropout, *rng);
            }
        }
    }
    return x;
}

std::vector<DenseLayerVars> bind(ad::Tape& tape, const FeedForward& ffn, bool trainable)
{
    std::vector<DenseLayerVars> vars;
    for (const auto& l : ffn.layers) {
        if (trainable)
            vars.push_back({tape.variable(l.weight), tape.variable(l.bias)});
        else
            vars.push_back({tape.constant(l.weight), tape.constant(l.bias)});
    }
    return vars;
}

Tensor encode(const Tensor& tokens, const FeedForward& ffn)
{
    if (tokens.rank() != 2 || tokens.cols() != ffn.input_width())
        throw DimensionError("encode: token shape " + shape_string(tokens.shape()) + " does not match FFN input width " +
                             std::to_string(ffn.input_width()));
    ad::Tape tape;
    return feed_forward(tape.constant(tokens), bind(tape, ffn, false)).value();
}

}  // namespace skolr
