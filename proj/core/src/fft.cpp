#include "skolr/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "skolr/error.hpp"

namespace skolr {

namespace {

using cd = std::complex<double>;

std::size_t smallest_factor(std::size_t n)
{
    if (n % 2 == 0) return 2;
    for (std::size_t p = 3; p * p <= n; p += 2)
        if (n % p == 0) return p;
    return n;
}

// exp(sign * 2 pi i * k / n) with k reduced modulo n first for accuracy.
cd twiddle(std::size_t k, std::size_t n, double sign)
{
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k % n) / static_cast<double>(n);
    return {std::cos(angle), std::sin(angle)};
}

void transform(const cd* in, std::size_t stride, std::size_t n, cd* out, double sign)
{
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const std::size_t p = smallest_factor(n);
    if (p == n) {
        for (std::size_t f = 0; f < n; ++f) {
            cd acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += in[k * stride] * twiddle(f * k, n, sign);
            out[f] = acc;
        }
        return;
    }
    // Split into p interleaved sub-sequences of length m, transform each, then combine.
    const std::size_t m = n / p;
    std::vector<cd> sub(n);
    for (std::size_t r = 0; r < p; ++r) transform(in + r * stride, stride * p, m, sub.data() + r * m, sign);
    for (std::size_t f = 0; f < n; ++f) {
        cd acc = 0.0;
        for (std::size_t r = 0; r < p; ++r) acc += sub[r * m + f % m] * twiddle(r * f, n, sign);
        out[f] = acc;
    }
}

}  // namespace

std::vector<cd> fft(std::span<const cd> input, bool inverse)
{
    std::vector<cd> out(input.size());
    if (input.empty()) return out;
    transform(input.data(), 1, input.size(), out.data(), inverse ? 1.0 : -1.0);
    return out;
}

ComplexSpectrum rfft(std::span<const double> signal)
{
    if (signal.empty()) throw DimensionError("rfft: empty signal");
    std::vector<cd> buffer(signal.begin(), signal.end());
    auto full = fft(buffer);
    ComplexSpectrum spectrum;
    spectrum.original_length = signal.size();
    spectrum.bins.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(half_spectrum_size(signal.size())));
    // Exact zeros where the real-input spectrum is real by symmetry.
    spectrum.bins.front().imag(0.0);
    if (signal.size() % 2 == 0) spectrum.bins.back().imag(0.0);
    return spectrum;
}

ComplexSpectrum rfft(const Tensor& signal)
{
    if (signal.rank() != 1) throw DimensionError("rfft expects a rank-1 tensor, got " + shape_string(signal.shape()));
    return rfft(signal.values());
}

Tensor irfft(const ComplexSpectrum& spectrum)
{
    const std::size_t n = spectrum.original_length;
    if (n == 0) throw FormatError("irfft: original_length must be positive");
    if (spectrum.bins.size() != half_spectrum_size(n))
        throw FormatError("irfft: " + std::to_string(spectrum.bins.size()) + " bins inconsistent with length " +
                          std::to_string(n) + " (expected " + std::to_string(half_spectrum_size(n)) + ")");
    std::vector<cd> full(n);
    for (std::size_t f = 0; f < spectrum.bins.size(); ++f) full[f] = spectrum.bins[f];
    full[0].imag(0.0);
    if (n % 2 == 0) full[n / 2].imag(0.0);
    for (std::size_t f = spectrum.bins.size(); f < n; ++f) full[f] = std::conj(full[n - f]);
    auto time = fft(full, true);
    Tensor out({n});
    for (std::size_t k = 0; k < n; ++k) out[k] = time[k].real() / static_cast<double>(n);
    return out;
}

std::shared_ptr<const RealDftMatrices> real_dft_matrices(std::size_t length)
{
    static std::mutex mutex;
    static std::map<std::size_t, std::shared_ptr<const RealDftMatrices>> cache;

    if (length == 0) throw DimensionError("real_dft_matrices: length must be positive");
    std::lock_guard lock(mutex);
    if (auto it = cache.find(length); it != cache.end()) return it->second;

    const std::size_t bins = half_spectrum_size(length);
    auto m = std::make_shared<RealDftMatrices>();
    m->length = length;
    m->forward_re = Tensor({length, bins});
    m->forward_im = Tensor({length, bins});
    m->inverse_re = Tensor({bins, length});
    m->inverse_im = Tensor({bins, length});

    std::vector<double> unit(length, 0.0);
    for (std::size_t k = 0; k < length; ++k) {
        unit[k] = 1.0;
        const auto s = rfft(unit);
        for (std::size_t f = 0; f < bins; ++f) {
            m->forward_re(k, f) = s.bins[f].real();
            m->forward_im(k, f) = s.bins[f].imag();
        }
        unit[k] = 0.0;
    }
    ComplexSpectrum basis;
    basis.original_length = length;
    basis.bins.assign(bins, 0.0);
    for (std::size_t f = 0; f < bins; ++f) {
        basis.bins[f] = {1.0, 0.0};
        const Tensor re = irfft(basis);
        basis.bins[f] = {0.0, 1.0};
        const Tensor im = irfft(basis);
        basis.bins[f] = 0.0;
        for (std::size_t k = 0; k < length; ++k) {
            m->inverse_re(f, k) = re[k];
            m->inverse_im(f, k) = im[k];
        }
    }
    cache.emplace(length, m);
    return m;
}

}  // namespace skolr
