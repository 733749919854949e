#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "skolr/tensor.hpp"

namespace skolr {

/// Half spectrum of a real signal: floor(L/2)+1 bins, X[f] = sum_k x[k] exp(-2 pi i f k / L).
struct ComplexSpectrum {
    std::vector<std::complex<double>> bins;
    std::size_t original_length = 0;
};

inline std::size_t half_spectrum_size(std::size_t length) { return length / 2 + 1; }

/// Mixed-radix decimation-in-time DFT of arbitrary length; prime factors fall back to direct sums.
std::vector<std::complex<double>> fft(std::span<const std::complex<double>> input, bool inverse = false);

ComplexSpectrum rfft(std::span<const double> signal);
ComplexSpectrum rfft(const Tensor& signal);

/// Inverse of rfft. Imaginary parts of the DC and Nyquist bins are ignored.
Tensor irfft(const ComplexSpectrum& spectrum);

/// The real-linear maps behind rfft/irfft for one length, as dense matrices acting on row vectors:
///   re = x * forward_re, im = x * forward_im, x = re * inverse_re + im * inverse_im.
struct RealDftMatrices {
    std::size_t length = 0;
    Tensor forward_re;  // L x F
    Tensor forward_im;  // L x F
    Tensor inverse_re;  // F x L
    Tensor inverse_im;  // F x L
};

/// Cached per length; safe to call from several threads.
std::shared_ptr<const RealDftMatrices> real_dft_matrices(std::size_t length);

}  // namespace skolr
