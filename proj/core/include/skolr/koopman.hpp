#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "skolr/tensor.hpp"

namespace skolr {

class Rng;

/// Square state-transition block W_n of one branch (the finite Koopman block M_n).
struct TransitionMatrix {
    Tensor weights;

    TransitionMatrix() = default;
    explicit TransitionMatrix(Tensor w);
    std::size_t dim() const { return weights.rows(); }

    /// Random orthogonal matrix times `scale` (Householder QR of a Gaussian matrix).
    static TransitionMatrix scaled_orthogonal(std::size_t dim, double scale, Rng& rng);
};

/// Column convention: h_k = W h_{k-1} + z_k over the rows of Z [K x D]; returns all K states.
Tensor rnn_scan(const Tensor& inputs, const TransitionMatrix& w, const std::optional<Tensor>& initial = std::nullopt);

/// h_k = sum_{s=0}^{k-1} W^s z_{k-s} from precomputed powers; same contract as rnn_scan with h_0 = 0.
Tensor rnn_closed_form(const Tensor& inputs, const TransitionMatrix& w);

/// Row t-1 is W^t h_L, t = 1..steps, by repeated matrix-vector products.
Tensor rollout(const Tensor& last_state, const TransitionMatrix& w, std::size_t steps);

Tensor assemble_block_diagonal(std::span<const TransitionMatrix> blocks);

struct SpectrumReport {
    std::size_t branch = 0;
    std::vector<std::complex<double>> eigenvalues;  // sorted by magnitude, descending
    std::vector<double> magnitudes;

    double spectral_radius() const { return magnitudes.empty() ? 0.0 : magnitudes.front(); }
};

/// Full complex spectrum; throws NumericError when the QR iteration does not converge.
SpectrumReport eigenvalues(const TransitionMatrix& w, std::size_t branch = 0);

/// CSV with columns branch,re,im,magnitude.
void write_spectrum_csv(std::ostream& out, std::span<const SpectrumReport> reports);

struct EdmdFit {
    Tensor op;  // n_g x n_g, next ≈ prev * op
    std::size_t rank = 0;
    bool rank_deficient = false;
};

/// Least-squares operator with snapshots as rows: argmin ||prev M - next||_F^2 + lambda ||M||_F^2.
/// lambda = 0 uses the Moore-Penrose pseudoinverse of prev.
EdmdFit edmd_fit(const Tensor& prev, const Tensor& next, double lambda);

}  // namespace skolr
