#include "skolr/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "skolr/error.hpp"
#include "skolr/rng.hpp"

namespace skolr {

namespace {

void check_inputs(const char* op, const Tensor& inputs, const TransitionMatrix& w)
{
    if (inputs.rank() != 2 || inputs.cols() != w.dim())
        throw DimensionError(std::string(op) + ": inputs " + shape_string(inputs.shape()) + " vs transition " +
                             shape_string(w.weights.shape()));
}

}  // namespace

TransitionMatrix::TransitionMatrix(Tensor w) : weights(std::move(w))
{
    if (weights.rank() != 2 || weights.rows() != weights.cols())
        throw DimensionError("transition matrix must be square, got " + shape_string(weights.shape()));
}

TransitionMatrix TransitionMatrix::scaled_orthogonal(std::size_t dim, double scale, Rng& rng)
{
    RowMatrix g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Sign fix makes the draw uniform over the orthogonal group.
    for (Eigen::Index j = 0; j < q.cols(); ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return TransitionMatrix(from_matrix(q * scale));
}

Tensor rnn_scan(const Tensor& inputs, const TransitionMatrix& w, const std::optional<Tensor>& initial)
{
    check_inputs("rnn_scan", inputs, w);
    const std::size_t steps = inputs.rows(), dim = w.dim();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    if (initial) {
        if (initial->size() != dim)
            throw DimensionError("rnn_scan: initial state " + shape_string(initial->shape()) + " vs width " +
                                 std::to_string(dim));
        for (std::size_t i = 0; i < dim; ++i) h[static_cast<Eigen::Index>(i)] = (*initial)[i];
    }
    const auto wm = as_matrix(w.weights);
    Tensor out({steps, dim});
    for (std::size_t k = 0; k < steps; ++k) {
        Eigen::VectorXd next = wm * h;
        for (std::size_t i = 0; i < dim; ++i) next[static_cast<Eigen::Index>(i)] += inputs(k, i);
        h = std::move(next);
        for (std::size_t i = 0; i < dim; ++i) out(k, i) = h[static_cast<Eigen::Index>(i)];
    }
    return out;
}

Tensor rnn_closed_form(const Tensor& inputs, const TransitionMatrix& w)
{
    check_inputs("rnn_closed_form", inputs, w);
    const std::size_t steps = inputs.rows(), dim = w.dim();
    const auto wm = as_matrix(w.weights);
    std::vector<RowMatrix> powers;
    powers.reserve(steps);
    powers.push_back(RowMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
    for (std::size_t s = 1; s < steps; ++s) powers.push_back(wm * powers.back());

    const auto z = as_matrix(inputs);
    Tensor out({steps, dim});
    auto h = as_matrix(out);
    for (std::size_t k = 0; k < steps; ++k)
        for (std::size_t s = 0; s <= k; ++s)
            h.row(static_cast<Eigen::Index>(k)).noalias() +=
                z.row(static_cast<Eigen::Index>(k - s)) * powers[s].transpose();
    return out;
}

Tensor rollout(const Tensor& last_state, const TransitionMatrix& w, std::size_t steps)
{
    if (steps == 0) throw ConfigError("rollout: steps must be positive");
    const std::size_t dim = w.dim();
    if (last_state.size() != dim)
        throw DimensionError("rollout: state " + shape_string(last_state.shape()) + " vs transition " +
                             shape_string(w.weights.shape()));
    const auto wm = as_matrix(w.weights);
    Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(last_state.storage().data(), static_cast<Eigen::Index>(dim));
    Tensor out({steps, dim});
    for (std::size_t t = 0; t < steps; ++t) {
        h = wm * h;
        for (std::size_t i = 0; i < dim; ++i) out(t, i) = h[static_cast<Eigen::Index>(i)];
    }
    return out;
}

Tensor assemble_block_diagonal(std::span<const TransitionMatrix> blocks)
{
    if (blocks.empty()) throw DimensionError("assemble_block_diagonal: no blocks");
    const std::size_t d = blocks.front().dim();
    for (const auto& b : blocks)
        if (b.weights.rank() != 2 || b.weights.rows() != d || b.weights.cols() != d)
            throw DimensionError("assemble_block_diagonal: block " + shape_string(b.weights.shape()) +
                                 " differs from width " + std::to_string(d));
    const std::size_t n = blocks.size() * d;
    Tensor out({n, n});
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) out(b * d + i, b * d + j) = blocks[b].weights(i, j);
    return out;
}

SpectrumReport eigenvalues(const TransitionMatrix& w, std::size_t branch)
{
    const Eigen::Index d = static_cast<Eigen::Index>(w.dim());
    SpectrumReport report;
    report.branch = branch;
    if (d == 0) return report;

    Eigen::EigenSolver<Eigen::MatrixXd> solver;
    const Eigen::Index cap = std::max<Eigen::Index>(10 * d * d, 40);
    solver.setMaxIterations(cap);
    solver.compute(Eigen::MatrixXd(as_matrix(w.weights)), false);
    if (solver.info() != Eigen::Success)
        throw NumericError("eigenvalue iteration did not converge within " + std::to_string(cap) + " iterations");

    const auto& ev = solver.eigenvalues();
    report.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    std::stable_sort(report.eigenvalues.begin(), report.eigenvalues.end(),
                     [](const std::complex<double>& a, const std::complex<double>& b) {
                         const double ma = std::abs(a), mb = std::abs(b);
                         if (ma != mb) return ma > mb;
                         if (a.real() != b.real()) return a.real() > b.real();
                         return a.imag() > b.imag();
                     });
    for (const auto& l : report.eigenvalues) report.magnitudes.push_back(std::hypot(l.real(), l.imag()));
    return report;
}

void write_spectrum_csv(std::ostream& out, std::span<const SpectrumReport> reports)
{
    out << "branch,re,im,magnitude\n";
    out.precision(17);
    for (const auto& r : reports)
        for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
            out << r.branch << ',' << r.eigenvalues[i].real() << ',' << r.eigenvalues[i].imag() << ','
                << r.magnitudes[i] << '\n';
}

EdmdFit edmd_fit(const Tensor& prev, const Tensor& next, double lambda)
{
    if (prev.rank() != 2 || next.rank() != 2 || prev.rows() != next.rows())
        throw DimensionError("edmd_fit: snapshot shapes " + shape_string(prev.shape()) + " and " +
                             shape_string(next.shape()) + " must share a row count");
    if (!(lambda >= 0.0)) throw ConfigError("edmd_fit: lambda must be non-negative");

    const Eigen::MatrixXd p = as_matrix(prev);
    const Eigen::MatrixXd y = as_matrix(next);
    EdmdFit fit;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(p);
    fit.rank = static_cast<std::size_t>(cod.rank());
    fit.rank_deficient = fit.rank < static_cast<std::size_t>(p.cols());
    if (lambda == 0.0) {
        fit.op = from_matrix(cod.pseudoInverse() * y);
    } else {
        const Eigen::MatrixXd gram =
            p.transpose() * p + lambda * Eigen::MatrixXd::Identity(p.cols(), p.cols());
        fit.op = from_matrix(gram.ldlt().solve(p.transpose() * y));
    }
    return fit;
}

}  // namespace skolr
