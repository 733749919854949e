#include "skolr/autodiff.hpp"

#include <cmath>

#include "skolr/error.hpp"
#include "skolr/rng.hpp"

namespace skolr::ad {

namespace {

using StridedView = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedView = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

// Rows {k, k + steps, k + 2*steps, ...} of an (groups*steps) x width buffer.
StridedView step_rows(double* base, std::size_t k, std::size_t groups, std::size_t steps, std::size_t width)
{
    return StridedView(base + k * width, static_cast<Eigen::Index>(groups), static_cast<Eigen::Index>(width),
                       Eigen::OuterStride<>(static_cast<Eigen::Index>(steps * width)));
}

ConstStridedView step_rows(const double* base, std::size_t k, std::size_t groups, std::size_t steps,
                           std::size_t width)
{
    return ConstStridedView(base + k * width, static_cast<Eigen::Index>(groups), static_cast<Eigen::Index>(width),
                            Eigen::OuterStride<>(static_cast<Eigen::Index>(steps * width)));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b)
{
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
}

void require_matrix(const char* op, const Tensor& t)
{
    if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

void require_row_vector(const char* op, const Tensor& x, const Tensor& v)
{
    require_matrix(op, x);
    if (v.size() != x.cols())
        throw DimensionError(std::string(op) + ": vector " + shape_string(v.shape()) + " does not match columns of " +
                             shape_string(x.shape()));
}

void check_tape(Var a, Var b)
{
    if (a.tape != b.tape) throw ContractError("operands recorded on different tapes");
}

}  // namespace

const Tensor& Var::value() const { return tape->node(id).value; }
const Tensor& Var::grad() const { return tape->grad(id); }

Var Tape::constant(Tensor value)
{
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::variable(Tensor value)
{
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, const char* op,
                 std::function<void(Tape&, const Node&)> backward)
{
    Node n;
    n.value = std::move(value);
    for (std::size_t p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
    n.parents = std::move(parents);
    n.op = op;
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_slot(std::size_t id)
{
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) n.grad = Tensor::zeros(n.value.shape());
    return n.grad;
}

const Tensor& Tape::grad(std::size_t id) const
{
    const Node& n = nodes_[id];
    if (n.grad.shape() != n.value.shape())
        throw ContractError("gradient requested for a node that received none (op " + std::string(n.op) + ")");
    return n.grad;
}

void Tape::backward(Var loss)
{
    if (loss.tape != this) throw ContractError("backward: loss belongs to another tape");
    const Node& root = nodes_[loss.id];
    if (root.value.size() != 1)
        throw ContractError("backward: loss must be scalar, got shape " + shape_string(root.value.shape()));
    if (!root.requires_grad) throw ContractError("backward: loss does not depend on any variable");
    for (auto& n : nodes_) n.grad = Tensor();
    grad_slot(loss.id)[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        const Node& n = nodes_[i];
        if (!n.requires_grad || !n.backward || n.grad.shape() != n.value.shape()) continue;
        n.backward(*this, n);
    }
}

Var matmul(Var a, Var b)
{
    check_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_matrix("matmul", av);
    require_matrix("matmul", bv);
    Tensor out = skolr::matmul(av, bv);
    return a.tape->record(std::move(out), {a.id, b.id}, "matmul", [](Tape& t, const Tape::Node& n) {
        const auto g = as_matrix(n.grad);
        const std::size_t ia = n.parents[0], ib = n.parents[1];
        if (t.requires_grad(ia)) as_matrix(t.grad_slot(ia)).noalias() += g * as_matrix(t.node(ib).value).transpose();
        if (t.requires_grad(ib)) as_matrix(t.grad_slot(ib)).noalias() += as_matrix(t.node(ia).value).transpose() * g;
    });
}

Var add(Var a, Var b)
{
    check_tape(a, b);
    require_same_shape("add", a.value(), b.value());
    Tensor out = skolr::add(a.value(), b.value());
    return a.tape->record(std::move(out), {a.id, b.id}, "add", [](Tape& t, const Tape::Node& n) {
        for (std::size_t p : n.parents) {
            if (!t.requires_grad(p)) continue;
            Tensor& g = t.grad_slot(p);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
    });
}

Var subtract(Var a, Var b)
{
    check_tape(a, b);
    require_same_shape("subtract", a.value(), b.value());
    Tensor out = skolr::subtract(a.value(), b.value());
    return a.tape->record(std::move(out), {a.id, b.id}, "subtract", [](Tape& t, const Tape::Node& n) {
        if (t.requires_grad(n.parents[0])) {
            Tensor& g = t.grad_slot(n.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (t.requires_grad(n.parents[1])) {
            Tensor& g = t.grad_slot(n.parents[1]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
        }
    });
}

Var mul(Var a, Var b)
{
    check_tape(a, b);
    require_same_shape("mul", a.value(), b.value());
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    return a.tape->record(std::move(out), {a.id, b.id}, "mul", [](Tape& t, const Tape::Node& n) {
        const std::size_t ia = n.parents[0], ib = n.parents[1];
        if (t.requires_grad(ia)) {
            Tensor& g = t.grad_slot(ia);
            const Tensor& other = t.node(ib).value;
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * other[i];
        }
        if (t.requires_grad(ib)) {
            Tensor& g = t.grad_slot(ib);
            const Tensor& other = t.node(ia).value;
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * other[i];
        }
    });
}

Var add_row(Var x, Var bias)
{
    check_tape(x, bias);
    require_row_vector("add_row", x.value(), bias.value());
    Tensor out = x.value();
    const std::size_t cols = out.cols();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias.value()[i % cols];
    return x.tape->record(std::move(out), {x.id, bias.id}, "add_row", [cols](Tape& t, const Tape::Node& n) {
        if (t.requires_grad(n.parents[0])) {
            Tensor& g = t.grad_slot(n.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (t.requires_grad(n.parents[1])) {
            Tensor& g = t.grad_slot(n.parents[1]);
            for (std::size_t i = 0; i < n.grad.size(); ++i) g[i % cols] += n.grad[i];
        }
    });
}

Var mul_row(Var x, Var factors)
{
    check_tape(x, factors);
    require_row_vector("mul_row", x.value(), factors.value());
    Tensor out = x.value();
    const std::size_t cols = out.cols();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factors.value()[i % cols];
    return x.tape->record(std::move(out), {x.id, factors.id}, "mul_row", [cols](Tape& t, const Tape::Node& n) {
        const std::size_t ix = n.parents[0], iv = n.parents[1];
        const Tensor& xv = t.node(ix).value;
        const Tensor& fv = t.node(iv).value;
        if (t.requires_grad(ix)) {
            Tensor& g = t.grad_slot(ix);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * fv[i % cols];
        }
        if (t.requires_grad(iv)) {
            Tensor& g = t.grad_slot(iv);
            for (std::size_t i = 0; i < n.grad.size(); ++i) g[i % cols] += n.grad[i] * xv[i];
        }
    });
}

Var scale(Var x, double s)
{
    Tensor out = skolr::scale(x.value(), s);
    return x.tape->record(std::move(out), {x.id}, "scale", [s](Tape& t, const Tape::Node& n) {
        Tensor& g = t.grad_slot(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * n.grad[i];
    });
}

Var sigmoid(Var x)
{
    Tensor out = x.value();
    for (double& v : out.storage()) v = 1.0 / (1.0 + std::exp(-v));
    return x.tape->record(std::move(out), {x.id}, "sigmoid", [](Tape& t, const Tape::Node& n) {
        Tensor& g = t.grad_slot(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = n.value[i];
            g[i] += n.grad[i] * s * (1.0 - s);
        }
    });
}

Var relu(Var x)
{
    Tensor out = x.value();
    for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
    return x.tape->record(std::move(out), {x.id}, "relu", [](Tape& t, const Tape::Node& n) {
        Tensor& g = t.grad_slot(n.parents[0]);
        const Tensor& in = t.node(n.parents[0]).value;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (in[i] > 0.0) g[i] += n.grad[i];
    });
}

Var reshape(Var x, Shape shape)
{
    Tensor out = x.value().reshaped(std::move(shape));
    return x.tape->record(std::move(out), {x.id}, "reshape", [](Tape& t, const Tape::Node& n) {
        Tensor& g = t.grad_slot(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
}

Var gather_rows(Var x, std::vector<std::size_t> rows)
{
    const Tensor& in = x.value();
    require_matrix("gather_rows", in);
    const std::size_t cols = in.cols();
    Tensor out({rows.size(), cols});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= in.rows()) throw DimensionError("gather_rows: row index out of range");
        std::copy_n(in.storage().begin() + static_cast<std::ptrdiff_t>(rows[r] * cols), cols,
                    out.storage().begin() + static_cast<std::ptrdiff_t>(r * cols));
    }
    return x.tape->record(std::move(out), {x.id}, "gather_rows",
                          [rows = std::move(rows), cols](Tape& t, const Tape::Node& n) {
                              Tensor& g = t.grad_slot(n.parents[0]);
                              for (std::size_t r = 0; r < rows.size(); ++r)
                                  for (std::size_t c = 0; c < cols; ++c) g(rows[r], c) += n.grad(r, c);
                          });
}

Var concat_rows(std::span<const Var> parts)
{
    if (parts.empty()) throw ContractError("concat_rows: no inputs");
    const std::size_t cols = parts[0].value().cols();
    std::size_t total = 0;
    std::vector<std::size_t> parents;
    for (Var p : parts) {
        check_tape(parts[0], p);
        require_matrix("concat_rows", p.value());
        if (p.value().cols() != cols)
            throw DimensionError("concat_rows: column mismatch " + shape_string(parts[0].shape()) + " vs " +
                                 shape_string(p.shape()));
        total += p.value().rows();
        parents.push_back(p.id);
    }
    Tensor out({total, cols});
    std::size_t offset = 0;
    for (Var p : parts) {
        std::copy(p.value().storage().begin(), p.value().storage().end(),
                  out.storage().begin() + static_cast<std::ptrdiff_t>(offset));
        offset += p.value().size();
    }
    return parts[0].tape->record(std::move(out), std::move(parents), "concat_rows",
                                 [](Tape& t, const Tape::Node& n) {
                                     std::size_t offset = 0;
                                     for (std::size_t p : n.parents) {
                                         const std::size_t len = t.node(p).value.size();
                                         if (t.requires_grad(p)) {
                                             Tensor& g = t.grad_slot(p);
                                             for (std::size_t i = 0; i < len; ++i) g[i] += n.grad[offset + i];
                                         }
                                         offset += len;
                                     }
                                 });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end)
{
    const Tensor& in = x.value();
    require_matrix("slice_cols", in);
    if (begin > end || end > in.cols())
        throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") outside " + shape_string(in.shape()));
    const std::size_t rows = in.rows(), width = end - begin;
    Tensor out({rows, width});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < width; ++c) out(r, c) = in(r, begin + c);
    return x.tape->record(std::move(out), {x.id}, "slice_cols", [begin](Tape& t, const Tape::Node& n) {
        Tensor& g = t.grad_slot(n.parents[0]);
        for (std::size_t r = 0; r < n.grad.rows(); ++r)
            for (std::size_t c = 0; c < n.grad.cols(); ++c) g(r, begin + c) += n.grad(r, c);
    });
}

Var affine_rows(Var x, std::vector<double> row_scale, std::vector<double> row_shift)
{
    const Tensor& in = x.value();
    require_matrix("affine_rows", in);
    if (row_scale.size() != in.rows() || row_shift.size() != in.rows())
        throw DimensionError("affine_rows: " + std::to_string(row_scale.size()) + " scales for " +
                             shape_string(in.shape()));
    Tensor out = in;
    const std::size_t cols = in.cols();
    for (std::size_t r = 0; r < in.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) out(r, c) = out(r, c) * row_scale[r] + row_shift[r];
    return x.tape->record(std::move(out), {x.id}, "affine_rows",
                          [row_scale = std::move(row_scale), cols](Tape& t, const Tape::Node& n) {
                              Tensor& g = t.grad_slot(n.parents[0]);
                              for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * row_scale[i / cols];
                          });
}

Var dropout(Var x, double rate, Rng& rng)
{
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
    if (rate == 0.0) return x;
    Tensor mask(x.shape());
    const double keep = 1.0 / (1.0 - rate);
    for (double& m : mask.storage()) m = rng.uniform() < rate ? 0.0 : keep;
    Var m = x.tape->constant(std::move(mask));
    return mul(x, m);
}

Var sum(Var x)
{
    double s = 0.0;
    for (double v : x.value().values()) s += v;
    return x.tape->record(Tensor({1}, {s}), {x.id}, "sum", [](Tape& t, const Tape::Node& n) {
        Tensor& g = t.grad_slot(n.parents[0]);
        for (double& v : g.storage()) v += n.grad[0];
    });
}

Var mean_square_error(Var pred, Var truth)
{
    check_tape(pred, truth);
    require_same_shape("mean_square_error", pred.value(), truth.value());
    const std::size_t count = pred.value().size();
    if (count == 0) throw DimensionError("mean_square_error: empty operands");
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = pred.value()[i] - truth.value()[i];
        s += d * d;
    }
    return pred.tape->record(
        Tensor({1}, {s / static_cast<double>(count)}), {pred.id, truth.id}, "mean_square_error",
        [count](Tape& t, const Tape::Node& n) {
            const Tensor& p = t.node(n.parents[0]).value;
            const Tensor& q = t.node(n.parents[1]).value;
            const double k = 2.0 * n.grad[0] / static_cast<double>(count);
            if (t.requires_grad(n.parents[0])) {
                Tensor& g = t.grad_slot(n.parents[0]);
                for (std::size_t i = 0; i < count; ++i) g[i] += k * (p[i] - q[i]);
            }
            if (t.requires_grad(n.parents[1])) {
                Tensor& g = t.grad_slot(n.parents[1]);
                for (std::size_t i = 0; i < count; ++i) g[i] -= k * (p[i] - q[i]);
            }
        });
}

namespace {

Var scan_impl(Var z, Var transition, std::size_t steps, const Var* initial)
{
    const Tensor& zv = z.value();
    const Tensor& wv = transition.value();
    require_matrix("linear_scan", zv);
    require_matrix("linear_scan", wv);
    const std::size_t width = zv.cols();
    if (wv.rows() != width || wv.cols() != width)
        throw DimensionError("linear_scan: transition " + shape_string(wv.shape()) + " incompatible with inputs " +
                             shape_string(zv.shape()));
    if (steps == 0 || zv.rows() % steps != 0)
        throw DimensionError("linear_scan: " + std::to_string(zv.rows()) + " rows not divisible into sequences of " +
                             std::to_string(steps));
    const std::size_t groups = zv.rows() / steps;
    if (initial && (initial->value().rows() != groups || initial->value().cols() != width))
        throw DimensionError("linear_scan: initial state " + shape_string(initial->shape()) + " expected [" +
                             std::to_string(groups) + "x" + std::to_string(width) + "]");

    Tensor out = zv;
    const auto w = as_matrix(wv);
    for (std::size_t k = 0; k < steps; ++k) {
        auto h = step_rows(out.storage().data(), k, groups, steps, width);
        if (k > 0)
            h.noalias() += step_rows(static_cast<const double*>(out.storage().data()), k - 1, groups, steps, width) *
                           w.transpose();
        else if (initial)
            h.noalias() += as_matrix(initial->value()) * w.transpose();
    }

    std::vector<std::size_t> parents{z.id, transition.id};
    if (initial) parents.push_back(initial->id);
    return z.tape->record(std::move(out), std::move(parents), "linear_scan",
                          [groups, steps, width](Tape& t, const Tape::Node& n) {
                              const std::size_t iz = n.parents[0], iw = n.parents[1];
                              const bool has_initial = n.parents.size() == 3;
                              const auto w = as_matrix(t.node(iw).value);
                              Tensor carry = n.grad;
                              const double* states = n.value.storage().data();
                              RowMatrix dw = RowMatrix::Zero(static_cast<Eigen::Index>(width),
                                                             static_cast<Eigen::Index>(width));
                              for (std::size_t k = steps; k-- > 0;) {
                                  auto g = step_rows(carry.storage().data(), k, groups, steps, width);
                                  if (k > 0) {
                                      dw.noalias() += g.transpose() * step_rows(states, k - 1, groups, steps, width);
                                      step_rows(carry.storage().data(), k - 1, groups, steps, width).noalias() += g * w;
                                  } else if (has_initial) {
                                      const std::size_t ih = n.parents[2];
                                      dw.noalias() += g.transpose() * as_matrix(t.node(ih).value);
                                      if (t.requires_grad(ih)) as_matrix(t.grad_slot(ih)).noalias() += g * w;
                                  }
                              }
                              if (t.requires_grad(iz)) {
                                  Tensor& gz = t.grad_slot(iz);
                                  for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += carry[i];
                              }
                              if (t.requires_grad(iw)) as_matrix(t.grad_slot(iw)) += dw;
                          });
}

}  // namespace

Var linear_scan(Var z, Var transition, std::size_t steps)
{
    check_tape(z, transition);
    return scan_impl(z, transition, steps, nullptr);
}

Var linear_scan(Var z, Var transition, std::size_t steps, Var initial)
{
    check_tape(z, transition);
    check_tape(z, initial);
    return scan_impl(z, transition, steps, &initial);
}

Var linear_rollout(Var start, Var transition, std::size_t steps)
{
    check_tape(start, transition);
    const Tensor& hv = start.value();
    const Tensor& wv = transition.value();
    require_matrix("linear_rollout", hv);
    require_matrix("linear_rollout", wv);
    const std::size_t width = hv.cols(), groups = hv.rows();
    if (wv.rows() != width || wv.cols() != width)
        throw DimensionError("linear_rollout: transition " + shape_string(wv.shape()) + " incompatible with state " +
                             shape_string(hv.shape()));
    if (steps == 0) throw DimensionError("linear_rollout: steps must be positive");

    Tensor out({groups * steps, width});
    const auto w = as_matrix(wv);
    for (std::size_t k = 0; k < steps; ++k) {
        auto h = step_rows(out.storage().data(), k, groups, steps, width);
        if (k == 0)
            h.noalias() = as_matrix(hv) * w.transpose();
        else
            h.noalias() =
                step_rows(static_cast<const double*>(out.storage().data()), k - 1, groups, steps, width) * w.transpose();
    }

    return start.tape->record(
        std::move(out), {start.id, transition.id}, "linear_rollout", [groups, steps, width](Tape& t, const Tape::Node& n) {
            const std::size_t ih = n.parents[0], iw = n.parents[1];
            const auto w = as_matrix(t.node(iw).value);
            Tensor carry = n.grad;
            const double* states = n.value.storage().data();
            RowMatrix dw = RowMatrix::Zero(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(width));
            RowMatrix dh;
            for (std::size_t k = steps; k-- > 0;) {
                auto g = step_rows(carry.storage().data(), k, groups, steps, width);
                if (k > 0) {
                    dw.noalias() += g.transpose() * step_rows(states, k - 1, groups, steps, width);
                    step_rows(carry.storage().data(), k - 1, groups, steps, width).noalias() += g * w;
                } else {
                    dw.noalias() += g.transpose() * as_matrix(t.node(ih).value);
                    dh = g * w;
                }
            }
            if (t.requires_grad(ih)) as_matrix(t.grad_slot(ih)) += dh;
            if (t.requires_grad(iw)) as_matrix(t.grad_slot(iw)) += dw;
        });
}

}  // namespace skolr::ad

namespace skolr {

Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps)
{
    if (!(eps > 0.0)) throw ContractError("finite_difference_grad: eps must be positive");
    Tensor grad(x.shape());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + eps;
        const double up = f(probe);
        probe[i] = x[i] - eps;
        const double down = f(probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

}  // namespace skolr
