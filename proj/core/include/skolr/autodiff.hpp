#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "skolr/tensor.hpp"

namespace skolr {
class Rng;
}

namespace skolr::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Tensor& grad() const;
    const Shape& shape() const { return value().shape(); }
};

/// Define-by-run reverse-mode tape. Confined to one thread.
class Tape {
public:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated on first accumulation
        bool requires_grad = false;
        std::vector<std::size_t> parents;
        std::function<void(Tape&, const Node&)> backward;
        const char* op = "leaf";
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var variable(Tensor value);

    /// Records a derived node. requires_grad is inherited from the parents.
    Var record(Tensor value, std::vector<std::size_t> parents, const char* op,
               std::function<void(Tape&, const Node&)> backward);

    const Node& node(std::size_t id) const { return nodes_[id]; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    /// Grad slot of a node, zero-filled on first use.
    Tensor& grad_slot(std::size_t id);
    const Tensor& grad(std::size_t id) const;

    /// Seeds d(loss)/d(loss) = 1 and runs every recorded rule in reverse order.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

private:
    std::deque<Node> nodes_;
};

// Differentiable operations. Shapes follow the row-major convention of Tensor.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var subtract(Var a, Var b);
Var mul(Var a, Var b);
Var add_row(Var x, Var bias);         // x[R x C] + bias[C] on every row
Var mul_row(Var x, Var factors);      // x[R x C] * factors[C] on every row
Var scale(Var x, double s);
Var sigmoid(Var x);
Var relu(Var x);
Var reshape(Var x, Shape shape);
Var gather_rows(Var x, std::vector<std::size_t> rows);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
/// y[r, c] = x[r, c] * row_scale[r] + row_shift[r] with constant scale/shift.
Var affine_rows(Var x, std::vector<double> row_scale, std::vector<double> row_shift);
/// Inverted dropout with a mask drawn from rng; identity when rate == 0.
Var dropout(Var x, double rate, Rng& rng);
Var sum(Var x);
Var mean_square_error(Var pred, Var truth);

/// Linear recurrence over groups of `steps` consecutive rows of z[(B*steps) x D]:
/// h_k = h_{k-1} W^T + z_k (row-vector form of h_k = W h_{k-1} + z_k), h_0 = initial or zero.
Var linear_scan(Var z, Var transition, std::size_t steps);
Var linear_scan(Var z, Var transition, std::size_t steps, Var initial);
/// Zero-input continuation: output row b*steps + (t-1) holds W^t applied to start row b.
Var linear_rollout(Var start, Var transition, std::size_t steps);

}  // namespace skolr::ad

namespace skolr {

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every coordinate of x.
Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps);

}  // namespace skolr
