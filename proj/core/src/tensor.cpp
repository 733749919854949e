#include "skolr/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "skolr/error.hpp"

namespace skolr {

namespace {

std::size_t product(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(product(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
{
    if (product(shape_) != data_.size())
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string(shape_));
}

Tensor Tensor::filled(Shape shape, double value)
{
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::vector(std::vector<double> values)
{
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::identity(std::size_t n)
{
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

std::size_t Tensor::rows() const
{
    if (shape_.size() == 1) return 1;
    if (shape_.size() != 2) throw DimensionError("rows() on tensor of shape " + shape_string(shape_));
    return shape_[0];
}

std::size_t Tensor::cols() const
{
    if (shape_.size() == 1) return shape_[0];
    if (shape_.size() != 2) throw DimensionError("cols() on tensor of shape " + shape_string(shape_));
    return shape_[1];
}

Tensor Tensor::reshaped(Shape shape) const
{
    if (product(shape) != data_.size())
        throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    return Tensor(std::move(shape), data_);
}

Tensor Tensor::transposed() const
{
    const std::size_t r = rows(), c = cols();
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(j, i) = data_[i * c + j];
    return out;
}

Tensor Tensor::row(std::size_t r) const
{
    const std::size_t c = cols();
    if (r >= rows()) throw DimensionError("row index out of range");
    return Tensor({c}, std::vector<double>(data_.begin() + r * c, data_.begin() + (r + 1) * c));
}

bool Tensor::all_finite() const noexcept
{
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

MatrixView as_matrix(Tensor& t)
{
    return MatrixView(t.storage().data(), static_cast<Eigen::Index>(t.rows()),
                      static_cast<Eigen::Index>(t.cols()));
}

ConstMatrixView as_matrix(const Tensor& t)
{
    return ConstMatrixView(t.storage().data(), static_cast<Eigen::Index>(t.rows()),
                           static_cast<Eigen::Index>(t.cols()));
}

Tensor from_matrix(const RowMatrix& m)
{
    Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    as_matrix(t) = m;
    return t;
}

Tensor matmul(const Tensor& a, const Tensor& b)
{
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
        throw DimensionError("matmul shape mismatch: " + shape_string(a.shape()) + " x " +
                             shape_string(b.shape()));
    Tensor out({a.rows(), b.cols()});
    as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
    return out;
}

Tensor add(const Tensor& a, const Tensor& b)
{
    if (!a.same_shape(b))
        throw DimensionError("add shape mismatch: " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Tensor subtract(const Tensor& a, const Tensor& b)
{
    if (!a.same_shape(b))
        throw DimensionError("subtract shape mismatch: " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Tensor scale(const Tensor& a, double s)
{
    Tensor out = a;
    for (double& v : out.storage()) v *= s;
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b)
{
    if (a.size() != b.size())
        throw DimensionError("max_abs_diff size mismatch: " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double frobenius_norm(const Tensor& a)
{
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

}  // namespace skolr
