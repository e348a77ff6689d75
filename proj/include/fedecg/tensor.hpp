#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fedecg/error.hpp"
#include "fedecg/rng.hpp"

namespace fedecg {

using Shape = std::vector<std::int64_t>;

enum class Dtype { F32, F64 };

template <typename T>
constexpr Dtype dtype_of() {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    return std::is_same_v<T, float> ? Dtype::F32 : Dtype::F64;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

// Dense row-major tensor owning its buffer. data.size() == product(shape)
// always; a rank-0 shape denotes a scalar (numel 1).
template <typename T>
class Tensor {
  public:
    Tensor() = default;

    explicit Tensor(Shape shape) : shape_(std::move(shape)) {
        data_.assign(checked_numel(shape_), T{});
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::int64_t>(data_.size()) != checked_numel(shape_))
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::int64_t dim(std::size_t i) const { return shape_.at(i); }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // Same buffer reinterpreted under a new shape with equal element count.
    Tensor reshaped(Shape new_shape) const {
        if (checked_numel(new_shape) != numel())
            throw ShapeError("reshape " + shape_str(shape_) + " -> " + shape_str(new_shape) +
                             " changes element count");
        return Tensor(std::move(new_shape), data_);
    }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    static std::int64_t checked_numel(const Shape& shape) {
        std::int64_t n = 1;
        for (const std::int64_t e : shape) {
            if (e < 1) throw ShapeError("invalid shape " + shape_str(shape) + ": extents must be >= 1");
            n *= e;
        }
        return n;
    }

  private:
    Shape shape_;
    std::vector<T> data_;
};

// Tensor of the given shape with every element set to value.
template <typename T>
Tensor<T> tensor_full(Shape shape, T value) {
    Tensor<T> t(std::move(shape));
    t.fill(value);
    return t;
}

template <typename T>
Tensor<T> zeros_like(const Tensor<T>& t) {
    return Tensor<T>(t.shape());
}

// Kaiming-uniform initialization for rectified units: i.i.d. uniform on
// [-b, +b] with b = sqrt(6 / fan_in). Draws are consumed from rng in
// row-major element order; the same seed yields the same tensor.
template <typename T>
Tensor<T> kaiming_uniform(Shape shape, std::int64_t fan_in, SeededRng& rng) {
    if (fan_in < 1) throw ValueError("kaiming_uniform: fan_in must be >= 1");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor<T> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
    return t;
}

// Uniform on [-b, +b) with b = 1/sqrt(fan_in); used for the dense head so a
// fresh network emits near-uniform class probabilities.
template <typename T>
Tensor<T> head_uniform(Shape shape, std::int64_t fan_in, SeededRng& rng) {
    if (fan_in < 1) throw ValueError("head_uniform: fan_in must be >= 1");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor<T> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
    return t;
}

// Mean and biased variance (divide by count) over the given axis set; reduced
// axes are removed from the output shape. An empty axis set returns a copy of
// x as the mean and zeros as the variance.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> moments_over_axes(const Tensor<T>& x,
                                                  const std::vector<std::size_t>& axes) {
    for (const std::size_t a : axes)
        if (a >= x.rank()) throw ShapeError("moments_over_axes: axis out of range for rank " +
                                            std::to_string(x.rank()));
    if (axes.empty()) return {x, zeros_like(x)};

    std::vector<bool> reduced(x.rank(), false);
    for (const std::size_t a : axes) reduced[a] = true;

    Shape out_shape;
    for (std::size_t d = 0; d < x.rank(); ++d)
        if (!reduced[d]) out_shape.push_back(x.shape()[d]);

    // Stride of each input axis in the output index space (0 when reduced).
    std::vector<std::int64_t> out_stride(x.rank(), 0);
    std::int64_t stride = 1;
    for (std::size_t d = x.rank(); d-- > 0;) {
        if (!reduced[d]) {
            out_stride[d] = stride;
            stride *= x.shape()[d];
        }
    }

    Tensor<T> mean(out_shape);
    Tensor<T> var(out_shape);
    const std::int64_t out_n = mean.numel();
    const std::int64_t count = x.numel() / out_n;

    std::vector<double> acc(static_cast<std::size_t>(out_n), 0.0);
    std::vector<std::int64_t> coord(x.rank(), 0);

    auto for_each = [&](auto&& body) {
        std::fill(coord.begin(), coord.end(), 0);
        std::int64_t out_idx = 0;
        for (std::int64_t flat = 0; flat < x.numel(); ++flat) {
            body(flat, out_idx);
            for (std::size_t d = x.rank(); d-- > 0;) {
                ++coord[d];
                out_idx += out_stride[d];
                if (coord[d] < x.shape()[d]) break;
                out_idx -= out_stride[d] * x.shape()[d];
                coord[d] = 0;
            }
        }
    };

    for_each([&](std::int64_t flat, std::int64_t out_idx) {
        acc[static_cast<std::size_t>(out_idx)] += static_cast<double>(x[flat]);
    });
    for (std::int64_t i = 0; i < out_n; ++i)
        mean[i] = static_cast<T>(acc[static_cast<std::size_t>(i)] / static_cast<double>(count));

    std::fill(acc.begin(), acc.end(), 0.0);
    for_each([&](std::int64_t flat, std::int64_t out_idx) {
        const double d = static_cast<double>(x[flat]) - static_cast<double>(mean[out_idx]);
        acc[static_cast<std::size_t>(out_idx)] += d * d;
    });
    for (std::int64_t i = 0; i < out_n; ++i)
        var[i] = static_cast<T>(acc[static_cast<std::size_t>(i)] / static_cast<double>(count));

    return {std::move(mean), std::move(var)};
}

// y <- y + alpha * x, elementwise. Shapes must match.
template <typename T>
void axpy_inplace(Tensor<T>& y, T alpha, const Tensor<T>& x) {
    if (!y.same_shape(x))
        throw ShapeError("axpy_inplace: shape mismatch " + shape_str(y.shape()) + " vs " +
                         shape_str(x.shape()));
    T* yd = y.data();
    const T* xd = x.data();
    const std::int64_t n = y.numel();
    for (std::int64_t i = 0; i < n; ++i) yd[i] += alpha * xd[i];
}

}  // namespace fedecg
