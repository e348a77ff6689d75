#pragma once

// Independent reference implementations used as test oracles. Everything in
// here is deliberately written as plain scalar loops, separate from the
// library code paths it checks.

#include <cmath>
#include <cstdint>
#include <vector>

#include "fedecg/tensor.hpp"

namespace oracle {

// Naive quadruple-loop 1-D cross-correlation with "same"-style ceil padding.
// x: [N, C_in, L], w: [C_out, C_in, K], b: [C_out].
template <typename T>
fedecg::Tensor<T> conv1d(const fedecg::Tensor<T>& x, const fedecg::Tensor<T>& w,
                         const fedecg::Tensor<T>& b, std::int64_t stride) {
    const std::int64_t n = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::int64_t cout = w.dim(0), k = w.dim(2);
    const std::int64_t out_len = (len + stride - 1) / stride;
    const std::int64_t total_pad = std::max<std::int64_t>(0, (out_len - 1) * stride + k - len);
    const std::int64_t pad_left = total_pad / 2;

    fedecg::Tensor<T> y({n, cout, out_len});
    for (std::int64_t in = 0; in < n; ++in)
        for (std::int64_t co = 0; co < cout; ++co)
            for (std::int64_t t = 0; t < out_len; ++t) {
                double acc = static_cast<double>(b[co]);
                for (std::int64_t ci = 0; ci < cin; ++ci)
                    for (std::int64_t kk = 0; kk < k; ++kk) {
                        const std::int64_t pos = t * stride + kk - pad_left;
                        if (pos < 0 || pos >= len) continue;
                        acc += static_cast<double>(x[(in * cin + ci) * len + pos]) *
                               static_cast<double>(w[(co * cin + ci) * k + kk]);
                    }
                y[(in * cout + co) * out_len + t] = static_cast<T>(acc);
            }
    return y;
}

// Flat index into the reduced-output space for a flat input index.
template <typename T>
std::int64_t reduced_index(const fedecg::Tensor<T>& x, const std::vector<bool>& reduced,
                           std::int64_t flat) {
    std::int64_t rem = flat, out_idx = 0;
    for (std::size_t d = 0; d < x.rank(); ++d) {
        std::int64_t block = 1;
        for (std::size_t e = d + 1; e < x.rank(); ++e) block *= x.shape()[e];
        const std::int64_t c = rem / block;
        rem %= block;
        if (!reduced[d]) out_idx = out_idx * x.shape()[d] + c;
    }
    return out_idx;
}

// Scalar-loop mean/biased-variance over a set of axes.
template <typename T>
std::pair<std::vector<double>, std::vector<double>> moments(const fedecg::Tensor<T>& x,
                                                            const std::vector<std::size_t>& axes) {
    std::vector<bool> reduced(x.rank(), false);
    for (auto a : axes) reduced[a] = true;
    std::int64_t out_n = 1;
    for (std::size_t d = 0; d < x.rank(); ++d)
        if (!reduced[d]) out_n *= x.shape()[d];

    std::vector<double> mean(out_n, 0.0), var(out_n, 0.0);
    std::vector<std::int64_t> count(out_n, 0);
    for (std::int64_t flat = 0; flat < x.numel(); ++flat) {
        const std::int64_t oi = reduced_index(x, reduced, flat);
        mean[oi] += x[flat];
        count[oi] += 1;
    }
    for (std::int64_t i = 0; i < out_n; ++i) mean[i] /= static_cast<double>(count[i]);
    for (std::int64_t flat = 0; flat < x.numel(); ++flat) {
        const std::int64_t oi = reduced_index(x, reduced, flat);
        const double d = x[flat] - mean[oi];
        var[oi] += d * d;
    }
    for (std::int64_t i = 0; i < out_n; ++i) var[i] /= static_cast<double>(count[i]);
    return {mean, var};
}

inline double rel_err(double a, double n) {
    return std::abs(a - n) / std::max(1e-8, std::abs(a) + std::abs(n));
}

}  // namespace oracle
