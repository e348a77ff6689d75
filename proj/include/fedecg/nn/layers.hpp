#pragma once

#include <cmath>
#include <cstdint>
#include <type_traits>
#include <utility>
#include <vector>

#include "fedecg/rng.hpp"
#include "fedecg/tensor.hpp"

namespace fedecg::nn {

enum class Mode { Train, Eval };
enum class NormKind { Batch, Layer, Group };

// ---------------------------------------------------------------------------
// conv1d: cross-correlation over [N, C_in, L] with "same"-style ceil padding.
// out_len = ceil(L / stride); total pad = max(0, (out_len-1)*stride + K - L),
// split pad_left = total/2.

template <typename T>
struct ConvCache {
    Tensor<T> x;
    Tensor<T> w;
    std::int64_t stride = 1;
    std::int64_t pad_left = 0;
    Shape out_shape;
};

template <typename T>
Tensor<T> conv1d_forward(Tensor<T> x, const Tensor<T>& w, const Tensor<T>& b,
                         std::int64_t stride, ConvCache<T>* cache = nullptr) {
    if (x.rank() != 3 || w.rank() != 3 || b.rank() != 1)
        throw ShapeError("conv1d: expected x[N,C,L], w[Co,Ci,K], b[Co]");
    const std::int64_t n = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::int64_t cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != cin)
        throw ShapeError("conv1d: channel mismatch, x has " + std::to_string(cin) +
                         " input channels, w expects " + std::to_string(w.dim(1)));
    if (b.dim(0) != cout) throw ShapeError("conv1d: bias length mismatch");
    if (stride != 1 && stride != 2) throw ValueError("conv1d: stride must be 1 or 2");

    const std::int64_t out_len = (len + stride - 1) / stride;
    const std::int64_t total_pad = std::max<std::int64_t>(0, (out_len - 1) * stride + k - len);
    const std::int64_t pad_left = total_pad / 2;

    Tensor<T> y({n, cout, out_len});
    for (std::int64_t in = 0; in < n; ++in) {
        for (std::int64_t co = 0; co < cout; ++co) {
            T* __restrict yrow = y.data() + (in * cout + co) * out_len;
            for (std::int64_t t = 0; t < out_len; ++t) yrow[t] = b[co];
            for (std::int64_t ci = 0; ci < cin; ++ci) {
                const T* __restrict xrow = x.data() + (in * cin + ci) * len;
                const T* __restrict wrow = w.data() + (co * cin + ci) * k;
                // tap-major accumulation: per output element the taps are
                // still summed in ascending k order, but each tap's pass over
                // t is dependence-free and vectorizes
                for (std::int64_t kk = 0; kk < k; ++kk) {
                    const T wk = wrow[kk];
                    const std::int64_t off = kk - pad_left;
                    // valid t range: 0 <= t*stride + off < len
                    const std::int64_t t_lo =
                        off >= 0 ? 0 : (-off + stride - 1) / stride;
                    const std::int64_t t_hi =
                        std::min<std::int64_t>(out_len, off >= len ? 0 : (len - off + stride - 1) / stride);
                    const T* __restrict xk = xrow + off;
                    if (stride == 1) {
                        for (std::int64_t t = t_lo; t < t_hi; ++t) yrow[t] += wk * xk[t];
                    } else {
                        for (std::int64_t t = t_lo; t < t_hi; ++t) yrow[t] += wk * xk[2 * t];
                    }
                }
            }
        }
    }
    if (cache) {
        cache->x = std::move(x);
        cache->w = w;
        cache->stride = stride;
        cache->pad_left = pad_left;
        cache->out_shape = y.shape();
    }
    return y;
}

template <typename T>
struct ConvGrads {
    Tensor<T> x;
    Tensor<T> w;
    Tensor<T> b;
};

template <typename T>
ConvGrads<T> conv1d_backward(const ConvCache<T>& cache, const Tensor<T>& grad_out) {
    if (grad_out.shape() != cache.out_shape)
        throw ContractError("conv1d_backward: grad_out shape does not match the cached forward");
    const std::int64_t n = cache.x.dim(0), cin = cache.x.dim(1), len = cache.x.dim(2);
    const std::int64_t cout = cache.w.dim(0), k = cache.w.dim(2);
    const std::int64_t out_len = grad_out.dim(2);
    const std::int64_t stride = cache.stride, pad_left = cache.pad_left;

    ConvGrads<T> g{zeros_like(cache.x), zeros_like(cache.w), Tensor<T>({cout})};
    for (std::int64_t in = 0; in < n; ++in) {
        for (std::int64_t co = 0; co < cout; ++co) {
            const T* __restrict gyrow = grad_out.data() + (in * cout + co) * out_len;
            T gb = 0;
            for (std::int64_t t = 0; t < out_len; ++t) gb += gyrow[t];
            g.b[co] += gb;
            for (std::int64_t ci = 0; ci < cin; ++ci) {
                const T* __restrict xrow = cache.x.data() + (in * cin + ci) * len;
                const T* __restrict wrow = cache.w.data() + (co * cin + ci) * k;
                T* __restrict gxrow = g.x.data() + (in * cin + ci) * len;
                T* __restrict gwrow = g.w.data() + (co * cin + ci) * k;
                // weight grads: all taps updated per t
                for (std::int64_t t = 0; t < out_len; ++t) {
                    const std::int64_t base = t * stride - pad_left;
                    const std::int64_t k_lo = std::max<std::int64_t>(0, -base);
                    const std::int64_t k_hi = std::min<std::int64_t>(k, len - base);
                    const T gy = gyrow[t];
                    const T* __restrict xb = xrow + base;
                    for (std::int64_t kk = k_lo; kk < k_hi; ++kk) gwrow[kk] += gy * xb[kk];
                }
                // input grads: tap-major passes over t, dependence-free per tap
                for (std::int64_t kk = 0; kk < k; ++kk) {
                    const T wk = wrow[kk];
                    const std::int64_t off = kk - pad_left;
                    const std::int64_t t_lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
                    const std::int64_t t_hi = std::min<std::int64_t>(
                        out_len, off >= len ? 0 : (len - off + stride - 1) / stride);
                    T* __restrict gxk = gxrow + off;
                    if (stride == 1) {
                        for (std::int64_t t = t_lo; t < t_hi; ++t) gxk[t] += gyrow[t] * wk;
                    } else {
                        for (std::int64_t t = t_lo; t < t_hi; ++t) gxk[2 * t] += gyrow[t] * wk;
                    }
                }
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Normalization. One core serves all three kinds; they differ only in how
// elements are bucketed for the statistics:
//   Batch  — per channel over (N, L); Train uses batch stats and updates the
//            running estimates, Eval uses the running estimates.
//   Layer  — per sample over (C, L).
//   Group  — per sample per channel group over (C/G, L).
// Affine scale/shift are always per channel. eps = 1e-5.

inline constexpr double kNormEps = 1e-5;

template <typename T>
struct NormCache {
    NormKind kind = NormKind::Batch;
    Mode mode = Mode::Train;
    std::int64_t group_count = 1;
    Tensor<T> x_hat;               // normalized pre-affine values
    std::vector<T> inv_std;        // per bucket
    Tensor<T> scale;
    bool batch_stats = true;       // false for Batch/Eval (backward unsupported)
};

namespace detail {
// Buckets for [N, C, L]: Batch -> c; Layer -> n; Group -> n * G + c / (C/G).
template <typename T>
std::int64_t bucket_count(NormKind kind, std::int64_t n, std::int64_t c, std::int64_t groups) {
    switch (kind) {
        case NormKind::Batch: return c;
        case NormKind::Layer: return n;
        case NormKind::Group: return n * groups;
    }
    return 0;
}
}  // namespace detail

template <typename T>
Tensor<T> norm_forward(const Tensor<T>& x, NormKind kind, std::int64_t group_count,
                       const Tensor<T>& scale, const Tensor<T>& shift,
                       std::type_identity_t<Tensor<T>*> running_mean,
                       std::type_identity_t<Tensor<T>*> running_var, Mode mode,
                       std::type_identity_t<T> momentum = 0.1,
                       std::type_identity_t<NormCache<T>*> cache = nullptr) {
    if (x.rank() != 3) throw ShapeError("norm_forward: expected x[N,C,L]");
    const std::int64_t n = x.dim(0), c = x.dim(1), len = x.dim(2);
    if (scale.numel() != c || shift.numel() != c)
        throw ShapeError("norm_forward: affine parameters must have one entry per channel");
    if (kind == NormKind::Group) {
        if (group_count < 1 || c % group_count != 0)
            throw ValueError("norm_forward: group_count must divide the channel count");
    }
    const std::int64_t groups = kind == NormKind::Group ? group_count : 1;
    const std::int64_t cg = kind == NormKind::Group ? c / groups : c;

    const std::int64_t buckets = detail::bucket_count<T>(kind, n, c, groups);
    std::vector<double> mean(static_cast<std::size_t>(buckets), 0.0);
    std::vector<double> var(static_cast<std::size_t>(buckets), 0.0);

    auto bucket_of = [&](std::int64_t in, std::int64_t ic) -> std::int64_t {
        switch (kind) {
            case NormKind::Batch: return ic;
            case NormKind::Layer: return in;
            case NormKind::Group: return in * groups + ic / cg;
        }
        return 0;
    };

    const bool use_batch_stats = !(kind == NormKind::Batch && mode == Mode::Eval);
    if (kind == NormKind::Batch && mode == Mode::Train && n * len < 2)
        throw ValueError("norm_forward: batch normalization in Train mode needs N*L >= 2");

    if (use_batch_stats) {
        const std::int64_t count = x.numel() / buckets;
        for (std::int64_t in = 0; in < n; ++in)
            for (std::int64_t ic = 0; ic < c; ++ic) {
                const T* row = x.data() + (in * c + ic) * len;
                double s = 0;
                for (std::int64_t l = 0; l < len; ++l) s += row[l];
                mean[bucket_of(in, ic)] += s;
            }
        for (auto& m : mean) m /= static_cast<double>(count);
        for (std::int64_t in = 0; in < n; ++in)
            for (std::int64_t ic = 0; ic < c; ++ic) {
                const T* row = x.data() + (in * c + ic) * len;
                const double m = mean[bucket_of(in, ic)];
                double s = 0;
                for (std::int64_t l = 0; l < len; ++l) {
                    const double d = row[l] - m;
                    s += d * d;
                }
                var[bucket_of(in, ic)] += s;
            }
        for (auto& v : var) v /= static_cast<double>(count);

        if (kind == NormKind::Batch && mode == Mode::Train && running_mean && running_var) {
            for (std::int64_t ic = 0; ic < c; ++ic) {
                (*running_mean)[ic] =
                    (T(1) - momentum) * (*running_mean)[ic] + momentum * static_cast<T>(mean[ic]);
                (*running_var)[ic] =
                    (T(1) - momentum) * (*running_var)[ic] + momentum * static_cast<T>(var[ic]);
            }
        }
    } else {
        if (!running_mean || !running_var)
            throw ValueError("norm_forward: Batch/Eval requires running statistics");
        for (std::int64_t ic = 0; ic < c; ++ic) {
            mean[ic] = static_cast<double>((*running_mean)[ic]);
            var[ic] = static_cast<double>((*running_var)[ic]);
        }
    }

    std::vector<T> inv_std(static_cast<std::size_t>(buckets));
    for (std::int64_t bkt = 0; bkt < buckets; ++bkt)
        inv_std[bkt] = static_cast<T>(1.0 / std::sqrt(var[bkt] + kNormEps));

    Tensor<T> y(x.shape());
    Tensor<T> x_hat(x.shape());
    for (std::int64_t in = 0; in < n; ++in)
        for (std::int64_t ic = 0; ic < c; ++ic) {
            const std::int64_t bkt = bucket_of(in, ic);
            const T m = static_cast<T>(mean[bkt]);
            const T is = inv_std[bkt];
            const T g = scale[ic], s = shift[ic];
            const T* row = x.data() + (in * c + ic) * len;
            T* hrow = x_hat.data() + (in * c + ic) * len;
            T* yrow = y.data() + (in * c + ic) * len;
            for (std::int64_t l = 0; l < len; ++l) {
                hrow[l] = (row[l] - m) * is;
                yrow[l] = g * hrow[l] + s;
            }
        }

    if (cache) {
        cache->kind = kind;
        cache->mode = mode;
        cache->group_count = groups;
        cache->x_hat = std::move(x_hat);
        cache->inv_std = std::move(inv_std);
        cache->scale = scale;
        cache->batch_stats = use_batch_stats;
    }
    return y;
}

template <typename T>
struct NormGrads {
    Tensor<T> x;
    Tensor<T> scale;
    Tensor<T> shift;
};

template <typename T>
NormGrads<T> norm_backward(const NormCache<T>& cache, const Tensor<T>& grad_out) {
    if (!cache.batch_stats)
        throw ContractError("norm_backward: cache comes from an Eval-mode batch norm");
    if (grad_out.shape() != cache.x_hat.shape())
        throw ContractError("norm_backward: grad_out shape does not match the cached forward");
    const std::int64_t n = grad_out.dim(0), c = grad_out.dim(1), len = grad_out.dim(2);
    const std::int64_t groups = cache.group_count;
    const std::int64_t cg = cache.kind == NormKind::Group ? c / groups : c;

    auto bucket_of = [&](std::int64_t in, std::int64_t ic) -> std::int64_t {
        switch (cache.kind) {
            case NormKind::Batch: return ic;
            case NormKind::Layer: return in;
            case NormKind::Group: return in * groups + ic / cg;
        }
        return 0;
    };
    const std::int64_t buckets = static_cast<std::int64_t>(cache.inv_std.size());
    const std::int64_t count = grad_out.numel() / buckets;

    // Per-bucket sums of dxhat and dxhat * x_hat, plus per-channel affine grads.
    std::vector<double> sum_dxh(static_cast<std::size_t>(buckets), 0.0);
    std::vector<double> sum_dxh_xh(static_cast<std::size_t>(buckets), 0.0);
    NormGrads<T> g{Tensor<T>(grad_out.shape()), Tensor<T>({c}), Tensor<T>({c})};

    for (std::int64_t in = 0; in < n; ++in)
        for (std::int64_t ic = 0; ic < c; ++ic) {
            const std::int64_t bkt = bucket_of(in, ic);
            const T gamma = cache.scale[ic];
            const T* gyrow = grad_out.data() + (in * c + ic) * len;
            const T* hrow = cache.x_hat.data() + (in * c + ic) * len;
            double s1 = 0, s2 = 0, gs = 0, gb = 0;
            for (std::int64_t l = 0; l < len; ++l) {
                const double dxh = static_cast<double>(gyrow[l]) * gamma;
                s1 += dxh;
                s2 += dxh * hrow[l];
                gs += static_cast<double>(gyrow[l]) * hrow[l];
                gb += gyrow[l];
            }
            sum_dxh[bkt] += s1;
            sum_dxh_xh[bkt] += s2;
            g.scale[ic] += static_cast<T>(gs);
            g.shift[ic] += static_cast<T>(gb);
        }

    for (std::int64_t in = 0; in < n; ++in)
        for (std::int64_t ic = 0; ic < c; ++ic) {
            const std::int64_t bkt = bucket_of(in, ic);
            const T gamma = cache.scale[ic];
            const T is = cache.inv_std[bkt];
            const double m1 = sum_dxh[bkt] / count;
            const double m2 = sum_dxh_xh[bkt] / count;
            const T* gyrow = grad_out.data() + (in * c + ic) * len;
            const T* hrow = cache.x_hat.data() + (in * c + ic) * len;
            T* gxrow = g.x.data() + (in * c + ic) * len;
            for (std::int64_t l = 0; l < len; ++l) {
                const double dxh = static_cast<double>(gyrow[l]) * gamma;
                gxrow[l] = static_cast<T>(is * (dxh - m1 - hrow[l] * m2));
            }
        }
    return g;
}

// ---------------------------------------------------------------------------
// ReLU

template <typename T>
struct ReluCache {
    std::vector<std::uint8_t> mask;
    Shape shape;
};

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x, ReluCache<T>* cache = nullptr) {
    Tensor<T> y(x.shape());
    if (cache) {
        cache->mask.assign(static_cast<std::size_t>(x.numel()), 0);
        cache->shape = x.shape();
    }
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        const bool pos = x[i] > T(0);
        y[i] = pos ? x[i] : T(0);
        if (cache) cache->mask[static_cast<std::size_t>(i)] = pos;
    }
    return y;
}

template <typename T>
Tensor<T> relu_backward(const ReluCache<T>& cache, const Tensor<T>& grad_out) {
    if (grad_out.shape() != cache.shape)
        throw ContractError("relu_backward: grad_out shape does not match the cached forward");
    Tensor<T> gx(cache.shape);
    for (std::int64_t i = 0; i < gx.numel(); ++i)
        gx[i] = cache.mask[static_cast<std::size_t>(i)] ? grad_out[i] : T(0);
    return gx;
}

// ---------------------------------------------------------------------------
// Max pooling, window 2, stride 2, ceil output length (last window may be a
// single element). Ties route the gradient to the earlier index.

template <typename T>
struct PoolCache {
    Shape in_shape;
    std::vector<std::uint8_t> argmax;  // offset (0 or 1) within each window
};

template <typename T>
Tensor<T> maxpool2_forward(const Tensor<T>& x, PoolCache<T>* cache = nullptr) {
    const std::int64_t n = x.dim(0), c = x.dim(1), len = x.dim(2);
    const std::int64_t out_len = (len + 1) / 2;
    Tensor<T> y({n, c, out_len});
    if (cache) {
        cache->in_shape = x.shape();
        cache->argmax.assign(static_cast<std::size_t>(y.numel()), 0);
    }
    for (std::int64_t row = 0; row < n * c; ++row) {
        const T* xrow = x.data() + row * len;
        T* yrow = y.data() + row * out_len;
        for (std::int64_t t = 0; t < out_len; ++t) {
            const std::int64_t a = 2 * t, b = 2 * t + 1;
            if (b < len && xrow[b] > xrow[a]) {
                yrow[t] = xrow[b];
                if (cache) cache->argmax[static_cast<std::size_t>(row * out_len + t)] = 1;
            } else {
                yrow[t] = xrow[a];
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> maxpool2_backward(const PoolCache<T>& cache, const Tensor<T>& grad_out) {
    const std::int64_t n = cache.in_shape[0], c = cache.in_shape[1], len = cache.in_shape[2];
    const std::int64_t out_len = (len + 1) / 2;
    if (grad_out.shape() != Shape{n, c, out_len})
        throw ContractError("maxpool2_backward: grad_out shape does not match the cached forward");
    Tensor<T> gx(cache.in_shape);
    for (std::int64_t row = 0; row < n * c; ++row) {
        const T* gyrow = grad_out.data() + row * out_len;
        T* gxrow = gx.data() + row * len;
        for (std::int64_t t = 0; t < out_len; ++t)
            gxrow[2 * t + cache.argmax[static_cast<std::size_t>(row * out_len + t)]] += gyrow[t];
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Inverted dropout; identity when p == 0 or in Eval mode.

template <typename T>
struct DropoutCache {
    bool active = false;
    T scale = 1;
    std::vector<std::uint8_t> keep;
    Shape shape;
};

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, T p, Mode mode, SeededRng* rng,
                          DropoutCache<T>* cache = nullptr) {
    if (p < T(0) || p >= T(1)) throw ValueError("dropout: p must be in [0, 1)");
    if (mode == Mode::Eval || p == T(0)) {
        if (cache) {
            cache->active = false;
            cache->shape = x.shape();
        }
        return x;
    }
    if (!rng) throw ValueError("dropout: Train mode with p > 0 needs an rng");
    Tensor<T> y(x.shape());
    const T scale = T(1) / (T(1) - p);
    if (cache) {
        cache->active = true;
        cache->scale = scale;
        cache->keep.assign(static_cast<std::size_t>(x.numel()), 0);
        cache->shape = x.shape();
    }
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        const bool keep = rng->uniform01() >= static_cast<double>(p);
        y[i] = keep ? x[i] * scale : T(0);
        if (cache) cache->keep[static_cast<std::size_t>(i)] = keep;
    }
    return y;
}

template <typename T>
Tensor<T> dropout_backward(const DropoutCache<T>& cache, const Tensor<T>& grad_out) {
    if (grad_out.shape() != cache.shape)
        throw ContractError("dropout_backward: grad_out shape does not match the cached forward");
    if (!cache.active) return grad_out;
    Tensor<T> gx(cache.shape);
    for (std::int64_t i = 0; i < gx.numel(); ++i)
        gx[i] = cache.keep[static_cast<std::size_t>(i)] ? grad_out[i] * cache.scale : T(0);
    return gx;
}

// ---------------------------------------------------------------------------
// Dense head: y[n][o] = b[o] + sum_i w[o][i] * x[n][i]

template <typename T>
struct DenseCache {
    Tensor<T> x;
    Tensor<T> w;
};

template <typename T>
Tensor<T> dense_forward(Tensor<T> x, const Tensor<T>& w, const Tensor<T>& b,
                        DenseCache<T>* cache = nullptr) {
    if (x.rank() != 2 || w.rank() != 2) throw ShapeError("dense: expected x[N,I], w[O,I]");
    const std::int64_t n = x.dim(0), in_dim = x.dim(1), out_dim = w.dim(0);
    if (w.dim(1) != in_dim || b.numel() != out_dim)
        throw ShapeError("dense: weight/bias shapes do not match input");
    Tensor<T> y({n, out_dim});
    for (std::int64_t in = 0; in < n; ++in)
        for (std::int64_t o = 0; o < out_dim; ++o) {
            const T* xrow = x.data() + in * in_dim;
            const T* wrow = w.data() + o * in_dim;
            T acc = b[o];
            for (std::int64_t i = 0; i < in_dim; ++i) acc += xrow[i] * wrow[i];
            y[in * out_dim + o] = acc;
        }
    if (cache) {
        cache->x = std::move(x);
        cache->w = w;
    }
    return y;
}

template <typename T>
struct DenseGrads {
    Tensor<T> x;
    Tensor<T> w;
    Tensor<T> b;
};

template <typename T>
DenseGrads<T> dense_backward(const DenseCache<T>& cache, const Tensor<T>& grad_out) {
    const std::int64_t n = cache.x.dim(0), in_dim = cache.x.dim(1), out_dim = cache.w.dim(0);
    if (grad_out.shape() != Shape{n, out_dim})
        throw ContractError("dense_backward: grad_out shape does not match the cached forward");
    DenseGrads<T> g{zeros_like(cache.x), zeros_like(cache.w), Tensor<T>({out_dim})};
    for (std::int64_t in = 0; in < n; ++in)
        for (std::int64_t o = 0; o < out_dim; ++o) {
            const T gy = grad_out[in * out_dim + o];
            g.b[o] += gy;
            const T* xrow = cache.x.data() + in * in_dim;
            const T* wrow = cache.w.data() + o * in_dim;
            T* gxrow = g.x.data() + in * in_dim;
            T* gwrow = g.w.data() + o * in_dim;
            for (std::int64_t i = 0; i < in_dim; ++i) {
                gwrow[i] += gy * xrow[i];
                gxrow[i] += gy * wrow[i];
            }
        }
    return g;
}

// ---------------------------------------------------------------------------
// Mean softmax cross-entropy over class-id labels, stabilized by
// max-subtraction. grad = (softmax - onehot) / N.

template <typename T>
std::pair<T, Tensor<T>> loss_and_grad(const Tensor<T>& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw ShapeError("loss_and_grad: expected logits[N,C]");
    const std::int64_t n = logits.dim(0), c = logits.dim(1);
    if (static_cast<std::int64_t>(labels.size()) != n)
        throw ShapeError("loss_and_grad: one label per row required");
    for (const int y : labels)
        if (y < 0 || y >= c)
            throw ValueError("loss_and_grad: label " + std::to_string(y) + " out of range");

    Tensor<T> grad(logits.shape());
    double loss = 0;
    for (std::int64_t in = 0; in < n; ++in) {
        const T* row = logits.data() + in * c;
        double mx = row[0];
        for (std::int64_t j = 1; j < c; ++j) mx = std::max<double>(mx, row[j]);
        double denom = 0;
        for (std::int64_t j = 0; j < c; ++j) denom += std::exp(static_cast<double>(row[j]) - mx);
        const double log_denom = std::log(denom);
        loss += log_denom - (static_cast<double>(row[labels[in]]) - mx);
        for (std::int64_t j = 0; j < c; ++j) {
            const double p = std::exp(static_cast<double>(row[j]) - mx) / denom;
            grad[in * c + j] =
                static_cast<T>((p - (j == labels[in] ? 1.0 : 0.0)) / static_cast<double>(n));
        }
    }
    return {static_cast<T>(loss / static_cast<double>(n)), std::move(grad)};
}

}  // namespace fedecg::nn
