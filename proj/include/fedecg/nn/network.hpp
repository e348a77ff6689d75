#pragma once

#include <string>
#include <vector>

#include "fedecg/nn/layers.hpp"
#include "fedecg/param_set.hpp"
#include "fedecg/rng.hpp"

namespace fedecg::nn {

enum class Variant { Default, Small };

// 1-D residual CNN for single-label rhythm classification of fixed-length
// signals. Two stock variants:
//   Default — 16 residual blocks, channel width base*k with k bumped every
//             4th block (64,64,64,64,128,...,256), every alternate block
//             (the 2nd, 4th, ...) subsamples time by 2.
//   Small   — 8 blocks, every block subsamples, k bumped every 2nd block so
//             the final width still reaches base*4.
// Both end at a total temporal subsampling of 2^8. Blocks are
// pre-activation ([norm -> ReLU -> conv] x2) with a max-pool shortcut on
// subsampling and a 1x1 stride-matched projection when the width grows.
// The head flattens the final feature map into one dense layer.
struct NetworkConfig {
    Variant variant = Variant::Default;
    NormKind norm = NormKind::Batch;
    std::int64_t group_count = 8;       // Group norm only
    std::int64_t input_len = 6000;
    std::int64_t base_channels = 64;
    std::int64_t filter_len = 16;
    std::int64_t num_classes = 4;
    double dropout_p = 0.0;
    // Test/desk-scale overrides; 0 keeps the variant defaults above.
    std::int64_t num_blocks_override = 0;
    std::int64_t width_period_override = 0;
};

struct BlockSpec {
    std::int64_t in_ch = 0;
    std::int64_t out_ch = 0;
    bool subsample = false;
    std::int64_t in_len = 0;
    std::int64_t out_len = 0;
};

struct NetworkPlan {
    std::vector<BlockSpec> blocks;
    std::int64_t final_len = 0;
    std::int64_t final_ch = 0;
    std::int64_t flatten_dim = 0;
    std::int64_t subsample_total = 1;

    // Stem plus two per block; projection shortcuts are not counted.
    std::int64_t conv_layer_count() const {
        return 1 + 2 * static_cast<std::int64_t>(blocks.size());
    }
};

inline NetworkPlan plan_network(const NetworkConfig& cfg) {
    if (cfg.base_channels < 1 || cfg.filter_len < 1 || cfg.num_classes < 2)
        throw ConfigError("network config: base_channels/filter_len/num_classes out of range");
    if (cfg.norm == NormKind::Group &&
        (cfg.group_count < 1 || cfg.base_channels % cfg.group_count != 0))
        throw ConfigError("network config: base_channels must be divisible by group_count");

    const std::int64_t blocks =
        cfg.num_blocks_override > 0 ? cfg.num_blocks_override
                                    : (cfg.variant == Variant::Default ? 16 : 8);
    const std::int64_t width_period =
        cfg.width_period_override > 0 ? cfg.width_period_override
                                      : (cfg.variant == Variant::Default ? 4 : 2);

    NetworkPlan plan;
    std::int64_t len = cfg.input_len;
    std::int64_t ch = cfg.base_channels;
    for (std::int64_t i = 0; i < blocks; ++i) {
        BlockSpec b;
        b.in_ch = ch;
        b.out_ch = cfg.base_channels * (1 + i / width_period);
        b.subsample = cfg.variant == Variant::Default ? (i % 2 == 1) : true;
        b.in_len = len;
        if (b.subsample) {
            len = (len + 1) / 2;
            plan.subsample_total *= 2;
        }
        b.out_len = len;
        plan.blocks.push_back(b);
        ch = b.out_ch;
    }
    if (cfg.input_len < plan.subsample_total)
        throw ConfigError("network config: input_len must be >= the total subsampling factor " +
                          std::to_string(plan.subsample_total));
    plan.final_len = len;
    plan.final_ch = ch;
    plan.flatten_dim = ch * len;
    return plan;
}

template <typename T>
struct Network {
    NetworkConfig config;
    NetworkPlan plan;
    ParamSet<T> params;   // trainable parameters, canonical order
    ParamSet<T> buffers;  // batch-norm running statistics, canonical order
};

namespace detail {

template <typename T>
void add_norm(Network<T>& net, const std::string& prefix, std::int64_t channels) {
    net.params.add(prefix + ".scale", tensor_full<T>({channels}, T(1)));
    net.params.add(prefix + ".shift", Tensor<T>({channels}));
    if (net.config.norm == NormKind::Batch) {
        net.buffers.add(prefix + ".running_mean", Tensor<T>({channels}));
        net.buffers.add(prefix + ".running_var", tensor_full<T>({channels}, T(1)));
    }
}

}  // namespace detail

// Builds the network with Kaiming-uniform conv weights (bound sqrt(6/fan_in),
// fan_in = C_in*K), norm scale 1 / shift 0, running stats mean 0 / var 1,
// and a gentler uniform head (bound 1/sqrt(flatten_dim)) with zero bias.
// Body convs carry no bias: every conv output is normalized downstream and
// the norm shift already provides the per-channel offset. Random draws are
// consumed in canonical parameter order.
template <typename T>
Network<T> build_network(const NetworkConfig& cfg, SeededRng& rng) {
    Network<T> net;
    net.config = cfg;
    net.plan = plan_network(cfg);

    net.params.add("stem.conv.weight",
                   kaiming_uniform<T>({cfg.base_channels, 1, cfg.filter_len}, cfg.filter_len, rng));

    for (std::size_t i = 0; i < net.plan.blocks.size(); ++i) {
        const BlockSpec& b = net.plan.blocks[i];
        const std::string p = "block" + std::to_string(i);
        detail::add_norm(net, p + ".norm1", b.in_ch);
        net.params.add(p + ".conv1.weight",
                       kaiming_uniform<T>({b.out_ch, b.in_ch, cfg.filter_len},
                                          b.in_ch * cfg.filter_len, rng));
        detail::add_norm(net, p + ".norm2", b.out_ch);
        net.params.add(p + ".conv2.weight",
                       kaiming_uniform<T>({b.out_ch, b.out_ch, cfg.filter_len},
                                          b.out_ch * cfg.filter_len, rng));
        if (b.in_ch != b.out_ch)
            net.params.add(p + ".proj.weight",
                           kaiming_uniform<T>({b.out_ch, b.in_ch, 1}, b.in_ch, rng));
    }

    detail::add_norm(net, "final_norm", net.plan.final_ch);
    net.params.add("head.weight",
                   head_uniform<T>({cfg.num_classes, net.plan.flatten_dim}, net.plan.flatten_dim, rng));
    net.params.add("head.bias", Tensor<T>({cfg.num_classes}));
    return net;
}

template <typename T>
std::int64_t parameter_count(const Network<T>& net) {
    return net.params.total_elements();
}

// Entries with these suffixes are running statistics, not trainables.
inline bool is_buffer_name(std::string_view name) {
    const auto ends_with = [&](std::string_view suffix) {
        return name.size() >= suffix.size() &&
               name.substr(name.size() - suffix.size()) == suffix;
    };
    return ends_with(".running_mean") || ends_with(".running_var");
}

// Canonical wire form: params and buffers interleaved per layer in depth
// order (scale, shift, running_mean, running_var within a norm layer).
template <typename T>
ParamSet<T> wire_param_set(const Network<T>& net) {
    ParamSet<T> out;
    for (const auto& [name, tensor] : net.params) {
        out.add(name, tensor);
        if (name.size() > 6 && name.substr(name.size() - 6) == ".shift") {
            const std::string prefix = name.substr(0, name.size() - 6);
            if (const Tensor<T>* rm = net.buffers.find(prefix + ".running_mean"))
                out.add(prefix + ".running_mean", *rm);
            if (const Tensor<T>* rv = net.buffers.find(prefix + ".running_var"))
                out.add(prefix + ".running_var", *rv);
        }
    }
    return out;
}

template <typename T>
void load_wire_param_set(Network<T>& net, const ParamSet<T>& wire) {
    for (const auto& [name, tensor] : wire) {
        ParamSet<T>& dst = is_buffer_name(name) ? net.buffers : net.params;
        Tensor<T>* t = nullptr;
        if (dst.contains(name)) t = &dst.get(name);
        if (!t) throw AlignmentError("load_wire_param_set: unknown entry '" + name + "'");
        if (t->shape() != tensor.shape())
            throw AlignmentError("load_wire_param_set: shape mismatch for '" + name + "'");
        *t = tensor;
    }
    const std::size_t expect = net.params.size() + net.buffers.size();
    if (wire.size() != expect)
        throw AlignmentError("load_wire_param_set: expected " + std::to_string(expect) +
                             " entries, got " + std::to_string(wire.size()));
}

// ---------------------------------------------------------------------------
// Forward / backward

template <typename T>
struct BlockCache {
    NormCache<T> norm1;
    ReluCache<T> relu1;
    DropoutCache<T> drop1;
    ConvCache<T> conv1;
    NormCache<T> norm2;
    ReluCache<T> relu2;
    DropoutCache<T> drop2;
    ConvCache<T> conv2;
    // shortcut
    bool has_proj = false;
    bool has_pool = false;
    ConvCache<T> proj;
    PoolCache<T> pool;
};

template <typename T>
struct ForwardCache {
    Mode mode = Mode::Eval;
    ConvCache<T> stem;
    std::vector<BlockCache<T>> blocks;
    NormCache<T> final_norm;
    ReluCache<T> final_relu;
    Shape pre_flatten_shape;
    DenseCache<T> head;
};

// One pre-activation residual block: [norm -> ReLU -> (dropout) -> conv] x2
// plus the shortcut (identity / max-pool / 1x1 stride-matched projection).
template <typename T>
Tensor<T> residual_block_forward(Network<T>& net, std::size_t block_idx, const Tensor<T>& x,
                                 Mode mode, SeededRng* rng = nullptr,
                                 BlockCache<T>* cache = nullptr) {
    const BlockSpec& spec = net.plan.blocks[block_idx];
    const std::string p = "block" + std::to_string(block_idx);
    const NetworkConfig& cfg = net.config;
    const std::int64_t stride = spec.subsample ? 2 : 1;
    const T dropout_p = static_cast<T>(cfg.dropout_p);

    auto norm = [&](const std::string& layer, const Tensor<T>& in, NormCache<T>* nc) {
        Tensor<T>* rm = nullptr;
        Tensor<T>* rv = nullptr;
        if (cfg.norm == NormKind::Batch) {
            rm = &net.buffers.get(p + "." + layer + ".running_mean");
            rv = &net.buffers.get(p + "." + layer + ".running_var");
        }
        return norm_forward(in, cfg.norm, cfg.group_count, net.params.get(p + "." + layer + ".scale"),
                            net.params.get(p + "." + layer + ".shift"), rm, rv, mode, T(0.1), nc);
    };

    const Tensor<T> zero_bias(Shape{spec.out_ch});

    Tensor<T> a = norm(std::string("norm1"), x, cache ? &cache->norm1 : nullptr);
    a = relu_forward(a, cache ? &cache->relu1 : nullptr);
    a = dropout_forward(a, dropout_p, mode, rng, cache ? &cache->drop1 : nullptr);
    a = conv1d_forward(std::move(a), net.params.get(p + ".conv1.weight"), zero_bias, stride,
                       cache ? &cache->conv1 : nullptr);
    a = norm(std::string("norm2"), a, cache ? &cache->norm2 : nullptr);
    a = relu_forward(a, cache ? &cache->relu2 : nullptr);
    a = dropout_forward(a, dropout_p, mode, rng, cache ? &cache->drop2 : nullptr);
    a = conv1d_forward(std::move(a), net.params.get(p + ".conv2.weight"), zero_bias, 1,
                       cache ? &cache->conv2 : nullptr);

    Tensor<T> shortcut;
    if (spec.in_ch != spec.out_ch) {
        if (cache) cache->has_proj = true;
        shortcut = conv1d_forward(x, net.params.get(p + ".proj.weight"), zero_bias, stride,
                                  cache ? &cache->proj : nullptr);
    } else if (spec.subsample) {
        if (cache) cache->has_pool = true;
        shortcut = maxpool2_forward(x, cache ? &cache->pool : nullptr);
    } else {
        shortcut = x;
    }
    if (a.shape() != shortcut.shape())
        throw ContractError("residual block " + std::to_string(block_idx) +
                            ": main path and shortcut shapes diverged");
    axpy_inplace(a, T(1), shortcut);
    return a;
}

// Runs the network on a batch [N, 1, input_len]. In Train mode the returned
// cache supports backward(); Eval mode touches no state (running statistics
// included) and needs no rng even with dropout configured.
template <typename T>
Tensor<T> forward(Network<T>& net, const Tensor<T>& batch, Mode mode, ForwardCache<T>* cache = nullptr,
                  SeededRng* rng = nullptr) {
    if (batch.rank() != 3 || batch.dim(1) != 1 || batch.dim(2) != net.config.input_len)
        throw ShapeError("forward: expected batch [N,1," + std::to_string(net.config.input_len) +
                         "], got " + shape_str(batch.shape()));
    if (cache) {
        cache->mode = mode;
        cache->blocks.resize(net.plan.blocks.size());
    }

    Tensor<T> a = conv1d_forward(batch, net.params.get("stem.conv.weight"),
                                 Tensor<T>({net.config.base_channels}), 1,
                                 cache ? &cache->stem : nullptr);
    for (std::size_t i = 0; i < net.plan.blocks.size(); ++i)
        a = residual_block_forward(net, i, a, mode, rng, cache ? &cache->blocks[i] : nullptr);

    Tensor<T>* rm = nullptr;
    Tensor<T>* rv = nullptr;
    if (net.config.norm == NormKind::Batch) {
        rm = &net.buffers.get("final_norm.running_mean");
        rv = &net.buffers.get("final_norm.running_var");
    }
    a = norm_forward(a, net.config.norm, net.config.group_count, net.params.get("final_norm.scale"),
                     net.params.get("final_norm.shift"), rm, rv, mode, T(0.1),
                     cache ? &cache->final_norm : nullptr);
    a = relu_forward(a, cache ? &cache->final_relu : nullptr);

    if (cache) cache->pre_flatten_shape = a.shape();
    Tensor<T> flat = a.reshaped({a.dim(0), a.dim(1) * a.dim(2)});
    return dense_forward(std::move(flat), net.params.get("head.weight"), net.params.get("head.bias"),
                         cache ? &cache->head : nullptr);
}

// Gradients of the loss w.r.t. every trainable parameter, name-aligned with
// net.params. Requires a Train-mode cache from the matching forward.
template <typename T>
ParamSet<T> backward(const Network<T>& net, const ForwardCache<T>& cache,
                     const Tensor<T>& grad_logits) {
    if (cache.mode != Mode::Train)
        throw ContractError("backward: cache was produced by an Eval-mode forward");

    ParamSet<T> grads = ps_zeros_like(net.params);

    DenseGrads<T> hg = dense_backward(cache.head, grad_logits);
    grads.get("head.weight") = std::move(hg.w);
    grads.get("head.bias") = std::move(hg.b);
    Tensor<T> g = hg.x.reshaped(cache.pre_flatten_shape);

    g = relu_backward(cache.final_relu, g);
    {
        NormGrads<T> ng = norm_backward(cache.final_norm, g);
        grads.get("final_norm.scale") = std::move(ng.scale);
        grads.get("final_norm.shift") = std::move(ng.shift);
        g = std::move(ng.x);
    }

    for (std::size_t ri = net.plan.blocks.size(); ri-- > 0;) {
        const BlockCache<T>& bc = cache.blocks[ri];
        const std::string p = "block" + std::to_string(ri);

        // shortcut branch
        Tensor<T> gs;
        if (bc.has_proj) {
            ConvGrads<T> pg = conv1d_backward(bc.proj, g);
            grads.get(p + ".proj.weight") = std::move(pg.w);
            gs = std::move(pg.x);
        } else if (bc.has_pool) {
            gs = maxpool2_backward(bc.pool, g);
        } else {
            gs = g;
        }

        // main branch
        ConvGrads<T> c2 = conv1d_backward(bc.conv2, g);
        grads.get(p + ".conv2.weight") = std::move(c2.w);
        Tensor<T> gm = dropout_backward(bc.drop2, c2.x);
        gm = relu_backward(bc.relu2, gm);
        {
            NormGrads<T> ng = norm_backward(bc.norm2, gm);
            grads.get(p + ".norm2.scale") = std::move(ng.scale);
            grads.get(p + ".norm2.shift") = std::move(ng.shift);
            gm = std::move(ng.x);
        }
        ConvGrads<T> c1 = conv1d_backward(bc.conv1, gm);
        grads.get(p + ".conv1.weight") = std::move(c1.w);
        gm = dropout_backward(bc.drop1, c1.x);
        gm = relu_backward(bc.relu1, gm);
        {
            NormGrads<T> ng = norm_backward(bc.norm1, gm);
            grads.get(p + ".norm1.scale") = std::move(ng.scale);
            grads.get(p + ".norm1.shift") = std::move(ng.shift);
            gm = std::move(ng.x);
        }

        axpy_inplace(gm, T(1), gs);
        g = std::move(gm);
    }

    ConvGrads<T> sg = conv1d_backward(cache.stem, g);
    grads.get("stem.conv.weight") = std::move(sg.w);
    return grads;
}

// ---------------------------------------------------------------------------
// Gradient checking (f64 only): central finite differences on a seeded
// subsample of parameter coordinates, at least min_coords overall and at
// least one per parameter tensor.

struct GradCheckLayer {
    std::string name;
    double max_rel_err = 0;
    std::int64_t coords = 0;
};

struct GradCheckReport {
    std::vector<GradCheckLayer> layers;
    double max_rel_err = 0;
};

inline double grad_check_rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

inline GradCheckReport grad_check(Network<double>& net, const Tensor<double>& batch,
                                  const std::vector<int>& labels, double h, SeededRng& rng,
                                  std::int64_t min_coords = 200) {
    if (net.config.dropout_p > 0)
        throw ValueError("grad_check: dropout_p > 0 makes the Train path non-deterministic");

    const ParamSet<double> buffers_snapshot = net.buffers;
    auto loss_at = [&]() {
        ForwardCache<double> cache;
        Tensor<double> logits = forward(net, batch, Mode::Train, &cache);
        return static_cast<double>(loss_and_grad(logits, labels).first);
    };

    ForwardCache<double> cache;
    Tensor<double> logits = forward(net, batch, Mode::Train, &cache);
    auto [loss, grad_logits] = loss_and_grad(logits, labels);
    (void)loss;
    ParamSet<double> analytic = backward(net, cache, grad_logits);

    const std::int64_t total = net.params.total_elements();
    GradCheckReport report;
    for (auto& [name, tensor] : net.params) {
        std::int64_t want = std::max<std::int64_t>(
            1, (min_coords * tensor.numel() + total - 1) / total);
        want = std::min(want, tensor.numel());
        GradCheckLayer layer{name, 0.0, want};
        const Tensor<double>& a = analytic.get(name);
        for (std::int64_t s = 0; s < want; ++s) {
            const std::int64_t idx =
                want == tensor.numel() ? s : static_cast<std::int64_t>(rng.next_below(
                                                 static_cast<std::uint64_t>(tensor.numel())));
            const double saved = tensor[idx];
            tensor[idx] = saved + h;
            const double up = loss_at();
            tensor[idx] = saved - h;
            const double down = loss_at();
            tensor[idx] = saved;
            const double numeric = (up - down) / (2 * h);
            layer.max_rel_err = std::max(layer.max_rel_err, grad_check_rel_err(a[idx], numeric));
        }
        report.max_rel_err = std::max(report.max_rel_err, layer.max_rel_err);
        report.layers.push_back(std::move(layer));
    }
    net.buffers = buffers_snapshot;
    return report;
}

}  // namespace fedecg::nn
