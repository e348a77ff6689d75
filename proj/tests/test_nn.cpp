#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fedecg/nn/network.hpp"
#include "oracles.hpp"

using namespace fedecg;
using namespace fedecg::nn;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape shape, SeededRng& rng, double lo = -1, double hi = 1) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

// Tiny config exercising every layer type: 2 blocks in the Small layout
// (every block subsampling) with a width bump at block 1 so the projection
// shortcut is built too.
NetworkConfig tiny_config(NormKind norm, std::int64_t input_len = 512) {
    NetworkConfig cfg;
    cfg.variant = Variant::Small;
    cfg.norm = norm;
    cfg.group_count = 2;
    cfg.input_len = input_len;
    cfg.base_channels = 4;
    cfg.filter_len = 16;
    cfg.num_classes = 4;
    cfg.num_blocks_override = 2;
    cfg.width_period_override = 1;
    return cfg;
}

template <typename T>
std::vector<int> random_labels(std::int64_t n, std::int64_t classes, SeededRng& rng) {
    std::vector<int> labels;
    for (std::int64_t i = 0; i < n; ++i)
        labels.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(classes))));
    return labels;
}

}  // namespace

// ---------------------------------------------------------------------------
// conv1d

TEST_CASE("conv on all-zero input is the broadcast bias") {
    SeededRng rng(1);
    auto x = tensor_full<float>({2, 3, 10}, 0.0f);
    auto w = random_tensor<float>({4, 3, 5}, rng);
    Tensor<float> b({4}, {1, 2, 3, 4});
    auto y = conv1d_forward(x, w, b, 1);
    CHECK(y.shape() == Shape{2, 4, 10});
    for (std::int64_t n = 0; n < 2; ++n)
        for (std::int64_t c = 0; c < 4; ++c)
            for (std::int64_t t = 0; t < 10; ++t)
                CHECK(y[(n * 4 + c) * 10 + t] == b[c]);
}

TEST_CASE("delta kernel reproduces the input") {
    Tensor<float> x({1, 1, 8}, {1, -2, 3, -4, 5, -6, 7, -8});
    Tensor<float> w({1, 1, 3}, {0, 1, 0});
    Tensor<float> b({1}, {0});
    auto y = conv1d_forward(x, w, b, 1);
    REQUIRE(y.shape() == Shape{1, 1, 8});
    for (int i = 0; i < 8; ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("conv matches the quadruple-loop oracle") {
    SeededRng rng(12);
    auto x = random_tensor<float>({2, 3, 16}, rng);
    auto w = random_tensor<float>({4, 3, 16}, rng);
    auto b = random_tensor<float>({4}, rng);
    for (const std::int64_t stride : {1, 2}) {
        auto y = conv1d_forward(x, w, b, stride);
        auto o = oracle::conv1d(x, w, b, stride);
        REQUIRE(y.shape() == o.shape());
        for (std::int64_t i = 0; i < y.numel(); ++i) CHECK(std::abs(y[i] - o[i]) < 1e-5);
    }
}

TEST_CASE("conv output length follows the ceil rule at both strides") {
    SeededRng rng(13);
    for (const std::int64_t len : {7, 8, 15, 16, 17}) {
        auto x = random_tensor<float>({1, 2, len}, rng);
        auto w = random_tensor<float>({2, 2, 16}, rng);
        auto b = random_tensor<float>({2}, rng);
        CHECK(conv1d_forward(x, w, b, 1).dim(2) == len);
        CHECK(conv1d_forward(x, w, b, 2).dim(2) == (len + 1) / 2);
    }
}

TEST_CASE("conv rejects channel mismatch") {
    auto x = tensor_full<float>({1, 3, 8}, 0.0f);
    auto w = tensor_full<float>({2, 4, 3}, 0.0f);
    auto b = tensor_full<float>({2}, 0.0f);
    CHECK_THROWS_AS(conv1d_forward(x, w, b, 1), ShapeError);
}

TEST_CASE("conv backward: zero upstream grad gives zero gradients") {
    SeededRng rng(2);
    auto x = random_tensor<float>({2, 2, 12}, rng);
    auto w = random_tensor<float>({3, 2, 5}, rng);
    auto b = random_tensor<float>({3}, rng);
    ConvCache<float> cache;
    auto y = conv1d_forward(x, w, b, 2, &cache);
    auto g = conv1d_backward(cache, zeros_like(y));
    for (auto v : g.x.values()) CHECK(v == 0.0f);
    for (auto v : g.w.values()) CHECK(v == 0.0f);
    for (auto v : g.b.values()) CHECK(v == 0.0f);
}

TEST_CASE("conv bias gradient is the sum of upstream grads") {
    SeededRng rng(3);
    auto x = random_tensor<double>({2, 2, 9}, rng);
    auto w = random_tensor<double>({3, 2, 4}, rng);
    auto b = random_tensor<double>({3}, rng);
    ConvCache<double> cache;
    auto y = conv1d_forward(x, w, b, 1, &cache);
    auto gy = random_tensor<double>(y.shape(), rng);
    auto g = conv1d_backward(cache, gy);
    for (std::int64_t c = 0; c < 3; ++c) {
        double sum = 0;
        for (std::int64_t n = 0; n < 2; ++n)
            for (std::int64_t t = 0; t < 9; ++t) sum += gy[(n * 3 + c) * 9 + t];
        CHECK(g.b[c] == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("conv backward rejects a stale cache") {
    SeededRng rng(4);
    auto x = random_tensor<float>({1, 1, 8}, rng);
    auto w = random_tensor<float>({1, 1, 3}, rng);
    auto b = random_tensor<float>({1}, rng);
    ConvCache<float> cache;
    auto y = conv1d_forward(x, w, b, 1, &cache);
    CHECK_THROWS_AS(conv1d_backward(cache, tensor_full<float>({1, 1, 5}, 0.0f)), ContractError);
}

// Finite-difference gradient checks per layer. All in f64, h = 1e-5,
// tolerance 1e-4 on the relative error.
namespace {

template <typename Fwd>
void check_gradients(Tensor<double>& param, const Tensor<double>& analytic, Fwd&& loss_fn,
                     double tol = 1e-4, int max_coords = 64) {
    SeededRng pick(997);
    const std::int64_t n = param.numel();
    const std::int64_t checks = std::min<std::int64_t>(n, max_coords);
    for (std::int64_t s = 0; s < checks; ++s) {
        const std::int64_t i =
            checks == n ? s : static_cast<std::int64_t>(pick.next_below(static_cast<std::uint64_t>(n)));
        const double saved = param[i];
        const double h = 1e-5;
        param[i] = saved + h;
        const double up = loss_fn();
        param[i] = saved - h;
        const double down = loss_fn();
        param[i] = saved;
        const double numeric = (up - down) / (2 * h);
        CHECK(oracle::rel_err(analytic[i], numeric) < tol);
    }
}

// Weighted sum of outputs as a scalar loss so every output coordinate
// contributes to the gradient.
template <typename T>
double weighted_sum(const Tensor<T>& y, const Tensor<T>& weights) {
    double s = 0;
    for (std::int64_t i = 0; i < y.numel(); ++i) s += y[i] * weights[i];
    return s;
}

}  // namespace

TEST_CASE("conv gradients match finite differences") {
    SeededRng rng(5);
    for (const std::int64_t stride : {1, 2}) {
        for (const std::int64_t k : {1, 16}) {
            auto x = random_tensor<double>({2, 3, 14}, rng);
            auto w = random_tensor<double>({2, 3, k}, rng);
            auto b = random_tensor<double>({2}, rng);
            ConvCache<double> cache;
            auto y0 = conv1d_forward(x, w, b, stride, &cache);
            auto lw = random_tensor<double>(y0.shape(), rng);
            auto grads = conv1d_backward(cache, lw);

            auto loss = [&] { return weighted_sum(conv1d_forward(x, w, b, stride), lw); };
            check_gradients(x, grads.x, loss);
            check_gradients(w, grads.w, loss);
            check_gradients(b, grads.b, loss);
        }
    }
}

// ---------------------------------------------------------------------------
// normalization

TEST_CASE("constant input normalizes to the shift (zeros before affine)") {
    auto x = tensor_full<float>({2, 3, 5}, 4.2f);
    auto scale = tensor_full<float>({3}, 1.0f);
    auto shift = tensor_full<float>({3}, 0.0f);
    auto rm = tensor_full<float>({3}, 0.0f);
    auto rv = tensor_full<float>({3}, 1.0f);
    for (const NormKind kind : {NormKind::Batch, NormKind::Layer, NormKind::Group}) {
        auto y = norm_forward(x, kind, 3, scale, shift, &rm, &rv, Mode::Train);
        for (auto v : y.values()) CHECK(std::abs(v) < 1e-5);
    }
}

TEST_CASE("batch norm in Train yields unit batch statistics before affine") {
    SeededRng rng(6);
    auto x = random_tensor<float>({4, 3, 50}, rng, -2, 5);
    auto scale = tensor_full<float>({3}, 1.0f);
    auto shift = tensor_full<float>({3}, 0.0f);
    auto rm = tensor_full<float>({3}, 0.0f);
    auto rv = tensor_full<float>({3}, 1.0f);
    NormCache<float> cache;
    norm_forward(x, NormKind::Batch, 1, scale, shift, &rm, &rv, Mode::Train, 0.1f, &cache);
    for (std::int64_t c = 0; c < 3; ++c) {
        double mean = 0, var = 0;
        for (std::int64_t n = 0; n < 4; ++n)
            for (std::int64_t l = 0; l < 50; ++l) mean += cache.x_hat[(n * 3 + c) * 50 + l];
        mean /= 200;
        for (std::int64_t n = 0; n < 4; ++n)
            for (std::int64_t l = 0; l < 50; ++l) {
                const double d = cache.x_hat[(n * 3 + c) * 50 + l] - mean;
                var += d * d;
            }
        var /= 200;
        CHECK(std::abs(mean) < 1e-5);
        CHECK(std::abs(var - 1.0) < 1e-4);
    }
}

TEST_CASE("group norm with one group equals layer norm") {
    SeededRng rng(7);
    auto x = random_tensor<float>({3, 6, 20}, rng);
    auto scale = random_tensor<float>({6}, rng, 0.5, 1.5);
    auto shift = random_tensor<float>({6}, rng);
    auto yl = norm_forward(x, NormKind::Layer, 1, scale, shift, nullptr,
                           nullptr, Mode::Train);
    auto yg = norm_forward(x, NormKind::Group, 1, scale, shift, nullptr,
                           nullptr, Mode::Train);
    for (std::int64_t i = 0; i < yl.numel(); ++i) CHECK(std::abs(yl[i] - yg[i]) < 1e-6);
}

TEST_CASE("group norm with group_count == channels is instance norm") {
    SeededRng rng(8);
    auto x = random_tensor<float>({2, 4, 30}, rng);
    auto scale = tensor_full<float>({4}, 1.0f);
    auto shift = tensor_full<float>({4}, 0.0f);
    auto y = norm_forward(x, NormKind::Group, 4, scale, shift, nullptr,
                          nullptr, Mode::Train);
    // instance-norm oracle: normalize each (n, c) row over L
    for (std::int64_t n = 0; n < 2; ++n)
        for (std::int64_t c = 0; c < 4; ++c) {
            double mean = 0, var = 0;
            for (std::int64_t l = 0; l < 30; ++l) mean += x[(n * 4 + c) * 30 + l];
            mean /= 30;
            for (std::int64_t l = 0; l < 30; ++l) {
                const double d = x[(n * 4 + c) * 30 + l] - mean;
                var += d * d;
            }
            var /= 30;
            for (std::int64_t l = 0; l < 30; ++l) {
                const double expect = (x[(n * 4 + c) * 30 + l] - mean) / std::sqrt(var + 1e-5);
                CHECK(std::abs(y[(n * 4 + c) * 30 + l] - expect) < 1e-5);
            }
        }
}

TEST_CASE("batch norm eval uses running stats and mutates nothing") {
    SeededRng rng(9);
    auto x = random_tensor<float>({2, 3, 10}, rng);
    auto scale = tensor_full<float>({3}, 1.0f);
    auto shift = tensor_full<float>({3}, 0.0f);
    Tensor<float> rm({3}, {0.5f, -0.5f, 0.0f});
    Tensor<float> rv({3}, {4.0f, 1.0f, 0.25f});
    auto rm_before = rm, rv_before = rv;
    auto y = norm_forward(x, NormKind::Batch, 1, scale, shift, &rm, &rv, Mode::Eval);
    for (int i = 0; i < 3; ++i) {
        CHECK(rm[i] == rm_before[i]);
        CHECK(rv[i] == rv_before[i]);
    }
    const float expect = (x[0] - 0.5f) / std::sqrt(4.0f + 1e-5f);
    CHECK(y[0] == doctest::Approx(expect));
}

TEST_CASE("batch norm train updates running stats with momentum 0.1") {
    auto x = tensor_full<float>({1, 1, 4}, 2.0f);
    // give the channel real variance: values 0,2,4,6 -> mean 3, var 5
    Tensor<float> xv({1, 1, 4}, {0, 2, 4, 6});
    auto scale = tensor_full<float>({1}, 1.0f);
    auto shift = tensor_full<float>({1}, 0.0f);
    auto rm = tensor_full<float>({1}, 0.0f);
    auto rv = tensor_full<float>({1}, 1.0f);
    norm_forward(xv, NormKind::Batch, 1, scale, shift, &rm, &rv, Mode::Train);
    CHECK(rm[0] == doctest::Approx(0.3));       // 0.9*0 + 0.1*3
    CHECK(rv[0] == doctest::Approx(0.9 + 0.5)); // 0.9*1 + 0.1*5
}

TEST_CASE("degenerate batch is rejected for Batch/Train") {
    auto x = tensor_full<float>({1, 2, 1}, 1.0f);
    auto scale = tensor_full<float>({2}, 1.0f);
    auto shift = tensor_full<float>({2}, 0.0f);
    auto rm = tensor_full<float>({2}, 0.0f);
    auto rv = tensor_full<float>({2}, 1.0f);
    CHECK_THROWS_AS(norm_forward(x, NormKind::Batch, 1, scale, shift, &rm, &rv, Mode::Train),
                    ValueError);
    // fine in Eval
    CHECK_NOTHROW(norm_forward(x, NormKind::Batch, 1, scale, shift, &rm, &rv, Mode::Eval));
}

TEST_CASE("norm gradients match finite differences for all three kinds") {
    SeededRng rng(10);
    for (const NormKind kind : {NormKind::Batch, NormKind::Layer, NormKind::Group}) {
        auto x = random_tensor<double>({3, 4, 7}, rng);
        auto scale = random_tensor<double>({4}, rng, 0.5, 1.5);
        auto shift = random_tensor<double>({4}, rng);
        auto rm = tensor_full<double>({4}, 0.0);
        auto rv = tensor_full<double>({4}, 1.0);

        NormCache<double> cache;
        auto y0 = norm_forward(x, kind, 2, scale, shift, &rm, &rv, Mode::Train, 0.1, &cache);
        auto lw = random_tensor<double>(y0.shape(), rng);
        auto grads = norm_backward(cache, lw);

        auto loss = [&] {
            auto rm2 = rm;
            auto rv2 = rv;  // keep running stats fixed across evaluations
            return weighted_sum(
                norm_forward(x, kind, 2, scale, shift, &rm2, &rv2, Mode::Train), lw);
        };
        check_gradients(x, grads.x, loss);
        check_gradients(scale, grads.scale, loss);
        check_gradients(shift, grads.shift, loss);
    }
}

// ---------------------------------------------------------------------------
// pooling, dense, relu, dropout, loss

TEST_CASE("maxpool halves length with ceil and routes gradients to the argmax") {
    Tensor<float> x({1, 1, 5}, {1, 3, 2, 2, 7});
    PoolCache<float> cache;
    auto y = maxpool2_forward(x, &cache);
    REQUIRE(y.shape() == Shape{1, 1, 3});
    CHECK(y[0] == 3.0f);
    CHECK(y[1] == 2.0f);  // tie -> earlier element
    CHECK(y[2] == 7.0f);

    Tensor<float> gy({1, 1, 3}, {1, 1, 1});
    auto gx = maxpool2_backward(cache, gy);
    CHECK(gx[0] == 0.0f);
    CHECK(gx[1] == 1.0f);
    CHECK(gx[2] == 1.0f);  // tie went to index 2
    CHECK(gx[3] == 0.0f);
    CHECK(gx[4] == 1.0f);
}

TEST_CASE("dense gradients match finite differences") {
    SeededRng rng(11);
    auto x = random_tensor<double>({3, 6}, rng);
    auto w = random_tensor<double>({4, 6}, rng);
    auto b = random_tensor<double>({4}, rng);
    DenseCache<double> cache;
    auto y0 = dense_forward(x, w, b, &cache);
    auto lw = random_tensor<double>(y0.shape(), rng);
    auto grads = dense_backward(cache, lw);
    auto loss = [&] { return weighted_sum(dense_forward(x, w, b), lw); };
    check_gradients(x, grads.x, loss);
    check_gradients(w, grads.w, loss);
    check_gradients(b, grads.b, loss);
}

TEST_CASE("dropout is identity when off and rescales when on") {
    SeededRng rng(21);
    auto x = tensor_full<float>({1000}, 1.0f);
    auto y_off = dropout_forward(x, 0.0f, Mode::Train, &rng);
    for (auto v : y_off.values()) CHECK(v == 1.0f);
    auto y_eval = dropout_forward(x, 0.5f, Mode::Eval, nullptr);
    for (auto v : y_eval.values()) CHECK(v == 1.0f);

    DropoutCache<float> cache;
    auto y = dropout_forward(x, 0.5f, Mode::Train, &rng, &cache);
    int kept = 0;
    for (auto v : y.values()) {
        CHECK((v == 0.0f || v == 2.0f));
        kept += v != 0.0f;
    }
    CHECK(kept > 400);
    CHECK(kept < 600);
    CHECK_THROWS_AS(dropout_forward(x, 0.5f, Mode::Train, nullptr), ValueError);
}

TEST_CASE("uniform logits give loss ln C") {
    auto logits = tensor_full<double>({5, 4}, 0.7);
    auto [loss, grad] = loss_and_grad(logits, {0, 1, 2, 3, 0});
    CHECK(loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("saturated correct logit gives near-zero loss") {
    Tensor<double> logits({1, 4}, {50, 0, 0, 0});
    auto [loss, grad] = loss_and_grad(logits, {0});
    CHECK(loss < 1e-6);
}

TEST_CASE("out-of-range labels are rejected") {
    auto logits = tensor_full<double>({1, 4}, 0.0);
    CHECK_THROWS_AS(loss_and_grad(logits, {4}), ValueError);
    CHECK_THROWS_AS(loss_and_grad(logits, {-1}), ValueError);
}

TEST_CASE("loss gradient matches finite differences") {
    SeededRng rng(14);
    auto logits = random_tensor<double>({4, 4}, rng, -2, 2);
    const std::vector<int> labels = {0, 3, 1, 2};
    auto [loss, grad] = loss_and_grad(logits, labels);
    for (std::int64_t i = 0; i < logits.numel(); ++i) {
        const double saved = logits[i];
        const double h = 1e-6;
        logits[i] = saved + h;
        const double up = loss_and_grad(logits, labels).first;
        logits[i] = saved - h;
        const double down = loss_and_grad(logits, labels).first;
        logits[i] = saved;
        CHECK(oracle::rel_err(grad[i], (up - down) / (2 * h)) < 1e-6);
    }
}

// ---------------------------------------------------------------------------
// network assembly

TEST_CASE("default plan: 33 conv layers, 2^8 subsampling, 6000 -> 24") {
    NetworkConfig cfg;  // Default
    const NetworkPlan plan = plan_network(cfg);
    CHECK(plan.conv_layer_count() == 33);
    CHECK(plan.subsample_total == 256);
    CHECK(plan.final_len == 24);
    CHECK(plan.final_ch == 256);
    CHECK(plan.flatten_dim == 6144);
}

TEST_CASE("small plan: 17 conv layers, same 2^8 subsampling and head shape") {
    NetworkConfig cfg;
    cfg.variant = Variant::Small;
    const NetworkPlan plan = plan_network(cfg);
    CHECK(plan.conv_layer_count() == 17);
    CHECK(plan.subsample_total == 256);
    CHECK(plan.final_len == 24);
    CHECK(plan.final_ch == 256);
    CHECK(plan.flatten_dim == 6144);
}

TEST_CASE("shape chain: final length is 8 iterated ceil-halvings for any input") {
    SeededRng rng(15);
    for (int trial = 0; trial < 50; ++trial) {
        const std::int64_t len = 256 + static_cast<std::int64_t>(rng.next_below(20000));
        std::int64_t expect = len;
        for (int i = 0; i < 8; ++i) expect = (expect + 1) / 2;
        for (const Variant v : {Variant::Default, Variant::Small}) {
            NetworkConfig cfg;
            cfg.variant = v;
            cfg.input_len = len;
            CHECK(plan_network(cfg).final_len == expect);
        }
    }
}

TEST_CASE("small/default parameter ratio is between 0.4 and 0.6") {
    SeededRng rng(16);
    NetworkConfig dcfg;
    auto dnet = build_network<float>(dcfg, rng);
    NetworkConfig scfg;
    scfg.variant = Variant::Small;
    SeededRng rng2(16);
    auto snet = build_network<float>(scfg, rng2);
    const double ratio = static_cast<double>(parameter_count(snet)) /
                         static_cast<double>(parameter_count(dnet));
    CHECK(ratio > 0.4);
    CHECK(ratio < 0.6);
}

TEST_CASE("input_len below the subsampling factor is rejected") {
    NetworkConfig cfg;
    cfg.input_len = 255;
    CHECK_THROWS_AS(plan_network(cfg), ConfigError);
}

TEST_CASE("group count must divide base channels") {
    NetworkConfig cfg;
    cfg.norm = NormKind::Group;
    cfg.group_count = 7;
    CHECK_THROWS_AS(plan_network(cfg), ConfigError);
}

TEST_CASE("two builds from equal seeds are identical, different seeds differ") {
    const NetworkConfig cfg = tiny_config(NormKind::Batch);
    SeededRng a(5), b(5), c(6);
    auto na = build_network<float>(cfg, a);
    auto nb = build_network<float>(cfg, b);
    auto nc = build_network<float>(cfg, c);
    CHECK(ps_bitwise_equal(na.params, nb.params));
    CHECK_FALSE(ps_bitwise_equal(na.params, nc.params));

    // canonical order spot checks
    CHECK(na.params[0].first == "stem.conv.weight");
    CHECK(na.params[1].first == "block0.norm1.scale");
    const auto& last = na.params[na.params.size() - 1];
    CHECK(last.first == "head.bias");
}

TEST_CASE("forward emits [N, num_classes] finite logits and eval is pure") {
    const NetworkConfig cfg = tiny_config(NormKind::Batch, 256);
    SeededRng rng(17);
    auto net = build_network<float>(cfg, rng);
    auto x = random_tensor<float>({3, 1, 256}, rng);

    const auto buffers_before = net.buffers;
    auto logits1 = forward(net, x, Mode::Eval);
    auto logits2 = forward(net, x, Mode::Eval);
    CHECK(logits1.shape() == Shape{3, 4});
    for (auto v : logits1.values()) CHECK(std::isfinite(v));
    CHECK(ps_bitwise_equal(net.buffers, buffers_before));  // eval touches nothing
    for (std::int64_t i = 0; i < logits1.numel(); ++i) CHECK(logits1[i] == logits2[i]);

    // train mode does update running stats
    ForwardCache<float> cache;
    forward(net, x, Mode::Train, &cache);
    CHECK_FALSE(ps_bitwise_equal(net.buffers, buffers_before));
}

TEST_CASE("wrong input length is rejected") {
    const NetworkConfig cfg = tiny_config(NormKind::Batch, 256);
    SeededRng rng(18);
    auto net = build_network<float>(cfg, rng);
    auto x = tensor_full<float>({1, 1, 300}, 0.0f);
    CHECK_THROWS_AS(forward(net, x, Mode::Eval), ShapeError);
}

TEST_CASE("fresh default network scores about ln 4 on random labels") {
    NetworkConfig cfg;  // full Default at 6000 samples
    SeededRng rng(19);
    auto net = build_network<float>(cfg, rng);
    auto x = random_tensor<float>({2, 1, 6000}, rng);
    auto logits = forward(net, x, Mode::Train);
    const std::vector<int> labels = {1, 3};
    auto [loss, grad] = loss_and_grad(logits, labels);
    CHECK(std::abs(static_cast<double>(loss) - std::log(4.0)) < 0.15);
}

TEST_CASE("block output equals composed primitives") {
    const NetworkConfig cfg = tiny_config(NormKind::Layer, 256);
    SeededRng rng(22);
    auto net = build_network<float>(cfg, rng);
    auto x = random_tensor<float>({2, 1, 256}, rng);
    const auto zero4 = tensor_full<float>({4}, 0.0f);
    auto stem = conv1d_forward(x, net.params.get("stem.conv.weight"), zero4, 1);

    auto lib = residual_block_forward(net, 0, stem, Mode::Train);

    // same block composed out of the public layer primitives
    auto a = norm_forward(stem, NormKind::Layer, cfg.group_count,
                          net.params.get("block0.norm1.scale"),
                          net.params.get("block0.norm1.shift"),
                          nullptr, nullptr, Mode::Train);
    a = relu_forward(a);
    a = conv1d_forward(a, net.params.get("block0.conv1.weight"), zero4, 2);
    a = norm_forward(a, NormKind::Layer, cfg.group_count, net.params.get("block0.norm2.scale"),
                     net.params.get("block0.norm2.shift"), nullptr,
                     nullptr, Mode::Train);
    a = relu_forward(a);
    a = conv1d_forward(a, net.params.get("block0.conv2.weight"), zero4, 1);
    auto shortcut = maxpool2_forward(stem);
    axpy_inplace(a, 1.0f, shortcut);

    REQUIRE(lib.shape() == a.shape());
    CHECK(a.shape() == Shape{2, 4, 128});  // subsampled, width unchanged
    for (std::int64_t i = 0; i < a.numel(); ++i) CHECK(std::abs(lib[i] - a[i]) < 1e-5);
}

TEST_CASE("subsampling block halves temporal length with ceil") {
    const NetworkConfig cfg = tiny_config(NormKind::Layer, 256);
    SeededRng rng(33);
    auto net = build_network<float>(cfg, rng);
    auto x = random_tensor<float>({1, 4, 77}, rng);
    auto y = residual_block_forward(net, 1, x, Mode::Train);
    CHECK(y.dim(2) == 39);  // ceil(77/2)
}

TEST_CASE("zeroed main path reduces the block to its shortcut") {
    const NetworkConfig cfg = tiny_config(NormKind::Layer, 256);
    SeededRng rng(34);
    auto net = build_network<float>(cfg, rng);
    net.params.get("block0.conv2.weight").fill(0.0f);
    auto x = random_tensor<float>({2, 4, 64}, rng);
    auto y = residual_block_forward(net, 0, x, Mode::Train);
    auto pooled = maxpool2_forward(x);
    REQUIRE(y.shape() == pooled.shape());
    for (std::int64_t i = 0; i < y.numel(); ++i) CHECK(y[i] == doctest::Approx(pooled[i]));
}

TEST_CASE("width-increasing block uses the projection shortcut") {
    const NetworkConfig cfg = tiny_config(NormKind::Layer, 256);  // width period 1
    SeededRng rng(35);
    auto net = build_network<float>(cfg, rng);
    // block1 goes 4 -> 8 channels in this config
    CHECK(net.params.contains("block1.proj.weight"));
    auto x = random_tensor<float>({1, 4, 64}, rng);
    BlockCache<float> cache;
    auto y = residual_block_forward(net, 1, x, Mode::Train, nullptr, &cache);
    CHECK(cache.has_proj);
    CHECK(y.shape() == Shape{1, 8, 32});
}

TEST_CASE("backward produces grads mirroring parameter names and zero grads for zero upstream") {
    const NetworkConfig cfg = tiny_config(NormKind::Batch, 256);
    SeededRng rng(23);
    auto net = build_network<float>(cfg, rng);
    auto x = random_tensor<float>({2, 1, 256}, rng);

    ForwardCache<float> cache;
    auto logits = forward(net, x, Mode::Train, &cache);
    auto grads = backward(net, cache, zeros_like(logits));
    REQUIRE(grads.aligned_with(net.params));
    for (const auto& [name, g] : grads)
        for (auto v : g.values()) CHECK(v == 0.0f);
}

TEST_CASE("backward rejects an eval-mode cache") {
    const NetworkConfig cfg = tiny_config(NormKind::Layer, 256);
    SeededRng rng(24);
    auto net = build_network<float>(cfg, rng);
    auto x = random_tensor<float>({1, 1, 256}, rng);
    ForwardCache<float> cache;
    auto logits = forward(net, x, Mode::Eval, &cache);
    CHECK_THROWS_AS(backward(net, cache, zeros_like(logits)), ContractError);
}

TEST_CASE("full-network gradient check passes for every norm kind") {
    for (const NormKind kind : {NormKind::Batch, NormKind::Layer, NormKind::Group}) {
        NetworkConfig cfg = tiny_config(kind, 512);
        SeededRng rng(25);
        auto net = build_network<double>(cfg, rng);
        auto x = random_tensor<double>({2, 1, 512}, rng);
        SeededRng pick(26);
        auto report = grad_check(net, x, {0, 2}, 1e-5, pick, 200);
        INFO("norm kind ", static_cast<int>(kind), " max rel err ", report.max_rel_err);
        CHECK(report.max_rel_err < 1e-3);
    }
}

TEST_CASE("grad_check rejects dropout in train mode") {
    NetworkConfig cfg = tiny_config(NormKind::Batch, 512);
    cfg.dropout_p = 0.3;
    SeededRng rng(27);
    auto net = build_network<double>(cfg, rng);
    auto x = random_tensor<double>({2, 1, 512}, rng);
    SeededRng pick(28);
    CHECK_THROWS_AS(grad_check(net, x, {0, 1}, 1e-5, pick), ValueError);
}

TEST_CASE("wire param set interleaves running stats and loads back") {
    const NetworkConfig cfg = tiny_config(NormKind::Batch, 256);
    SeededRng rng(29);
    auto net = build_network<float>(cfg, rng);
    auto wire = wire_param_set(net);
    CHECK(wire.size() == net.params.size() + net.buffers.size());
    // canonical interleaving: scale, shift, running_mean, running_var
    bool found = false;
    for (std::size_t i = 0; i + 3 < wire.size(); ++i) {
        if (wire[i].first == "block0.norm1.scale") {
            CHECK(wire[i + 1].first == "block0.norm1.shift");
            CHECK(wire[i + 2].first == "block0.norm1.running_mean");
            CHECK(wire[i + 3].first == "block0.norm1.running_var");
            found = true;
        }
    }
    CHECK(found);

    SeededRng rng2(30);
    auto net2 = build_network<float>(cfg, rng2);
    load_wire_param_set(net2, wire);
    CHECK(ps_bitwise_equal(net2.params, net.params));
    CHECK(ps_bitwise_equal(net2.buffers, net.buffers));
}
