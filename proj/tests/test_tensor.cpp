#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fedecg/param_set.hpp"
#include "fedecg/tensor.hpp"
#include "oracles.hpp"

using namespace fedecg;

TEST_CASE("tensor_full fills every element") {
    auto t = tensor_full<float>({2, 3}, 0.0f);
    CHECK(t.numel() == 6);
    CHECK(t.shape() == Shape{2, 3});
    for (auto v : t.values()) CHECK(v == 0.0f);

    auto s = tensor_full<double>({1}, 7.5);
    CHECK(s.numel() == 1);
    CHECK(s[0] == 7.5);
}

TEST_CASE("degenerate extents are rejected") {
    CHECK_THROWS_AS(tensor_full<float>({2, 0}, 1.0f), ShapeError);
    CHECK_THROWS_AS(tensor_full<float>({-1}, 1.0f), ShapeError);
}

TEST_CASE("reshape preserves data and checks element count") {
    Tensor<float> t({2, 3}, {1, 2, 3, 4, 5, 6});
    auto r = t.reshaped({6});
    CHECK(r.shape() == Shape{6});
    CHECK(r[4] == 5.0f);
    CHECK_THROWS_AS(t.reshaped({5}), ShapeError);
}

TEST_CASE("kaiming_uniform respects the bound") {
    SeededRng rng(7);
    // fan_in = 6 -> bound exactly 1
    auto t = kaiming_uniform<float>({64, 64}, 6, rng);
    for (auto v : t.values()) {
        CHECK(v >= -1.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("kaiming_uniform bound never exceeded across shapes and fan-ins") {
    SeededRng meta(99);
    for (int trial = 0; trial < 20; ++trial) {
        const std::int64_t fan_in = 1 + static_cast<std::int64_t>(meta.next_below(200));
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        SeededRng rng(meta.next_u64());
        auto t = kaiming_uniform<double>({3, 1 + static_cast<std::int64_t>(meta.next_below(40))},
                                         fan_in, rng);
        for (auto v : t.values()) CHECK(std::abs(v) <= bound);
    }
}

TEST_CASE("kaiming_uniform empirical mean is near zero") {
    SeededRng rng(1234);
    auto t = kaiming_uniform<double>({100000}, 24, rng);
    const double bound = std::sqrt(6.0 / 24.0);
    CHECK(bound == doctest::Approx(0.5));
    double sum = 0;
    for (auto v : t.values()) sum += v;
    CHECK(std::abs(sum / t.numel()) < 0.01);
}

TEST_CASE("kaiming_uniform is deterministic per seed") {
    SeededRng a(42), b(42);
    auto ta = kaiming_uniform<float>({4, 7, 3}, 21, a);
    auto tb = kaiming_uniform<float>({4, 7, 3}, 21, b);
    CHECK(std::memcmp(ta.data(), tb.data(), sizeof(float) * ta.numel()) == 0);
}

TEST_CASE("kaiming_uniform rejects fan_in 0") {
    SeededRng rng(1);
    CHECK_THROWS_AS(kaiming_uniform<float>({3}, 0, rng), ValueError);
}

TEST_CASE("moments by hand: [1,2,3] over axis 0") {
    Tensor<float> x({3}, {1, 2, 3});
    auto [mean, var] = moments_over_axes(x, {0});
    CHECK(mean.rank() == 0);
    CHECK(mean[0] == doctest::Approx(2.0));
    CHECK(var[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("moments of a constant tensor have exactly zero variance") {
    auto x = tensor_full<float>({4, 5}, 3.25f);
    auto [mean, var] = moments_over_axes(x, {1});
    for (auto v : var.values()) CHECK(v == 0.0f);
    for (auto m : mean.values()) CHECK(m == 3.25f);
}

TEST_CASE("moments with empty axis set returns copy and zeros") {
    Tensor<float> x({2, 2}, {1, 2, 3, 4});
    auto [mean, var] = moments_over_axes(x, {});
    CHECK(mean.shape() == x.shape());
    CHECK(mean[3] == 4.0f);
    for (auto v : var.values()) CHECK(v == 0.0f);
}

TEST_CASE("moments matches the scalar-loop oracle on a random [4,8,16] tensor") {
    SeededRng rng(2024);
    Tensor<float> x({4, 8, 16});
    for (auto& v : x.values()) v = static_cast<float>(rng.uniform(-10, 10));

    const std::vector<std::vector<std::size_t>> axis_sets = {{0}, {2}, {0, 2}, {1, 2}, {0, 1, 2}};
    for (const auto& axes : axis_sets) {
        auto [mean, var] = moments_over_axes(x, axes);
        auto [omean, ovar] = oracle::moments(x, axes);
        REQUIRE(mean.numel() == static_cast<std::int64_t>(omean.size()));
        for (std::int64_t i = 0; i < mean.numel(); ++i) {
            CHECK(std::abs(mean[i] - omean[i]) < 1e-6);
            CHECK(std::abs(var[i] - ovar[i]) < 1e-5 * (1.0 + std::abs(ovar[i])));
        }
    }
}

TEST_CASE("residual of centering is numerically zero") {
    // mean of (x - mean) over the reduced axes stays below 1e-6 for f32 in [-10,10]
    SeededRng rng(555);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor<float> x({3, 7, 11});
        for (auto& v : x.values()) v = static_cast<float>(rng.uniform(-10, 10));
        auto [mean, var] = moments_over_axes(x, {1});
        for (std::int64_t n = 0; n < 3; ++n)
            for (std::int64_t l = 0; l < 11; ++l) {
                double resid = 0;
                for (std::int64_t c = 0; c < 7; ++c)
                    resid += x[(n * 7 + c) * 11 + l] - mean[n * 11 + l];
                CHECK(std::abs(resid / 7.0) < 1e-6);
            }
    }
}

TEST_CASE("moments rejects out-of-range axes") {
    Tensor<float> x({2, 2});
    CHECK_THROWS_AS(moments_over_axes(x, {2}), ShapeError);
}

TEST_CASE("axpy by hand") {
    Tensor<float> y({2}, {1, 1});
    Tensor<float> x({2}, {3, 4});
    axpy_inplace(y, 2.0f, x);
    CHECK(y[0] == 7.0f);
    CHECK(y[1] == 9.0f);
}

TEST_CASE("axpy with alpha 0 leaves y unchanged") {
    Tensor<float> y({3}, {1.5f, -2.5f, 0.25f});
    Tensor<float> x({3}, {100, 200, 300});
    auto before = y;
    axpy_inplace(y, 0.0f, x);
    for (int i = 0; i < 3; ++i) CHECK(y[i] == before[i]);
}

TEST_CASE("axpy matches a scalar loop exactly on 10^4 elements") {
    SeededRng rng(31);
    Tensor<float> y({10000}), x({10000});
    for (auto& v : y.values()) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto& v : x.values()) v = static_cast<float>(rng.uniform(-1, 1));
    const float alpha = 0.37f;

    std::vector<float> expect(10000);
    for (int i = 0; i < 10000; ++i) expect[i] = y[i] + alpha * x[i];

    axpy_inplace(y, alpha, x);
    for (int i = 0; i < 10000; ++i) CHECK(y[i] == expect[i]);
}

TEST_CASE("axpy rejects shape mismatch") {
    Tensor<float> y({2}), x({3});
    CHECK_THROWS_AS(axpy_inplace(y, 1.0f, x), ShapeError);
}

TEST_CASE("rng stream is reproducible and derive_seed is stable") {
    SeededRng a(1), b(1);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    CHECK(derive_seed(1, "shuffle", 0, 0) == derive_seed(1, "shuffle", 0, 0));
    CHECK(derive_seed(1, "shuffle", 0, 0) != derive_seed(1, "shuffle", 0, 1));
    CHECK(derive_seed(1, "shuffle", 0, 0) != derive_seed(1, "init", 0, 0));
    CHECK(derive_seed(1, "shuffle", 0, 0) != derive_seed(2, "shuffle", 0, 0));
}

TEST_CASE("uniform01 stays in [0,1)") {
    SeededRng rng(77);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("ParamSet keeps insertion order and unique names") {
    ParamSet<float> ps;
    ps.add("b", tensor_full<float>({2}, 1.0f));
    ps.add("a", tensor_full<float>({3}, 2.0f));
    CHECK(ps.size() == 2);
    CHECK(ps[0].first == "b");
    CHECK(ps[1].first == "a");
    CHECK(ps.get("a")[0] == 2.0f);
    CHECK_THROWS_AS(ps.add("a", tensor_full<float>({1}, 0.0f)), ValueError);
}

TEST_CASE("ParamSet arithmetic helpers") {
    ParamSet<double> a, b;
    a.add("w", Tensor<double>({2}, {1, 2}));
    b.add("w", Tensor<double>({2}, {10, 20}));
    ps_axpy(a, 0.5, b);
    CHECK(a.get("w")[0] == doctest::Approx(6.0));
    CHECK(a.get("w")[1] == doctest::Approx(12.0));

    auto d = ps_sub(b, a);
    CHECK(d.get("w")[0] == doctest::Approx(4.0));

    ParamSet<double> c;
    c.add("x", Tensor<double>({2}));
    CHECK_THROWS_AS(ps_axpy(a, 1.0, c), AlignmentError);
}
