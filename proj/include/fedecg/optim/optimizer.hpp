#pragma once

#include <cmath>
#include <cstdint>

#include "fedecg/param_set.hpp"

namespace fedecg::optim {

enum class OptKind { SGD, Adam };

// Per-trainer optimizer state. Adam moments are keyed by parameter name, so
// results are independent of ParamSet insertion order.
template <typename T>
struct OptimizerState {
    OptKind kind = OptKind::Adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    ParamSet<T> m;
    ParamSet<T> v;

    void reset() {
        t = 0;
        m = ParamSet<T>{};
        v = ParamSet<T>{};
    }
};

template <typename T>
OptimizerState<T> make_optimizer(OptKind kind, double lr) {
    OptimizerState<T> s;
    s.kind = kind;
    s.lr = lr;
    return s;
}

// Plain stateless SGD: w <- w - lr * g.
template <typename T>
void sgd_step(ParamSet<T>& params, const ParamSet<T>& grads, OptimizerState<T>& state) {
    require_name_aligned(params, grads, "sgd_step");
    const T lr = static_cast<T>(state.lr);
    for (auto& [name, w] : params) {
        const Tensor<T>& g = grads.get(name);
        T* wd = w.data();
        const T* gd = g.data();
        for (std::int64_t i = 0; i < w.numel(); ++i) wd[i] -= lr * gd[i];
    }
    state.t += 1;
}

// Adam with bias-corrected moments; t is incremented before the correction.
template <typename T>
void adam_step(ParamSet<T>& params, const ParamSet<T>& grads, OptimizerState<T>& state) {
    require_name_aligned(params, grads, "adam_step");
    if (state.m.empty()) {
        state.m = ps_zeros_like(params);
        state.v = ps_zeros_like(params);
    }
    state.t += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (auto& [name, w] : params) {
        const Tensor<T>& g = grads.get(name);
        Tensor<T>& m = state.m.get(name);
        Tensor<T>& v = state.v.get(name);
        T* wd = w.data();
        const T* gd = g.data();
        T* md = m.data();
        T* vd = v.data();
        for (std::int64_t i = 0; i < w.numel(); ++i) {
            const double gi = static_cast<double>(gd[i]);
            const double mi = b1 * md[i] + (1.0 - b1) * gi;
            const double vi = b2 * vd[i] + (1.0 - b2) * gi * gi;
            md[i] = static_cast<T>(mi);
            vd[i] = static_cast<T>(vi);
            const double m_hat = mi / corr1;
            const double v_hat = vi / corr2;
            wd[i] -= static_cast<T>(state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
        }
    }
}

template <typename T>
void optimizer_step(ParamSet<T>& params, const ParamSet<T>& grads, OptimizerState<T>& state) {
    if (state.kind == OptKind::SGD)
        sgd_step(params, grads, state);
    else
        adam_step(params, grads, state);
}

}  // namespace fedecg::optim
