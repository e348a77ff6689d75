#pragma once

#include <functional>
#include <numeric>
#include <vector>

#include "fedecg/data/ecg.hpp"
#include "fedecg/eval/metrics.hpp"
#include "fedecg/nn/network.hpp"
#include "fedecg/optim/optimizer.hpp"

namespace fedecg::optim {

template <typename T>
Tensor<T> batch_tensor(const std::vector<data::Window>& windows,
                       const std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi) {
    const std::int64_t len = static_cast<std::int64_t>(windows[idx[lo]].samples.size());
    Tensor<T> batch({static_cast<std::int64_t>(hi - lo), 1, len});
    T* out = batch.data();
    for (std::size_t i = lo; i < hi; ++i) {
        const auto& s = windows[idx[i]].samples;
        if (static_cast<std::int64_t>(s.size()) != len)
            throw ShapeError("batch_tensor: windows have inconsistent lengths");
        for (std::int64_t j = 0; j < len; ++j) *out++ = static_cast<T>(s[static_cast<std::size_t>(j)]);
    }
    return batch;
}

template <typename T>
struct EpochStats {
    T mean_loss = 0;
    eval::ConfusionMatrix train_cm{4};
    std::int64_t steps = 0;
};

// Hook invoked on the raw gradients before each optimizer step (federated
// algorithms adjust gradients here); no-op when empty.
template <typename T>
using GradHook = std::function<void(const ParamSet<T>& params, ParamSet<T>& grads)>;

// One pass over the shard in seeded-shuffled batches (final partial batch
// kept): forward(Train) -> loss -> backward -> optimizer step. Returns the
// sample-weighted mean loss and the confusion of the training-mode
// predictions themselves.
template <typename T>
EpochStats<T> train_epoch(nn::Network<T>& net, const std::vector<data::Window>& windows,
                          OptimizerState<T>& opt, std::int64_t batch_size, SeededRng& rng,
                          const GradHook<T>& hook = {}) {
    if (windows.empty()) throw ValueError("train_epoch: empty shard");
    if (batch_size < 1) throw ValueError("train_epoch: batch_size must be >= 1");

    std::vector<std::size_t> idx(windows.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.next_below(i)]);

    EpochStats<T> stats;
    stats.train_cm = eval::ConfusionMatrix(static_cast<int>(net.config.num_classes));
    double loss_sum = 0;
    for (std::size_t lo = 0; lo < idx.size(); lo += static_cast<std::size_t>(batch_size)) {
        const std::size_t hi = std::min(idx.size(), lo + static_cast<std::size_t>(batch_size));
        Tensor<T> batch = batch_tensor<T>(windows, idx, lo, hi);
        std::vector<int> labels;
        labels.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) labels.push_back(windows[idx[i]].label);

        nn::ForwardCache<T> cache;
        Tensor<T> logits = nn::forward(net, batch, nn::Mode::Train, &cache, &rng);
        auto [loss, grad_logits] = nn::loss_and_grad(logits, labels);
        ParamSet<T> grads = nn::backward(net, cache, grad_logits);
        if (hook) hook(net.params, grads);
        optimizer_step(net.params, grads, opt);

        loss_sum += static_cast<double>(loss) * static_cast<double>(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            const std::int64_t row = static_cast<std::int64_t>(i - lo);
            int best = 0;
            for (std::int64_t c = 1; c < net.config.num_classes; ++c)
                if (logits[row * net.config.num_classes + c] >
                    logits[row * net.config.num_classes + best])
                    best = static_cast<int>(c);
            stats.train_cm.at(labels[i - lo], best) += 1;
        }
        stats.steps += 1;
    }
    stats.mean_loss = static_cast<T>(loss_sum / static_cast<double>(windows.size()));
    return stats;
}

}  // namespace fedecg::optim
