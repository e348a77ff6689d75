#pragma once

#include <vector>

#include "fedecg/data/ecg.hpp"
#include "fedecg/eval/metrics.hpp"
#include "fedecg/nn/network.hpp"
#include "fedecg/optim/train.hpp"

namespace fedecg::eval {

struct EvalResult {
    double loss = 0;
    ConfusionMatrix cm{4};

    double acc() const { return accuracy(cm); }
    F1Result f1() const { return f1_scores(cm); }
};

// Eval-mode pass over the windows in fixed order. Prediction is the argmax
// of the logits with ties broken toward the lower class id.
template <typename T>
EvalResult evaluate(nn::Network<T>& net, const std::vector<data::Window>& windows,
                    std::int64_t batch_size = 32) {
    if (windows.empty()) throw ValueError("evaluate: no windows");
    EvalResult result;
    result.cm = ConfusionMatrix(static_cast<int>(net.config.num_classes));

    std::vector<std::size_t> idx(windows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    double loss_sum = 0;
    for (std::size_t lo = 0; lo < windows.size(); lo += static_cast<std::size_t>(batch_size)) {
        const std::size_t hi = std::min(windows.size(), lo + static_cast<std::size_t>(batch_size));
        Tensor<T> batch = optim::batch_tensor<T>(windows, idx, lo, hi);
        std::vector<int> labels;
        for (std::size_t i = lo; i < hi; ++i) labels.push_back(windows[i].label);

        Tensor<T> logits = nn::forward(net, batch, nn::Mode::Eval);
        auto [loss, grad] = nn::loss_and_grad(logits, labels);
        (void)grad;
        loss_sum += static_cast<double>(loss) * static_cast<double>(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            const std::int64_t row = static_cast<std::int64_t>(i - lo);
            int best = 0;
            for (std::int64_t c = 1; c < net.config.num_classes; ++c)
                if (logits[row * net.config.num_classes + c] >
                    logits[row * net.config.num_classes + best])
                    best = static_cast<int>(c);
            result.cm.at(labels[i - lo], best) += 1;
        }
    }
    result.loss = loss_sum / static_cast<double>(windows.size());
    return result;
}

}  // namespace fedecg::eval
