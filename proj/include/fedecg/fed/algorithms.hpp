#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "fedecg/data/ecg.hpp"
#include "fedecg/nn/network.hpp"
#include "fedecg/optim/train.hpp"
#include "fedecg/rng.hpp"

namespace fedecg::fed {

enum class AggKind { FedAvg, FedProx, FedDyn, Scaffold };

const char* agg_kind_name(AggKind kind);

// Full participation of every client each round. The update rules:
//   FedAvg    w <- sum_i (n_i/n) w_i
//   FedProx   client gradient g + mu*(w - w_global); FedAvg aggregation
//   SCAFFOLD  client gradient g - c_i + c; option-II control variates
//             c_i+ = c_i - c + (w_global - w_after)/(K*eta_l);
//             server: w <- w + eta_g * mean(w_i - w), c <- c + mean(c_i+ - c_i)
//   FedDyn    client gradient g - h_i + alpha*(w - w_global);
//             h_i <- h_i - alpha*(w_after - w_global);
//             server: h <- h - alpha*mean(w_i - w), w <- mean(w_i) - h/alpha
// Batch-norm running statistics always aggregate by the sample-weighted mean.
struct AggregatorConfig {
    AggKind kind = AggKind::FedAvg;
    double mu = 0.01;        // FedProx proximal strength, mu >= 0
    double alpha = 0.01;     // FedDyn regularization, alpha > 0
    double server_lr = 1.0;  // SCAFFOLD eta_g
    std::int64_t local_epochs = 1;

    void validate() const {
        if (mu < 0) throw ConfigError("aggregator: mu must be >= 0");
        if (alpha <= 0) throw ConfigError("aggregator: alpha must be > 0");
        if (server_lr <= 0) throw ConfigError("aggregator: server_lr must be > 0");
        if (local_epochs < 0) throw ConfigError("aggregator: local_epochs must be >= 0");
    }
};

template <typename T>
struct ClientUpdate {
    std::uint32_t client_id = 0;
    std::uint32_t round = 0;
    std::uint64_t num_samples = 0;
    ParamSet<T> params_after;   // wire layout (trainables + running stats)
    ParamSet<T> control_delta;  // SCAFFOLD only; aligned with the trainables
    double train_loss = 0;
    double train_accuracy = 0;  // from the last local epoch's training-mode predictions
    double train_f1 = 0;
};

// Client-side state that survives across rounds.
template <typename T>
struct ClientPersistent {
    ParamSet<T> c_i;  // SCAFFOLD control variate
    ParamSet<T> h_i;  // FedDyn regularization state
};

template <typename T>
struct ServerState {
    std::uint32_t round = 0;
    ParamSet<T> global;  // wire layout
    ParamSet<T> c;       // SCAFFOLD server control variate (trainables)
    ParamSet<T> h;       // FedDyn server state (trainables)
};

// The trainable subset of a wire-layout ParamSet, order preserved.
template <typename T>
ParamSet<T> trainable_subset(const ParamSet<T>& wire) {
    ParamSet<T> out;
    for (const auto& [name, t] : wire)
        if (!nn::is_buffer_name(name)) out.add(name, t);
    return out;
}

template <typename T>
ServerState<T> make_server_state(const ParamSet<T>& initial_global) {
    ServerState<T> s;
    s.global = initial_global;
    s.c = ps_zeros_like(trainable_subset(initial_global));
    s.h = ps_zeros_like(trainable_subset(initial_global));
    return s;
}

template <typename T>
ClientPersistent<T> make_client_state(const ParamSet<T>& trainables) {
    ClientPersistent<T> s;
    s.c_i = ps_zeros_like(trainables);
    s.h_i = ps_zeros_like(trainables);
    return s;
}

// Runs E local epochs from the given global snapshot, adjusting raw gradients
// per the aggregation algorithm before every optimizer step, and updates the
// client's persistent state. The shuffle for epoch e of round r is seeded by
// derive_seed(root, "shuffle", client_id, r*E + e).
template <typename T>
ClientUpdate<T> client_local_train(nn::Network<T>& net, const ParamSet<T>& global_wire,
                                   const std::vector<data::Window>& shard,
                                   const AggregatorConfig& agg, ClientPersistent<T>& state,
                                   std::type_identity_t<const ParamSet<T>*> server_c,
                                   optim::OptimizerState<T>& opt, std::int64_t batch_size,
                                   std::uint32_t client_id, std::uint32_t round,
                                   std::uint64_t root_seed) {
    agg.validate();
    if (shard.empty())
        throw ValueError("client " + std::to_string(client_id) + ": empty shard, excluded from round");
    if (agg.kind == AggKind::Scaffold && !server_c)
        throw ValueError("SCAFFOLD requires the server control variate");

    nn::load_wire_param_set(net, global_wire);
    const ParamSet<T> w_global = net.params;

    optim::GradHook<T> hook;
    switch (agg.kind) {
        case AggKind::FedAvg: break;
        case AggKind::FedProx: {
            const T mu = static_cast<T>(agg.mu);
            hook = [mu, &w_global](const ParamSet<T>& params, ParamSet<T>& grads) {
                for (auto& [name, g] : grads) {
                    const Tensor<T>& w = params.get(name);
                    const Tensor<T>& wg = w_global.get(name);
                    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += mu * (w[i] - wg[i]);
                }
            };
            break;
        }
        case AggKind::Scaffold: {
            const ParamSet<T>& c = *server_c;
            const ParamSet<T>& c_i = state.c_i;
            hook = [&c, &c_i](const ParamSet<T>&, ParamSet<T>& grads) {
                for (auto& [name, g] : grads) {
                    const Tensor<T>& cs = c.get(name);
                    const Tensor<T>& ci = c_i.get(name);
                    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += cs[i] - ci[i];
                }
            };
            break;
        }
        case AggKind::FedDyn: {
            const T alpha = static_cast<T>(agg.alpha);
            const ParamSet<T>& h_i = state.h_i;
            hook = [alpha, &w_global, &h_i](const ParamSet<T>& params, ParamSet<T>& grads) {
                for (auto& [name, g] : grads) {
                    const Tensor<T>& w = params.get(name);
                    const Tensor<T>& wg = w_global.get(name);
                    const Tensor<T>& hi = h_i.get(name);
                    for (std::int64_t i = 0; i < g.numel(); ++i)
                        g[i] += alpha * (w[i] - wg[i]) - hi[i];
                }
            };
            break;
        }
    }

    double loss_sum = 0;
    std::int64_t total_steps = 0;
    eval::ConfusionMatrix last_cm(static_cast<int>(net.config.num_classes));
    for (std::int64_t epoch = 0; epoch < agg.local_epochs; ++epoch) {
        SeededRng shuffle(derive_seed(root_seed, "shuffle", client_id,
                                      static_cast<std::uint64_t>(round) *
                                              static_cast<std::uint64_t>(agg.local_epochs) +
                                          static_cast<std::uint64_t>(epoch)));
        const auto stats = optim::train_epoch(net, shard, opt, batch_size, shuffle, hook);
        loss_sum += static_cast<double>(stats.mean_loss);
        total_steps += stats.steps;
        last_cm = stats.train_cm;
    }

    ClientUpdate<T> update;
    update.client_id = client_id;
    update.round = round;
    update.num_samples = shard.size();
    update.train_loss = agg.local_epochs > 0 ? loss_sum / static_cast<double>(agg.local_epochs) : 0.0;
    if (last_cm.total() > 0) {
        update.train_accuracy = eval::accuracy(last_cm);
        update.train_f1 = eval::f1_scores(last_cm).macro;
    }

    if (agg.kind == AggKind::Scaffold) {
        // option II: c_i+ = c_i - c + (w_global - w_after) / (K * eta_l)
        const double k_eta = static_cast<double>(total_steps) * opt.lr;
        ParamSet<T> c_i_plus = state.c_i;
        ps_axpy(c_i_plus, T(-1), *server_c);
        if (k_eta > 0) {
            for (auto& [name, t] : c_i_plus) {
                const Tensor<T>& wg = w_global.get(name);
                const Tensor<T>& wa = net.params.get(name);
                for (std::int64_t i = 0; i < t.numel(); ++i)
                    t[i] += static_cast<T>((static_cast<double>(wg[i]) - wa[i]) / k_eta);
            }
        }
        update.control_delta = ps_sub(c_i_plus, state.c_i);
        state.c_i = std::move(c_i_plus);
    } else if (agg.kind == AggKind::FedDyn) {
        // h_i <- h_i - alpha * (w_after - w_global)
        for (auto& [name, hi] : state.h_i) {
            const Tensor<T>& wa = net.params.get(name);
            const Tensor<T>& wg = w_global.get(name);
            for (std::int64_t i = 0; i < hi.numel(); ++i)
                hi[i] -= static_cast<T>(agg.alpha) * (wa[i] - wg[i]);
        }
    }

    update.params_after = nn::wire_param_set(net);
    return update;
}

// Merges the round's client updates into the server state. Updates are
// consumed in client_id order (the fixed summation order); accumulation runs
// in f64. Validates full participation: exactly expected_clients updates, no
// duplicates, all carrying the server's round number.
template <typename T>
void aggregate(const std::vector<ClientUpdate<T>>& updates, ServerState<T>& server,
               const AggregatorConfig& agg, std::size_t expected_clients) {
    agg.validate();
    if (updates.size() != expected_clients)
        throw ProtocolError("aggregate: got " + std::to_string(updates.size()) + " updates, need " +
                            std::to_string(expected_clients) + " under full participation");

    std::vector<const ClientUpdate<T>*> ordered;
    for (const auto& u : updates) ordered.push_back(&u);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->client_id < b->client_id; });
    for (std::size_t i = 0; i + 1 < ordered.size(); ++i)
        if (ordered[i]->client_id == ordered[i + 1]->client_id)
            throw ProtocolError("aggregate: duplicate client " +
                                std::to_string(ordered[i]->client_id) + " in one round");
    for (const auto* u : ordered) {
        if (u->round != server.round)
            throw ProtocolError("aggregate: update from client " + std::to_string(u->client_id) +
                                " carries round " + std::to_string(u->round) + ", server is at " +
                                std::to_string(server.round));
        if (!u->params_after.aligned_with(server.global))
            throw AlignmentError("aggregate: client " + std::to_string(u->client_id) +
                                 " update is not aligned with the global model");
        if (u->num_samples < 1)
            throw ProtocolError("aggregate: client " + std::to_string(u->client_id) +
                                " reports zero samples");
    }

    double total_n = 0;
    for (const auto* u : ordered) total_n += static_cast<double>(u->num_samples);
    const double m = static_cast<double>(ordered.size());

    for (auto& [name, w] : server.global) {
        const bool buffer = nn::is_buffer_name(name);
        Tensor<T>* h = buffer ? nullptr : (agg.kind == AggKind::FedDyn ? &server.h.get(name) : nullptr);
        for (std::int64_t j = 0; j < w.numel(); ++j) {
            double next;
            if (buffer || agg.kind == AggKind::FedAvg || agg.kind == AggKind::FedProx) {
                double acc = 0;
                for (const auto* u : ordered)
                    acc += static_cast<double>(u->num_samples) *
                           static_cast<double>(u->params_after.get(name)[j]);
                next = acc / total_n;
            } else if (agg.kind == AggKind::Scaffold) {
                double delta = 0;
                for (const auto* u : ordered)
                    delta += static_cast<double>(u->params_after.get(name)[j]) -
                             static_cast<double>(w[j]);
                next = static_cast<double>(w[j]) + agg.server_lr * delta / m;
            } else {  // FedDyn
                double mean = 0;
                for (const auto* u : ordered)
                    mean += static_cast<double>(u->params_after.get(name)[j]);
                mean /= m;
                const double h_new =
                    static_cast<double>((*h)[j]) - agg.alpha * (mean - static_cast<double>(w[j]));
                (*h)[j] = static_cast<T>(h_new);
                next = mean - h_new / agg.alpha;
            }
            w[j] = static_cast<T>(next);
        }
    }

    if (agg.kind == AggKind::Scaffold) {
        for (auto& [name, c] : server.c) {
            for (std::int64_t j = 0; j < c.numel(); ++j) {
                double acc = 0;
                for (const auto* u : ordered)
                    acc += static_cast<double>(u->control_delta.get(name)[j]);
                c[j] = static_cast<T>(static_cast<double>(c[j]) +
                                      acc / static_cast<double>(expected_clients));
            }
        }
    }
    server.round += 1;
}

}  // namespace fedecg::fed
