#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <thread>

#include "fedecg/eval/evaluate.hpp"
#include "fedecg/fed/algorithms.hpp"
#include "fedecg/optim/schedule.hpp"
#include "fedecg/transport/broker.hpp"
#include "fedecg/transport/envelope.hpp"

namespace fedecg::fed {

struct FederationConfig {
    std::string fed_id = "fed0";
    nn::NetworkConfig net;
    AggregatorConfig agg;
    optim::TrainSchedule sched;
    optim::OptKind opt_kind = optim::OptKind::Adam;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    bool parallel_clients = false;
    bool persist_optimizer = false;  // keep Adam moments across rounds
    std::chrono::milliseconds poll_deadline{60000};
};

struct ClientRoundStat {
    std::uint32_t client_id = 0;
    double train_loss = 0;
    double train_accuracy = 0;
    double train_f1 = 0;
};

struct RoundReport {
    std::uint32_t round = 0;
    std::vector<ClientRoundStat> clients;
    double eval_loss = 0;
    double eval_accuracy = 0;
    double eval_f1_macro = 0;
    std::array<double, 4> eval_f1_per_class = {0, 0, 0, 0};
    double lr = 0;
};

// In-process federation client. Each step: drain the control topic (Stop
// halts), receive the round's global model, run local training, publish the
// update. All per-round randomness derives from (seed, client_id, round).
class ClientNode {
  public:
    ClientNode(const FederationConfig& cfg, std::uint32_t id, std::vector<data::Window> shard,
               transport::Broker& broker)
        : cfg_(cfg),
          id_(id),
          shard_(std::move(shard)),
          rng_(derive_seed(cfg.seed, "client-init", id)),
          net_(nn::build_network<float>(cfg.net, rng_)),
          state_(make_client_state(net_.params)),
          opt_(optim::make_optimizer<float>(cfg.opt_kind, cfg.lr)),
          sub_global_(broker.subscribe(transport::global_topic(cfg.fed_id))),
          sub_control_(broker.subscribe(transport::control_topic(cfg.fed_id))),
          broker_(broker) {}

    enum class StepResult { Updated, Stopped };

    StepResult step() {
        if (halted_) return StepResult::Stopped;
        // control messages first: Stop halts, ControlState is stashed
        while (auto msg = sub_control_->try_poll()) {
            const transport::Envelope env = transport::decode_envelope(**msg);
            if (env.msg_type == transport::MsgType::Stop) {
                halted_ = true;
                return StepResult::Stopped;
            }
            if (env.msg_type == transport::MsgType::ControlState)
                server_c_ = transport::extract_param_set<float>(env);
        }

        const auto msg = sub_global_->poll(cfg_.poll_deadline);
        if (!msg)
            throw TimeoutError("client " + std::to_string(id_) + ": no global model before deadline");
        const transport::Envelope env = transport::decode_envelope(**msg);
        if (env.msg_type == transport::MsgType::Stop) {
            halted_ = true;
            return StepResult::Stopped;
        }
        if (env.msg_type != transport::MsgType::GlobalModel)
            throw ProtocolError("client " + std::to_string(id_) + ": unexpected message type on the global topic");

        const ParamSet<float> global = transport::extract_param_set<float>(env);
        const double lr = transport::get_meta(env, "_meta.lr", cfg_.lr);

        if (cfg_.agg.kind == AggKind::Scaffold && !server_c_) {
            // ControlState for this round may still be in flight
            while (!server_c_) {
                auto cmsg = sub_control_->poll(cfg_.poll_deadline);
                if (!cmsg)
                    throw TimeoutError("client " + std::to_string(id_) +
                                       ": no control state before deadline");
                const transport::Envelope cenv = transport::decode_envelope(**cmsg);
                if (cenv.msg_type == transport::MsgType::Stop) {
                    halted_ = true;
                    return StepResult::Stopped;
                }
                if (cenv.msg_type == transport::MsgType::ControlState)
                    server_c_ = transport::extract_param_set<float>(cenv);
            }
        }

        if (!cfg_.persist_optimizer) opt_ = optim::make_optimizer<float>(cfg_.opt_kind, lr);
        opt_.lr = lr;

        ClientUpdate<float> update = client_local_train(
            net_, global, shard_, cfg_.agg, state_,
            server_c_ ? &*server_c_ : nullptr, opt_, cfg_.sched.batch_size, id_, env.round,
            cfg_.seed);
        server_c_.reset();

        transport::Envelope out;
        out.msg_type = transport::MsgType::ClientUpdate;
        out.round = env.round;
        out.sender_id = id_;
        out.num_samples = update.num_samples;
        transport::append_param_set(out, update.params_after);
        transport::append_param_set(out, update.control_delta, "ctrl/");
        transport::set_meta(out, "_meta.train_loss", update.train_loss);
        transport::set_meta(out, "_meta.train_accuracy", update.train_accuracy);
        transport::set_meta(out, "_meta.train_f1", update.train_f1);
        broker_.publish(transport::update_topic(cfg_.fed_id, "c" + std::to_string(id_)),
                        transport::encode_envelope(out));
        return StepResult::Updated;
    }

    bool halted() const { return halted_; }
    const ClientPersistent<float>& persistent() const { return state_; }
    std::uint32_t id() const { return id_; }

  private:
    FederationConfig cfg_;
    std::uint32_t id_;
    std::vector<data::Window> shard_;
    SeededRng rng_;
    nn::Network<float> net_;
    ClientPersistent<float> state_;
    optim::OptimizerState<float> opt_;
    std::shared_ptr<transport::Subscription> sub_global_;
    std::shared_ptr<transport::Subscription> sub_control_;
    transport::Broker& broker_;
    std::optional<ParamSet<float>> server_c_;
    bool halted_ = false;
};

// Parameter server plus schedule state for one federation run.
class Server {
  public:
    Server(const FederationConfig& cfg, std::vector<data::Window> test_windows,
           transport::Broker& broker)
        : cfg_(cfg),
          test_(std::move(test_windows)),
          rng_(derive_seed(cfg.seed, "init")),
          eval_net_(nn::build_network<float>(cfg_.net, rng_)),
          state_(make_server_state(nn::wire_param_set(eval_net_))),
          lr_(cfg.lr),
          sub_updates_(broker.subscribe("fl/" + cfg.fed_id + "/updates/+")),
          broker_(broker) {}

    const ServerState<float>& state() const { return state_; }
    double lr() const { return lr_; }
    const optim::MonitorState& monitor() const { return monitor_; }

    void broadcast_round() {
        if (cfg_.agg.kind == AggKind::Scaffold) {
            transport::Envelope ctl;
            ctl.msg_type = transport::MsgType::ControlState;
            ctl.round = state_.round;
            ctl.sender_id = transport::kServerSenderId;
            transport::append_param_set(ctl, state_.c);
            broker_.publish(transport::control_topic(cfg_.fed_id), transport::encode_envelope(ctl));
        }
        transport::Envelope env;
        env.msg_type = transport::MsgType::GlobalModel;
        env.round = state_.round;
        env.sender_id = transport::kServerSenderId;
        transport::append_param_set(env, state_.global);
        transport::set_meta(env, "_meta.lr", lr_);
        broker_.publish(transport::global_topic(cfg_.fed_id), transport::encode_envelope(env));
    }

    std::vector<ClientUpdate<float>> collect_updates(std::size_t expected) {
        std::vector<ClientUpdate<float>> updates;
        while (updates.size() < expected) {
            auto msg = sub_updates_->poll(cfg_.poll_deadline);
            if (!msg)
                throw TimeoutError("server: " + std::to_string(updates.size()) + " of " +
                                   std::to_string(expected) + " updates before deadline; round aborted");
            const transport::Envelope env = transport::decode_envelope(**msg);
            if (env.msg_type != transport::MsgType::ClientUpdate || env.round != state_.round)
                continue;  // stale or foreign message
            ClientUpdate<float> u;
            u.client_id = env.sender_id;
            u.round = env.round;
            u.num_samples = env.num_samples;
            u.params_after = transport::extract_param_set<float>(env);
            u.control_delta = transport::extract_param_set<float>(env, "ctrl/");
            u.train_loss = transport::get_meta(env, "_meta.train_loss", 0.0);
            u.train_accuracy = transport::get_meta(env, "_meta.train_accuracy", 0.0);
            u.train_f1 = transport::get_meta(env, "_meta.train_f1", 0.0);
            updates.push_back(std::move(u));
        }
        return updates;
    }

    RoundReport finish_round(const std::vector<ClientUpdate<float>>& updates) {
        RoundReport report;
        report.round = state_.round;
        report.lr = lr_;
        for (const auto& u : updates)
            report.clients.push_back({u.client_id, u.train_loss, u.train_accuracy, u.train_f1});
        std::sort(report.clients.begin(), report.clients.end(),
                  [](const auto& a, const auto& b) { return a.client_id < b.client_id; });

        aggregate(updates, state_, cfg_.agg, updates.size());

        nn::load_wire_param_set(eval_net_, state_.global);
        const eval::EvalResult res = eval::evaluate(eval_net_, test_, cfg_.sched.batch_size);
        report.eval_loss = res.loss;
        report.eval_accuracy = res.acc();
        const eval::F1Result f1 = res.f1();
        report.eval_f1_macro = f1.macro;
        for (std::size_t c = 0; c < 4 && c < f1.per_class.size(); ++c)
            report.eval_f1_per_class[c] = f1.per_class[c];

        monitor_.fold(res.loss, static_cast<std::int64_t>(report.round));
        lr_ = optim::plateau_update(monitor_, cfg_.sched, lr_);
        return report;
    }

    void publish_stop() {
        transport::Envelope env;
        env.msg_type = transport::MsgType::Stop;
        env.round = state_.round;
        env.sender_id = transport::kServerSenderId;
        broker_.publish(transport::control_topic(cfg_.fed_id), transport::encode_envelope(env));
    }

  private:
    FederationConfig cfg_;
    std::vector<data::Window> test_;
    SeededRng rng_;
    nn::Network<float> eval_net_;
    ServerState<float> state_;
    double lr_;
    optim::MonitorState monitor_;
    std::shared_ptr<transport::Subscription> sub_updates_;
    transport::Broker& broker_;
};

// One broadcast -> local-train -> aggregate -> evaluate cycle.
inline RoundReport run_round(Server& server, std::vector<std::unique_ptr<ClientNode>>& clients,
                             const FederationConfig& cfg) {
    server.broadcast_round();
    if (cfg.parallel_clients) {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(clients.size());
        for (std::size_t i = 0; i < clients.size(); ++i)
            workers.emplace_back([&, i] {
                try {
                    clients[i]->step();
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        for (auto& w : workers) w.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    } else {
        for (auto& client : clients) client->step();
    }
    const auto updates = server.collect_updates(clients.size());
    return server.finish_round(updates);
}

struct FederationResult {
    ParamSet<float> best_global;  // wire layout, snapshot of the best round
    std::uint32_t best_round = 0;
    std::vector<RoundReport> reports;
    std::uint32_t rounds_run = 0;
};

// Full federation: rounds until early stop or sched.max_rounds, then a Stop
// on the control topic. The reported model is the best-round snapshot by
// global test loss.
inline FederationResult run_federation(const FederationConfig& cfg,
                                       const std::vector<std::vector<data::Window>>& client_shards,
                                       const std::vector<data::Window>& test_windows,
                                       transport::Broker& broker) {
    cfg.agg.validate();
    if (client_shards.empty()) throw ConfigError("run_federation: no client shards");
    for (std::size_t i = 0; i < client_shards.size(); ++i)
        if (client_shards[i].empty())
            throw ConfigError("run_federation: client " + std::to_string(i) + " has an empty shard");

    Server server(cfg, test_windows, broker);
    std::vector<std::unique_ptr<ClientNode>> clients;
    for (std::size_t i = 0; i < client_shards.size(); ++i)
        clients.push_back(std::make_unique<ClientNode>(cfg, static_cast<std::uint32_t>(i),
                                                       client_shards[i], broker));

    FederationResult result;
    result.best_global = server.state().global;
    for (std::int64_t round = 0; round < cfg.sched.max_rounds; ++round) {
        const RoundReport report = run_round(server, clients, cfg);
        if (server.monitor().best_round == static_cast<std::int64_t>(report.round)) {
            result.best_global = server.state().global;
            result.best_round = report.round;
        }
        result.reports.push_back(report);
        result.rounds_run = static_cast<std::uint32_t>(round + 1);
        if (optim::early_stop_check(server.monitor(), cfg.sched) == optim::StopDecision::Stop) break;
    }
    server.publish_stop();
    return result;
}

}  // namespace fedecg::fed
