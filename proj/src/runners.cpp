#include "fedecg/exp/runners.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedecg/data/manifest.hpp"
#include "fedecg/data/synth.hpp"

namespace fedecg::exp {

namespace fs = std::filesystem;

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
}

void write_resolved(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    write_text((fs::path(cfg.out_dir) / "config.resolved").string(), render_config(cfg));
}

data::SynthConfig synth_config_from(const ExperimentConfig& cfg) {
    data::SynthConfig synth = data::make_synth_config(
        cfg.synth_records_per_shard, cfg.synth_test_records, cfg.synth_skew,
        derive_seed(cfg.seed, "data"));
    synth.duration_s = cfg.synth_duration_s;
    synth.rr_mean_s = cfg.synth_rr_mean_s;
    synth.rr_jitter = cfg.synth_rr_jitter;
    synth.afib_rr_band = cfg.synth_afib_rr_band;
    synth.noise_amplitude = cfg.synth_noise_amplitude;
    return synth;
}

eval::MetricsRow make_row(int round, const std::string& scenario, const std::string& client,
                          const std::string& split, double loss, const eval::ConfusionMatrix& cm,
                          const std::vector<int>& f1_subset, double lr) {
    eval::MetricsRow row;
    row.round = round;
    row.scenario = scenario;
    row.client_id = client;
    row.split = split;
    row.loss = loss;
    row.accuracy = eval::accuracy(cm);
    const eval::F1Result f1 = eval::f1_scores(cm);
    row.f1_macro = eval::macro_over(f1, f1_subset);
    for (std::size_t c = 0; c < 4 && c < f1.per_class.size(); ++c)
        row.f1_per_class[c] = f1.per_class[c];
    row.lr = lr;
    return row;
}

transport::Envelope model_envelope(const ParamSet<float>& wire, std::uint32_t round) {
    transport::Envelope env;
    env.msg_type = transport::MsgType::GlobalModel;
    env.round = round;
    env.sender_id = transport::kServerSenderId;
    transport::append_param_set(env, wire);
    return env;
}

// Shared single-model training loop (centralized run, or one local client):
// per epoch trains on `train`, monitors val loss (train loss when val is
// empty), reduces LR on plateau, early-stops, and keeps the best snapshot.
struct SingleTrainResult {
    ParamSet<float> best_wire;
    std::uint32_t best_round = 0;
    eval::EvalResult best_test;
};

SingleTrainResult train_single(const ExperimentConfig& cfg, const std::string& scenario,
                               const std::string& client_id, std::uint64_t shuffle_node,
                               const std::vector<data::Window>& train,
                               const std::vector<data::Window>& val,
                               const std::vector<data::Window>& test,
                               std::vector<eval::MetricsRow>& rows) {
    SeededRng init(derive_seed(cfg.seed, "init"));
    auto net = nn::build_network<float>(cfg.net, init);
    auto opt = optim::make_optimizer<float>(cfg.opt_kind, cfg.resolved_lr());

    optim::MonitorState monitor;
    SingleTrainResult result;
    result.best_wire = nn::wire_param_set(net);
    const auto f1_subset = cfg.f1_class_subset();

    for (std::int64_t epoch = 0; epoch < cfg.sched.max_rounds; ++epoch) {
        SeededRng shuffle(derive_seed(cfg.seed, "shuffle", shuffle_node,
                                      static_cast<std::uint64_t>(epoch)));
        const auto stats = optim::train_epoch(net, train, opt, cfg.sched.batch_size, shuffle);
        rows.push_back(make_row(static_cast<int>(epoch), scenario, client_id, "train",
                                static_cast<double>(stats.mean_loss), stats.train_cm, f1_subset,
                                opt.lr));

        double monitored;
        if (!val.empty()) {
            const auto v = eval::evaluate(net, val, cfg.sched.batch_size);
            rows.push_back(make_row(static_cast<int>(epoch), scenario, client_id, "val", v.loss,
                                    v.cm, f1_subset, opt.lr));
            monitored = v.loss;
        } else {
            monitored = static_cast<double>(stats.mean_loss);
        }
        if (epoch % cfg.test_every == 0) {
            const auto t = eval::evaluate(net, test, cfg.sched.batch_size);
            rows.push_back(make_row(static_cast<int>(epoch), scenario, client_id, "test", t.loss,
                                    t.cm, f1_subset, opt.lr));
        }

        if (monitor.fold(monitored, epoch)) {
            result.best_wire = nn::wire_param_set(net);
            result.best_round = static_cast<std::uint32_t>(epoch);
        }
        opt.lr = optim::plateau_update(monitor, cfg.sched, opt.lr);
        if (optim::early_stop_check(monitor, cfg.sched) == optim::StopDecision::Stop) break;
    }

    nn::load_wire_param_set(net, result.best_wire);
    result.best_test = eval::evaluate(net, test, cfg.sched.batch_size);
    return result;
}

}  // namespace

DataBundle load_data(const ExperimentConfig& cfg) {
    std::map<std::string, data::Shard> shards;
    if (cfg.data_source == "synth") {
        const auto records = data::synth_generate(synth_config_from(cfg));
        std::map<std::string, std::string> assignment;
        std::vector<data::EcgRecord> plain;
        for (const auto& [rec, shard] : records) {
            assignment[rec.id] = shard;
            plain.push_back(rec);
        }
        shards = data::partition_shards(plain, assignment, cfg.net.input_len);
    } else {
        const auto ds = data::load_manifest(cfg.data_manifest);
        shards = data::partition_shards(ds.records, ds.shard_assignment, cfg.net.input_len);
    }

    DataBundle bundle;
    for (int i = 0; i < 8; ++i) {
        const auto& shard = shards.at("c" + std::to_string(i));
        const auto split = data::split_validation(
            shard.windows, cfg.val_fraction,
            derive_seed(cfg.seed, "valsplit", static_cast<std::uint64_t>(i)));
        bundle.client_train.push_back(split.train);
        bundle.client_val.push_back(split.val);
    }
    bundle.test = shards.at("test").windows;
    if (bundle.test.empty()) throw ConfigError("dataset has an empty test shard");
    return bundle;
}

RunArtifacts cmd_central(const ExperimentConfig& cfg) {
    write_resolved(cfg);
    const DataBundle bundle = load_data(cfg);

    std::vector<data::Window> train, val;
    for (const auto& part : bundle.client_train) train.insert(train.end(), part.begin(), part.end());
    for (const auto& part : bundle.client_val) val.insert(val.end(), part.begin(), part.end());
    if (train.empty()) throw ConfigError("centralized run: no training data");

    RunArtifacts artifacts;
    const auto result = train_single(cfg, "central", "global", 0, train, val, bundle.test,
                                     artifacts.rows);

    eval::write_metrics_csv(artifacts.rows, (fs::path(cfg.out_dir) / "metrics.csv").string());
    transport::write_flup_file((fs::path(cfg.out_dir) / "model.flup").string(),
                               model_envelope(result.best_wire, result.best_round));
    eval::write_confusion_txt(result.best_test.cm,
                              (fs::path(cfg.out_dir) / "confusion.txt").string());

    artifacts.final_test_loss = result.best_test.loss;
    artifacts.final_test_accuracy = result.best_test.acc();
    artifacts.final_test_f1 = eval::macro_over(result.best_test.f1(), cfg.f1_class_subset());
    return artifacts;
}

RunArtifacts cmd_local(const ExperimentConfig& cfg) {
    write_resolved(cfg);
    const DataBundle bundle = load_data(cfg);

    RunArtifacts artifacts;
    std::string confusion_text;
    double sum_f1 = 0, sum_acc = 0, sum_loss = 0;
    std::array<double, 4> sum_per_class = {0, 0, 0, 0};
    int clients = 0;

    for (int i = 0; i < 8; ++i) {
        const auto& train = bundle.client_train[static_cast<std::size_t>(i)];
        const auto& val = bundle.client_val[static_cast<std::size_t>(i)];
        if (train.empty())
            throw ConfigError("local run: client c" + std::to_string(i) + " has no training data");
        const std::string client_id = "c" + std::to_string(i);
        const auto result = train_single(cfg, "local", client_id,
                                         static_cast<std::uint64_t>(i), train, val, bundle.test,
                                         artifacts.rows);
        transport::write_flup_file(
            (fs::path(cfg.out_dir) / ("model_" + client_id + ".flup")).string(),
            model_envelope(result.best_wire, result.best_round));
        confusion_text += "== " + client_id + " ==\n" +
                          eval::format_confusion(result.best_test.cm,
                                                 {"SINUS", "AFIB", "OTHER", "NOISE"}) +
                          "\n";
        sum_f1 += eval::macro_over(result.best_test.f1(), cfg.f1_class_subset());
        sum_acc += result.best_test.acc();
        sum_loss += result.best_test.loss;
        const auto per_class = result.best_test.f1().per_class;
        for (std::size_t c = 0; c < 4 && c < per_class.size(); ++c)
            sum_per_class[c] += per_class[c];
        clients += 1;

        eval::MetricsRow final_row = make_row(static_cast<int>(result.best_round), "local",
                                              client_id, "test", result.best_test.loss,
                                              result.best_test.cm, cfg.f1_class_subset(), 0.0);
        artifacts.rows.push_back(final_row);
    }

    // mean of the per-client final test metrics
    eval::MetricsRow mean_row;
    mean_row.round = 0;
    mean_row.scenario = "local";
    mean_row.client_id = "mean";
    mean_row.split = "test";
    mean_row.loss = sum_loss / clients;
    mean_row.accuracy = sum_acc / clients;
    mean_row.f1_macro = sum_f1 / clients;
    mean_row.f1_per_class = sum_per_class;
    for (auto& v : mean_row.f1_per_class) v /= clients;
    mean_row.lr = 0.0;
    artifacts.rows.push_back(mean_row);

    eval::write_metrics_csv(artifacts.rows, (fs::path(cfg.out_dir) / "metrics.csv").string());
    write_text((fs::path(cfg.out_dir) / "confusion.txt").string(), confusion_text);

    artifacts.final_test_f1 = mean_row.f1_macro;
    artifacts.final_test_accuracy = mean_row.accuracy;
    artifacts.final_test_loss = mean_row.loss;
    return artifacts;
}

RunArtifacts cmd_federated(const ExperimentConfig& cfg) {
    write_resolved(cfg);
    const DataBundle bundle = load_data(cfg);
    for (std::size_t i = 0; i < bundle.client_train.size(); ++i)
        if (bundle.client_train[i].empty())
            throw ConfigError("federated run: client c" + std::to_string(i) +
                              " has no training data");

    fed::FederationConfig fcfg;
    fcfg.fed_id = cfg.fed_id;
    fcfg.net = cfg.net;
    fcfg.agg = cfg.agg;
    fcfg.sched = cfg.sched;
    fcfg.opt_kind = cfg.opt_kind;
    fcfg.lr = cfg.resolved_lr();
    fcfg.seed = cfg.seed;
    fcfg.parallel_clients = cfg.parallel_clients;
    fcfg.persist_optimizer = cfg.persist_optimizer;

    transport::Broker broker;
    const auto result = fed::run_federation(fcfg, bundle.client_train, bundle.test, broker);

    RunArtifacts artifacts;
    const auto f1_subset = cfg.f1_class_subset();
    for (const auto& report : result.reports) {
        for (const auto& client : report.clients) {
            eval::MetricsRow row;
            row.round = static_cast<int>(report.round);
            row.scenario = "federated";
            row.client_id = "c" + std::to_string(client.client_id);
            row.split = "train";
            row.loss = client.train_loss;
            row.accuracy = client.train_accuracy;
            row.f1_macro = client.train_f1;
            row.lr = report.lr;
            artifacts.rows.push_back(row);
        }
        eval::MetricsRow global;
        global.round = static_cast<int>(report.round);
        global.scenario = "federated";
        global.client_id = "global";
        global.split = "test";
        global.loss = report.eval_loss;
        global.accuracy = report.eval_accuracy;
        global.f1_macro = cfg.f1_classes == "cinc3"
                              ? (report.eval_f1_per_class[0] + report.eval_f1_per_class[1] +
                                 report.eval_f1_per_class[2]) / 3.0
                              : report.eval_f1_macro;
        global.f1_per_class = report.eval_f1_per_class;
        global.lr = report.lr;
        artifacts.rows.push_back(global);
    }

    eval::write_metrics_csv(artifacts.rows, (fs::path(cfg.out_dir) / "metrics.csv").string());
    transport::write_flup_file((fs::path(cfg.out_dir) / "model.flup").string(),
                               model_envelope(result.best_global, result.best_round));

    // score the reported (best-round) model
    SeededRng init(derive_seed(cfg.seed, "init"));
    auto net = nn::build_network<float>(cfg.net, init);
    nn::load_wire_param_set(net, result.best_global);
    const auto best = eval::evaluate(net, bundle.test, cfg.sched.batch_size);
    eval::write_confusion_txt(best.cm, (fs::path(cfg.out_dir) / "confusion.txt").string());

    artifacts.final_test_loss = best.loss;
    artifacts.final_test_accuracy = best.acc();
    artifacts.final_test_f1 = eval::macro_over(best.f1(), f1_subset);
    return artifacts;
}

void cmd_gen_data(const ExperimentConfig& cfg) {
    write_resolved(cfg);
    const auto records = data::synth_generate(synth_config_from(cfg));
    data::write_dataset(cfg.out_dir, records);

    // per-shard class histogram
    std::map<std::string, std::array<std::int64_t, 4>> hist;
    for (const auto& [rec, shard] : records)
        hist[shard][static_cast<std::size_t>(rec.label)] += 1;
    std::printf("%-6s %8s %8s %8s %8s\n", "shard", "SINUS", "AFIB", "OTHER", "NOISE");
    for (const auto& name : data::shard_names()) {
        const auto& h = hist[name];
        std::printf("%-6s %8lld %8lld %8lld %8lld\n", name.c_str(), (long long)h[0],
                    (long long)h[1], (long long)h[2], (long long)h[3]);
    }
}

double cmd_gradcheck(const ExperimentConfig& cfg, std::string* report_text) {
    write_resolved(cfg);
    std::ostringstream report;
    double worst = 0;
    for (const nn::NormKind kind : {nn::NormKind::Batch, nn::NormKind::Layer, nn::NormKind::Group}) {
        nn::NetworkConfig tiny;
        tiny.variant = nn::Variant::Small;
        tiny.norm = kind;
        tiny.group_count = 2;
        tiny.input_len = 512;
        tiny.base_channels = 4;
        tiny.filter_len = 16;
        tiny.num_blocks_override = 2;
        tiny.width_period_override = 1;

        SeededRng init(derive_seed(cfg.seed, "init"));
        auto net = nn::build_network<double>(tiny, init);
        SeededRng data_rng(derive_seed(cfg.seed, "gradcheck-data"));
        Tensor<double> batch({2, 1, tiny.input_len});
        for (auto& v : batch.values()) v = data_rng.uniform(-1, 1);
        std::vector<int> labels = {static_cast<int>(data_rng.next_below(4)),
                                   static_cast<int>(data_rng.next_below(4))};
        SeededRng pick(derive_seed(cfg.seed, "gradcheck-pick"));
        const auto result = nn::grad_check(net, batch, labels, 1e-5, pick, 200);

        const char* kind_name = kind == nn::NormKind::Batch
                                    ? "batch"
                                    : (kind == nn::NormKind::Layer ? "layer" : "group");
        report << "norm=" << kind_name << " max_rel_err=" << result.max_rel_err << "\n";
        for (const auto& layer : result.layers) {
            char line[128];
            std::snprintf(line, sizeof(line), "  %-28s coords=%4lld max_rel_err=%.3e\n",
                          layer.name.c_str(), (long long)layer.coords, layer.max_rel_err);
            report << line;
        }
        worst = std::max(worst, result.max_rel_err);
    }
    report << "overall max_rel_err=" << worst << " tolerance=" << cfg.gradcheck_tolerance << "\n";
    if (report_text) *report_text = report.str();
    write_text((fs::path(cfg.out_dir) / "gradcheck.txt").string(), report.str());
    return worst;
}

}  // namespace fedecg::exp
