#include "fedecg/exp/config.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace fedecg::exp {

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Central: return "central";
        case Scenario::Local: return "local";
        case Scenario::Federated: return "federated";
        case Scenario::GenData: return "gen-data";
        case Scenario::GradCheck: return "gradcheck";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct KeyValue {
    std::string key;
    std::string value;
    int line;
};

[[noreturn]] void bad(const KeyValue& kv, const std::string& why) {
    throw ConfigError("config key '" + kv.key + "' (line " + std::to_string(kv.line) + "): " + why);
}

double parse_double(const KeyValue& kv) {
    try {
        std::size_t used = 0;
        const double v = std::stod(kv.value, &used);
        if (used != kv.value.size()) bad(kv, "unparsable number '" + kv.value + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad(kv, "unparsable number '" + kv.value + "'");
    }
}

std::int64_t parse_int(const KeyValue& kv) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(kv.value, &used);
        if (used != kv.value.size()) bad(kv, "unparsable integer '" + kv.value + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad(kv, "unparsable integer '" + kv.value + "'");
    }
}

std::uint64_t parse_u64(const KeyValue& kv) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(kv.value, &used);
        if (used != kv.value.size()) bad(kv, "unparsable unsigned integer '" + kv.value + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad(kv, "unparsable unsigned integer '" + kv.value + "'");
    }
}

bool parse_bool(const KeyValue& kv) {
    if (kv.value == "true") return true;
    if (kv.value == "false") return false;
    bad(kv, "expected true or false, got '" + kv.value + "'");
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& file_text,
                              const std::vector<std::string>& overrides, Scenario scenario) {
    std::vector<KeyValue> entries;
    {
        std::istringstream in(file_text);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": expected 'key = value'");
            entries.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no});
        }
        int override_no = 0;
        for (const auto& ov : overrides) {
            ++override_no;
            const auto eq = ov.find('=');
            if (eq == std::string::npos)
                throw ConfigError("override '" + ov + "': expected key=value");
            entries.push_back({trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)), -override_no});
        }
    }

    ExperimentConfig cfg;
    std::set<std::string> seen;
    bool seed_set = false;

    for (const auto& kv : entries) {
        seen.insert(kv.key);
        if (kv.key == "seed") {
            cfg.seed = parse_u64(kv);
            seed_set = true;
        } else if (kv.key == "data.source") {
            if (kv.value != "synth" && kv.value != "manifest") bad(kv, "must be synth or manifest");
            cfg.data_source = kv.value;
        } else if (kv.key == "data.manifest") {
            cfg.data_manifest = kv.value;
        } else if (kv.key == "synth.records_per_shard") {
            cfg.synth_records_per_shard = static_cast<int>(parse_int(kv));
        } else if (kv.key == "synth.test_records") {
            cfg.synth_test_records = static_cast<int>(parse_int(kv));
        } else if (kv.key == "synth.skew") {
            cfg.synth_skew = parse_double(kv);
        } else if (kv.key == "synth.duration_s") {
            cfg.synth_duration_s = parse_double(kv);
        } else if (kv.key == "synth.rr_mean_s") {
            cfg.synth_rr_mean_s = parse_double(kv);
        } else if (kv.key == "synth.rr_jitter") {
            cfg.synth_rr_jitter = parse_double(kv);
        } else if (kv.key == "synth.afib_rr_band") {
            cfg.synth_afib_rr_band = parse_double(kv);
        } else if (kv.key == "synth.noise_amplitude") {
            cfg.synth_noise_amplitude = parse_double(kv);
        } else if (kv.key == "net.variant") {
            if (kv.value == "default") cfg.net.variant = nn::Variant::Default;
            else if (kv.value == "small") cfg.net.variant = nn::Variant::Small;
            else bad(kv, "must be default or small");
        } else if (kv.key == "net.norm") {
            if (kv.value == "batch") cfg.net.norm = nn::NormKind::Batch;
            else if (kv.value == "layer") cfg.net.norm = nn::NormKind::Layer;
            else if (kv.value == "group") cfg.net.norm = nn::NormKind::Group;
            else bad(kv, "must be batch, layer or group");
        } else if (kv.key == "net.group_count") {
            cfg.net.group_count = parse_int(kv);
        } else if (kv.key == "net.input_len") {
            cfg.net.input_len = parse_int(kv);
        } else if (kv.key == "net.base_channels") {
            cfg.net.base_channels = parse_int(kv);
        } else if (kv.key == "net.filter_len") {
            cfg.net.filter_len = parse_int(kv);
        } else if (kv.key == "net.dropout_p") {
            cfg.net.dropout_p = parse_double(kv);
        } else if (kv.key == "net.num_blocks") {
            cfg.net.num_blocks_override = parse_int(kv);
        } else if (kv.key == "net.width_period") {
            cfg.net.width_period_override = parse_int(kv);
        } else if (kv.key == "opt.kind") {
            if (kv.value == "adam") cfg.opt_kind = optim::OptKind::Adam;
            else if (kv.value == "sgd") cfg.opt_kind = optim::OptKind::SGD;
            else bad(kv, "must be adam or sgd");
        } else if (kv.key == "opt.lr") {
            cfg.opt_lr = parse_double(kv);
            if (cfg.opt_lr < 0) bad(kv, "learning rate must be >= 0");
        } else if (kv.key == "agg.kind") {
            if (kv.value == "fedavg") cfg.agg.kind = fed::AggKind::FedAvg;
            else if (kv.value == "fedprox") cfg.agg.kind = fed::AggKind::FedProx;
            else if (kv.value == "feddyn") cfg.agg.kind = fed::AggKind::FedDyn;
            else if (kv.value == "scaffold") cfg.agg.kind = fed::AggKind::Scaffold;
            else bad(kv, "must be fedavg, fedprox, feddyn or scaffold");
        } else if (kv.key == "agg.mu") {
            cfg.agg.mu = parse_double(kv);
        } else if (kv.key == "agg.alpha") {
            cfg.agg.alpha = parse_double(kv);
        } else if (kv.key == "agg.server_lr") {
            cfg.agg.server_lr = parse_double(kv);
        } else if (kv.key == "agg.local_epochs") {
            cfg.agg.local_epochs = parse_int(kv);
        } else if (kv.key == "agg.persist_optimizer") {
            cfg.persist_optimizer = parse_bool(kv);
        } else if (kv.key == "agg.parallel_clients") {
            cfg.parallel_clients = parse_bool(kv);
        } else if (kv.key == "fed.id") {
            if (!transport::valid_token(kv.value)) bad(kv, "must be lowercase alphanumeric");
            cfg.fed_id = kv.value;
        } else if (kv.key == "sched.max_rounds") {
            cfg.sched.max_rounds = parse_int(kv);
        } else if (kv.key == "sched.plateau_patience") {
            cfg.sched.plateau_patience = parse_int(kv);
        } else if (kv.key == "sched.early_stop_patience") {
            cfg.sched.early_stop_patience = parse_int(kv);
        } else if (kv.key == "sched.lr_factor") {
            cfg.sched.lr_factor = parse_double(kv);
        } else if (kv.key == "sched.min_lr") {
            cfg.sched.min_lr = parse_double(kv);
        } else if (kv.key == "sched.batch_size") {
            cfg.sched.batch_size = parse_int(kv);
        } else if (kv.key == "eval.test_every") {
            cfg.test_every = parse_int(kv);
            if (cfg.test_every < 1) bad(kv, "must be >= 1");
        } else if (kv.key == "val.fraction") {
            cfg.val_fraction = parse_double(kv);
        } else if (kv.key == "eval.f1_classes") {
            if (kv.value != "all" && kv.value != "cinc3") bad(kv, "must be all or cinc3");
            cfg.f1_classes = kv.value;
        } else if (kv.key == "gradcheck.tolerance") {
            cfg.gradcheck_tolerance = parse_double(kv);
        } else {
            bad(kv, "unknown key");
        }
    }

    if (!seed_set) throw ConfigError("config: 'seed' is mandatory (file key or --seed)");

    // cross-key consistency: aggregator-specific knobs only with their aggregator
    const auto only_with = [&](const char* key, fed::AggKind kind, const char* kind_name) {
        if (seen.count(key) && cfg.agg.kind != kind)
            throw ConfigError(std::string("config: '") + key + "' applies only to " + kind_name +
                              ", but agg.kind = " + fed::agg_kind_name(cfg.agg.kind));
    };
    only_with("agg.mu", fed::AggKind::FedProx, "fedprox");
    only_with("agg.alpha", fed::AggKind::FedDyn, "feddyn");
    only_with("agg.server_lr", fed::AggKind::Scaffold, "scaffold");

    if (cfg.data_source == "manifest" && cfg.data_manifest.empty() &&
        (scenario == Scenario::Central || scenario == Scenario::Local ||
         scenario == Scenario::Federated))
        throw ConfigError("config: data.source = manifest requires 'data.manifest'");
    if (seen.count("data.manifest") && cfg.data_source != "manifest")
        throw ConfigError("config: 'data.manifest' applies only to data.source = manifest");

    if (cfg.sched.early_stop_patience <= cfg.sched.plateau_patience)
        throw ConfigError("config: sched.early_stop_patience must exceed sched.plateau_patience");
    if (cfg.val_fraction < 0 || cfg.val_fraction >= 1)
        throw ConfigError("config: val.fraction must be in [0,1)");
    if (scenario != Scenario::GradCheck) nn::plan_network(cfg.net);  // structural validation
    cfg.agg.validate();
    return cfg;
}

std::string render_config(const ExperimentConfig& cfg) {
    std::map<std::string, std::string> kv;
    kv["seed"] = std::to_string(cfg.seed);
    kv["data.source"] = cfg.data_source;
    if (!cfg.data_manifest.empty()) kv["data.manifest"] = cfg.data_manifest;
    kv["synth.records_per_shard"] = std::to_string(cfg.synth_records_per_shard);
    kv["synth.test_records"] = std::to_string(cfg.synth_test_records);
    kv["synth.skew"] = fmt_double(cfg.synth_skew);
    kv["synth.duration_s"] = fmt_double(cfg.synth_duration_s);
    kv["synth.rr_mean_s"] = fmt_double(cfg.synth_rr_mean_s);
    kv["synth.rr_jitter"] = fmt_double(cfg.synth_rr_jitter);
    kv["synth.afib_rr_band"] = fmt_double(cfg.synth_afib_rr_band);
    kv["synth.noise_amplitude"] = fmt_double(cfg.synth_noise_amplitude);
    kv["net.variant"] = cfg.net.variant == nn::Variant::Default ? "default" : "small";
    kv["net.norm"] = cfg.net.norm == nn::NormKind::Batch
                         ? "batch"
                         : (cfg.net.norm == nn::NormKind::Layer ? "layer" : "group");
    kv["net.group_count"] = std::to_string(cfg.net.group_count);
    kv["net.input_len"] = std::to_string(cfg.net.input_len);
    kv["net.base_channels"] = std::to_string(cfg.net.base_channels);
    kv["net.filter_len"] = std::to_string(cfg.net.filter_len);
    kv["net.dropout_p"] = fmt_double(cfg.net.dropout_p);
    kv["net.num_blocks"] = std::to_string(cfg.net.num_blocks_override);
    kv["net.width_period"] = std::to_string(cfg.net.width_period_override);
    kv["opt.kind"] = cfg.opt_kind == optim::OptKind::Adam ? "adam" : "sgd";
    kv["opt.lr"] = fmt_double(cfg.resolved_lr());
    kv["agg.kind"] = fed::agg_kind_name(cfg.agg.kind);
    if (cfg.agg.kind == fed::AggKind::FedProx) kv["agg.mu"] = fmt_double(cfg.agg.mu);
    if (cfg.agg.kind == fed::AggKind::FedDyn) kv["agg.alpha"] = fmt_double(cfg.agg.alpha);
    if (cfg.agg.kind == fed::AggKind::Scaffold) kv["agg.server_lr"] = fmt_double(cfg.agg.server_lr);
    kv["agg.local_epochs"] = std::to_string(cfg.agg.local_epochs);
    kv["agg.persist_optimizer"] = cfg.persist_optimizer ? "true" : "false";
    kv["agg.parallel_clients"] = cfg.parallel_clients ? "true" : "false";
    kv["fed.id"] = cfg.fed_id;
    kv["sched.max_rounds"] = std::to_string(cfg.sched.max_rounds);
    kv["sched.plateau_patience"] = std::to_string(cfg.sched.plateau_patience);
    kv["sched.early_stop_patience"] = std::to_string(cfg.sched.early_stop_patience);
    kv["sched.lr_factor"] = fmt_double(cfg.sched.lr_factor);
    kv["sched.min_lr"] = fmt_double(cfg.sched.min_lr);
    kv["sched.batch_size"] = std::to_string(cfg.sched.batch_size);
    kv["eval.test_every"] = std::to_string(cfg.test_every);
    kv["val.fraction"] = fmt_double(cfg.val_fraction);
    kv["eval.f1_classes"] = cfg.f1_classes;
    kv["gradcheck.tolerance"] = fmt_double(cfg.gradcheck_tolerance);

    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

bool config_equal(const ExperimentConfig& a, const ExperimentConfig& b) {
    return render_config(a) == render_config(b);
}

}  // namespace fedecg::exp
