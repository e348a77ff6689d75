#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedecg/fed/round.hpp"

namespace fedecg::exp {

enum class Scenario { Central, Local, Federated, GenData, GradCheck };

const char* scenario_name(Scenario s);

// Flat `key = value` configuration with `#` comments; CLI overrides win over
// file keys. Every default is materialized on resolve and echoed to
// <out>/config.resolved, which re-parses to an identical config.
struct ExperimentConfig {
    std::uint64_t seed = 0;  // mandatory

    std::string data_source = "synth";  // synth | manifest
    std::string data_manifest;

    int synth_records_per_shard = 150;
    int synth_test_records = 200;
    double synth_skew = 0.6;
    double synth_duration_s = 30.0;
    double synth_rr_mean_s = 0.8;
    double synth_rr_jitter = 0.04;
    double synth_afib_rr_band = 0.45;
    double synth_noise_amplitude = 0.05;

    nn::NetworkConfig net;

    optim::OptKind opt_kind = optim::OptKind::Adam;
    double opt_lr = -1;  // resolved per optimizer kind when unset

    fed::AggregatorConfig agg;
    bool persist_optimizer = false;
    bool parallel_clients = false;
    std::string fed_id = "fed0";

    optim::TrainSchedule sched;
    double val_fraction = 0.1;
    std::int64_t test_every = 1;  // test-set eval cadence for local/central curves
    std::string f1_classes = "all";  // all | cinc3
    double gradcheck_tolerance = 1e-3;

    std::string out_dir;  // from --out

    double resolved_lr() const {
        return opt_lr >= 0 ? opt_lr : (opt_kind == optim::OptKind::Adam ? 1e-3 : 0.01);
    }

    // macro-F1 class subset selected by f1_classes
    std::vector<int> f1_class_subset() const {
        return f1_classes == "cinc3" ? std::vector<int>{0, 1, 2} : std::vector<int>{0, 1, 2, 3};
    }
};

// Parses file text plus `key=value` override strings (later wins). Unknown
// keys and unparsable values raise ConfigError naming the key and line.
ExperimentConfig parse_config(const std::string& file_text,
                              const std::vector<std::string>& overrides, Scenario scenario);

// Canonical echo of every key; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& cfg);

bool config_equal(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace fedecg::exp
