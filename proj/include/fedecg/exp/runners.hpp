#pragma once

#include <string>
#include <vector>

#include "fedecg/exp/config.hpp"

namespace fedecg::exp {

// Per-shard windows after the seeded validation split. Training always runs
// on the train parts so the three scenarios see identical data.
struct DataBundle {
    std::vector<std::vector<data::Window>> client_train;  // c0..c7
    std::vector<std::vector<data::Window>> client_val;
    std::vector<data::Window> test;
};

DataBundle load_data(const ExperimentConfig& cfg);

struct RunArtifacts {
    std::vector<eval::MetricsRow> rows;
    double final_test_f1 = 0;      // macro over the configured class subset
    double final_test_accuracy = 0;
    double final_test_loss = 0;
};

// Scenario commands. Each writes config.resolved, metrics.csv, model.flup
// (model_c<i>.flup per client for local runs) and confusion.txt under
// cfg.out_dir, and returns the headline numbers.
RunArtifacts cmd_central(const ExperimentConfig& cfg);
RunArtifacts cmd_local(const ExperimentConfig& cfg);
RunArtifacts cmd_federated(const ExperimentConfig& cfg);

// Synthetic dataset on disk (manifest + raw signals) plus a histogram print.
void cmd_gen_data(const ExperimentConfig& cfg);

// Finite-difference check of the full backward path on a tiny forced config,
// one run per norm kind. Returns the worst relative error; the CLI exits
// nonzero when it exceeds cfg.gradcheck_tolerance.
double cmd_gradcheck(const ExperimentConfig& cfg, std::string* report_text = nullptr);

}  // namespace fedecg::exp
