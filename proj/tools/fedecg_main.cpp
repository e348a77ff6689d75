#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fedecg/exp/runners.hpp"

using namespace fedecg;

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file (flat key = value)");
    cmd->add_option("--seed", args.seed, "root seed (overrides the config key)")
        ->each([&](const std::string&) { args.seed_set = true; });
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--set", args.overrides, "override a config key, e.g. --set opt.lr=0.001");
}

exp::ExperimentConfig build_config(const CommonArgs& args, exp::Scenario scenario) {
    std::string text;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw ConfigError("cannot open config file '" + args.config_path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    std::vector<std::string> overrides = args.overrides;
    if (args.seed_set) overrides.push_back("seed=" + std::to_string(args.seed));
    exp::ExperimentConfig cfg = exp::parse_config(text, overrides, scenario);
    cfg.out_dir = args.out_dir;
    return cfg;
}

void print_headline(const char* scenario, const exp::RunArtifacts& artifacts) {
    std::printf("%s: test loss %.6f, accuracy %.4f, macro-F1 %.4f\n", scenario,
                artifacts.final_test_loss, artifacts.final_test_accuracy,
                artifacts.final_test_f1);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated ECG rhythm classification sandbox"};
    app.require_subcommand(1);

    CommonArgs central_args, local_args, federated_args, gen_args, grad_args;
    auto* central = app.add_subcommand("central", "train one model on the pooled shards");
    add_common(central, central_args);
    auto* local = app.add_subcommand("local", "train one independent model per client shard");
    add_common(local, local_args);
    auto* federated = app.add_subcommand("federated", "run the 8-client federation");
    add_common(federated, federated_args);
    auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset to disk");
    add_common(gen, gen_args);
    auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the backward path");
    add_common(grad, grad_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (central->parsed()) {
            print_headline("central", exp::cmd_central(build_config(central_args, exp::Scenario::Central)));
        } else if (local->parsed()) {
            print_headline("local", exp::cmd_local(build_config(local_args, exp::Scenario::Local)));
        } else if (federated->parsed()) {
            print_headline("federated",
                           exp::cmd_federated(build_config(federated_args, exp::Scenario::Federated)));
        } else if (gen->parsed()) {
            exp::cmd_gen_data(build_config(gen_args, exp::Scenario::GenData));
        } else if (grad->parsed()) {
            const auto cfg = build_config(grad_args, exp::Scenario::GradCheck);
            std::string report;
            const double worst = exp::cmd_gradcheck(cfg, &report);
            std::fputs(report.c_str(), stdout);
            if (worst >= cfg.gradcheck_tolerance) {
                std::fprintf(stderr, "gradcheck FAILED: %.3e >= %.3e\n", worst,
                             cfg.gradcheck_tolerance);
                return 2;
            }
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
