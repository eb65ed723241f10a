#include <iostream>

#include "CLI11.hpp"
#include "ubood/cli/commands.hpp"

using namespace ubood::cli;

int main(int argc, char** argv) {
    CLI::App app{"Uncertainty-based OOD detection for value-based RL agents"};
    app.require_subcommand(1);

    std::string config, snapshot, configs = "0", seeds = "0", out = ".", trace, manifest;
    int episodes = 30, threshold_episodes = 30;
    bool progress = false;

    auto* train = app.add_subcommand("train", "Train an agent on configuration 0 and write snapshots");
    train->add_option("--config", config, "Run configuration (flat JSON)")->required();
    train->add_option("--out", out, "Output directory")->required();
    train->add_flag("--progress", progress, "Print progress every 100 episodes");

    auto* eval = app.add_subcommand("eval", "Fit the threshold and sweep OOD configurations");
    eval->add_option("--snapshot", snapshot, "Snapshot file or training snapshot directory")->required();
    eval->add_option("--configs", configs, "Comma-separated configuration indices, must include 0")->required();
    eval->add_option("--seeds", seeds, "Comma-separated evaluation seeds");
    eval->add_option("--out", out, "Output directory")->required();
    eval->add_option("--episodes", episodes, "Evaluation episodes per configuration and seed");
    eval->add_option("--threshold-episodes", threshold_episodes, "Configuration-0 episodes for the threshold fit");

    auto* classify = app.add_subcommand("classify", "Score and label the states of a trace CSV");
    classify->add_option("--snapshot", snapshot, "Snapshot file")->required();
    classify->add_option("--trace", trace, "Trace CSV (as written by eval)")->required();
    classify->add_option("--manifest", manifest, "Eval manifest holding the threshold")->required();
    classify->add_option("--out", out, "Output directory")->required();

    auto* demo = app.add_subcommand("demo-regression", "Bootstrap-ensemble uncertainty on a 1-D toy dataset");
    demo->add_option("--seeds", seeds, "Seed");
    demo->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kUsageError;
    }

    try {
        if (*train) return cmd_train(config, out, std::cerr, progress);
        if (*eval) {
            EvalOptions o;
            o.snapshot = snapshot;
            o.configs = parse_int_list(configs);
            o.seeds = parse_seed_list(seeds);
            o.out_dir = out;
            o.episodes = episodes;
            o.threshold_episodes = threshold_episodes;
            return cmd_eval(o, std::cerr);
        }
        if (*classify) return cmd_classify(snapshot, trace, manifest, out, std::cerr);
        if (*demo) {
            const auto s = parse_seed_list(seeds);
            if (s.size() != 1) {
                std::cerr << "error: demo-regression takes exactly one seed\n";
                return kUsageError;
            }
            return cmd_demo_regression(s.front(), out, std::cerr);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    }
    return kUsageError;
}
