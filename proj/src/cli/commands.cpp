#include "ubood/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "ubood/cli/run_config.hpp"
#include "ubood/env/trace.hpp"
#include "ubood/eval/harness.hpp"
#include "ubood/nn/serialize.hpp"
#include "ubood/ood/classifier.hpp"
#include "ubood/rl/agent.hpp"

namespace ubood::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OutputError("cannot write " + path.string());
    out << content;
    if (!out) throw OutputError("failed writing " + path.string());
}

json file_entry(const fs::path& out_dir, const fs::path& path) {
    return {{"file", fs::relative(path, out_dir).generic_string()}, {"digest", file_digest(path)}};
}

void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw OutputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

} // namespace

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (const auto& p : split(text)) {
        std::size_t used = 0;
        const int v = std::stoi(p, &used);
        if (used != p.size()) throw std::invalid_argument("malformed list entry '" + p + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    for (const auto& p : split(text)) {
        std::size_t used = 0;
        if (p.empty() || p[0] == '-') throw std::invalid_argument("seeds must be non-negative integers");
        const unsigned long long v = std::stoull(p, &used);
        if (used != p.size()) throw std::invalid_argument("malformed seed '" + p + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty seed list");
    return out;
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return hex64(fnv1a64(buf.str()));
}

std::vector<fs::path> snapshot_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.starts_with("snapshot_ep") && name.ends_with(".txt"))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

namespace {

std::string snapshot_name(long episode) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "snapshot_ep%06ld.txt", episode);
    return buf;
}

} // namespace

int cmd_train(const fs::path& config_path, const fs::path& out_dir, std::ostream& err, bool progress) {
    RunConfig config;
    try {
        config = load_run_config(config_path);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    try {
        prepare_dir(out_dir / "snapshots");
        const rl::TrainSetup setup = train_setup(config);
        auto on_episode = [&](const rl::TrainingLogRow& row) {
            if (progress && row.episode % 100 == 0)
                std::cerr << "episode " << row.episode << " return " << row.episode_return << " eps " << row.epsilon
                          << " loss " << row.loss << '\n';
        };
        const rl::TrainResult result = rl::train(setup, on_episode);

        json manifest{{"command", "train"},
                      {"config", to_json(config)},
                      {"architecture", est::to_string(config.architecture.architecture)},
                      {"seed", config.seed}};
        json snaps = json::array();
        for (const auto& s : result.snapshots) {
            const fs::path p = out_dir / "snapshots" / snapshot_name(s.episode);
            rl::save_snapshot(s, p);
            json entry = file_entry(out_dir, p);
            entry["episode"] = s.episode;
            entry["rng_digest"] = s.rng_digest;
            snaps.push_back(entry);
        }
        manifest["snapshots"] = snaps;

        std::ostringstream log;
        eval::write_training_log_csv(log, result.log);
        write_file(out_dir / "training_log.csv", log.str());
        manifest["files"] = json::array({file_entry(out_dir, out_dir / "training_log.csv")});
        write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
        return kSuccess;
    } catch (const rl::TrainingDiverged& e) {
        err << "error: training diverged: " << e.what() << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return kRuntimeFailure;
}

int cmd_eval(const EvalOptions& o, std::ostream& err) {
    if (std::find(o.configs.begin(), o.configs.end(), 0) == o.configs.end()) {
        err << "error: --configs must include 0; the threshold is fitted on in-distribution data\n";
        return kUsageError;
    }
    if (o.seeds.empty() || o.episodes < 1 || o.threshold_episodes < 1) {
        err << "error: need at least one seed and a positive episode count\n";
        return kUsageError;
    }
    try {
        std::vector<fs::path> files;
        if (fs::is_directory(o.snapshot)) {
            files = snapshot_files(o.snapshot);
            if (files.empty()) throw rl::SnapshotError("no snapshot_ep*.txt files in " + o.snapshot.string());
        } else {
            files = {o.snapshot};
        }
        std::vector<rl::Snapshot> snaps;
        for (const auto& f : files) snaps.push_back(rl::load_snapshot(f));
        const rl::Snapshot& primary = snaps.back();
        const env::Family family = env::parse_family(primary.environment);
        for (int k : o.configs)
            if (k < 0 || k > env::max_config(family)) {
                err << "error: configuration " << k << " is not defined for " << primary.environment << '\n';
                return kUsageError;
            }

        prepare_dir(o.out_dir);
        eval::SweepOptions so;
        so.episodes = o.episodes;
        so.threshold_episodes = o.threshold_episodes;
        so.keep_trace = true;
        const eval::SweepResult sweep = eval::sweep(primary.estimator, family, primary.version, o.configs, o.seeds, so);

        std::ostringstream metrics, returns, traces;
        eval::write_metrics_csv(metrics, sweep.metrics);
        eval::write_returns_csv(returns, sweep.returns);
        env::write_trace(traces, est::state_width(primary.estimator), sweep.trace);
        write_file(o.out_dir / "metrics.csv", metrics.str());
        write_file(o.out_dir / "returns.csv", returns.str());
        write_file(o.out_dir / "traces.csv", traces.str());
        json outputs = json::array({file_entry(o.out_dir, o.out_dir / "metrics.csv"),
                                    file_entry(o.out_dir, o.out_dir / "returns.csv"),
                                    file_entry(o.out_dir, o.out_dir / "traces.csv")});

        if (snaps.size() >= 2) {
            const int max_k = *std::max_element(o.configs.begin(), o.configs.end());
            const auto curve = eval::uncertainty_over_training(snaps, family, 0, max_k, o.episodes, o.seeds);
            std::ostringstream c;
            eval::write_curve_csv(c, curve, 0, max_k);
            write_file(o.out_dir / "uncertainty_curve.csv", c.str());
            outputs.push_back(file_entry(o.out_dir, o.out_dir / "uncertainty_curve.csv"));
        }

        json snapshot_list = json::array();
        for (std::size_t i = 0; i < files.size(); ++i)
            snapshot_list.push_back({{"file", files[i].generic_string()},
                                     {"episode", snaps[i].episode},
                                     {"digest", file_digest(files[i])}});
        std::vector<int> configs = o.configs;
        std::sort(configs.begin(), configs.end());
        json manifest{{"command", "eval"},
                      {"environment", primary.environment},
                      {"version", primary.version},
                      {"architecture", est::to_string(est::architecture_of(primary.estimator))},
                      {"snapshot", files.back().generic_string()},
                      {"snapshot_digest", file_digest(files.back())},
                      {"snapshots", snapshot_list},
                      {"configs", configs},
                      {"seeds", o.seeds},
                      {"episodes", o.episodes},
                      {"threshold_episodes", o.threshold_episodes},
                      {"threshold",
                       {{"mean", sweep.threshold.mean},
                        {"std", sweep.threshold.std},
                        {"c", sweep.threshold.c},
                        {"count", sweep.threshold.count}}},
                      {"files", outputs}};
        write_file(o.out_dir / "manifest.json", manifest.dump(2) + "\n");
        return kSuccess;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

int cmd_classify(const fs::path& snapshot, const fs::path& trace_path, const fs::path& manifest_path,
                 const fs::path& out_dir, std::ostream& err) {
    try {
        const rl::Snapshot snap = rl::load_snapshot(snapshot);
        std::ifstream mf(manifest_path);
        if (!mf) throw std::runtime_error("cannot open manifest " + manifest_path.string());
        const json manifest = json::parse(mf);
        if (!manifest.contains("threshold")) throw std::runtime_error("manifest has no threshold (run eval first)");
        const json& t = manifest.at("threshold");
        ood::Threshold threshold{t.at("mean").get<double>(), t.at("std").get<double>(), t.at("c").get<double>(),
                                 t.at("count").get<std::size_t>()};

        std::ifstream tf(trace_path);
        if (!tf) throw std::runtime_error("cannot open trace " + trace_path.string());
        const env::Trace trace = env::read_trace(tf);
        const int width = est::state_width(snap.estimator);
        if (trace.state_width != width) {
            err << "error: trace states have " << trace.state_width << " values but the snapshot expects " << width
                << '\n';
            return kUsageError;
        }
        std::vector<std::vector<double>> states;
        states.reserve(trace.rows.size());
        for (const auto& r : trace.rows) states.push_back(r.state);
        const std::vector<double> scores = ood::score_states(snap.estimator, states, snap.seed);

        prepare_dir(out_dir);
        std::ostringstream out;
        out << env::trace_header(width) << ",score,label\n";
        for (std::size_t i = 0; i < trace.rows.size(); ++i)
            out << env::trace_line(trace.rows[i]) << ',' << nn::format_real(scores[i]) << ','
                << ood::to_string(ood::classify(scores[i], threshold)) << '\n';
        write_file(out_dir / "classified.csv", out.str());
        return kSuccess;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

int cmd_demo_regression(std::uint64_t seed, const fs::path& out_dir, std::ostream& err) {
    try {
        prepare_dir(out_dir);
        const eval::ToyRegression toy = eval::toy_regression_demo(seed);
        std::ostringstream out;
        eval::write_toy_csv(out, toy);
        write_file(out_dir / "toy_regression.csv", out.str());
        return kSuccess;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

} // namespace ubood::cli
