#pragma once

// Subcommand implementations behind the ubood executable. Each returns the
// process exit code and reports problems on err.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ubood::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kRuntimeFailure = 2 };

/// Parses "0,1,5" style lists. Throws std::invalid_argument on malformed input.
std::vector<int> parse_int_list(const std::string& text);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Writes snapshots/, training_log.csv and manifest.json under out_dir.
int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, std::ostream& err,
              bool progress = false);

struct EvalOptions {
    std::filesystem::path snapshot; // a snapshot file, or a directory of snapshot_ep*.txt
    std::vector<int> configs;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path out_dir;
    int episodes = 30;
    int threshold_episodes = 30;
};

/// Writes metrics.csv, returns.csv, traces.csv, uncertainty_curve.csv (when
/// the snapshot argument is a directory holding at least two snapshots) and
/// manifest.json with the fitted threshold.
int cmd_eval(const EvalOptions& options, std::ostream& err);

/// Scores each trace row with the snapshot and labels it with the threshold
/// recorded in an eval manifest. Writes classified.csv under out_dir.
int cmd_classify(const std::filesystem::path& snapshot, const std::filesystem::path& trace,
                 const std::filesystem::path& manifest, const std::filesystem::path& out_dir, std::ostream& err);

/// Writes toy_regression.csv under out_dir.
int cmd_demo_regression(std::uint64_t seed, const std::filesystem::path& out_dir, std::ostream& err);

/// Snapshot files of a training run, ordered by episode.
std::vector<std::filesystem::path> snapshot_files(const std::filesystem::path& dir);

std::string file_digest(const std::filesystem::path& path);

} // namespace ubood::cli
