#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ubood/env/environment.hpp"
#include "ubood/est/estimator.hpp"
#include "ubood/rl/agent.hpp"

namespace ubood::cli {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr int kConfigSchemaVersion = 1;

/// Estimator fields fixed by a version tag (UB-MC40 ... UB-BP10).
struct VersionSpec {
    est::Architecture architecture;
    double mask_probability = 1.0; // bootstrap variants
    int mc_passes = 0;             // dropout variant
};

/// Throws ConfigError for an unknown tag.
VersionSpec parse_version(const std::string& tag);
const std::vector<std::string>& known_versions();

struct RunConfig {
    env::Family family = env::Family::gridworld;
    std::string version;
    rl::AgentConfig agent;
    est::ArchitectureConfig architecture;
    std::uint64_t seed = 0;
    int eval_episodes = 30;
    int threshold_episodes = 30;
};

/// Flat JSON object. Requires schema_version, environment and version;
/// every other key is optional. Unknown keys, wrong types and fields that
/// contradict the version tag raise ConfigError naming the offending keys.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Every effective value, including defaults; parse_run_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& config);

rl::TrainSetup train_setup(const RunConfig& config);

} // namespace ubood::cli
