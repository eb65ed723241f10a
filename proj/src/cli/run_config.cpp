#include "ubood/cli/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace ubood::cli {

using nlohmann::json;

const std::vector<std::string>& known_versions() {
    static const std::vector<std::string> v{"UB-MC40", "UB-MC80", "UB-B07", "UB-B10", "UB-BP07", "UB-BP10"};
    return v;
}

VersionSpec parse_version(const std::string& tag) {
    static const std::map<std::string, VersionSpec> table{
        {"UB-MC40", {est::Architecture::mccd, 1.0, 40}},
        {"UB-MC80", {est::Architecture::mccd, 1.0, 80}},
        {"UB-B07", {est::Architecture::bootstrap, 0.7, 0}},
        {"UB-B10", {est::Architecture::bootstrap, 1.0, 0}},
        {"UB-BP07", {est::Architecture::bootstrap_prior, 0.7, 0}},
        {"UB-BP10", {est::Architecture::bootstrap_prior, 1.0, 0}},
    };
    const auto it = table.find(tag);
    if (it == table.end()) {
        std::string list;
        for (const auto& v : known_versions()) list += (list.empty() ? "" : ", ") + v;
        throw ConfigError("unknown version tag '" + tag + "' (expected one of " + list + ")");
    }
    return it->second;
}

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "schema_version", "environment",       "version",         "seed",
        "gamma",          "epsilon_start",     "epsilon_end",     "epsilon_decay_fraction",
        "buffer_capacity", "batch_size",       "train_every",     "warmup_steps",
        "target_sync_steps", "episodes",       "snapshot_interval", "learning_rate",
        "hidden_width",   "heads",             "mask_probability", "mc_passes",
        "prior_scale",    "dropout_temperature", "dropout_weight_decay", "dropout_entropy",
        "eval_episodes",  "threshold_episodes",
    };
    return keys;
}

template <class T>
bool read(const json& doc, const char* key, T& out) {
    if (!doc.contains(key)) return false;
    const json& v = doc.at(key);
    if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(std::string("key '") + key + "' must be a string");
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(std::string("key '") + key + "' must be a number");
    } else {
        if (!v.is_number_integer()) throw ConfigError(std::string("key '") + key + "' must be an integer");
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0 && std::is_unsigned_v<T>)
            throw ConfigError(std::string("key '") + key + "' must be non-negative");
    }
    out = v.get<T>();
    return true;
}

} // namespace

RunConfig parse_run_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("run config must be a JSON object");

    std::vector<std::string> unknown;
    for (const auto& [key, _] : doc.items())
        if (!known_keys().contains(key)) unknown.push_back(key);
    if (!unknown.empty()) {
        std::string list;
        for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
        throw ConfigError("unknown config keys: " + list);
    }
    std::vector<std::string> missing;
    for (const char* k : {"schema_version", "environment", "version"})
        if (!doc.contains(k)) missing.emplace_back(k);
    if (!missing.empty()) {
        std::string list;
        for (const auto& k : missing) list += (list.empty() ? "" : ", ") + k;
        throw ConfigError("missing required config keys: " + list);
    }

    int schema = 0;
    read(doc, "schema_version", schema);
    if (schema != kConfigSchemaVersion)
        throw ConfigError("schema_version " + std::to_string(schema) + " is not supported (expected " +
                          std::to_string(kConfigSchemaVersion) + ")");

    RunConfig c;
    std::string family;
    read(doc, "environment", family);
    try {
        c.family = env::parse_family(family);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("environment: ") + e.what());
    }
    read(doc, "version", c.version);
    const VersionSpec vs = parse_version(c.version);

    auto& a = c.agent;
    read(doc, "seed", c.seed);
    read(doc, "gamma", a.gamma);
    read(doc, "epsilon_start", a.epsilon_start);
    read(doc, "epsilon_end", a.epsilon_end);
    read(doc, "epsilon_decay_fraction", a.epsilon_decay_fraction);
    read(doc, "buffer_capacity", a.buffer_capacity);
    read(doc, "batch_size", a.batch_size);
    read(doc, "train_every", a.train_every);
    read(doc, "warmup_steps", a.warmup_steps);
    read(doc, "target_sync_steps", a.target_sync_steps);
    read(doc, "episodes", a.episodes);
    read(doc, "snapshot_interval", a.snapshot_interval);
    read(doc, "learning_rate", a.adam.learning_rate);
    read(doc, "eval_episodes", c.eval_episodes);
    read(doc, "threshold_episodes", c.threshold_episodes);

    auto& e = c.architecture;
    e.architecture = vs.architecture;
    e.state_width = env::observation_width(c.family);
    e.actions = env::action_count(c.family);
    e.mask_probability = vs.mask_probability;
    e.mc_passes = vs.architecture == est::Architecture::mccd ? vs.mc_passes : 40;
    read(doc, "hidden_width", e.hidden_width);
    read(doc, "heads", e.heads);
    read(doc, "prior_scale", e.prior_scale);
    read(doc, "dropout_temperature", e.dropout.temperature);
    read(doc, "dropout_weight_decay", e.dropout.weight_decay_scale);
    read(doc, "dropout_entropy", e.dropout.entropy_scale);

    std::vector<std::string> conflicts;
    double p = e.mask_probability;
    if (read(doc, "mask_probability", p) &&
        (vs.architecture == est::Architecture::mccd || p != vs.mask_probability))
        conflicts.emplace_back("mask_probability");
    int passes = e.mc_passes;
    if (read(doc, "mc_passes", passes) && (vs.architecture != est::Architecture::mccd || passes != vs.mc_passes))
        conflicts.emplace_back("mc_passes");
    if (!conflicts.empty()) {
        std::string list;
        for (const auto& k : conflicts) list += (list.empty() ? "" : ", ") + k;
        throw ConfigError("keys contradict version " + c.version + ": " + list);
    }

    if (vs.architecture != est::Architecture::mccd && e.heads < 2) throw ConfigError("heads: must be at least 2");
    if (c.eval_episodes < 1) throw ConfigError("eval_episodes: must be positive");
    if (c.threshold_episodes < 1) throw ConfigError("threshold_episodes: must be positive");
    try {
        rl::validate(a);
        est::validate(e);
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_run_config(doc);
}

json to_json(const RunConfig& c) {
    const auto& a = c.agent;
    const auto& e = c.architecture;
    json j{
        {"schema_version", kConfigSchemaVersion},
        {"environment", env::to_string(c.family)},
        {"version", c.version},
        {"seed", c.seed},
        {"gamma", a.gamma},
        {"epsilon_start", a.epsilon_start},
        {"epsilon_end", a.epsilon_end},
        {"epsilon_decay_fraction", a.epsilon_decay_fraction},
        {"buffer_capacity", a.buffer_capacity},
        {"batch_size", a.batch_size},
        {"train_every", a.train_every},
        {"warmup_steps", a.warmup_steps},
        {"target_sync_steps", a.target_sync_steps},
        {"episodes", a.episodes},
        {"snapshot_interval", a.snapshot_interval},
        {"learning_rate", a.adam.learning_rate},
        {"hidden_width", e.hidden_width},
        {"eval_episodes", c.eval_episodes},
        {"threshold_episodes", c.threshold_episodes},
    };
    if (e.architecture == est::Architecture::mccd) {
        j["mc_passes"] = e.mc_passes;
        j["dropout_temperature"] = e.dropout.temperature;
        j["dropout_weight_decay"] = e.dropout.weight_decay_scale;
        j["dropout_entropy"] = e.dropout.entropy_scale;
    } else {
        j["heads"] = e.heads;
        j["mask_probability"] = e.mask_probability;
        if (e.architecture == est::Architecture::bootstrap_prior) j["prior_scale"] = e.prior_scale;
    }
    return j;
}

rl::TrainSetup train_setup(const RunConfig& c) { return {c.family, c.version, c.agent, c.architecture, c.seed}; }

} // namespace ubood::cli
