#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ubood/env/environment.hpp"
#include "ubood/env/trace.hpp"
#include "ubood/est/estimator.hpp"
#include "ubood/nn/network.hpp"
#include "ubood/rng.hpp"

namespace ubood::rl {

struct Experience {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
    std::optional<est::BootstrapMask> mask; // drawn once at insertion
};

/// Fixed-capacity FIFO ring of experiences.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Experience e);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t insertions() const { return insertions_; }

    /// i = 0 is the oldest retained experience.
    const Experience& at(std::size_t i) const;

    /// Uniform draws with replacement.
    std::vector<const Experience*> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::vector<Experience> items_;
    std::size_t head_ = 0; // slot of the oldest item once full
    std::uint64_t insertions_ = 0;
};

struct AgentConfig {
    double gamma = 0.99;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.2; // of total episodes
    std::size_t buffer_capacity = 50000;
    int batch_size = 32;
    int train_every = 1;
    long warmup_steps = 1000;
    long target_sync_steps = 500;
    long episodes = 10000;
    long snapshot_interval = 1000;
    nn::AdamConfig adam;
};

/// Throws std::invalid_argument on out-of-range fields.
void validate(const AgentConfig& cfg);

/// Linear decay from epsilon_start to epsilon_end over the first
/// epsilon_decay_fraction of episodes (episode numbers start at 1).
double epsilon_at(const AgentConfig& cfg, long episode);

/// Epsilon-greedy over mean Q; ties go to the lowest action index.
int select_action(const est::Estimator& net, std::span<const double> state, double epsilon, Rng& rng);

struct Targets {
    std::vector<double> scalar;                // r + gamma * max_a mean Q'(s', a)
    std::vector<std::vector<double>> per_head; // bootstrap variants: head k from target head k
};

/// Bootstrapped regression targets from the target network. The dropout
/// network is evaluated with one stochastic pass per next state.
Targets q_targets(const est::Estimator& target, std::span<const Experience* const> batch, double gamma, Rng& rng);

/// sum_k gamma^k r_k
double episode_return(std::span<const double> rewards, double gamma);

inline constexpr int kSnapshotFormatVersion = 1;

struct Snapshot {
    est::Estimator estimator;
    std::string environment;
    std::string version;
    std::uint64_t seed = 0;
    long episode = 0;
    std::string rng_digest;
};

class SnapshotError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string snapshot_text(const Snapshot& s);
Snapshot parse_snapshot(const std::string& text);
void save_snapshot(const Snapshot& s, const std::filesystem::path& path);
/// Throws SnapshotError on I/O failure, version mismatch or corrupt content.
Snapshot load_snapshot(const std::filesystem::path& path);
std::string snapshot_digest(const Snapshot& s);

struct TrainingLogRow {
    long episode = 0;
    double episode_return = 0.0;
    double loss = 0.0; // mean training loss over the episode's updates (0 if none)
    double epsilon = 0.0;
    double mean_uncertainty = 0.0;
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainResult {
    std::vector<Snapshot> snapshots; // episode 0, every snapshot_interval, and the final episode
    std::vector<TrainingLogRow> log;
};

struct TrainSetup {
    env::Family family = env::Family::gridworld;
    std::string version;
    AgentConfig agent;
    est::ArchitectureConfig architecture; // state width and actions are filled from the family
    std::uint64_t seed = 0;
};

/// Fitted Q-learning on configuration 0 of the family. Throws
/// TrainingDiverged if a loss turns non-finite.
TrainResult train(const TrainSetup& setup, const std::function<void(const TrainingLogRow&)>& on_episode = {});

/// One greedy (epsilon = 0) episode with the per-step uncertainty of the
/// visited state. Never touches any training state.
struct Rollout {
    std::vector<double> rewards;
    std::vector<double> uncertainties;
    std::vector<env::TraceRow> trace;
};

Rollout greedy_rollout(const est::Estimator& net, env::Environment& environment, Rng& env_rng, Rng& net_rng,
                       long episode_id = 0);

/// Greedy rollouts for episodes 0..n-1 on one configuration. Episode i
/// seeds its environment and network streams from (seed, i) only, so the
/// same episode index starts from the same draws under every configuration.
/// The OpenMP fan-out returns exactly what the serial loop returns.
std::vector<Rollout> greedy_rollouts(const est::Estimator& net, env::Family family, int config, int n_episodes,
                                     std::uint64_t seed, bool parallel = true);

} // namespace ubood::rl
