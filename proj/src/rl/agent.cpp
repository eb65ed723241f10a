#include "ubood/rl/agent.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ubood::rl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Experience e) {
    ++insertions_;
    if (items_.size() < capacity_) {
        items_.push_back(std::move(e));
        return;
    }
    items_[head_] = std::move(e);
    head_ = (head_ + 1) % capacity_;
}

const Experience& ReplayBuffer::at(std::size_t i) const {
    if (i >= items_.size()) throw std::out_of_range("replay index out of range");
    return items_[(head_ + i) % items_.size()];
}

std::vector<const Experience*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw std::logic_error("cannot sample an empty replay buffer");
    std::vector<const Experience*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[rng.below(items_.size())]);
    return out;
}

void validate(const AgentConfig& c) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(what);
    };
    require(c.gamma >= 0.0 && c.gamma <= 1.0, "gamma must lie in [0, 1]");
    require(c.epsilon_start >= 0.0 && c.epsilon_start <= 1.0, "epsilon_start must lie in [0, 1]");
    require(c.epsilon_end >= 0.0 && c.epsilon_end <= 1.0, "epsilon_end must lie in [0, 1]");
    require(c.epsilon_decay_fraction >= 0.0 && c.epsilon_decay_fraction <= 1.0,
            "epsilon_decay_fraction must lie in [0, 1]");
    require(c.buffer_capacity > 0, "buffer_capacity must be positive");
    require(c.batch_size > 0, "batch_size must be positive");
    require(c.train_every > 0, "train_every must be positive");
    require(c.warmup_steps >= 0, "warmup_steps must be non-negative");
    require(c.target_sync_steps > 0, "target_sync_steps must be positive");
    require(c.episodes >= 0, "episodes must be non-negative");
    require(c.snapshot_interval > 0, "snapshot_interval must be positive");
    require(c.adam.learning_rate > 0.0, "learning_rate must be positive");
}

double epsilon_at(const AgentConfig& c, long episode) {
    const double decay = c.epsilon_decay_fraction * static_cast<double>(c.episodes);
    if (decay <= 0.0) return c.epsilon_end;
    const double frac = std::min(1.0, static_cast<double>(episode - 1) / decay);
    return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * std::max(0.0, frac);
}

int select_action(const est::Estimator& net, std::span<const double> state, double epsilon, Rng& rng) {
    if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.integer(0, est::action_count(net));
    return est::argmax(est::predict(net, state, rng).mean);
}

double episode_return(std::span<const double> rewards, double gamma) {
    double total = 0.0, discount = 1.0;
    for (double r : rewards) {
        total += discount * r;
        discount *= gamma;
    }
    return total;
}

namespace {

nn::Matrix stack_next_states(std::span<const Experience* const> batch) {
    nn::Matrix x(static_cast<int>(batch.size()), static_cast<int>(batch[0]->next_state.size()));
    for (std::size_t r = 0; r < batch.size(); ++r)
        std::copy(batch[r]->next_state.begin(), batch[r]->next_state.end(), x.row(static_cast<int>(r)).begin());
    return x;
}

void fill_bootstrap_targets(const nn::Matrix& heads, int k_heads, int actions, std::span<const Experience* const> batch,
                            double gamma, Targets& t) {
    t.per_head.assign(batch.size(), std::vector<double>(static_cast<std::size_t>(k_heads)));
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const Experience& e = *batch[r];
        std::vector<double> mean(static_cast<std::size_t>(actions), 0.0);
        for (int k = 0; k < k_heads; ++k) {
            double best = heads(static_cast<int>(r), k * actions);
            for (int a = 0; a < actions; ++a) {
                const double q = heads(static_cast<int>(r), k * actions + a);
                best = std::max(best, q);
                mean[a] += q / k_heads;
            }
            t.per_head[r][k] = e.terminal ? e.reward : e.reward + gamma * best;
        }
        const double best_mean = mean[est::argmax(mean)];
        t.scalar[r] = e.terminal ? e.reward : e.reward + gamma * best_mean;
    }
}

} // namespace

Targets q_targets(const est::Estimator& target, std::span<const Experience* const> batch, double gamma, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("q_targets needs a non-empty batch");
    Targets t;
    t.scalar.resize(batch.size());
    const nn::Matrix next = stack_next_states(batch);
    if (auto* m = std::get_if<est::MccdNetwork>(&target)) {
        const nn::Matrix out = nn::forward(m->net, next, nn::Mode::eval, rng, m->dropout);
        for (std::size_t r = 0; r < batch.size(); ++r) {
            const Experience& e = *batch[r];
            double best = out(static_cast<int>(r), 0);
            for (int a = 1; a < m->actions; ++a) best = std::max(best, out(static_cast<int>(r), 2 * a));
            t.scalar[r] = e.terminal ? e.reward : e.reward + gamma * best;
        }
        return t;
    }
    if (auto* b = std::get_if<est::BootstrapNetwork>(&target)) {
        fill_bootstrap_targets(est::head_outputs(*b, next), b->heads, b->actions, batch, gamma, t);
    } else {
        const auto& bp = std::get<est::BootstrapPriorNetwork>(target);
        fill_bootstrap_targets(est::head_outputs(bp, next), bp.trainable.heads, bp.trainable.actions, batch, gamma, t);
    }
    return t;
}

std::string snapshot_text(const Snapshot& s) {
    std::ostringstream out;
    out << "ubood-snapshot " << kSnapshotFormatVersion << '\n'
        << "environment " << s.environment << '\n'
        << "version " << s.version << '\n'
        << "seed " << s.seed << '\n'
        << "episode " << s.episode << '\n'
        << "rng_digest " << s.rng_digest << '\n';
    est::write_estimator(out, s.estimator);
    out << "end\n";
    return out.str();
}

Snapshot parse_snapshot(const std::string& text) {
    std::istringstream in(text);
    nn::TokenReader r(in);
    try {
        r.expect("ubood-snapshot");
        const long long version = r.integer();
        if (version != kSnapshotFormatVersion)
            throw SnapshotError("snapshot format version " + std::to_string(version) + " is not supported (expected " +
                                std::to_string(kSnapshotFormatVersion) + ")");
        Snapshot s;
        r.expect("environment");
        s.environment = r.word();
        r.expect("version");
        s.version = r.word();
        r.expect("seed");
        s.seed = static_cast<std::uint64_t>(std::stoull(r.word()));
        r.expect("episode");
        s.episode = static_cast<long>(r.integer());
        r.expect("rng_digest");
        s.rng_digest = r.word();
        s.estimator = est::read_estimator(r);
        r.expect("end");
        if (!r.at_end()) throw SnapshotError("trailing content after snapshot end marker");
        return s;
    } catch (const nn::FormatError& e) {
        throw SnapshotError(std::string("corrupt snapshot: ") + e.what());
    } catch (const std::logic_error& e) {
        throw SnapshotError(std::string("corrupt snapshot: ") + e.what());
    }
}

void save_snapshot(const Snapshot& s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SnapshotError("cannot open " + path.string() + " for writing");
    out << snapshot_text(s);
    if (!out) throw SnapshotError("failed writing " + path.string());
}

Snapshot load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SnapshotError("cannot open snapshot " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_snapshot(buf.str());
}

std::string snapshot_digest(const Snapshot& s) { return hex64(fnv1a64(snapshot_text(s))); }

namespace {

enum Stream : std::uint64_t { kInit = 0, kEnv = 1, kExplore = 2, kMask = 3, kReplay = 4, kDropout = 5 };

double train_on_batch(est::Estimator& online, const est::Estimator& target, std::span<const Experience* const> batch,
                      double gamma, nn::OptimizerState& opt, Rng& dropout_rng) {
    const Targets t = q_targets(target, batch, gamma, dropout_rng);
    if (auto* m = std::get_if<est::MccdNetwork>(&online)) {
        std::vector<est::MccdSample> samples;
        samples.reserve(batch.size());
        for (std::size_t r = 0; r < batch.size(); ++r) samples.push_back({batch[r]->state, batch[r]->action, t.scalar[r]});
        return est::mccd_train_step(*m, samples, opt, dropout_rng);
    }
    std::vector<est::BootstrapSample> samples;
    samples.reserve(batch.size());
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const Experience& e = *batch[r];
        samples.push_back({e.state, e.action, e.mask ? &*e.mask : nullptr, t.per_head[r]});
    }
    if (auto* b = std::get_if<est::BootstrapNetwork>(&online)) return est::bootstrap_train_step(*b, samples, opt);
    return est::bootstrap_train_step(std::get<est::BootstrapPriorNetwork>(online), samples, opt);
}

std::string combined_digest(std::initializer_list<const Rng*> rngs) {
    std::uint64_t h = 0;
    for (const Rng* r : rngs) h = mix64(h ^ r->state_digest());
    return hex64(h);
}

} // namespace

TrainResult train(const TrainSetup& setup, const std::function<void(const TrainingLogRow&)>& on_episode) {
    const AgentConfig& cfg = setup.agent;
    validate(cfg);
    est::ArchitectureConfig arch = setup.architecture;
    arch.state_width = env::observation_width(setup.family);
    arch.actions = env::action_count(setup.family);

    est::Estimator online = est::make_estimator(arch, derive_seed(setup.seed, {kInit}));
    est::Estimator target = online;
    nn::OptimizerState opt(est::trainable_parameters(online), cfg.adam);

    Rng env_rng(derive_seed(setup.seed, {kEnv}));
    Rng explore_rng(derive_seed(setup.seed, {kExplore}));
    Rng mask_rng(derive_seed(setup.seed, {kMask}));
    Rng replay_rng(derive_seed(setup.seed, {kReplay}));
    Rng dropout_rng(derive_seed(setup.seed, {kDropout}));

    const bool uses_masks = arch.architecture != est::Architecture::mccd;
    auto environment = env::make_environment(setup.family, 0);
    ReplayBuffer buffer(cfg.buffer_capacity);

    TrainResult result;
    auto snapshot = [&](long episode) {
        result.snapshots.push_back({online, env::to_string(setup.family), setup.version, setup.seed, episode,
                                    combined_digest({&env_rng, &explore_rng, &mask_rng, &replay_rng, &dropout_rng})});
    };
    snapshot(0);

    long total_steps = 0, train_steps = 0;
    for (long episode = 1; episode <= cfg.episodes; ++episode) {
        const double epsilon = epsilon_at(cfg, episode);
        std::vector<double> state = environment->reset(env_rng);
        std::vector<double> rewards;
        double loss_sum = 0.0, unc_sum = 0.0;
        long loss_count = 0;
        for (;;) {
            const est::EpistemicEstimate e = est::predict(online, state, dropout_rng);
            const int greedy = est::argmax(e.mean);
            unc_sum += e.variance[greedy];
            const int action =
                explore_rng.uniform() < epsilon ? explore_rng.integer(0, environment->action_count()) : greedy;

            env::StepResult step = environment->step(action);
            rewards.push_back(step.reward);
            Experience exp{state, action, step.reward, step.observation, step.terminal, std::nullopt};
            if (uses_masks) exp.mask = est::sample_mask(arch.mask_probability, arch.heads, mask_rng);
            buffer.push(std::move(exp));
            ++total_steps;

            if (total_steps > cfg.warmup_steps && total_steps % cfg.train_every == 0) {
                const auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), replay_rng);
                const double loss = train_on_batch(online, target, batch, cfg.gamma, opt, dropout_rng);
                if (!std::isfinite(loss))
                    throw TrainingDiverged("training loss became non-finite at episode " + std::to_string(episode) +
                                           ", step " + std::to_string(total_steps));
                loss_sum += loss;
                ++loss_count;
                if (++train_steps % cfg.target_sync_steps == 0) target = online;
            }
            if (step.terminal || step.truncated) break;
            state = std::move(step.observation);
        }
        TrainingLogRow row{episode, episode_return(rewards, 1.0), loss_count ? loss_sum / loss_count : 0.0, epsilon,
                           unc_sum / static_cast<double>(rewards.size())};
        result.log.push_back(row);
        if (on_episode) on_episode(row);
        if (episode % cfg.snapshot_interval == 0 || episode == cfg.episodes) snapshot(episode);
    }
    return result;
}

Rollout greedy_rollout(const est::Estimator& net, env::Environment& environment, Rng& env_rng, Rng& net_rng,
                       long episode_id) {
    Rollout out;
    std::vector<double> state = environment.reset(env_rng);
    for (int step = 0;; ++step) {
        const est::EpistemicEstimate e = est::predict(net, state, net_rng);
        const int action = est::argmax(e.mean);
        out.uncertainties.push_back(e.variance[action]);
        env::StepResult r = environment.step(action);
        out.rewards.push_back(r.reward);
        out.trace.push_back({episode_id, step, environment.config_index(), state, action, r.reward, r.terminal});
        if (r.terminal || r.truncated) break;
        state = std::move(r.observation);
    }
    return out;
}

std::vector<Rollout> greedy_rollouts(const est::Estimator& net, env::Family family, int config, int n_episodes,
                                     std::uint64_t seed, bool parallel) {
    if (n_episodes < 0) throw std::invalid_argument("episode count must be non-negative");
    std::vector<Rollout> out(static_cast<std::size_t>(n_episodes));
    auto run = [&](int i) {
        auto environment = env::make_environment(family, config);
        Rng env_rng(derive_seed(seed, {kEnv, static_cast<std::uint64_t>(i)}));
        Rng net_rng(derive_seed(seed, {kDropout, static_cast<std::uint64_t>(i)}));
        out[static_cast<std::size_t>(i)] = greedy_rollout(net, *environment, env_rng, net_rng, i);
    };
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (int i = 0; i < n_episodes; ++i) run(i);
    } else {
        for (int i = 0; i < n_episodes; ++i) run(i);
    }
    return out;
}

} // namespace ubood::rl
