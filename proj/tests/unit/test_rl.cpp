#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ubood/env/gridworld.hpp"
#include "ubood/rl/agent.hpp"

using namespace ubood;
using namespace ubood::rl;

namespace {

// Single-head bootstrap network whose Q-values equal the given constants.
est::Estimator constant_q(const std::vector<double>& q, int width = 4, int heads = 1) {
    est::ArchitectureConfig c;
    c.architecture = est::Architecture::bootstrap;
    c.state_width = width;
    c.actions = static_cast<int>(q.size());
    c.hidden_width = 8;
    c.heads = heads;
    auto e = est::make_estimator(c, 1);
    auto& net = std::get<est::BootstrapNetwork>(e).net;
    const std::size_t last = net.layer_count() - 1;
    std::fill(net.weights(last).begin(), net.weights(last).end(), 0.0);
    for (int k = 0; k < heads; ++k)
        for (std::size_t a = 0; a < q.size(); ++a) net.bias(last)[k * q.size() + a] = q[a];
    return e;
}

TrainSetup tiny_setup(est::Architecture arch, long episodes) {
    TrainSetup s;
    s.family = env::Family::gridworld;
    s.version = "test";
    s.agent.episodes = episodes;
    s.agent.warmup_steps = 50;
    s.agent.target_sync_steps = 20;
    s.agent.snapshot_interval = 5;
    s.agent.buffer_capacity = 500;
    s.agent.batch_size = 8;
    s.architecture.architecture = arch;
    s.architecture.hidden_width = 8;
    s.architecture.heads = 3;
    s.architecture.mask_probability = 0.7;
    s.architecture.mc_passes = 4;
    s.seed = 42;
    return s;
}

} // namespace

TEST_CASE("greedy action selection") {
    Rng rng(1);
    std::vector<double> s(4, 0.5);
    CHECK(select_action(constant_q({1, 5, 2, 0}), s, 0.0, rng) == 1);
    CHECK(select_action(constant_q({3, 3, 3, 3}), s, 0.0, rng) == 0);
}

TEST_CASE("epsilon one selects uniformly") {
    Rng rng(2);
    const auto net = constant_q({1, 5, 2, 0});
    std::vector<double> s(4, 0.5);
    std::vector<int> counts(4, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[select_action(net, s, 1.0, rng)];
    for (int c : counts) CHECK(std::abs(c / static_cast<double>(n) - 0.25) < 0.01);
}

TEST_CASE("epsilon schedule") {
    AgentConfig cfg;
    cfg.episodes = 100;
    CHECK(epsilon_at(cfg, 1) == 1.0);
    CHECK(epsilon_at(cfg, 21) == doctest::Approx(0.05));
    CHECK(epsilon_at(cfg, 11) == doctest::Approx(0.525));
    CHECK(epsilon_at(cfg, 100) == doctest::Approx(0.05));
    for (long e = 2; e <= 100; ++e) CHECK(epsilon_at(cfg, e) <= epsilon_at(cfg, e - 1));
}

TEST_CASE("Q-learning targets") {
    const auto target = constant_q({50, 10, -3, 7}, 4, 2);
    std::vector<Experience> exps{{std::vector<double>(4, 0.0), 0, -1.0, std::vector<double>(4, 0.1), false, {}},
                                 {std::vector<double>(4, 0.0), 1, 100.0, std::vector<double>(4, 0.2), true, {}}};
    std::vector<const Experience*> batch{&exps[0], &exps[1]};
    Rng rng(1);
    auto t = q_targets(target, batch, 0.99, rng);
    CHECK(t.scalar[0] == doctest::Approx(48.5).epsilon(1e-12));
    CHECK(t.scalar[1] == 100.0);
    REQUIRE(t.per_head.size() == 2);
    CHECK(t.per_head[0].size() == 2);
    CHECK(t.per_head[0][1] == doctest::Approx(48.5).epsilon(1e-12));
    CHECK(t.per_head[1][0] == 100.0);

    t = q_targets(target, batch, 0.0, rng);
    CHECK(t.scalar[0] == -1.0);
}

TEST_CASE("bootstrap targets use the matching target head") {
    auto target = constant_q({0, 0}, 4, 2);
    auto& net = std::get<est::BootstrapNetwork>(target).net;
    const std::size_t last = net.layer_count() - 1;
    net.bias(last)[0] = 10.0; // head 0 action 0
    net.bias(last)[3] = 20.0; // head 1 action 1
    std::vector<Experience> exps{{std::vector<double>(4, 0.0), 0, 0.0, std::vector<double>(4, 0.0), false, {}}};
    std::vector<const Experience*> batch{&exps[0]};
    Rng rng(1);
    const auto t = q_targets(target, batch, 0.5, rng);
    CHECK(t.per_head[0][0] == doctest::Approx(5.0));
    CHECK(t.per_head[0][1] == doctest::Approx(10.0));
}

TEST_CASE("discounted episode return") {
    const std::vector<double> r{-1, -1, 100};
    CHECK(episode_return(r, 1.0) == doctest::Approx(98.0));
    CHECK(episode_return(r, 0.99) == doctest::Approx(96.02).epsilon(1e-12));
    CHECK(episode_return(std::vector<double>{}, 0.99) == 0.0);
}

TEST_CASE("replay buffer is a FIFO ring") {
    ReplayBuffer buf(3);
    for (int i = 0; i < 5; ++i) buf.push({{double(i)}, i, 0.0, {double(i)}, false, {}});
    CHECK(buf.size() == 3);
    CHECK(buf.insertions() == 5);
    CHECK(buf.at(0).action == 2);
    CHECK(buf.at(1).action == 3);
    CHECK(buf.at(2).action == 4);
    Rng rng(1);
    const auto s = buf.sample(100, rng);
    CHECK(s.size() == 100);
    for (const auto* e : s) CHECK(e->action >= 2);
    CHECK_THROWS(buf.at(3));
}

TEST_CASE("stored masks persist across replays") {
    ReplayBuffer buf(10);
    Rng rng(3);
    for (int i = 0; i < 10; ++i) buf.push({{0.0}, 0, 0.0, {0.0}, false, est::sample_mask(0.7, 10, rng)});
    std::vector<est::BootstrapMask> first;
    for (std::size_t i = 0; i < buf.size(); ++i) first.push_back(*buf.at(i).mask);
    for (int epoch = 0; epoch < 5; ++epoch)
        for (const auto* e : buf.sample(20, rng)) {
            bool found = false;
            for (const auto& m : first) found |= m == *e->mask;
            CHECK(found);
        }
    for (std::size_t i = 0; i < buf.size(); ++i) CHECK(*buf.at(i).mask == first[i]);
}

TEST_CASE("agent config validation") {
    AgentConfig cfg;
    cfg.gamma = 1.5;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("snapshot round-trip preserves every architecture") {
    Rng rng(4);
    std::vector<std::vector<double>> states;
    for (int i = 0; i < 10; ++i) {
        std::vector<double> s(5);
        for (double& v : s) v = rng.uniform(-1, 1);
        states.push_back(s);
    }
    for (auto arch : {est::Architecture::mccd, est::Architecture::bootstrap, est::Architecture::bootstrap_prior}) {
        est::ArchitectureConfig c;
        c.architecture = arch;
        c.state_width = 5;
        c.actions = 3;
        c.hidden_width = 8;
        c.heads = 4;
        Snapshot s{est::make_estimator(c, 9), "gridworld", "UB-X", 77, 1000, "abc"};
        const Snapshot back = parse_snapshot(snapshot_text(s));
        CHECK(snapshot_text(back) == snapshot_text(s));
        CHECK(back.seed == 77);
        CHECK(back.episode == 1000);
        for (const auto& st : states) {
            Rng r1(5), r2(5);
            CHECK(est::uncertainty_of(back.estimator, st, r1) == est::uncertainty_of(s.estimator, st, r2));
        }
        if (arch == est::Architecture::bootstrap_prior)
            CHECK(std::get<est::BootstrapPriorNetwork>(back.estimator).prior ==
                  std::get<est::BootstrapPriorNetwork>(s.estimator).prior);
    }
}

TEST_CASE("corrupt snapshots are rejected") {
    est::ArchitectureConfig c;
    c.state_width = 3;
    c.actions = 2;
    c.hidden_width = 4;
    c.heads = 2;
    const std::string text = snapshot_text({est::make_estimator(c, 1), "gridworld", "UB-B10", 1, 0, "x"});
    for (std::size_t cut : {std::size_t{0}, std::size_t{10}, text.size() / 2, text.size() - 4})
        CHECK_THROWS_AS(parse_snapshot(text.substr(0, cut)), SnapshotError);
    std::string wrong = text;
    wrong.replace(wrong.find("ubood-snapshot 1"), 16, "ubood-snapshot 9");
    CHECK_THROWS_AS(parse_snapshot(wrong), SnapshotError);
    CHECK_THROWS_AS(load_snapshot("/nonexistent/snapshot.txt"), SnapshotError);
}

TEST_CASE("snapshot file round-trip") {
    est::ArchitectureConfig c;
    c.architecture = est::Architecture::bootstrap_prior;
    c.state_width = 3;
    c.actions = 2;
    c.hidden_width = 4;
    c.heads = 2;
    const Snapshot s{est::make_estimator(c, 1), "lander", "UB-BP07", 3, 5, "d"};
    const auto path = std::filesystem::temp_directory_path() / "ubood_unit_snapshot.txt";
    save_snapshot(s, path);
    CHECK(snapshot_text(load_snapshot(path)) == snapshot_text(s));
    CHECK(snapshot_digest(load_snapshot(path)) == snapshot_digest(s));
    std::filesystem::remove(path);
}

TEST_CASE("training zero episodes yields only the initial snapshot") {
    const auto r = train(tiny_setup(est::Architecture::bootstrap, 0));
    REQUIRE(r.snapshots.size() == 1);
    CHECK(r.snapshots[0].episode == 0);
    CHECK(r.log.empty());
}

TEST_CASE("training is deterministic for every architecture") {
    for (auto arch : {est::Architecture::bootstrap, est::Architecture::bootstrap_prior, est::Architecture::mccd}) {
        const auto setup = tiny_setup(arch, 12);
        const auto a = train(setup);
        const auto b = train(setup);
        REQUIRE(a.snapshots.size() == b.snapshots.size());
        CHECK(a.snapshots.size() == 4); // episodes 0, 5, 10 and 12
        for (std::size_t i = 0; i < a.snapshots.size(); ++i)
            CHECK(snapshot_text(a.snapshots[i]) == snapshot_text(b.snapshots[i]));
        CHECK(a.log.size() == 12);
        CHECK_FALSE(snapshot_text(a.snapshots.front()) == snapshot_text(a.snapshots.back()));
        auto other = setup;
        other.seed = 43;
        CHECK_FALSE(snapshot_text(train(other).snapshots.back()) == snapshot_text(a.snapshots.back()));
    }
}

TEST_CASE("greedy rollouts are reproducible and parallel equals serial") {
    const auto setup = tiny_setup(est::Architecture::mccd, 3);
    const auto snap = train(setup).snapshots.back();
    for (int config : {0, 7}) {
        const auto par = greedy_rollouts(snap.estimator, env::Family::gridworld, config, 6, 11, true);
        const auto ser = greedy_rollouts(snap.estimator, env::Family::gridworld, config, 6, 11, false);
        REQUIRE(par.size() == 6);
        for (std::size_t i = 0; i < par.size(); ++i) {
            CHECK(par[i].rewards == ser[i].rewards);
            CHECK(par[i].uncertainties == ser[i].uncertainties);
            CHECK(par[i].trace.size() == par[i].rewards.size());
            CHECK(par[i].uncertainties.size() == par[i].rewards.size());
            for (double u : par[i].uncertainties) CHECK(u >= 0.0);
        }
    }
}

TEST_CASE("greedy rollout records the visited states") {
    const auto net = constant_q({0, 0, 0, 1}, env::kGridObservationWidth);
    env::Gridworld g(0);
    Rng env_rng(1), net_rng(2);
    const auto r = greedy_rollout(net, g, env_rng, net_rng, 4);
    REQUIRE_FALSE(r.trace.empty());
    CHECK(r.trace.front().episode == 4);
    for (const auto& row : r.trace) CHECK(row.action == 3);
    // all heads identical, so no epistemic uncertainty anywhere
    for (double u : r.uncertainties) CHECK(u == 0.0);
}
