#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "doctest.h"
#include "ubood/env/environment.hpp"
#include "ubood/env/gridworld.hpp"
#include "ubood/env/lander.hpp"
#include "ubood/env/trace.hpp"

using namespace ubood;
using namespace ubood::env;

namespace {

double plane_sum(const std::vector<double>& v, int plane) {
    const int n = kGridWidth * kGridHeight;
    return std::accumulate(v.begin() + plane * n, v.begin() + (plane + 1) * n, 0.0);
}

// Signed length of the intersection of two half-open intervals; negative
// values measure the gap between disjoint intervals.
template <class I>
double signed_overlap(const I& a, const I& b) {
    return std::min(a.hi, b.hi) - std::max(a.lo, b.lo);
}

} // namespace

TEST_CASE("gridworld configuration intervals") {
    CHECK(grid_config(0).start_x == IntInterval{0, 5});
    CHECK(grid_config(0).goal_x == IntInterval{7, 12});
    CHECK(grid_config(1).start_x == IntInterval{1, 6});
    CHECK(grid_config(1).goal_x == IntInterval{6, 11});
    CHECK(grid_config(7).start_x == IntInterval{7, 12});
    CHECK(grid_config(7).goal_x == IntInterval{0, 5});
    CHECK_THROWS_AS(grid_config(8), std::out_of_range);
    CHECK_THROWS_AS(grid_config(-1), std::out_of_range);
}

TEST_CASE("gridworld resets stay inside their intervals and off the wall") {
    Rng rng(1);
    for (int k = 0; k <= kGridMaxConfig; ++k) {
        const auto cfg = grid_config(k);
        for (int i = 0; i < (k == 0 ? 10000 : 1000); ++i) {
            const GridState s = grid_reset(cfg, rng);
            CHECK(cfg.start_x.contains(s.agent.x));
            CHECK(cfg.goal_x.contains(s.goal.x));
            CHECK(cfg.y.contains(s.agent.y));
            CHECK(cfg.y.contains(s.goal.y));
            CHECK_FALSE(is_wall(s.agent));
            CHECK_FALSE(is_wall(s.goal));
            CHECK_FALSE(s.agent == s.goal);
            CHECK(s.steps == 0);
        }
    }
    Rng a(5), b(5);
    CHECK(grid_reset(grid_config(3), a) == grid_reset(grid_config(3), b));
}

TEST_CASE("gridworld step rules") {
    GridState s{{10, 2}, {11, 2}, 0, false};
    auto r = grid_step(s, GridAction::right);
    CHECK(r.reward == 100.0);
    CHECK(r.terminal);
    CHECK_THROWS_AS(grid_step(r.state, GridAction::left), EnvironmentError);

    s = {{0, 1}, {11, 2}, 0, false};
    r = grid_step(s, GridAction::left);
    CHECK(r.state.agent == Cell{0, 1});
    CHECK(r.reward == -1.0);
    CHECK_FALSE(r.terminal);

    s = {{5, 1}, {11, 2}, 0, false};
    r = grid_step(s, GridAction::right);
    CHECK(r.state.agent == Cell{5, 1});
    CHECK(r.reward == -1.0);

    s = {{5, 0}, {11, 2}, 0, false};
    r = grid_step(s, GridAction::right);
    CHECK(r.state.agent == Cell{6, 0});

    s = {{3, 3}, {11, 2}, 0, false};
    r = grid_step(s, GridAction::up);
    CHECK(r.state.agent == Cell{3, 3});
    r = grid_step(s, GridAction::down);
    CHECK(r.state.agent == Cell{3, 2});
}

TEST_CASE("gridworld truncates at the step cap without terminating") {
    GridState s{{0, 0}, {11, 3}, 0, false};
    GridStep r;
    for (int i = 0; i < kGridStepCap; ++i) {
        r = grid_step(s, GridAction::left);
        s = r.state;
        if (i + 1 < kGridStepCap) CHECK_FALSE(r.truncated);
    }
    CHECK(r.truncated);
    CHECK_FALSE(r.terminal);
    CHECK(s.finished);
}

TEST_CASE("gridworld encoding") {
    GridState s{{0, 0}, {11, 3}, 0, false};
    const auto v = grid_encode(s);
    CHECK(v.size() == 144);
    CHECK(v[0] == 1.0);
    CHECK(plane_sum(v, 0) == 1.0);
    CHECK(plane_sum(v, 1) == 1.0);
    CHECK(plane_sum(v, 2) == 2.0);
    CHECK(v[48 + 3 * 12 + 11] == 1.0);
    CHECK(v[96 + 1 * 12 + 6] == 1.0);
    CHECK(v[96 + 2 * 12 + 6] == 1.0);
    CHECK(grid_encode(s) == v);
}

TEST_CASE("every legal start reaches every legal goal") {
    for (int k = 0; k <= kGridMaxConfig; ++k) {
        const auto cfg = grid_config(k);
        for (int sx = cfg.start_x.lo; sx < cfg.start_x.hi; ++sx)
            for (int sy = 0; sy < kGridHeight; ++sy) {
                if (is_wall({sx, sy})) continue;
                // flood fill from the start using the step function itself
                std::set<std::pair<int, int>> seen{{sx, sy}};
                std::queue<Cell> frontier;
                frontier.push({sx, sy});
                while (!frontier.empty()) {
                    const Cell c = frontier.front();
                    frontier.pop();
                    for (int a = 0; a < 4; ++a) {
                        const GridState st{c, {-1, -1}, 0, false};
                        const Cell n = grid_step(st, static_cast<GridAction>(a)).state.agent;
                        if (seen.insert({n.x, n.y}).second) frontier.push(n);
                    }
                }
                for (int gx = cfg.goal_x.lo; gx < cfg.goal_x.hi; ++gx)
                    for (int gy = 0; gy < kGridHeight; ++gy)
                        if (!is_wall({gx, gy})) CHECK(seen.count({gx, gy}) == 1);
            }
    }
}

TEST_CASE("configuration overlap with the training configuration shrinks with k") {
    for (int k = 1; k <= kGridMaxConfig; ++k) {
        CHECK(signed_overlap(grid_config(k).start_x, grid_config(0).start_x) <
              signed_overlap(grid_config(k - 1).start_x, grid_config(0).start_x));
        CHECK(signed_overlap(grid_config(k).goal_x, grid_config(0).goal_x) <
              signed_overlap(grid_config(k - 1).goal_x, grid_config(0).goal_x));
    }
    for (int k = 1; k <= kLanderMaxConfig; ++k) {
        CHECK(signed_overlap(lander_config(k).pad_x, lander_config(0).pad_x) <
              signed_overlap(lander_config(k - 1).pad_x, lander_config(0).pad_x));
        CHECK(signed_overlap(lander_config(k).pad_y, lander_config(0).pad_y) <
              signed_overlap(lander_config(k - 1).pad_y, lander_config(0).pad_y));
    }
}

TEST_CASE("lander configuration intervals") {
    auto check = [](int k, double xlo, double xhi, double ylo, double yhi) {
        const auto c = lander_config(k);
        CHECK(c.pad_x.lo == xlo);
        CHECK(c.pad_x.hi == xhi);
        CHECK(c.pad_y.lo == ylo);
        CHECK(c.pad_y.hi == yhi);
    };
    check(0, 2, 5, 6, 12);
    check(3, 5, 8, 3, 9);
    check(5, 7, 10, 1, 7);
    CHECK_THROWS_AS(lander_config(6), std::out_of_range);
}

TEST_CASE("lander reset places the pad inside the configuration") {
    Rng rng(2);
    for (int k = 0; k <= kLanderMaxConfig; ++k)
        for (int i = 0; i < 1000; ++i) {
            const auto cfg = lander_config(k);
            const auto s = lander_reset(cfg, rng);
            CHECK(cfg.pad_x.contains(s.pad_center_x));
            CHECK(cfg.pad_y.contains(s.pad_y));
            CHECK(cfg.physics.start_x.contains(s.x));
            CHECK(s.vx == 0.0);
            CHECK(s.vy == 0.0);
        }
}

TEST_CASE("lander free fall for one step") {
    const auto cfg = lander_config(0);
    LanderState s;
    s.x = 3.0, s.y = 13.0, s.pad_center_x = 3.0, s.pad_y = 8.0;
    const auto r = lander_step(cfg, s, LanderAction::noop);
    CHECK(r.state.vy == doctest::Approx(-1.6 / 30.0).epsilon(1e-12));
    CHECK(r.state.vy == doctest::Approx(-0.0533).epsilon(1e-3));
    CHECK_FALSE(r.terminal);
}

TEST_CASE("lander resting on the pad lands") {
    const auto cfg = lander_config(0);
    LanderState s;
    s.pad_center_x = 3.5, s.pad_y = 8.0;
    s.x = 3.5, s.y = 8.0 + cfg.physics.leg_offset_y;
    const auto r = lander_step(cfg, s, LanderAction::noop);
    CHECK(r.terminal);
    CHECK(r.outcome == LanderOutcome::landed);
    CHECK(r.reward == 100.0);
    CHECK_THROWS_AS(lander_step(cfg, r.state, LanderAction::noop), EnvironmentError);
}

TEST_CASE("lander crashes on fast, tilted or off-pad contact") {
    const auto cfg = lander_config(0);
    LanderState base;
    base.pad_center_x = 3.5, base.pad_y = 8.0;
    base.x = 3.5, base.y = 8.0 + cfg.physics.leg_offset_y;

    LanderState fast = base;
    fast.vy = -2.0;
    CHECK(lander_step(cfg, fast, LanderAction::noop).outcome == LanderOutcome::crashed);

    LanderState tilted = base;
    tilted.angle = 0.5;
    CHECK(lander_step(cfg, tilted, LanderAction::noop).outcome == LanderOutcome::crashed);

    LanderState off = base;
    off.x = 8.0;
    const auto r = lander_step(cfg, off, LanderAction::noop);
    CHECK(r.outcome == LanderOutcome::crashed);
    CHECK(r.reward == -100.0);

    LanderState away = base;
    away.y = 12.0;
    away.x = 20.0;
    away.vx = 1.0;
    CHECK(lander_step(cfg, away, LanderAction::noop).outcome == LanderOutcome::crashed);
}

TEST_CASE("lander shaping rewards approach and charges fuel") {
    const auto cfg = lander_config(0);
    const auto& w = cfg.rewards;
    auto potential = [&](const LanderState& st) {
        return -w.distance_weight * distance_to_pad(st, cfg.physics) - w.speed_weight * std::sqrt(st.vx * st.vx + st.vy * st.vy) -
               w.angle_weight * std::abs(st.angle);
    };
    LanderState s;
    s.pad_center_x = 3.0, s.pad_y = 6.0;
    s.x = 3.0, s.y = 12.0;
    s.angle = 0.1;
    const auto fall = lander_step(cfg, s, LanderAction::noop);
    CHECK(fall.reward == doctest::Approx(potential(fall.state) - potential(s)).epsilon(1e-12));
    const auto burn = lander_step(cfg, s, LanderAction::fire_main);
    CHECK(burn.reward == doctest::Approx(potential(burn.state) - potential(s) - w.main_fuel).epsilon(1e-12));
    const auto side = lander_step(cfg, s, LanderAction::fire_left);
    CHECK(side.reward == doctest::Approx(potential(side.state) - potential(s) - w.side_fuel).epsilon(1e-12));

    // falling straight down onto the pad with no speed or tilt gains the distance term only
    LanderRewards distance_only = w;
    distance_only.speed_weight = distance_only.angle_weight = 0.0;
    LanderConfig d = cfg;
    d.rewards = distance_only;
    s.angle = 0.0;
    const auto plain = lander_step(d, s, LanderAction::noop);
    const double drop = distance_to_pad(s, cfg.physics) - distance_to_pad(plain.state, cfg.physics);
    CHECK(drop > 0.0);
    CHECK(plain.reward == doctest::Approx(w.distance_weight * drop).epsilon(1e-12));
}

TEST_CASE("lander is deterministic") {
    const auto cfg = lander_config(2);
    Rng rng(3);
    const auto s = lander_reset(cfg, rng);
    for (int a = 0; a < 4; ++a) {
        const auto r1 = lander_step(cfg, s, static_cast<LanderAction>(a));
        const auto r2 = lander_step(cfg, s, static_cast<LanderAction>(a));
        CHECK(lander_encode(r1.state) == lander_encode(r2.state));
        CHECK(r1.reward == r2.reward);
    }
}

TEST_CASE("lander encoding") {
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const auto s = lander_reset(lander_config(i % 6), rng);
        const auto v = lander_encode(s);
        CHECK(v.size() == 11);
        CHECK(v[9] - v[8] == doctest::Approx(2.0 * s.pad_half_width / 10.0).epsilon(1e-12));
    }
}

TEST_CASE("equal seeds across configurations differ only in the pad components") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng a(seed), b(seed);
        const auto ea = lander_encode(lander_reset(lander_config(0), a));
        const auto eb = lander_encode(lander_reset(lander_config(4), b));
        for (int i = 0; i < 8; ++i) CHECK(ea[i] == eb[i]);
        for (int i = 8; i < 11; ++i) CHECK(ea[i] != eb[i]);
    }
}

TEST_CASE("lander truncates at the step cap") {
    auto cfg = lander_config(0);
    cfg.physics.step_cap = 5;
    LanderState s;
    s.pad_center_x = 3.0, s.pad_y = 6.0, s.x = 3.0, s.y = 13.0;
    LanderStep r;
    for (int i = 0; i < 5; ++i) {
        r = lander_step(cfg, s, i % 2 ? LanderAction::fire_main : LanderAction::noop);
        s = r.state;
    }
    CHECK(r.truncated);
    CHECK_FALSE(r.terminal);
}

TEST_CASE("environment factory") {
    for (auto f : {Family::gridworld, Family::lander}) {
        CHECK(parse_family(to_string(f)) == f);
        for (int k = 0; k <= max_config(f); ++k) {
            auto e = make_environment(f, k);
            Rng rng(1);
            const auto obs = e->reset(rng);
            CHECK(static_cast<int>(obs.size()) == observation_width(f));
            CHECK(e->config_index() == k);
            CHECK(e->action_count() == action_count(f));
        }
        CHECK_THROWS(make_environment(f, max_config(f) + 1));
    }
    CHECK(max_config(Family::gridworld) == 7);
    CHECK(max_config(Family::lander) == 5);
    CHECK_THROWS(parse_family("atari"));
}

TEST_CASE("trace CSV round-trip") {
    std::vector<TraceRow> rows{{0, 0, 1, {0.5, -0.25, 1e-17}, 2, -1.0, false},
                               {0, 1, 1, {0.125, 3.0, 0.0}, 3, 100.0, true}};
    std::stringstream ss;
    write_trace(ss, 3, rows);
    CHECK(ss.str().rfind(trace_header(3) + "\n", 0) == 0);
    const Trace t = read_trace(ss);
    CHECK(t.state_width == 3);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].state == rows[0].state);
    CHECK(t.rows[1].terminal);
    CHECK(t.rows[1].reward == 100.0);

    std::stringstream header_only(trace_header(3) + "\n");
    CHECK(read_trace(header_only).rows.empty());
    std::stringstream bad(trace_header(3) + "\n0,0,1,0.5,2\n");
    CHECK_THROWS_AS(read_trace(bad), TraceError);
}
