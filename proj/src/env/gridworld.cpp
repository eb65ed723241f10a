#include "ubood/env/gridworld.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ubood::env {

bool is_wall(Cell c) { return std::find(kWallCells.begin(), kWallCells.end(), c) != kWallCells.end(); }

bool inside_grid(Cell c) { return c.x >= 0 && c.x < kGridWidth && c.y >= 0 && c.y < kGridHeight; }

GridworldConfig grid_config(int k) {
    if (k < 0 || k > kGridMaxConfig)
        throw std::out_of_range("gridworld configuration " + std::to_string(k) + " outside [0, 7]");
    GridworldConfig c;
    c.index = k;
    c.start_x = {k, 5 + k};
    c.goal_x = {7 - k, 12 - k};
    return c;
}

GridState grid_reset(const GridworldConfig& config, Rng& rng) {
    auto draw = [&](IntInterval xs) {
        Cell c;
        do {
            c = {rng.integer(xs.lo, xs.hi), rng.integer(config.y.lo, config.y.hi)};
        } while (is_wall(c));
        return c;
    };
    GridState s;
    do {
        s.agent = draw(config.start_x);
        s.goal = draw(config.goal_x);
    } while (s.agent == s.goal);
    return s;
}

GridStep grid_step(const GridState& state, GridAction action) {
    if (state.finished) throw EnvironmentError("step called on a finished gridworld episode");
    Cell next = state.agent;
    switch (action) {
    case GridAction::up: ++next.y; break;
    case GridAction::down: --next.y; break;
    case GridAction::left: --next.x; break;
    case GridAction::right: ++next.x; break;
    default: throw std::invalid_argument("invalid gridworld action");
    }
    GridStep out;
    out.state = state;
    out.state.steps = state.steps + 1;
    if (inside_grid(next) && !is_wall(next)) out.state.agent = next;
    if (out.state.agent == out.state.goal) {
        out.reward = 100.0;
        out.terminal = true;
    } else {
        out.reward = -1.0;
        out.truncated = out.state.steps >= kGridStepCap;
    }
    out.state.finished = out.terminal || out.truncated;
    return out;
}

std::vector<double> grid_encode(const GridState& state) {
    constexpr int plane = kGridWidth * kGridHeight;
    std::vector<double> v(kGridObservationWidth, 0.0);
    v[state.agent.y * kGridWidth + state.agent.x] = 1.0;
    v[plane + state.goal.y * kGridWidth + state.goal.x] = 1.0;
    for (Cell w : kWallCells) v[2 * plane + w.y * kGridWidth + w.x] = 1.0;
    return v;
}

std::vector<double> Gridworld::reset(Rng& rng) {
    state_ = grid_reset(config_, rng);
    return grid_encode(state_);
}

StepResult Gridworld::step(int action) {
    if (action < 0 || action >= 4) throw std::invalid_argument("gridworld action out of range");
    const GridStep r = grid_step(state_, static_cast<GridAction>(action));
    state_ = r.state;
    return {grid_encode(state_), r.reward, r.terminal, r.truncated};
}

} // namespace ubood::env
