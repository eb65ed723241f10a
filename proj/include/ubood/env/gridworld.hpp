#pragma once

// Two-room pathfinding gridworld. A vertical wall in column 6 splits the
// 12x4 grid; the rooms connect through hallways at y = 0 and y = 3.
// Configuration k shifts the start x-interval right and the goal x-interval
// left by k cells.

#include <array>
#include <vector>

#include "ubood/env/environment.hpp"

namespace ubood::env {

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

/// Half-open integer interval [lo, hi).
struct IntInterval {
    int lo = 0;
    int hi = 0;
    bool contains(int v) const { return v >= lo && v < hi; }
    bool operator==(const IntInterval&) const = default;
};

inline constexpr int kGridWidth = 12;
inline constexpr int kGridHeight = 4;
inline constexpr int kGridMaxConfig = 7;
inline constexpr int kGridStepCap = 100;
inline constexpr int kGridObservationWidth = 3 * kGridWidth * kGridHeight;
inline constexpr std::array<Cell, 2> kWallCells{{{6, 1}, {6, 2}}};

bool is_wall(Cell c);
bool inside_grid(Cell c);

struct GridworldConfig {
    int index = 0;
    IntInterval start_x;
    IntInterval goal_x;
    IntInterval y{0, kGridHeight};
};

enum class GridAction : int { up = 0, down = 1, left = 2, right = 3 };

struct GridState {
    Cell agent;
    Cell goal;
    int steps = 0;
    bool finished = false;
    bool operator==(const GridState&) const = default;
};

struct GridStep {
    GridState state;
    double reward = 0.0;
    bool terminal = false;
    bool truncated = false;
};

/// Throws std::out_of_range unless 0 <= k <= 7.
GridworldConfig grid_config(int k);
GridState grid_reset(const GridworldConfig& config, Rng& rng);
/// Throws EnvironmentError when stepping a finished episode.
GridStep grid_step(const GridState& state, GridAction action);
/// Agent, goal and wall one-hot planes, each row-major (index y*12 + x).
std::vector<double> grid_encode(const GridState& state);

class Gridworld final : public Environment {
public:
    explicit Gridworld(int config_index) : config_(grid_config(config_index)) {}

    std::vector<double> reset(Rng& rng) override;
    StepResult step(int action) override;
    std::vector<double> observation() const override { return grid_encode(state_); }

    int action_count() const override { return 4; }
    int observation_width() const override { return kGridObservationWidth; }
    int config_index() const override { return config_.index; }

    const GridState& state() const { return state_; }
    void set_state(const GridState& s) { state_ = s; }

private:
    GridworldConfig config_;
    GridState state_;
};

} // namespace ubood::env
