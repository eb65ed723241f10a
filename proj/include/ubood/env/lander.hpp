#pragma once

// Simplified 2-D lunar lander: a point mass with orientation in a 20 x 14
// world, flat terrain at the pad height, Euler integration at 30 Hz.
// Configuration k moves the pad-centre x-interval right and the y-interval
// down by k units.

#include <array>
#include <vector>

#include "ubood/env/environment.hpp"

namespace ubood::env {

/// Half-open real interval [lo, hi).
struct RealInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double v) const { return v >= lo && v < hi; }
};

inline constexpr int kLanderMaxConfig = 5;
inline constexpr int kLanderObservationWidth = 11;

struct LanderPhysics {
    double world_width = 20.0;
    double world_height = 14.0;
    double gravity = 1.6;
    double main_thrust = 4.0;
    double side_torque = 0.15;
    double side_thrust = 0.3;
    double dt = 1.0 / 30.0;
    double leg_offset_x = 0.5; // body-frame leg tip offsets
    double leg_offset_y = 0.5;
    double max_landing_speed = 0.5;
    double max_landing_angle = 0.3;
    int step_cap = 500;
    double start_y = 13.0;
    RealInterval start_x{1.0, 6.0};
};

struct LanderRewards {
    double landed = 100.0;
    double crashed = -100.0;
    double distance_weight = 10.0; // per unit reduction of distance to the landing point
    double speed_weight = 10.0;    // per unit reduction of speed
    double angle_weight = 10.0;    // per radian reduction of |angle|
    double main_fuel = 0.3;
    double side_fuel = 0.03;
};

struct LanderConfig {
    int index = 0;
    RealInterval pad_x;
    RealInterval pad_y;
    double pad_half_width = 1.0;
    LanderPhysics physics;
    LanderRewards rewards;
};

enum class LanderAction : int { noop = 0, fire_left = 1, fire_main = 2, fire_right = 3 };

struct LanderState {
    double x = 0.0, y = 0.0;
    double vx = 0.0, vy = 0.0;
    double angle = 0.0;
    double angular_velocity = 0.0;
    std::array<bool, 2> leg_contact{false, false};
    double pad_center_x = 0.0;
    double pad_y = 0.0;
    double pad_half_width = 1.0;
    int steps = 0;
    bool finished = false;

    double pad_left() const { return pad_center_x - pad_half_width; }
    double pad_right() const { return pad_center_x + pad_half_width; }
};

enum class LanderOutcome { flying, landed, crashed, truncated };

struct LanderStep {
    LanderState state;
    double reward = 0.0;
    bool terminal = false;
    bool truncated = false;
    LanderOutcome outcome = LanderOutcome::flying;
};

/// Throws std::out_of_range unless 0 <= k <= 5.
LanderConfig lander_config(int k);
/// Draws the start x first, then the pad centre, so two configurations
/// reset from equal seeds share the start position.
LanderState lander_reset(const LanderConfig& config, Rng& rng);
/// Throws EnvironmentError when stepping a finished episode.
LanderStep lander_step(const LanderConfig& config, const LanderState& state, LanderAction action);
std::vector<double> lander_encode(const LanderState& state);
/// Distance from the lander centre to its resting point on the pad.
double distance_to_pad(const LanderState& state, const LanderPhysics& physics);

/// Potential whose per-step difference is the shaping reward.
double shaping_potential(const LanderState& state, const LanderConfig& config);

class Lander final : public Environment {
public:
    explicit Lander(int config_index) : config_(lander_config(config_index)) {}
    explicit Lander(LanderConfig config) : config_(std::move(config)) {}

    std::vector<double> reset(Rng& rng) override;
    StepResult step(int action) override;
    std::vector<double> observation() const override { return lander_encode(state_); }

    int action_count() const override { return 4; }
    int observation_width() const override { return kLanderObservationWidth; }
    int config_index() const override { return config_.index; }

    const LanderState& state() const { return state_; }
    const LanderConfig& config() const { return config_; }

private:
    LanderConfig config_;
    LanderState state_;
};

} // namespace ubood::env
