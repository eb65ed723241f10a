#include "ubood/env/lander.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ubood::env {

LanderConfig lander_config(int k) {
    if (k < 0 || k > kLanderMaxConfig)
        throw std::out_of_range("lander configuration " + std::to_string(k) + " outside [0, 5]");
    LanderConfig c;
    c.index = k;
    c.pad_x = {2.0 + k, 5.0 + k};
    c.pad_y = {6.0 - k, 12.0 - k};
    return c;
}

LanderState lander_reset(const LanderConfig& config, Rng& rng) {
    const LanderPhysics& ph = config.physics;
    LanderState s;
    s.x = rng.uniform(ph.start_x.lo, ph.start_x.hi);
    s.y = ph.start_y;
    s.pad_center_x = rng.uniform(config.pad_x.lo, config.pad_x.hi);
    s.pad_y = rng.uniform(config.pad_y.lo, config.pad_y.hi);
    s.pad_half_width = config.pad_half_width;
    return s;
}

double distance_to_pad(const LanderState& s, const LanderPhysics& ph) {
    return std::hypot(s.x - s.pad_center_x, s.y - (s.pad_y + ph.leg_offset_y));
}

namespace {

double leg_tip_y(const LanderState& s, const LanderPhysics& ph, double side) {
    // rotate body-frame offset (side * dx, -dy)
    const double dx = side * ph.leg_offset_x, dy = -ph.leg_offset_y;
    return s.y + dx * std::sin(s.angle) + dy * std::cos(s.angle);
}

} // namespace

double shaping_potential(const LanderState& s, const LanderConfig& config) {
    const LanderRewards& rw = config.rewards;
    return -rw.distance_weight * distance_to_pad(s, config.physics) - rw.speed_weight * std::hypot(s.vx, s.vy) -
           rw.angle_weight * std::abs(s.angle);
}

LanderStep lander_step(const LanderConfig& config, const LanderState& state, LanderAction action) {
    if (state.finished) throw EnvironmentError("step called on a finished lander episode");
    const LanderPhysics& ph = config.physics;
    const LanderRewards& rw = config.rewards;

    double ax = 0.0, ay = -ph.gravity, alpha = 0.0, fuel = 0.0;
    const double c = std::cos(state.angle), s = std::sin(state.angle);
    switch (action) {
    case LanderAction::noop: break;
    case LanderAction::fire_main:
        ax += -ph.main_thrust * s;
        ay += ph.main_thrust * c;
        fuel = rw.main_fuel;
        break;
    case LanderAction::fire_left: // left engine pushes right, rotates clockwise
        ax += ph.side_thrust * c;
        ay += ph.side_thrust * s;
        alpha = -ph.side_torque;
        fuel = rw.side_fuel;
        break;
    case LanderAction::fire_right:
        ax -= ph.side_thrust * c;
        ay -= ph.side_thrust * s;
        alpha = ph.side_torque;
        fuel = rw.side_fuel;
        break;
    default: throw std::invalid_argument("invalid lander action");
    }

    LanderStep out;
    LanderState& n = out.state;
    n = state;
    n.vx += ax * ph.dt;
    n.vy += ay * ph.dt;
    n.angular_velocity += alpha * ph.dt;
    n.x += n.vx * ph.dt;
    n.y += n.vy * ph.dt;
    n.angle += n.angular_velocity * ph.dt;
    n.steps = state.steps + 1;

    const double ground = n.pad_y;
    n.leg_contact = {leg_tip_y(n, ph, -1.0) <= ground, leg_tip_y(n, ph, 1.0) <= ground};
    const bool touched = n.leg_contact[0] || n.leg_contact[1] || n.y <= ground;
    const bool out_of_bounds = n.x < 0.0 || n.x > ph.world_width || n.y > ph.world_height;

    if (touched) {
        const bool on_pad = n.x >= n.pad_left() && n.x <= n.pad_right();
        const bool gentle = std::abs(n.vx) < ph.max_landing_speed && std::abs(n.vy) < ph.max_landing_speed &&
                            std::abs(n.angle) < ph.max_landing_angle;
        out.terminal = true;
        out.outcome = on_pad && gentle ? LanderOutcome::landed : LanderOutcome::crashed;
        out.reward = on_pad && gentle ? rw.landed : rw.crashed;
    } else if (out_of_bounds) {
        out.terminal = true;
        out.outcome = LanderOutcome::crashed;
        out.reward = rw.crashed;
    } else {
        out.reward = shaping_potential(n, config) - shaping_potential(state, config) - fuel;
        if (n.steps >= ph.step_cap) {
            out.truncated = true;
            out.outcome = LanderOutcome::truncated;
        }
    }
    n.finished = out.terminal || out.truncated;
    return out;
}

std::vector<double> lander_encode(const LanderState& s) {
    return {(s.x - 10.0) / 10.0,
            s.y / 10.0,
            s.vx / 5.0,
            s.vy / 5.0,
            s.angle,
            s.angular_velocity / 2.0,
            s.leg_contact[0] ? 1.0 : 0.0,
            s.leg_contact[1] ? 1.0 : 0.0,
            (s.pad_left() - 10.0) / 10.0,
            (s.pad_right() - 10.0) / 10.0,
            s.pad_y / 10.0};
}

std::vector<double> Lander::reset(Rng& rng) {
    state_ = lander_reset(config_, rng);
    return lander_encode(state_);
}

StepResult Lander::step(int action) {
    if (action < 0 || action >= 4) throw std::invalid_argument("lander action out of range");
    const LanderStep r = lander_step(config_, state_, static_cast<LanderAction>(action));
    state_ = r.state;
    return {lander_encode(state_), r.reward, r.terminal, r.truncated};
}

} // namespace ubood::env
