#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ubood/rng.hpp"

namespace ubood::env {

class EnvironmentError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class Family { gridworld, lander };

std::string to_string(Family f);
Family parse_family(const std::string& s);

struct StepResult {
    std::vector<double> observation;
    double reward = 0.0;
    bool terminal = false;  // true end of the MDP episode
    bool truncated = false; // step cap reached; not terminal for bootstrapping
};

/// Episodic deterministic MDP with a discrete action set. Instances are
/// single-owner; run independent instances for parallel rollouts.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::vector<double> reset(Rng& rng) = 0;
    virtual StepResult step(int action) = 0;
    virtual std::vector<double> observation() const = 0;

    virtual int action_count() const = 0;
    virtual int observation_width() const = 0;
    virtual int config_index() const = 0;
};

std::unique_ptr<Environment> make_environment(Family family, int config_index);

/// Highest valid configuration index of a family (0 is the training config).
int max_config(Family family);
int observation_width(Family family);
int action_count(Family family);

} // namespace ubood::env
