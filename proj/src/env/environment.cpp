#include "ubood/env/environment.hpp"

#include "ubood/env/gridworld.hpp"
#include "ubood/env/lander.hpp"

namespace ubood::env {

std::string to_string(Family f) { return f == Family::gridworld ? "gridworld" : "lander"; }

Family parse_family(const std::string& s) {
    if (s == "gridworld") return Family::gridworld;
    if (s == "lander") return Family::lander;
    throw std::invalid_argument("unknown environment '" + s + "' (expected gridworld or lander)");
}

std::unique_ptr<Environment> make_environment(Family family, int config_index) {
    if (family == Family::gridworld) return std::make_unique<Gridworld>(config_index);
    return std::make_unique<Lander>(config_index);
}

int max_config(Family family) { return family == Family::gridworld ? kGridMaxConfig : kLanderMaxConfig; }

int observation_width(Family family) {
    return family == Family::gridworld ? kGridObservationWidth : kLanderObservationWidth;
}

int action_count(Family) { return 4; }

} // namespace ubood::env
