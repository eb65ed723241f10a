#pragma once

// Uncertainty-based OOD classification: the score of a state is the
// epistemic variance of the greedy action's Q-value; the decision boundary
// is the in-distribution mean plus one standard deviation.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ubood/env/environment.hpp"
#include "ubood/est/estimator.hpp"

namespace ubood::ood {

struct UncertaintySample {
    double score = 0.0;
    int config = 0;
    long episode = 0;
    int step = 0;
};

struct Threshold {
    double mean = 0.0;
    double std = 0.0;
    double c = 0.0;
    std::size_t count = 0;
};

enum class ClassLabel { in_distribution, out_of_distribution };

std::string to_string(ClassLabel label);

/// Greedy rollouts on configuration 0, one sample per visited state.
std::vector<UncertaintySample> collect_in_distribution(const est::Estimator& net, env::Family family, int n_episodes,
                                                       std::uint64_t seed);

/// Population moments; c = mean + std. Throws std::invalid_argument for fewer than 2 samples.
Threshold fit_threshold(std::span<const double> scores);
Threshold fit_threshold(std::span<const UncertaintySample> samples);

/// Out-of-distribution iff score > c.
ClassLabel classify(double score, const Threshold& threshold);

/// Elementwise uncertainty_of. The dropout network draws its passes from a
/// stream seeded by (seed, state contents), so permuting the input permutes
/// the output. Throws nn::DimensionError on a width mismatch.
std::vector<double> score_states(const est::Estimator& net, std::span<const std::vector<double>> states,
                                 std::uint64_t seed = 0);

} // namespace ubood::ood
