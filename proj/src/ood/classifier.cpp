#include "ubood/ood/classifier.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "ubood/rl/agent.hpp"

namespace ubood::ood {

std::string to_string(ClassLabel label) {
    return label == ClassLabel::in_distribution ? "in_distribution" : "out_of_distribution";
}

std::vector<UncertaintySample> collect_in_distribution(const est::Estimator& net, env::Family family, int n_episodes,
                                                       std::uint64_t seed) {
    if (n_episodes < 1) throw std::invalid_argument("collect_in_distribution needs at least one episode");
    const auto rollouts = rl::greedy_rollouts(net, family, 0, n_episodes, seed);
    std::vector<UncertaintySample> samples;
    for (std::size_t ep = 0; ep < rollouts.size(); ++ep)
        for (std::size_t t = 0; t < rollouts[ep].uncertainties.size(); ++t)
            samples.push_back({rollouts[ep].uncertainties[t], 0, static_cast<long>(ep), static_cast<int>(t)});
    return samples;
}

Threshold fit_threshold(std::span<const double> scores) {
    if (scores.size() < 2) throw std::invalid_argument("threshold fit needs at least 2 samples");
    const double n = static_cast<double>(scores.size());
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= n;
    double ss = 0.0;
    for (double s : scores) ss += (s - mean) * (s - mean);
    Threshold t;
    t.mean = mean;
    t.std = std::sqrt(ss / n);
    t.c = t.mean + t.std;
    t.count = scores.size();
    return t;
}

Threshold fit_threshold(std::span<const UncertaintySample> samples) {
    std::vector<double> scores;
    scores.reserve(samples.size());
    for (const auto& s : samples) scores.push_back(s.score);
    return fit_threshold(scores);
}

ClassLabel classify(double score, const Threshold& threshold) {
    return score > threshold.c ? ClassLabel::out_of_distribution : ClassLabel::in_distribution;
}

std::vector<double> score_states(const est::Estimator& net, std::span<const std::vector<double>> states,
                                 std::uint64_t seed) {
    const int width = est::state_width(net);
    for (const auto& s : states)
        if (static_cast<int>(s.size()) != width)
            throw nn::DimensionError("state has " + std::to_string(s.size()) + " values, estimator expects " +
                                     std::to_string(width));
    std::vector<double> scores(states.size());
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < states.size(); ++i) {
        const std::string_view bytes(reinterpret_cast<const char*>(states[i].data()), states[i].size() * sizeof(double));
        Rng rng(derive_seed(seed, {fnv1a64(bytes)}));
        scores[i] = est::uncertainty_of(net, states[i], rng);
    }
    return scores;
}

} // namespace ubood::ood
