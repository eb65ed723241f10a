#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ubood/nn/network.hpp"
#include "ubood/nn/serialize.hpp"
#include "ubood/rng.hpp"

namespace ubood::est {

enum class Architecture { mccd, bootstrap, bootstrap_prior };

std::string to_string(Architecture a);
Architecture parse_architecture(const std::string& s);

/// Monte-Carlo concrete-dropout Q-network. Output unit 2a is the mean and
/// 2a+1 the log-variance of action a.
struct MccdNetwork {
    nn::ParameterSet net;
    int actions = 0;
    int mc_passes = 40;
    nn::DropoutConstants dropout;
};

/// Shared trunk with K heads. The head layer is one dense layer of width
/// K*|A|; head k owns output columns [k*|A|, (k+1)*|A|).
struct BootstrapNetwork {
    nn::ParameterSet net;
    int actions = 0;
    int heads = 10;
    double mask_probability = 1.0;
};

/// Bootstrap network plus a frozen, independently seeded prior of the same
/// topology. Posterior head k = trainable head k + prior_scale * prior head k.
struct BootstrapPriorNetwork {
    BootstrapNetwork trainable;
    nn::ParameterSet prior;
    double prior_scale = 1.0;
};

using Estimator = std::variant<MccdNetwork, BootstrapNetwork, BootstrapPriorNetwork>;

struct ArchitectureConfig {
    Architecture architecture = Architecture::bootstrap;
    int state_width = 1;
    int actions = 1;
    int hidden_width = 64;
    int heads = 10;
    double mask_probability = 1.0;
    int mc_passes = 40;
    double prior_scale = 1.0;
    nn::DropoutConstants dropout;
};

/// Throws std::invalid_argument when a field is out of range.
void validate(const ArchitectureConfig& cfg);
Estimator make_estimator(const ArchitectureConfig& cfg, std::uint64_t seed);

Architecture architecture_of(const Estimator& e);
int action_count(const Estimator& e);
int state_width(const Estimator& e);

struct BootstrapMask {
    std::vector<std::uint8_t> bits;

    int size() const { return static_cast<int>(bits.size()); }
    bool visible_to(int head) const { return bits[head] != 0; }
    bool operator==(const BootstrapMask&) const = default;
};

/// K independent Bernoulli(p) draws. Throws std::invalid_argument unless 0 < p <= 1.
BootstrapMask sample_mask(double p, int heads, Rng& rng);

struct EpistemicEstimate {
    std::vector<double> mean;
    std::vector<double> variance;
};

struct BootstrapPrediction {
    EpistemicEstimate estimate;
    nn::Matrix heads; // K x |A|
};

struct MccdPrediction {
    EpistemicEstimate estimate;
    std::vector<double> aleatoric; // mean of exp(log_var) over passes
};

/// Divisor-n variance by the definitional two-pass sum.
double population_variance(std::span<const double> values);
/// mean(y^2) - mean(y)^2 over Monte-Carlo pass outputs, clamped at zero.
double two_moment_variance(std::span<const double> values);

/// Index of the largest value; ties go to the lowest index.
int argmax(std::span<const double> values);

BootstrapPrediction bootstrap_predict(const BootstrapNetwork& net, std::span<const double> state);
BootstrapPrediction bootstrap_predict(const BootstrapPriorNetwork& net, std::span<const double> state);
MccdPrediction mccd_predict(const MccdNetwork& net, std::span<const double> state, Rng& rng);

/// Posterior head outputs for a batch of states, rows x (K*|A|).
nn::Matrix head_outputs(const BootstrapNetwork& net, const nn::Matrix& states);
nn::Matrix head_outputs(const BootstrapPriorNetwork& net, const nn::Matrix& states);

/// Mean Q and epistemic variance for any architecture. rng is only drawn
/// from by the dropout network.
EpistemicEstimate predict(const Estimator& e, std::span<const double> state, Rng& rng);

/// Epistemic variance of the greedy action.
double uncertainty_of(const Estimator& e, std::span<const double> state, Rng& rng);

struct BootstrapSample {
    std::span<const double> state;
    int action = 0;
    const BootstrapMask* mask = nullptr;
    std::vector<double> targets; // one per head
};

struct MccdSample {
    std::span<const double> state;
    int action = 0;
    double target = 0.0;
};

struct LossAndGrad {
    double loss = 0.0;
    nn::Gradients grads;
};

/// Mean over the batch of sum_k mask_k * (Q_k(s, a) - y_k)^2. Gradients are
/// taken with respect to the trainable parameters only.
LossAndGrad bootstrap_loss_and_grad(const BootstrapNetwork& net, std::span<const BootstrapSample> batch);
LossAndGrad bootstrap_loss_and_grad(const BootstrapPriorNetwork& net, std::span<const BootstrapSample> batch);
double bootstrap_train_step(BootstrapNetwork& net, std::span<const BootstrapSample> batch, nn::OptimizerState& opt);
double bootstrap_train_step(BootstrapPriorNetwork& net, std::span<const BootstrapSample> batch,
                            nn::OptimizerState& opt);

/// Mean Gaussian NLL of the taken action over one stochastic pass per sample,
/// plus the concrete-dropout regularizer.
LossAndGrad mccd_loss_and_grad(const MccdNetwork& net, std::span<const MccdSample> batch, Rng& rng);
double mccd_train_step(MccdNetwork& net, std::span<const MccdSample> batch, nn::OptimizerState& opt, Rng& rng);

/// Parameters the optimizer updates (the prior is excluded).
const nn::ParameterSet& trainable_parameters(const Estimator& e);

void write_estimator(std::ostream& out, const Estimator& e);
Estimator read_estimator(nn::TokenReader& in);

} // namespace ubood::est
