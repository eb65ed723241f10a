#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ubood/nn/matrix.hpp"
#include "ubood/rng.hpp"

namespace ubood::nn {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Activation { relu, identity };
enum class LayerKind { dense, concrete_dropout_dense };
enum class Mode { train, eval };

struct LayerSpec {
    int input_width = 1;
    int output_width = 1;
    Activation activation = Activation::relu;
    LayerKind kind = LayerKind::dense;

    bool operator==(const LayerSpec&) const = default;
};

std::string to_string(Activation a);
std::string to_string(LayerKind k);
Activation parse_activation(const std::string& s);
LayerKind parse_layer_kind(const std::string& s);

/// Throws DimensionError unless widths are positive and consecutive layers chain.
void validate_layers(std::span<const LayerSpec> layers);

/// Constants of the concrete-dropout relaxation and its regularizer.
struct DropoutConstants {
    double temperature = 0.1;
    double weight_decay_scale = 1e-6;
    double entropy_scale = 1e-5;

    bool operator==(const DropoutConstants&) const = default;
};

/// Flat parameter storage for a chain of layers. Per layer: the weight matrix
/// (input_width x output_width, row-major, row = input unit), the bias vector,
/// and for concrete-dropout layers one dropout logit.
class ParameterSet {
public:
    ParameterSet() = default;
    explicit ParameterSet(std::vector<LayerSpec> layers);

    const std::vector<LayerSpec>& layers() const { return layers_; }
    std::size_t layer_count() const { return layers_.size(); }
    int input_width() const { return layers_.front().input_width; }
    int output_width() const { return layers_.back().output_width; }
    bool has_dropout() const;

    std::span<double> weights(std::size_t l) { return slice(offsets_[l].weights, weight_count(l)); }
    std::span<const double> weights(std::size_t l) const { return slice(offsets_[l].weights, weight_count(l)); }
    std::span<double> bias(std::size_t l) { return slice(offsets_[l].bias, bias_count(l)); }
    std::span<const double> bias(std::size_t l) const { return slice(offsets_[l].bias, bias_count(l)); }
    bool is_dropout_layer(std::size_t l) const { return layers_[l].kind == LayerKind::concrete_dropout_dense; }
    double& dropout_logit(std::size_t l);
    double dropout_logit(std::size_t l) const;
    double dropout_probability(std::size_t l) const;

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    std::size_t weight_offset(std::size_t l) const { return offsets_[l].weights; }
    std::size_t bias_offset(std::size_t l) const { return offsets_[l].bias; }
    std::size_t logit_offset(std::size_t l) const;

    bool operator==(const ParameterSet& o) const { return layers_ == o.layers_ && values_ == o.values_; }

private:
    struct Offsets {
        std::size_t weights = 0;
        std::size_t bias = 0;
        std::size_t logit = 0;
    };

    std::size_t weight_count(std::size_t l) const {
        return static_cast<std::size_t>(layers_[l].input_width) * layers_[l].output_width;
    }
    std::size_t bias_count(std::size_t l) const { return static_cast<std::size_t>(layers_[l].output_width); }
    std::span<double> slice(std::size_t off, std::size_t n) { return {values_.data() + off, n}; }
    std::span<const double> slice(std::size_t off, std::size_t n) const { return {values_.data() + off, n}; }

    std::vector<LayerSpec> layers_;
    std::vector<Offsets> offsets_;
    std::vector<double> values_;
};

/// Same layout as the ParameterSet it differentiates.
struct Gradients {
    std::vector<double> values;

    explicit Gradients(std::size_t n = 0) : values(n, 0.0) {}
    explicit Gradients(const ParameterSet& p) : values(p.size(), 0.0) {}
};

/// He-style fan-in uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero
/// biases, dropout probability starting at 0.1.
ParameterSet init_network(std::vector<LayerSpec> layers, std::uint64_t seed);

constexpr double kInitialDropoutProbability = 0.1;

double sigmoid(double x);

/// Relaxed Bernoulli drop indicator sigmoid((logit + log u - log(1-u)) / temperature).
/// The layer input is multiplied by (1 - mask) / (1 - p).
double concrete_dropout_mask(double logit, double temperature, double u);

/// Sum over dropout layers of wd * ||W||^2 / (1-p) - es * input_width * H(p).
double dropout_regularizer(const ParameterSet& params, double weight_decay_scale, double entropy_scale);
void add_dropout_regularizer_grad(const ParameterSet& params, double weight_decay_scale, double entropy_scale,
                                  Gradients& grads, double scale = 1.0);

/// Activations recorded by a forward pass; consumed by backward().
struct Tape {
    std::vector<Matrix> inputs;  // layer input before dropout
    std::vector<Matrix> masks;   // relaxed drop indicators (dropout layers only)
    std::vector<Matrix> dropped; // what the dense product sees
    std::vector<Matrix> outputs; // post-activation
};

/// Batched forward pass. Concrete-dropout layers sample a fresh relaxed mask
/// from rng in both modes; uniform draws are taken in row-major order.
Matrix forward(const ParameterSet& params, const Matrix& input, Mode mode, Rng& rng,
               const DropoutConstants& dropout = {}, Tape* tape = nullptr);

std::vector<double> forward(const ParameterSet& params, std::span<const double> input, Mode mode, Rng& rng,
                            const DropoutConstants& dropout = {});

/// Reverse-mode gradients of a scalar loss given dLoss/dOutput for the
/// recorded batch. Adds into grads when supplied, otherwise returns fresh.
void backward(const ParameterSet& params, const Tape& tape, const Matrix& output_grad,
              const DropoutConstants& dropout, Gradients& grads);
Gradients backward(const ParameterSet& params, const Tape& tape, const Matrix& output_grad,
                   const DropoutConstants& dropout = {});

/// 0.5 * log_var + (target - mu)^2 / (2 exp(log_var)); the 0.5 log(2 pi) constant is dropped.
double gaussian_nll(double mu, double log_var, double target);

struct NllGrad {
    double d_mu;
    double d_log_var;
};
NllGrad gaussian_nll_grad(double mu, double log_var, double target);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    std::uint64_t step = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    AdamConfig config;

    OptimizerState() = default;
    OptimizerState(const ParameterSet& params, AdamConfig cfg)
        : first_moment(params.size(), 0.0), second_moment(params.size(), 0.0), config(cfg) {}
};

/// Adam with bias correction. Throws DimensionError on shape mismatch.
void adam_step(ParameterSet& params, const Gradients& grads, OptimizerState& state);

} // namespace ubood::nn
