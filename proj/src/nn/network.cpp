#include "ubood/nn/network.hpp"

#include <cmath>

#include "ubood/nn/kernels.hpp"

namespace ubood::nn {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }
std::string to_string(LayerKind k) { return k == LayerKind::dense ? "dense" : "concrete_dropout_dense"; }

Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

LayerKind parse_layer_kind(const std::string& s) {
    if (s == "dense") return LayerKind::dense;
    if (s == "concrete_dropout_dense") return LayerKind::concrete_dropout_dense;
    throw std::invalid_argument("unknown layer kind '" + s + "'");
}

void validate_layers(std::span<const LayerSpec> layers) {
    if (layers.empty()) throw DimensionError("network needs at least one layer");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].input_width < 1 || layers[l].output_width < 1)
            throw DimensionError("layer " + std::to_string(l) + " has a non-positive width");
        if (l > 0 && layers[l - 1].output_width != layers[l].input_width)
            throw DimensionError("layer " + std::to_string(l - 1) + " outputs " +
                                 std::to_string(layers[l - 1].output_width) + " values but layer " +
                                 std::to_string(l) + " expects " + std::to_string(layers[l].input_width));
    }
}

ParameterSet::ParameterSet(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
    validate_layers(layers_);
    std::size_t off = 0;
    offsets_.reserve(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Offsets o;
        o.weights = off;
        off += weight_count(l);
        o.bias = off;
        off += bias_count(l);
        if (is_dropout_layer(l)) o.logit = off++;
        offsets_.push_back(o);
    }
    values_.assign(off, 0.0);
}

bool ParameterSet::has_dropout() const {
    for (std::size_t l = 0; l < layers_.size(); ++l)
        if (is_dropout_layer(l)) return true;
    return false;
}

std::size_t ParameterSet::logit_offset(std::size_t l) const {
    if (!is_dropout_layer(l)) throw std::logic_error("layer " + std::to_string(l) + " has no dropout logit");
    return offsets_[l].logit;
}

double& ParameterSet::dropout_logit(std::size_t l) { return values_[logit_offset(l)]; }
double ParameterSet::dropout_logit(std::size_t l) const { return values_[logit_offset(l)]; }
double ParameterSet::dropout_probability(std::size_t l) const { return sigmoid(dropout_logit(l)); }

ParameterSet init_network(std::vector<LayerSpec> layers, std::uint64_t seed) {
    ParameterSet params(std::move(layers));
    Rng rng(seed);
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        const double limit = std::sqrt(6.0 / params.layers()[l].input_width);
        for (double& w : params.weights(l)) w = rng.uniform(-limit, limit);
        if (params.is_dropout_layer(l))
            params.dropout_logit(l) = std::log(kInitialDropoutProbability / (1.0 - kInitialDropoutProbability));
    }
    return params;
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double concrete_dropout_mask(double logit, double temperature, double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("concrete dropout noise must lie in (0, 1)");
    if (!(temperature > 0.0)) throw std::domain_error("concrete dropout temperature must be positive");
    return sigmoid((logit + std::log(u) - std::log1p(-u)) / temperature);
}

namespace {

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

// Entropy of Bernoulli(sigmoid(logit)), finite for any finite logit.
double bernoulli_entropy_of_logit(double logit) {
    const double p = sigmoid(logit);
    return -p * log_sigmoid(logit) - (1.0 - p) * log_sigmoid(-logit);
}

double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

} // namespace

double dropout_regularizer(const ParameterSet& params, double weight_decay_scale, double entropy_scale) {
    double total = 0.0;
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        if (!params.is_dropout_layer(l)) continue;
        const double p = params.dropout_probability(l);
        total += weight_decay_scale * squared_norm(params.weights(l)) / (1.0 - p) -
                 entropy_scale * params.layers()[l].input_width * bernoulli_entropy_of_logit(params.dropout_logit(l));
    }
    return total;
}

void add_dropout_regularizer_grad(const ParameterSet& params, double weight_decay_scale, double entropy_scale,
                                  Gradients& grads, double scale) {
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
        if (!params.is_dropout_layer(l)) continue;
        const double p = params.dropout_probability(l);
        const auto w = params.weights(l);
        const std::size_t off = params.weight_offset(l);
        for (std::size_t i = 0; i < w.size(); ++i)
            grads.values[off + i] += scale * 2.0 * weight_decay_scale * w[i] / (1.0 - p);
        const double norm = squared_norm(w);
        const double d_p = weight_decay_scale * norm / ((1.0 - p) * (1.0 - p)) -
                           entropy_scale * params.layers()[l].input_width * -params.dropout_logit(l);
        grads.values[params.logit_offset(l)] += scale * d_p * p * (1.0 - p);
    }
}

Matrix forward(const ParameterSet& params, const Matrix& input, Mode /*mode*/, Rng& rng,
               const DropoutConstants& dropout, Tape* tape) {
    if (input.cols() != params.input_width())
        throw DimensionError("input has " + std::to_string(input.cols()) + " values, network expects " +
                             std::to_string(params.input_width()));
    const std::size_t n_layers = params.layer_count();
    if (tape) {
        tape->inputs.assign(n_layers, {});
        tape->masks.assign(n_layers, {});
        tape->dropped.assign(n_layers, {});
        tape->outputs.assign(n_layers, {});
    }
    Matrix x = input;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const LayerSpec& spec = params.layers()[l];
        Matrix seen;
        if (params.is_dropout_layer(l)) {
            const double logit = params.dropout_logit(l);
            const double keep_scale = 1.0 / (1.0 - sigmoid(logit));
            Matrix mask(x.rows(), x.cols());
            seen = Matrix(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.data().size(); ++i) {
                const double z = concrete_dropout_mask(logit, dropout.temperature, rng.uniform_open());
                mask.data()[i] = z;
                seen.data()[i] = x.data()[i] * (1.0 - z) * keep_scale;
            }
            if (tape) tape->masks[l] = std::move(mask);
        } else {
            seen = x;
        }
        Matrix y(x.rows(), spec.output_width);
        kernels::dense_forward(seen, params.weights(l), params.bias(l), y);
        if (spec.activation == Activation::relu)
            for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
        if (tape) {
            tape->inputs[l] = std::move(x);
            tape->dropped[l] = std::move(seen);
            tape->outputs[l] = y;
        }
        x = std::move(y);
    }
    return x;
}

std::vector<double> forward(const ParameterSet& params, std::span<const double> input, Mode mode, Rng& rng,
                            const DropoutConstants& dropout) {
    return forward(params, Matrix::from_row(input), mode, rng, dropout).data();
}

void backward(const ParameterSet& params, const Tape& tape, const Matrix& output_grad,
              const DropoutConstants& dropout, Gradients& grads) {
    if (grads.values.size() != params.size()) throw DimensionError("gradient buffer does not match parameters");
    Matrix grad = output_grad;
    for (std::size_t l = params.layer_count(); l-- > 0;) {
        const LayerSpec& spec = params.layers()[l];
        if (spec.activation == Activation::relu) {
            const auto& out = tape.outputs[l].data();
            for (std::size_t i = 0; i < grad.data().size(); ++i)
                if (out[i] <= 0.0) grad.data()[i] = 0.0;
        }
        std::span<double> dw{grads.values.data() + params.weight_offset(l), params.weights(l).size()};
        std::span<double> db{grads.values.data() + params.bias_offset(l), params.bias(l).size()};
        kernels::dense_backward_params(tape.dropped[l], grad, dw, db);

        const bool need_input_grad = l > 0 || params.is_dropout_layer(l);
        if (!need_input_grad) break;
        Matrix d_seen(grad.rows(), spec.input_width);
        kernels::dense_backward_input(grad, params.weights(l), d_seen);

        if (params.is_dropout_layer(l)) {
            const double p = params.dropout_probability(l);
            const double t = dropout.temperature;
            const auto& x = tape.inputs[l].data();
            const auto& z = tape.masks[l].data();
            double d_logit = 0.0;
            for (std::size_t i = 0; i < d_seen.data().size(); ++i) {
                const double zi = z[i];
                const double d_factor = -zi * (1.0 - zi) / (t * (1.0 - p)) + (1.0 - zi) * p / (1.0 - p);
                d_logit += d_seen.data()[i] * x[i] * d_factor;
                d_seen.data()[i] *= (1.0 - zi) / (1.0 - p);
            }
            grads.values[params.logit_offset(l)] += d_logit;
        }
        grad = std::move(d_seen);
    }
}

Gradients backward(const ParameterSet& params, const Tape& tape, const Matrix& output_grad,
                   const DropoutConstants& dropout) {
    Gradients g(params);
    backward(params, tape, output_grad, dropout, g);
    return g;
}

double gaussian_nll(double mu, double log_var, double target) {
    const double d = target - mu;
    return 0.5 * log_var + d * d / (2.0 * std::exp(log_var));
}

NllGrad gaussian_nll_grad(double mu, double log_var, double target) {
    const double d = target - mu;
    const double inv_var = std::exp(-log_var);
    return {-d * inv_var, 0.5 - 0.5 * d * d * inv_var};
}

void adam_step(ParameterSet& params, const Gradients& grads, OptimizerState& state) {
    const std::size_t n = params.size();
    if (grads.values.size() != n || state.first_moment.size() != n || state.second_moment.size() != n)
        throw DimensionError("adam: parameter, gradient and moment shapes differ");
    const AdamConfig& c = state.config;
    ++state.step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    auto& p = params.values();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grads.values[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g * g;
        p[i] -= c.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + c.epsilon);
    }
}

} // namespace ubood::nn
