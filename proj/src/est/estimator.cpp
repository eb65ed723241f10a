#include "ubood/est/estimator.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace ubood::est {

using nn::Activation;
using nn::LayerKind;
using nn::LayerSpec;
using nn::Matrix;

std::string to_string(Architecture a) {
    switch (a) {
    case Architecture::mccd: return "mccd";
    case Architecture::bootstrap: return "bootstrap";
    case Architecture::bootstrap_prior: return "bootstrap_prior";
    }
    return "?";
}

Architecture parse_architecture(const std::string& s) {
    if (s == "mccd") return Architecture::mccd;
    if (s == "bootstrap") return Architecture::bootstrap;
    if (s == "bootstrap_prior") return Architecture::bootstrap_prior;
    throw std::invalid_argument("unknown architecture '" + s + "'");
}

void validate(const ArchitectureConfig& cfg) {
    if (cfg.state_width < 1 || cfg.actions < 1 || cfg.hidden_width < 1)
        throw std::invalid_argument("state width, action count and hidden width must be positive");
    if (cfg.architecture == Architecture::mccd) {
        if (cfg.mc_passes < 2) throw std::invalid_argument("mc_passes must be at least 2");
        if (!(cfg.dropout.temperature > 0.0)) throw std::invalid_argument("dropout temperature must be positive");
    } else {
        if (cfg.heads < 1) throw std::invalid_argument("heads must be positive");
        if (!(cfg.mask_probability > 0.0 && cfg.mask_probability <= 1.0))
            throw std::invalid_argument("mask_probability must lie in (0, 1]");
        if (cfg.prior_scale < 0.0) throw std::invalid_argument("prior_scale must be non-negative");
    }
}

namespace {

std::vector<LayerSpec> trunk_with_head(int in, int hidden, int out, LayerKind trunk_kind) {
    return {
        {in, hidden, Activation::relu, trunk_kind},
        {hidden, hidden, Activation::relu, trunk_kind},
        {hidden, out, Activation::identity, LayerKind::dense},
    };
}

constexpr std::uint64_t kPriorStream = 0x70726f72;

} // namespace

Estimator make_estimator(const ArchitectureConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    switch (cfg.architecture) {
    case Architecture::mccd: {
        MccdNetwork n;
        n.net = nn::init_network(
            trunk_with_head(cfg.state_width, cfg.hidden_width, 2 * cfg.actions, LayerKind::concrete_dropout_dense),
            seed);
        n.actions = cfg.actions;
        n.mc_passes = cfg.mc_passes;
        n.dropout = cfg.dropout;
        return n;
    }
    case Architecture::bootstrap:
    case Architecture::bootstrap_prior: {
        const auto layers = trunk_with_head(cfg.state_width, cfg.hidden_width, cfg.heads * cfg.actions, LayerKind::dense);
        BootstrapNetwork b;
        b.net = nn::init_network(layers, seed);
        b.actions = cfg.actions;
        b.heads = cfg.heads;
        b.mask_probability = cfg.mask_probability;
        if (cfg.architecture == Architecture::bootstrap) return b;
        BootstrapPriorNetwork bp;
        bp.trainable = std::move(b);
        bp.prior = nn::init_network(layers, derive_seed(seed, {kPriorStream}));
        bp.prior_scale = cfg.prior_scale;
        return bp;
    }
    }
    throw std::logic_error("unreachable");
}

Architecture architecture_of(const Estimator& e) {
    if (std::holds_alternative<MccdNetwork>(e)) return Architecture::mccd;
    if (std::holds_alternative<BootstrapNetwork>(e)) return Architecture::bootstrap;
    return Architecture::bootstrap_prior;
}

const nn::ParameterSet& trainable_parameters(const Estimator& e) {
    if (auto* m = std::get_if<MccdNetwork>(&e)) return m->net;
    if (auto* b = std::get_if<BootstrapNetwork>(&e)) return b->net;
    return std::get<BootstrapPriorNetwork>(e).trainable.net;
}

int action_count(const Estimator& e) {
    if (auto* m = std::get_if<MccdNetwork>(&e)) return m->actions;
    if (auto* b = std::get_if<BootstrapNetwork>(&e)) return b->actions;
    return std::get<BootstrapPriorNetwork>(e).trainable.actions;
}

int state_width(const Estimator& e) { return trainable_parameters(e).input_width(); }

BootstrapMask sample_mask(double p, int heads, Rng& rng) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("mask probability must lie in (0, 1]");
    BootstrapMask m;
    m.bits.resize(static_cast<std::size_t>(heads));
    for (auto& b : m.bits) b = rng.bernoulli(p) ? 1 : 0;
    return m;
}

double population_variance(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(values.size());
}

double two_moment_variance(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double s1 = 0.0, s2 = 0.0;
    for (double v : values) {
        s1 += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(values.size());
    const double var = s2 / n - (s1 / n) * (s1 / n);
    return var > 0.0 ? var : 0.0;
}

int argmax(std::span<const double> values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

namespace {

void check_width(const nn::ParameterSet& p, std::size_t width) {
    if (static_cast<int>(width) != p.input_width())
        throw nn::DimensionError("state has " + std::to_string(width) + " values, estimator expects " +
                                 std::to_string(p.input_width()));
}

Matrix deterministic_forward(const nn::ParameterSet& p, const Matrix& x) {
    Rng unused(0);
    return nn::forward(p, x, nn::Mode::eval, unused);
}

BootstrapPrediction summarize_heads(const Matrix& row, int heads, int actions) {
    BootstrapPrediction out;
    out.heads = Matrix(heads, actions);
    for (int k = 0; k < heads; ++k)
        for (int a = 0; a < actions; ++a) out.heads(k, a) = row(0, k * actions + a);
    out.estimate.mean.resize(actions);
    out.estimate.variance.resize(actions);
    std::vector<double> column(static_cast<std::size_t>(heads));
    for (int a = 0; a < actions; ++a) {
        double m = 0.0;
        for (int k = 0; k < heads; ++k) {
            column[k] = out.heads(k, a);
            m += column[k];
        }
        out.estimate.mean[a] = m / heads;
        out.estimate.variance[a] = population_variance(column);
    }
    return out;
}

} // namespace

Matrix head_outputs(const BootstrapNetwork& net, const Matrix& states) { return deterministic_forward(net.net, states); }

Matrix head_outputs(const BootstrapPriorNetwork& net, const Matrix& states) {
    Matrix q = deterministic_forward(net.trainable.net, states);
    if (net.prior_scale != 0.0) {
        const Matrix prior = deterministic_forward(net.prior, states);
        for (std::size_t i = 0; i < q.data().size(); ++i) q.data()[i] += net.prior_scale * prior.data()[i];
    }
    return q;
}

BootstrapPrediction bootstrap_predict(const BootstrapNetwork& net, std::span<const double> state) {
    check_width(net.net, state.size());
    return summarize_heads(head_outputs(net, Matrix::from_row(state)), net.heads, net.actions);
}

BootstrapPrediction bootstrap_predict(const BootstrapPriorNetwork& net, std::span<const double> state) {
    check_width(net.trainable.net, state.size());
    return summarize_heads(head_outputs(net, Matrix::from_row(state)), net.trainable.heads, net.trainable.actions);
}

MccdPrediction mccd_predict(const MccdNetwork& net, std::span<const double> state, Rng& rng) {
    if (net.mc_passes < 2) throw std::invalid_argument("mc_passes must be at least 2");
    check_width(net.net, state.size());
    const int passes = net.mc_passes;
    Matrix batch(passes, static_cast<int>(state.size()));
    for (int t = 0; t < passes; ++t) std::copy(state.begin(), state.end(), batch.row(t).begin());
    const Matrix out = nn::forward(net.net, batch, nn::Mode::eval, rng, net.dropout);

    MccdPrediction p;
    p.estimate.mean.resize(net.actions);
    p.estimate.variance.resize(net.actions);
    p.aleatoric.resize(net.actions);
    std::vector<double> mus(static_cast<std::size_t>(passes));
    for (int a = 0; a < net.actions; ++a) {
        double sum = 0.0, alea = 0.0;
        for (int t = 0; t < passes; ++t) {
            mus[t] = out(t, 2 * a);
            sum += mus[t];
            alea += std::exp(out(t, 2 * a + 1));
        }
        p.estimate.mean[a] = sum / passes;
        p.estimate.variance[a] = two_moment_variance(mus);
        p.aleatoric[a] = alea / passes;
    }
    return p;
}

EpistemicEstimate predict(const Estimator& e, std::span<const double> state, Rng& rng) {
    if (auto* m = std::get_if<MccdNetwork>(&e)) return mccd_predict(*m, state, rng).estimate;
    if (auto* b = std::get_if<BootstrapNetwork>(&e)) return bootstrap_predict(*b, state).estimate;
    return bootstrap_predict(std::get<BootstrapPriorNetwork>(e), state).estimate;
}

double uncertainty_of(const Estimator& e, std::span<const double> state, Rng& rng) {
    const EpistemicEstimate est = predict(e, state, rng);
    return est.variance[argmax(est.mean)];
}

namespace {

Matrix stack_states(std::span<const double> first, std::size_t rows, auto&& state_of) {
    Matrix x(static_cast<int>(rows), static_cast<int>(first.size()));
    for (std::size_t r = 0; r < rows; ++r) {
        auto s = state_of(r);
        if (s.size() != first.size()) throw nn::DimensionError("batch states have differing widths");
        std::copy(s.begin(), s.end(), x.row(static_cast<int>(r)).begin());
    }
    return x;
}

LossAndGrad bootstrap_loss_impl(const BootstrapNetwork& net, const nn::ParameterSet* prior, double prior_scale,
                                std::span<const BootstrapSample> batch) {
    LossAndGrad result{0.0, nn::Gradients(net.net)};
    if (batch.empty()) return result;
    check_width(net.net, batch[0].state.size());
    const Matrix x = stack_states(batch[0].state, batch.size(), [&](std::size_t r) { return batch[r].state; });

    Rng unused(0);
    nn::Tape tape;
    Matrix q = nn::forward(net.net, x, nn::Mode::train, unused, {}, &tape);
    if (prior && prior_scale != 0.0) {
        const Matrix p = deterministic_forward(*prior, x);
        for (std::size_t i = 0; i < q.data().size(); ++i) q.data()[i] += prior_scale * p.data()[i];
    }

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    Matrix dq(q.rows(), q.cols());
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const BootstrapSample& s = batch[r];
        if (static_cast<int>(s.targets.size()) != net.heads)
            throw std::invalid_argument("bootstrap sample needs one target per head");
        for (int k = 0; k < net.heads; ++k) {
            if (s.mask && !s.mask->visible_to(k)) continue;
            const int col = k * net.actions + s.action;
            const double err = q(static_cast<int>(r), col) - s.targets[k];
            result.loss += err * err * inv_batch;
            dq(static_cast<int>(r), col) = 2.0 * err * inv_batch;
        }
    }
    nn::backward(net.net, tape, dq, {}, result.grads);
    return result;
}

} // namespace

LossAndGrad bootstrap_loss_and_grad(const BootstrapNetwork& net, std::span<const BootstrapSample> batch) {
    return bootstrap_loss_impl(net, nullptr, 0.0, batch);
}

LossAndGrad bootstrap_loss_and_grad(const BootstrapPriorNetwork& net, std::span<const BootstrapSample> batch) {
    return bootstrap_loss_impl(net.trainable, &net.prior, net.prior_scale, batch);
}

double bootstrap_train_step(BootstrapNetwork& net, std::span<const BootstrapSample> batch, nn::OptimizerState& opt) {
    LossAndGrad lg = bootstrap_loss_and_grad(net, batch);
    nn::adam_step(net.net, lg.grads, opt);
    return lg.loss;
}

double bootstrap_train_step(BootstrapPriorNetwork& net, std::span<const BootstrapSample> batch,
                            nn::OptimizerState& opt) {
    LossAndGrad lg = bootstrap_loss_and_grad(net, batch);
    nn::adam_step(net.trainable.net, lg.grads, opt);
    return lg.loss;
}

LossAndGrad mccd_loss_and_grad(const MccdNetwork& net, std::span<const MccdSample> batch, Rng& rng) {
    const double reg = nn::dropout_regularizer(net.net, net.dropout.weight_decay_scale, net.dropout.entropy_scale);
    LossAndGrad result{reg, nn::Gradients(net.net)};
    nn::add_dropout_regularizer_grad(net.net, net.dropout.weight_decay_scale, net.dropout.entropy_scale,
                                     result.grads);
    if (batch.empty()) return result;
    check_width(net.net, batch[0].state.size());
    const Matrix x = stack_states(batch[0].state, batch.size(), [&](std::size_t r) { return batch[r].state; });

    nn::Tape tape;
    const Matrix out = nn::forward(net.net, x, nn::Mode::train, rng, net.dropout, &tape);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    Matrix dout(out.rows(), out.cols());
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const int row = static_cast<int>(r);
        const int a = batch[r].action;
        const double mu = out(row, 2 * a), log_var = out(row, 2 * a + 1);
        result.loss += nn::gaussian_nll(mu, log_var, batch[r].target) * inv_batch;
        const nn::NllGrad g = nn::gaussian_nll_grad(mu, log_var, batch[r].target);
        dout(row, 2 * a) = g.d_mu * inv_batch;
        dout(row, 2 * a + 1) = g.d_log_var * inv_batch;
    }
    nn::backward(net.net, tape, dout, net.dropout, result.grads);
    return result;
}

double mccd_train_step(MccdNetwork& net, std::span<const MccdSample> batch, nn::OptimizerState& opt, Rng& rng) {
    LossAndGrad lg = mccd_loss_and_grad(net, batch, rng);
    nn::adam_step(net.net, lg.grads, opt);
    return lg.loss;
}

void write_estimator(std::ostream& out, const Estimator& e) {
    out << "architecture " << to_string(architecture_of(e)) << '\n';
    if (auto* m = std::get_if<MccdNetwork>(&e)) {
        out << "actions " << m->actions << '\n'
            << "mc_passes " << m->mc_passes << '\n'
            << "dropout " << nn::format_real(m->dropout.temperature) << ' '
            << nn::format_real(m->dropout.weight_decay_scale) << ' ' << nn::format_real(m->dropout.entropy_scale)
            << '\n';
        out << "network online\n";
        nn::write_parameters(out, m->net);
        return;
    }
    const BootstrapNetwork& b =
        std::holds_alternative<BootstrapNetwork>(e) ? std::get<BootstrapNetwork>(e) : std::get<BootstrapPriorNetwork>(e).trainable;
    out << "actions " << b.actions << '\n'
        << "heads " << b.heads << '\n'
        << "mask_probability " << nn::format_real(b.mask_probability) << '\n';
    if (auto* bp = std::get_if<BootstrapPriorNetwork>(&e)) out << "prior_scale " << nn::format_real(bp->prior_scale) << '\n';
    out << "network online\n";
    nn::write_parameters(out, b.net);
    if (auto* bp = std::get_if<BootstrapPriorNetwork>(&e)) {
        out << "network prior\n";
        nn::write_parameters(out, bp->prior);
    }
}

Estimator read_estimator(nn::TokenReader& in) {
    in.expect("architecture");
    Architecture arch;
    try {
        arch = parse_architecture(in.word());
    } catch (const std::invalid_argument& ex) {
        throw nn::FormatError(ex.what());
    }
    in.expect("actions");
    const int actions = static_cast<int>(in.integer());
    if (arch == Architecture::mccd) {
        MccdNetwork m;
        m.actions = actions;
        in.expect("mc_passes");
        m.mc_passes = static_cast<int>(in.integer());
        in.expect("dropout");
        m.dropout.temperature = in.real();
        m.dropout.weight_decay_scale = in.real();
        m.dropout.entropy_scale = in.real();
        in.expect("network");
        in.expect("online");
        m.net = nn::read_parameters(in);
        if (m.net.output_width() != 2 * actions) throw nn::FormatError("mccd output width does not match actions");
        return m;
    }
    BootstrapNetwork b;
    b.actions = actions;
    in.expect("heads");
    b.heads = static_cast<int>(in.integer());
    in.expect("mask_probability");
    b.mask_probability = in.real();
    double prior_scale = 0.0;
    if (arch == Architecture::bootstrap_prior) {
        in.expect("prior_scale");
        prior_scale = in.real();
    }
    in.expect("network");
    in.expect("online");
    b.net = nn::read_parameters(in);
    if (b.net.output_width() != b.heads * b.actions) throw nn::FormatError("head layer width does not match K*|A|");
    if (arch == Architecture::bootstrap) return b;
    BootstrapPriorNetwork bp;
    bp.trainable = std::move(b);
    bp.prior_scale = prior_scale;
    in.expect("network");
    in.expect("prior");
    bp.prior = nn::read_parameters(in);
    if (bp.prior.layers() != bp.trainable.net.layers()) throw nn::FormatError("prior topology differs from trainable");
    return bp;
}

} // namespace ubood::est
