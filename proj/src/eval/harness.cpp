#include "ubood/eval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "ubood/nn/serialize.hpp"

namespace ubood::eval {

using nn::format_real;

std::vector<EvalRecord> run_eval(const est::Estimator& net, env::Family family, int config, int n_episodes,
                                 std::uint64_t seed, double gamma, std::vector<env::TraceRow>* trace) {
    const auto rollouts = rl::greedy_rollouts(net, family, config, n_episodes, seed);
    std::vector<EvalRecord> records;
    records.reserve(rollouts.size());
    for (std::size_t ep = 0; ep < rollouts.size(); ++ep) {
        const rl::Rollout& r = rollouts[ep];
        EvalRecord rec;
        rec.config = config;
        rec.seed = seed;
        rec.episode = static_cast<long>(ep);
        rec.undiscounted_return = rl::episode_return(r.rewards, 1.0);
        rec.discounted_return = rl::episode_return(r.rewards, gamma);
        rec.length = static_cast<int>(r.rewards.size());
        for (std::size_t t = 0; t < r.uncertainties.size(); ++t)
            rec.samples.push_back({r.uncertainties[t], config, rec.episode, static_cast<int>(t)});
        records.push_back(std::move(rec));
        if (trace) trace->insert(trace->end(), r.trace.begin(), r.trace.end());
    }
    return records;
}

ConfusionCounts confusion(std::span<const EvalRecord> in_distribution, std::span<const EvalRecord> out_of_distribution,
                          const ood::Threshold& threshold) {
    if (in_distribution.empty() || out_of_distribution.empty())
        throw std::invalid_argument("confusion needs in-distribution and OOD records");
    ConfusionCounts c;
    for (const auto& rec : in_distribution)
        for (const auto& s : rec.samples)
            (ood::classify(s.score, threshold) == ood::ClassLabel::out_of_distribution ? c.fp : c.tn)++;
    for (const auto& rec : out_of_distribution)
        for (const auto& s : rec.samples)
            (ood::classify(s.score, threshold) == ood::ClassLabel::out_of_distribution ? c.tp : c.fn)++;
    return c;
}

DetectionScores precision_recall_f1(const ConfusionCounts& c) {
    auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
    DetectionScores s;
    s.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
    s.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
    s.f1 = ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
    return s;
}

namespace {

constexpr std::uint64_t kThresholdStream = 0x7468726573686f6c;

ReturnRow summarize(int config, std::span<const EvalRecord> records) {
    ReturnRow row;
    row.config = config;
    row.episodes = static_cast<int>(records.size());
    double unc = 0.0;
    for (const auto& r : records) {
        row.mean_return += r.undiscounted_return;
        row.mean_discounted_return += r.discounted_return;
        for (const auto& s : r.samples) unc += s.score;
        row.samples += r.samples.size();
    }
    if (!records.empty()) {
        row.mean_return /= static_cast<double>(records.size());
        row.mean_discounted_return /= static_cast<double>(records.size());
    }
    row.mean_uncertainty = row.samples ? unc / static_cast<double>(row.samples) : 0.0;
    return row;
}

double mean_rollout_uncertainty(const est::Estimator& net, env::Family family, int config, int episodes,
                                std::span<const std::uint64_t> seeds) {
    double total = 0.0;
    std::size_t n = 0;
    for (std::uint64_t seed : seeds)
        for (const auto& r : rl::greedy_rollouts(net, family, config, episodes, seed))
            for (double u : r.uncertainties) {
                total += u;
                ++n;
            }
    return n ? total / static_cast<double>(n) : 0.0;
}

} // namespace

SweepResult sweep(const est::Estimator& net, env::Family family, const std::string& version,
                  std::span<const int> configs, std::span<const std::uint64_t> seeds, const SweepOptions& options) {
    if (std::find(configs.begin(), configs.end(), 0) == configs.end())
        throw std::invalid_argument("sweep needs configuration 0 to fit the threshold");
    if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
    for (int k : configs)
        if (k < 0 || k > env::max_config(family))
            throw std::out_of_range("configuration " + std::to_string(k) + " is not defined for " + env::to_string(family));

    SweepResult result;
    std::vector<ood::UncertaintySample> fit_samples;
    for (std::uint64_t seed : seeds) {
        auto s = ood::collect_in_distribution(net, family, options.threshold_episodes,
                                              derive_seed(seed, {kThresholdStream}));
        fit_samples.insert(fit_samples.end(), s.begin(), s.end());
    }
    result.threshold = ood::fit_threshold(fit_samples);

    auto collect = [&](int config) {
        std::vector<EvalRecord> pooled;
        for (std::uint64_t seed : seeds) {
            std::vector<env::TraceRow> trace;
            auto recs = run_eval(net, family, config, options.episodes, seed, options.gamma,
                                 options.keep_trace ? &trace : nullptr);
            const long offset = static_cast<long>(pooled.size());
            for (auto& row : trace) {
                row.episode += offset;
                result.trace.push_back(std::move(row));
            }
            pooled.insert(pooled.end(), recs.begin(), recs.end());
        }
        return pooled;
    };

    std::vector<int> ordered(configs.begin(), configs.end());
    std::sort(ordered.begin(), ordered.end());
    ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

    const std::vector<EvalRecord> in_records = collect(0);
    result.returns.push_back(summarize(0, in_records));
    for (int k : ordered) {
        if (k == 0) continue;
        const std::vector<EvalRecord> ood_records = collect(k);
        const ReturnRow summary = summarize(k, ood_records);
        result.returns.push_back(summary);
        const DetectionScores s = precision_recall_f1(confusion(in_records, ood_records, result.threshold));
        result.metrics.push_back({version, k, s.precision, s.recall, s.f1, summary.mean_uncertainty, summary.mean_return});
    }
    return result;
}

std::vector<CurvePoint> uncertainty_over_training(std::span<const rl::Snapshot> snapshots, env::Family family,
                                                  int config_a, int config_b, int episodes,
                                                  std::span<const std::uint64_t> seeds) {
    if (snapshots.size() < 2) throw std::invalid_argument("uncertainty curve needs at least 2 snapshots");
    std::vector<CurvePoint> points;
    for (const auto& snap : snapshots) {
        CurvePoint p;
        p.episode = snap.episode;
        p.mean_uncertainty_first = mean_rollout_uncertainty(snap.estimator, family, config_a, episodes, seeds);
        p.mean_uncertainty_second = config_b == config_a
                                        ? p.mean_uncertainty_first
                                        : mean_rollout_uncertainty(snap.estimator, family, config_b, episodes, seeds);
        points.push_back(p);
    }
    return points;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman needs equally long inputs");
    if (x.size() < 2) return 0.0;
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

ToyRegression toy_regression_demo(std::uint64_t seed, const ToyRegressionOptions& o) {
    Rng data_rng(derive_seed(seed, {1}));
    Rng mask_rng(derive_seed(seed, {2}));
    ToyRegression toy;
    for (double lo : {-3.0, 1.0})
        for (int i = 0; i < o.points_per_cluster; ++i) {
            const double x = data_rng.uniform(lo, lo + 2.0);
            toy.data_x.push_back(x);
            toy.data_y.push_back(std::sin(x) + o.noise * data_rng.normal());
        }

    est::ArchitectureConfig cfg;
    cfg.architecture = est::Architecture::bootstrap;
    cfg.state_width = 1;
    cfg.actions = 1;
    cfg.hidden_width = o.hidden_width;
    cfg.heads = o.members;
    cfg.mask_probability = o.mask_probability;
    auto net = std::get<est::BootstrapNetwork>(est::make_estimator(cfg, derive_seed(seed, {3})));

    const std::size_t n = toy.data_x.size();
    std::vector<est::BootstrapMask> masks;
    for (std::size_t i = 0; i < n; ++i) masks.push_back(est::sample_mask(o.mask_probability, o.members, mask_rng));
    std::vector<std::vector<double>> inputs(n);
    std::vector<est::BootstrapSample> batch;
    for (std::size_t i = 0; i < n; ++i) {
        inputs[i] = {toy.data_x[i]};
        batch.push_back({inputs[i], 0, &masks[i], std::vector<double>(static_cast<std::size_t>(o.members), toy.data_y[i])});
    }
    nn::AdamConfig adam;
    adam.learning_rate = o.learning_rate;
    nn::OptimizerState opt(net.net, adam);
    for (int step = 0; step < o.train_steps; ++step) est::bootstrap_train_step(net, batch, opt);

    toy.members.assign(static_cast<std::size_t>(o.members), {});
    for (int i = 0; i < o.grid_points; ++i) {
        const double x = o.grid_lo + (o.grid_hi - o.grid_lo) * i / (o.grid_points - 1);
        const double in[1] = {x};
        const est::BootstrapPrediction p = est::bootstrap_predict(net, in);
        toy.grid.push_back(x);
        for (int k = 0; k < o.members; ++k) toy.members[k].push_back(p.heads(k, 0));
        toy.mean.push_back(p.estimate.mean[0]);
        toy.variance.push_back(p.estimate.variance[0]);
    }
    return toy;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
    out << "version,config,precision,recall,f1,mean_uncertainty,mean_return\n";
    for (const auto& r : rows)
        out << r.version << ',' << r.config << ',' << format_real(r.precision) << ',' << format_real(r.recall) << ','
            << format_real(r.f1) << ',' << format_real(r.mean_uncertainty) << ',' << format_real(r.mean_return) << '\n';
}

void write_returns_csv(std::ostream& out, std::span<const ReturnRow> rows) {
    out << "config,episodes,mean_return,mean_discounted_return,mean_uncertainty,samples\n";
    for (const auto& r : rows)
        out << r.config << ',' << r.episodes << ',' << format_real(r.mean_return) << ','
            << format_real(r.mean_discounted_return) << ',' << format_real(r.mean_uncertainty) << ',' << r.samples
            << '\n';
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points, int config_a, int config_b) {
    out << "episode,mean_uncertainty_config" << config_a << ",mean_uncertainty_config" << config_b << '\n';
    for (const auto& p : points)
        out << p.episode << ',' << format_real(p.mean_uncertainty_first) << ',' << format_real(p.mean_uncertainty_second)
            << '\n';
}

void write_toy_csv(std::ostream& out, const ToyRegression& toy) {
    out << "x";
    for (std::size_t k = 0; k < toy.members.size(); ++k) out << ",member" << k;
    out << ",mean,variance\n";
    for (std::size_t i = 0; i < toy.grid.size(); ++i) {
        out << format_real(toy.grid[i]);
        for (const auto& m : toy.members) out << ',' << format_real(m[i]);
        out << ',' << format_real(toy.mean[i]) << ',' << format_real(toy.variance[i]) << '\n';
    }
}

void write_training_log_csv(std::ostream& out, std::span<const rl::TrainingLogRow> rows) {
    out << "episode,return,loss,epsilon,mean_uncertainty\n";
    for (const auto& r : rows)
        out << r.episode << ',' << format_real(r.episode_return) << ',' << format_real(r.loss) << ','
            << format_real(r.epsilon) << ',' << format_real(r.mean_uncertainty) << '\n';
}

} // namespace ubood::eval
