#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ubood/env/environment.hpp"
#include "ubood/env/trace.hpp"
#include "ubood/est/estimator.hpp"
#include "ubood/ood/classifier.hpp"
#include "ubood/rl/agent.hpp"

namespace ubood::eval {

struct EvalRecord {
    int config = 0;
    std::uint64_t seed = 0;
    long episode = 0;
    double undiscounted_return = 0.0;
    double discounted_return = 0.0;
    std::vector<ood::UncertaintySample> samples;
    int length = 0;
};

/// Greedy evaluation episodes; nothing is fed back into training.
std::vector<EvalRecord> run_eval(const est::Estimator& net, env::Family family, int config, int n_episodes,
                                 std::uint64_t seed, double gamma = 0.99, std::vector<env::TraceRow>* trace = nullptr);

/// Positives are OOD-configuration samples, negatives configuration-0 samples.
struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    bool operator==(const ConfusionCounts&) const = default;
};

/// Classifies every per-step sample. Throws std::invalid_argument when either side is empty.
ConfusionCounts confusion(std::span<const EvalRecord> in_distribution, std::span<const EvalRecord> out_of_distribution,
                          const ood::Threshold& threshold);

struct DetectionScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Any 0/0 ratio is reported as 0.
DetectionScores precision_recall_f1(const ConfusionCounts& c);

struct MetricsRow {
    std::string version;
    int config = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double mean_uncertainty = 0.0;
    double mean_return = 0.0;
};

struct ReturnRow {
    int config = 0;
    int episodes = 0;
    double mean_return = 0.0;
    double mean_discounted_return = 0.0;
    double mean_uncertainty = 0.0;
    std::size_t samples = 0;
};

struct SweepOptions {
    int episodes = 30;           // evaluation episodes per configuration and seed
    int threshold_episodes = 30; // configuration-0 episodes feeding the threshold fit
    double gamma = 0.99;
    bool keep_trace = false;
};

struct SweepResult {
    ood::Threshold threshold;
    std::vector<MetricsRow> metrics; // one per OOD configuration
    std::vector<ReturnRow> returns;  // one per requested configuration, including 0
    std::vector<env::TraceRow> trace;
};

/// Fits the threshold on held-out configuration-0 rollouts, then scores one
/// row per OOD configuration. Episodes from all seeds are pooled. Throws
/// std::invalid_argument if configs lacks 0 or seeds is empty.
SweepResult sweep(const est::Estimator& net, env::Family family, const std::string& version,
                  std::span<const int> configs, std::span<const std::uint64_t> seeds, const SweepOptions& options = {});

struct CurvePoint {
    long episode = 0;
    double mean_uncertainty_first = 0.0;  // configuration config_a
    double mean_uncertainty_second = 0.0; // configuration config_b
};

/// Mean greedy-rollout uncertainty per snapshot on two configurations.
/// Throws std::invalid_argument for fewer than 2 snapshots.
std::vector<CurvePoint> uncertainty_over_training(std::span<const rl::Snapshot> snapshots, env::Family family,
                                                  int config_a, int config_b, int episodes,
                                                  std::span<const std::uint64_t> seeds);

/// Rank correlation with average ranks for ties. Returns 0 when either
/// input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct ToyRegressionOptions {
    int points_per_cluster = 40;
    double noise = 0.1;
    int members = 10;
    double mask_probability = 0.7;
    int hidden_width = 64;
    int train_steps = 3000;
    double learning_rate = 3e-3;
    double grid_lo = -6.0;
    double grid_hi = 6.0;
    int grid_points = 241;
};

struct ToyRegression {
    std::vector<double> data_x, data_y;
    std::vector<double> grid;
    std::vector<std::vector<double>> members; // members[k][i] prediction at grid[i]
    std::vector<double> mean, variance;
};

/// Bootstrap ensemble fitted to y = sin x + noise on [-3,-1] U [1,3],
/// evaluated on a grid.
ToyRegression toy_regression_demo(std::uint64_t seed, const ToyRegressionOptions& options = {});

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);
void write_returns_csv(std::ostream& out, std::span<const ReturnRow> rows);
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points, int config_a, int config_b);
void write_toy_csv(std::ostream& out, const ToyRegression& toy);
void write_training_log_csv(std::ostream& out, std::span<const rl::TrainingLogRow> rows);

} // namespace ubood::eval
