#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mindiff/metrics.hpp"
#include "mindiff/nn.hpp"
#include "mindiff/penalties.hpp"

namespace mindiff {

/// Either a fixed decision threshold or the threshold reaching a target recall
/// on the training split.
struct ThresholdPolicy {
    enum class Kind { kFixed, kTargetRecall };
    Kind kind = Kind::kFixed;
    double value = 0.4;

    static ThresholdPolicy fixed(double t) { return {Kind::kFixed, t}; }
    static ThresholdPolicy target_recall(double r) { return {Kind::kTargetRecall, r}; }
    bool operator==(const ThresholdPolicy&) const = default;
};

struct TrainConfig {
    std::uint64_t seed = 0;
    std::size_t epochs = 15;
    std::size_t batch_size = 256;
    double learning_rate = 0.001;
    std::size_t hidden_units = 64;
    PenaltyConfig penalty;
    ThresholdPolicy threshold;

    void validate() const;
    nlohmann::json to_json() const;
    bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
    ModelParams params;
    EvalReport train_report;
    EvalReport test_report;
    std::vector<double> primary_trace;  ///< mean primary loss per epoch
    std::vector<double> penalty_trace;  ///< mean weighted penalty per epoch
    std::size_t batches = 0;
    std::size_t penalty_skipped_batches = 0;  ///< batches where the penalty could not be applied

    bool operator==(const TrainResult&) const = default;
};

/// Thrown when the loss or a gradient becomes non-finite during training.
class TrainingDivergence : public NumericError {
public:
    TrainingDivergence(std::size_t epoch, std::size_t batch, const std::string& what);
    std::size_t epoch;
    std::size_t batch;
};

struct BatchLoss {
    double primary = 0.0;
    double penalty = 0.0;
    double total = 0.0;
    bool penalty_applied = false;
    Gradients grads;
};

/// primary + weighted MinDiff loss on one batch, and its parameter gradient.
BatchLoss batch_loss(const ModelParams& params, const Batch& batch, const PenaltyConfig& penalty);

/// Seeded mini-batch training followed by evaluation on both splits.
TrainResult train(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config);

/// One run record document: config, reports, loss traces and final weights.
nlohmann::json run_record(const TrainConfig& config, const TrainResult& result);
nlohmann::json eval_report_json(const EvalReport& report);

struct MetricSummary {
    double mean = 0.0;
    double stderr_ = 0.0;   ///< sample stddev / sqrt(count); 0 when count == 1
    std::size_t count = 0;  ///< runs where the metric was defined
};

struct RunOutcome {
    std::uint64_t seed = 0;
    std::optional<EvalReport> test_report;
    std::optional<EvalReport> train_report;
    std::string error;  ///< non-empty when the run failed
};

struct RepeatedResult {
    std::vector<RunOutcome> runs;
    std::map<std::string, MetricSummary> metrics;  ///< keys: accuracy, fpr_gap, fpr_group0, fpr_group1, fpr_ratio, train_accuracy, train_fpr_gap
    bool single_run = false;
    std::size_t failed_runs = 0;

    const MetricSummary& metric(const std::string& name) const;
};

MetricSummary summarize(const std::vector<double>& values);

/// Runs `train` with seeds config.seed + 0 .. n_runs - 1, optionally on
/// `jobs` threads. The result does not depend on `jobs`.
RepeatedResult run_repeated(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config,
                            std::size_t n_runs, std::size_t jobs = 1);

}  // namespace mindiff
