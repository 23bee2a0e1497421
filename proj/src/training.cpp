#include "mindiff/training.hpp"

#include <cmath>
#include <numeric>

#include "mindiff/parallel.hpp"
#include "mindiff/rng.hpp"

namespace mindiff {
namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
    if (!std::isfinite(learning_rate) || learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    penalty.validate();
    if (threshold.kind == ThresholdPolicy::Kind::kFixed && !(threshold.value >= 0.0 && threshold.value <= 1.0))
        throw ConfigError("threshold must lie in [0, 1]");
    if (threshold.kind == ThresholdPolicy::Kind::kTargetRecall && !(threshold.value > 0.0 && threshold.value <= 1.0))
        throw ConfigError("target recall must lie in (0, 1]");
}

nlohmann::json TrainConfig::to_json() const {
    nlohmann::json doc;
    doc["seed"] = seed;
    doc["epochs"] = epochs;
    doc["batch_size"] = batch_size;
    doc["learning_rate"] = learning_rate;
    doc["hidden_units"] = hidden_units;
    doc["penalty"] = {{"kind", to_string(penalty.kind)}, {"weight", penalty.weight}, {"min_side", penalty.min_side}};
    if (penalty.kernel) {
        doc["penalty"]["kernel"] = to_string(penalty.kernel->family);
        doc["penalty"]["kernel_length"] = penalty.kernel->length;
    }
    doc["threshold"] = {{"policy", threshold.kind == ThresholdPolicy::Kind::kFixed ? "fixed" : "target_recall"},
                        {"value", threshold.value}};
    return doc;
}

TrainingDivergence::TrainingDivergence(std::size_t epoch_, std::size_t batch_, const std::string& what)
    : NumericError("training diverged at epoch " + std::to_string(epoch_) + ", batch " + std::to_string(batch_) + ": " + what),
      epoch(epoch_),
      batch(batch_) {}

BatchLoss batch_loss(const ModelParams& params, const Batch& batch, const PenaltyConfig& penalty) {
    const Activations acts = forward_pass(params, batch.x);
    const LossAndGradient primary = bce_loss(acts.probabilities, batch.y);
    const PenaltyResult mindiff = mindiff_penalty(acts.probabilities, batch, penalty);

    std::vector<double> upstream = primary.grad;
    for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] += mindiff.grad[i];

    BatchLoss out;
    out.primary = primary.value;
    out.penalty = mindiff.value;
    out.total = primary.value + mindiff.value;
    out.penalty_applied = mindiff.applied;
    out.grads = backward(params, batch.x, acts, upstream);
    return out;
}

TrainResult train(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config) {
    config.validate();
    train_set.validate();
    test_set.validate();
    if (train_set.size() == 0) throw ConfigError("training set is empty");
    if (test_set.size() > 0 && test_set.x.cols() != train_set.x.cols())
        throw DimensionError("train and test feature counts differ");

    TrainResult result;
    result.params = ModelParams::glorot_uniform(train_set.x.cols(), config.hidden_units, combine_seed(config.seed, kInitStream));
    OptimizerState state = OptimizerState::for_params(result.params, AdamConfig{.learning_rate = config.learning_rate});
    Rng shuffle_rng(combine_seed(config.seed, kShuffleStream));

    const bool penalized = config.penalty.kind != PenaltyKind::kNone && config.penalty.weight > 0.0;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        double primary_sum = 0.0, penalty_sum = 0.0;
        std::size_t batch_count = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, order.size());
            const Batch batch = train_set.subset(std::span<const std::size_t>(order).subspan(start, end - start));
            BatchLoss loss;
            try {
                loss = batch_loss(result.params, batch, config.penalty);
                if (!std::isfinite(loss.total)) throw NumericError("non-finite loss");
                optimizer_step(result.params, loss.grads, state);
            } catch (const NumericError& e) {
                throw TrainingDivergence(epoch, batch_count, e.what());
            }
            primary_sum += loss.primary;
            penalty_sum += loss.penalty;
            if (penalized && !loss.penalty_applied) ++result.penalty_skipped_batches;
            ++batch_count;
        }
        result.batches += batch_count;
        result.primary_trace.push_back(primary_sum / static_cast<double>(batch_count));
        result.penalty_trace.push_back(penalty_sum / static_cast<double>(batch_count));
    }

    const std::vector<double> train_pred = forward(result.params, train_set.x);
    double threshold = config.threshold.value;
    if (config.threshold.kind == ThresholdPolicy::Kind::kTargetRecall)
        threshold = threshold_for_recall(train_pred, train_set.y, config.threshold.value);
    result.train_report = evaluate(train_pred, train_set.y, train_set.a, threshold);
    if (test_set.size() > 0) {
        const std::vector<double> test_pred = forward(result.params, test_set.x);
        result.test_report = evaluate(test_pred, test_set.y, test_set.a, threshold);
    } else {
        result.test_report = result.train_report;
    }
    return result;
}

nlohmann::json eval_report_json(const EvalReport& report) {
    nlohmann::json doc;
    doc["threshold"] = report.threshold;
    doc["rows"] = report.rows;
    doc["accuracy"] = report.accuracy;
    doc["fpr_group0"] = optional_json(report.fpr_group0);
    doc["fpr_group1"] = optional_json(report.fpr_group1);
    doc["fpr_gap"] = optional_json(report.fpr_gap);
    doc["fpr_ratio"] = optional_json(report.fpr_ratio);
    doc["counts"] = report.counts.cells;
    return doc;
}

nlohmann::json run_record(const TrainConfig& config, const TrainResult& result) {
    nlohmann::json doc;
    doc["config"] = config.to_json();
    doc["train"] = eval_report_json(result.train_report);
    doc["test"] = eval_report_json(result.test_report);
    doc["primary_loss_trace"] = result.primary_trace;
    doc["penalty_loss_trace"] = result.penalty_trace;
    doc["batches"] = result.batches;
    doc["penalty_skipped_batches"] = result.penalty_skipped_batches;
    doc["params"] = {{"input_dim", result.params.input_dim()},
                     {"hidden_units", result.params.hidden_units()},
                     {"values", std::vector<double>(result.params.values().begin(), result.params.values().end())}};
    return doc;
}

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    s.count = values.size();
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return s;
}

const MetricSummary& RepeatedResult::metric(const std::string& name) const {
    const auto it = metrics.find(name);
    if (it == metrics.end()) throw MetricError("unknown metric '" + name + "'");
    return it->second;
}

RepeatedResult run_repeated(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config,
                            std::size_t n_runs, std::size_t jobs) {
    if (n_runs < 1) throw ConfigError("n_runs must be >= 1");
    config.validate();
    RepeatedResult out;
    out.runs.resize(n_runs);
    parallel_for(n_runs, jobs, [&](std::size_t i) {
        TrainConfig cfg = config;
        cfg.seed = config.seed + i;
        RunOutcome& run = out.runs[i];
        run.seed = cfg.seed;
        try {
            TrainResult r = train(train_set, test_set, cfg);
            run.test_report = r.test_report;
            run.train_report = r.train_report;
        } catch (const std::exception& e) {
            run.error = e.what();
        }
    });

    std::map<std::string, std::vector<double>> values;
    for (const char* key : {"accuracy", "fpr_gap", "fpr_group0", "fpr_group1", "fpr_ratio", "train_accuracy", "train_fpr_gap"})
        values[key];
    for (const RunOutcome& run : out.runs) {
        if (!run.error.empty()) {
            ++out.failed_runs;
            continue;
        }
        const EvalReport& t = *run.test_report;
        values["accuracy"].push_back(t.accuracy);
        if (t.fpr_gap) values["fpr_gap"].push_back(*t.fpr_gap);
        if (t.fpr_group0) values["fpr_group0"].push_back(*t.fpr_group0);
        if (t.fpr_group1) values["fpr_group1"].push_back(*t.fpr_group1);
        if (t.fpr_ratio) values["fpr_ratio"].push_back(*t.fpr_ratio);
        values["train_accuracy"].push_back(run.train_report->accuracy);
        if (run.train_report->fpr_gap) values["train_fpr_gap"].push_back(*run.train_report->fpr_gap);
    }
    for (const auto& [key, v] : values) out.metrics[key] = summarize(v);
    out.single_run = n_runs == 1;
    return out;
}

}  // namespace mindiff
