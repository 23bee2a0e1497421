#include "mindiff/pairwise.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "mindiff/csv.hpp"
#include "mindiff/rng.hpp"
#include "mindiff/training.hpp"

namespace mindiff {
namespace {

Matrix stack_side(std::span<const PairExample> pairs, bool clicked) {
    if (pairs.empty()) return {};
    const std::size_t d = (clicked ? pairs.front().clicked : pairs.front().unclicked).size();
    Matrix x(pairs.size(), d);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& f = clicked ? pairs[i].clicked : pairs[i].unclicked;
        if (f.size() != d) throw DimensionError("pair feature vectors differ in length");
        std::copy(f.begin(), f.end(), x.row(i).begin());
    }
    return x;
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

std::optional<int> pair_beta(const PairExample& pair) {
    const auto c = group_value(pair.clicked_group);
    const auto u = group_value(pair.unclicked_group);
    if (!c || !u) return std::nullopt;
    return *c - *u;
}

AlphaBeta alpha_beta(const PairExample& pair, const ModelParams& model) {
    const std::vector<double> alpha = pair_alphas(std::span<const PairExample>(&pair, 1), model);
    return {alpha.front(), pair_beta(pair)};
}

std::vector<double> pair_alphas(std::span<const PairExample> pairs, const ModelParams& model) {
    const std::vector<double> clicked = forward(model, stack_side(pairs, true));
    const std::vector<double> unclicked = forward(model, stack_side(pairs, false));
    std::vector<double> alphas(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) alphas[i] = clicked[i] - unclicked[i];
    return alphas;
}

PairwiseReport pairwise_metric(std::span<const PairExample> pairs, std::span<const double> alphas) {
    if (pairs.empty()) throw MetricError("pairwise_metric needs at least one pair");
    if (pairs.size() != alphas.size()) throw DimensionError("pairs and alphas differ in length");

    struct Cell {
        double correct = 0.0;
        std::size_t count = 0;
    };
    std::map<int, std::array<Cell, 2>> cells;  // [bucket][clicked in subgroup]
    double correct_total = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double credit = alphas[i] > 0.0 ? 1.0 : (alphas[i] == 0.0 ? 0.5 : 0.0);
        correct_total += credit;
        auto& bucket = cells[pairs[i].bucket];
        const auto g = group_value(pairs[i].clicked_group);
        if (!g) continue;
        bucket[static_cast<std::size_t>(*g)].correct += credit;
        bucket[static_cast<std::size_t>(*g)].count += 1;
    }

    PairwiseReport report;
    report.overall_accuracy = correct_total / static_cast<double>(pairs.size());
    for (const auto& [id, bucket] : cells) {
        BucketAccuracy b;
        b.bucket = id;
        b.pairs_out = bucket[0].count;
        b.pairs_in = bucket[1].count;
        if (b.pairs_out > 0) b.accuracy_out = bucket[0].correct / static_cast<double>(b.pairs_out);
        if (b.pairs_in > 0) b.accuracy_in = bucket[1].correct / static_cast<double>(b.pairs_in);
        if (b.accuracy_in && b.accuracy_out) {
            b.gap = *b.accuracy_out - *b.accuracy_in;
            report.total_gap += *b.gap;
        } else {
            report.complete = false;
        }
        report.buckets.push_back(b);
    }
    return report;
}

PairwiseReport pairwise_metric(std::span<const PairExample> pairs, const ModelParams& model) {
    if (pairs.empty()) throw MetricError("pairwise_metric needs at least one pair");
    const std::vector<double> alphas = pair_alphas(pairs, model);
    return pairwise_metric(pairs, alphas);
}

std::string pairwise_report_csv(const PairwiseReport& report) {
    std::ostringstream out;
    out << "bucket,pairs_in,pairs_out,accuracy_in,accuracy_out,gap\n";
    std::size_t in = 0, out_count = 0;
    for (const BucketAccuracy& b : report.buckets) {
        out << b.bucket << ',' << b.pairs_in << ',' << b.pairs_out << ',' << format_optional(b.accuracy_in) << ','
            << format_optional(b.accuracy_out) << ',' << format_optional(b.gap) << '\n';
        in += b.pairs_in;
        out_count += b.pairs_out;
    }
    out << "total," << in << ',' << out_count << ",NA,NA," << format_double(report.total_gap) << '\n';
    return out.str();
}

PenaltyResult pairwise_mindiff_penalty(std::span<const double> alphas, std::span<const std::optional<int>> betas,
                                       const PenaltyConfig& config) {
    if (alphas.size() != betas.size()) throw DimensionError("alphas and betas differ in length");
    config.validate();
    PenaltyResult out;
    out.grad.assign(alphas.size(), 0.0);
    if (config.kind == PenaltyKind::kNone || config.weight == 0.0) return out;

    std::vector<std::size_t> plus, minus;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (betas[i] == 1) plus.push_back(i);
        if (betas[i] == -1) minus.push_back(i);
    }
    const std::size_t min_side = std::max<std::size_t>(config.min_side, 1);
    if (plus.size() < min_side || minus.size() < min_side) return out;

    if (config.kind == PenaltyKind::kCorrelation) {
        std::vector<std::size_t> rows;
        std::vector<double> x, z;
        for (std::size_t i = 0; i < betas.size(); ++i) {
            if (!betas[i]) continue;
            rows.push_back(i);
            x.push_back(alphas[i]);
            z.push_back(static_cast<double>(*betas[i]));
        }
        const PenaltyResult corr = correlation_penalty(x, z);
        out.applied = corr.applied;
        out.value = config.weight * corr.value;
        for (std::size_t k = 0; k < rows.size(); ++k) out.grad[rows[k]] = config.weight * corr.grad[k];
        return out;
    }

    std::vector<double> s_plus, s_minus;
    for (std::size_t i : plus) s_plus.push_back(alphas[i]);
    for (std::size_t i : minus) s_minus.push_back(alphas[i]);
    const MmdResult mmd = mmd_squared(s_plus, s_minus, *config.kernel);
    out.applied = mmd.applied;
    out.value = config.weight * mmd.value;
    for (std::size_t k = 0; k < plus.size(); ++k) out.grad[plus[k]] = config.weight * mmd.grad_first[k];
    for (std::size_t k = 0; k < minus.size(); ++k) out.grad[minus[k]] = config.weight * mmd.grad_second[k];
    return out;
}

void PairTrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
    if (!std::isfinite(learning_rate) || learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    if (!std::isfinite(temperature) || temperature <= 0.0) throw ConfigError("temperature must be > 0");
    penalty.validate();
}

PairBatchLoss pair_batch_loss(const ModelParams& model, std::span<const PairExample> pairs, const PenaltyConfig& penalty,
                              double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("ranking temperature must be > 0");
    if (pairs.empty()) throw DimensionError("empty pair batch");
    const std::size_t b = pairs.size();
    // Clicked items occupy rows [0, b), unclicked items rows [b, 2b).
    Matrix x(2 * b, pairs.front().clicked.size());
    for (std::size_t i = 0; i < b; ++i) {
        if (pairs[i].clicked.size() != x.cols() || pairs[i].unclicked.size() != x.cols())
            throw DimensionError("pair feature vectors differ in length");
        std::copy(pairs[i].clicked.begin(), pairs[i].clicked.end(), x.row(i).begin());
        std::copy(pairs[i].unclicked.begin(), pairs[i].unclicked.end(), x.row(b + i).begin());
    }
    const Activations acts = forward_pass(model, x);

    std::vector<double> alphas(b);
    std::vector<std::optional<int>> betas(b);
    for (std::size_t i = 0; i < b; ++i) {
        alphas[i] = acts.probabilities[i] - acts.probabilities[b + i];
        betas[i] = pair_beta(pairs[i]);
    }

    PairBatchLoss out;
    std::vector<double> dalpha(b);
    for (std::size_t i = 0; i < b; ++i) {
        const double z = alphas[i] / temperature;
        out.primary += softplus(-z);
        // d/da log(1 + e^{-a/T}) = -sigmoid(-a/T) / T
        dalpha[i] = -1.0 / (1.0 + std::exp(z)) / temperature / static_cast<double>(b);
    }
    out.primary /= static_cast<double>(b);

    const PenaltyResult pen = pairwise_mindiff_penalty(alphas, betas, penalty);
    out.penalty = pen.value;
    out.penalty_applied = pen.applied;

    std::vector<double> upstream(2 * b);
    for (std::size_t i = 0; i < b; ++i) {
        const double g = dalpha[i] + pen.grad[i];
        upstream[i] = g;
        upstream[b + i] = -g;
    }
    out.grads = backward(model, x, acts, upstream);
    return out;
}

PairTrainResult train_pairwise(std::span<const PairExample> pairs, const PairTrainConfig& config) {
    config.validate();
    if (pairs.empty()) throw ConfigError("no training pairs");

    PairTrainResult result;
    result.params = ModelParams::glorot_uniform(pairs.front().clicked.size(), config.hidden_units, combine_seed(config.seed, 1));
    OptimizerState state = OptimizerState::for_params(result.params, AdamConfig{.learning_rate = config.learning_rate});
    Rng shuffle_rng(combine_seed(config.seed, 2));

    std::size_t neutral = 0;
    for (const PairExample& p : pairs)
        if (pair_beta(p) == 0) ++neutral;
    result.discarded_pair_fraction = static_cast<double>(neutral) / static_cast<double>(pairs.size());

    const bool penalized = config.penalty.kind != PenaltyKind::kNone && config.penalty.weight > 0.0;
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<PairExample> batch;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        double primary_sum = 0.0, penalty_sum = 0.0;
        std::size_t count = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, order.size());
            batch.clear();
            for (std::size_t k = start; k < end; ++k) batch.push_back(pairs[order[k]]);
            PairBatchLoss loss;
            try {
                loss = pair_batch_loss(result.params, batch, config.penalty, config.temperature);
                if (!std::isfinite(loss.primary + loss.penalty)) throw NumericError("non-finite loss");
                optimizer_step(result.params, loss.grads, state);
            } catch (const NumericError& e) {
                throw TrainingDivergence(epoch, count, e.what());
            }
            primary_sum += loss.primary;
            penalty_sum += loss.penalty;
            if (penalized && !loss.penalty_applied) ++result.penalty_skipped_batches;
            ++count;
        }
        result.batches += count;
        result.primary_trace.push_back(primary_sum / static_cast<double>(count));
        result.penalty_trace.push_back(penalty_sum / static_cast<double>(count));
    }
    return result;
}

}  // namespace mindiff
